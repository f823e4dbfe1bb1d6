// fpl: command-line runner for the protocol simulations.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fpl/fpl.h"

namespace {

constexpr int kExitUsage = 64;

int exit_code(fpl_status s) {
  switch (s) {
    case FPL_OK: return 0;
    case FPL_ERR_NUMERICAL:
    case FPL_ERR_IO:
    case FPL_ERR_INTERNAL: return 2;
    default: return 1;
  }
}

int report(fpl_status s, const std::string& what) {
  std::cerr << "fpl: " << what << " failed (" << fpl_status_name(s) << "): " << fpl_last_error() << "\n";
  return exit_code(s);
}

struct Common {
  std::string config;
  std::string engine;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string name;
};

void add_common(CLI::App* cmd, Common& c, bool engine = true) {
  cmd->add_option("--config", c.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  if (engine) {
    cmd->add_option("--engine", c.engine, "envelope | position | effective")
        ->check(CLI::IsMember({"envelope", "position", "effective"}));
  }
  cmd->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory (default: config output.dir)");
  cmd->add_option("--name", c.name, "output base name (default: config output.name or the subcommand)");
}

fpl_engine engine_code(const std::string& e) {
  if (e == "envelope") return FPL_ENGINE_ENVELOPE;
  if (e == "position") return FPL_ENGINE_POSITION;
  if (e == "effective") return FPL_ENGINE_EFFECTIVE;
  return FPL_ENGINE_FROM_CONFIG;
}

int write_result(fpl_result* result, const fpl_config* cfg, const Common& c, const std::string& fallback) {
  const char* cfg_dir = ".";
  const char* cfg_name = "";
  if (cfg) fpl_config_output(cfg, &cfg_dir, &cfg_name);
  const std::string dir = !c.out.empty() ? c.out : (cfg_dir && *cfg_dir ? cfg_dir : ".");
  const std::string name = !c.name.empty() ? c.name : (cfg_name && *cfg_name ? cfg_name : fallback);
  const fpl_status s = fpl_result_write(result, dir.c_str(), name.c_str());
  if (s != FPL_OK) return report(s, "writing output");
  const bool table = *fpl_result_csv(result) != '\0';
  std::cout << "wrote " << dir << "/" << name << (table ? ".csv (+ .meta.json)" : ".json") << "\n";
  return 0;
}

int run_protocol(const Common& c, fpl_protocol protocol, const std::string& fallback) {
  fpl_config* cfg = nullptr;
  fpl_status s = fpl_config_load(c.config.c_str(), &cfg);
  if (s != FPL_OK) return report(s, "loading config");
  fpl_result* result = nullptr;
  s = fpl_run_protocol(cfg, protocol, engine_code(c.engine), c.seed.value_or(0), c.seed ? 1 : 0, &result);
  int code = s == FPL_OK ? write_result(result, cfg, c, fallback) : report(s, fallback);
  fpl_result_free(result);
  fpl_config_free(cfg);
  return code;
}

int run_floquet(const Common& c) {
  fpl_config* cfg = nullptr;
  fpl_status s = fpl_config_load(c.config.c_str(), &cfg);
  if (s != FPL_OK) return report(s, "loading config");
  fpl_result* result = nullptr;
  s = fpl_run_floquet(cfg, engine_code(c.engine), &result);
  int code = 0;
  if (s == FPL_OK) {
    std::cout << fpl_result_json(result);
    code = write_result(result, cfg, c, "floquet");
  } else {
    code = report(s, "floquet");
  }
  fpl_result_free(result);
  fpl_config_free(cfg);
  return code;
}

int run_validate(const Common& c) {
  fpl_config* cfg = nullptr;
  fpl_status s = fpl_config_load(c.config.c_str(), &cfg);
  if (s != FPL_OK) {
    std::cout << "1 diagnostics\n" << fpl_last_error() << "\n";
    return exit_code(s);
  }
  fpl_diagnostics* diag = nullptr;
  s = fpl_validate(cfg, &diag);
  if (s != FPL_OK) {
    fpl_config_free(cfg);
    return report(s, "validate");
  }
  const size_t n = fpl_diagnostics_count(diag);
  std::cout << n << " diagnostics\n";
  for (size_t i = 0; i < n; ++i) {
    const int seg = fpl_diagnostics_segment(diag, i);
    if (seg >= 0) std::cout << "segment " << seg << ": ";
    std::cout << fpl_diagnostics_message(diag, i) << "\n";
  }
  fpl_diagnostics_free(diag);
  fpl_config_free(cfg);
  return n == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation runner for frequency-modulated coupled oscillator networks"};
  app.set_version_flag("--version", std::string(fpl_version()));
  app.require_subcommand(1);

  Common common;
  struct Entry {
    const char* name;
    const char* help;
    fpl_protocol protocol;
  };
  const Entry protocols[] = {
      {"spectrum", "sideband spectroscopy under modulation", FPL_PROTOCOL_SPECTRUM},
      {"exchange", "assisted exchange trace", FPL_PROTOCOL_EXCHANGE},
      {"phase-ramp", "exchange map over a mid-sequence modulation phase step", FPL_PROTOCOL_PHASE_RAMP},
      {"dual-scan", "transfer at t_pi against the relative modulation phase", FPL_PROTOCOL_DUAL_SCAN},
      {"two-path", "two-path interference fringe", FPL_PROTOCOL_TWO_PATH},
  };
  std::map<CLI::App*, const Entry*> protocol_cmds;
  for (const auto& e : protocols) {
    auto* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, common);
    protocol_cmds[cmd] = &e;
  }
  auto* floquet = app.add_subcommand("floquet", "monodromy / quasi-energy report");
  add_common(floquet, common);
  auto* validate = app.add_subcommand("validate", "check a configuration");
  validate->add_option("--config", common.config, "run configuration (JSON)")->required();

  auto* fit = app.add_subcommand("fit", "fit a protocol CSV");
  std::string fit_kind, input, out_dir, out_name;
  std::optional<double> carrier_hz, modulation_hz;
  int site = 1;
  fit->add_option("kind", fit_kind, "exchange | comb | sinusoid")
      ->required()
      ->check(CLI::IsMember({"exchange", "comb", "sinusoid"}));
  fit->add_option("--input", input, "CSV written by a protocol run")->required()->check(CLI::ExistingFile);
  fit->add_option("--carrier-hz", carrier_hz, "comb carrier frequency (default: from the sidecar)");
  fit->add_option("--modulation-hz", modulation_hz, "comb channel spacing (default: from the sidecar)");
  fit->add_option("--site", site, "site column filter for trajectory CSVs");
  fit->add_option("--out", out_dir, "output directory");
  fit->add_option("--name", out_name, "output base name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  for (const auto& [cmd, entry] : protocol_cmds) {
    if (cmd->parsed()) return run_protocol(common, entry->protocol, entry->name);
  }
  if (floquet->parsed()) return run_floquet(common);
  if (validate->parsed()) return run_validate(common);
  if (fit->parsed()) {
    std::ostringstream opts;
    opts << "{\"site\":" << site;
    if (carrier_hz) opts << ",\"carrier_hz\":" << std::to_string(*carrier_hz);
    if (modulation_hz) opts << ",\"modulation_hz\":" << std::to_string(*modulation_hz);
    opts << "}";
    const fpl_fit_kind kind = fit_kind == "exchange" ? FPL_FIT_EXCHANGE
                              : fit_kind == "comb"   ? FPL_FIT_COMB
                                                     : FPL_FIT_SINUSOID;
    fpl_result* result = nullptr;
    const fpl_status s = fpl_fit_csv(kind, input.c_str(), opts.str().c_str(), &result);
    if (s != FPL_OK) return report(s, "fit " + fit_kind);
    std::cout << fpl_result_json(result);
    int code = 0;
    if (!out_dir.empty() || !out_name.empty()) {
      Common c;
      c.out = out_dir.empty() ? "." : out_dir;
      c.name = out_name.empty() ? "fit_" + fit_kind : out_name;
      code = write_result(result, nullptr, c, c.name);
    }
    fpl_result_free(result);
    return code;
  }
  std::cerr << app.help();
  return kExitUsage;
}
