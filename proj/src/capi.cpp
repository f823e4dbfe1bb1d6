#include "fpl/fpl.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "fpl/bessel.hpp"
#include "fpl/config.hpp"
#include "fpl/errors.hpp"
#include "fpl/experiments.hpp"
#include "fpl/fit.hpp"
#include "fpl/floquet.hpp"
#include "fpl/rwa.hpp"
#include "fpl/table.hpp"

using nlohmann::json;

struct fpl_config {
  fpl::RunConfig cfg;
};

struct fpl_diagnostics {
  std::vector<fpl::Diagnostic> items;
};

struct fpl_result {
  std::string csv;
  std::string json;
  std::vector<double> values;
};

namespace {

thread_local std::string last_error;

fpl_status status_of(fpl::ErrorKind kind) {
  using fpl::ErrorKind;
  switch (kind) {
    case ErrorKind::Domain: return FPL_ERR_DOMAIN;
    case ErrorKind::Geometry: return FPL_ERR_GEOMETRY;
    case ErrorKind::Range: return FPL_ERR_RANGE;
    case ErrorKind::Config: return FPL_ERR_CONFIG;
    case ErrorKind::Validation: return FPL_ERR_VALIDATION;
    case ErrorKind::Numerical: return FPL_ERR_NUMERICAL;
    case ErrorKind::Misuse: return FPL_ERR_MISUSE;
    case ErrorKind::Ambiguity: return FPL_ERR_AMBIGUITY;
    case ErrorKind::NotPeriodic: return FPL_ERR_NOT_PERIODIC;
    case ErrorKind::Underdetermined: return FPL_ERR_UNDERDETERMINED;
    case ErrorKind::Io: return FPL_ERR_IO;
  }
  return FPL_ERR_INTERNAL;
}

template <typename F>
fpl_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return FPL_OK;
  } catch (const fpl::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    last_error = std::string("JSON error: ") + e.what();
    return FPL_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return FPL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FPL_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return FPL_ERR_INTERNAL;
  }
}

fpl_status invalid(const char* what) {
  last_error = what;
  return FPL_ERR_INVALID_ARGUMENT;
}

std::optional<fpl::Engine> engine_of(fpl_engine e) {
  switch (e) {
    case FPL_ENGINE_ENVELOPE: return fpl::Engine::Envelope;
    case FPL_ENGINE_POSITION: return fpl::Engine::Position;
    case FPL_ENGINE_EFFECTIVE: return fpl::Engine::Effective;
    case FPL_ENGINE_FROM_CONFIG: return std::nullopt;
  }
  fpl::fail(fpl::ErrorKind::Config, "unknown engine code");
}

fpl::ProtocolResult run_one(const fpl::RunConfig& cfg, fpl_protocol protocol,
                            const fpl::RunOptions& options) {
  switch (protocol) {
    case FPL_PROTOCOL_SPECTRUM: return fpl::run_spectroscopy(fpl::spectroscopy_spec(cfg), options);
    case FPL_PROTOCOL_EXCHANGE: return fpl::run_exchange(fpl::exchange_spec(cfg), options);
    case FPL_PROTOCOL_PHASE_RAMP: return fpl::run_phase_ramp_map(fpl::phase_ramp_spec(cfg), options);
    case FPL_PROTOCOL_DUAL_SCAN: return fpl::run_dual_phase_scan(fpl::dual_scan_spec(cfg), options);
    case FPL_PROTOCOL_TWO_PATH: return fpl::run_two_path_fringe(fpl::two_path_spec(cfg), options);
  }
  fpl::fail(fpl::ErrorKind::Config, "unknown protocol code");
}

void reject_diagnostics(const fpl::RunConfig& cfg) {
  if (cfg.diagnostics.empty()) return;
  std::ostringstream os;
  os << cfg.diagnostics.size() << " diagnostics; first: " << cfg.diagnostics.front().reason;
  fpl::fail(fpl::ErrorKind::Validation, os.str());
}

fpl_result* make_protocol_result(const fpl::ProtocolResult& r, const json& extra_meta) {
  auto* out = new fpl_result;
  out->csv = fpl::protocol_csv(r);
  json meta = fpl::protocol_meta(r);
  for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it) meta[it.key()] = it.value();
  out->json = meta.dump(2) + "\n";
  out->values = r.values;
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fpl::fail(fpl::ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows of a trajectory CSV restricted to one site; other tables pass through.
fpl::CsvTable select_site(const fpl::CsvTable& table, int site) {
  if (!table.has("site")) return table;
  fpl::CsvTable out;
  out.columns = table.columns;
  const auto idx = static_cast<std::size_t>(
      std::find(table.columns.begin(), table.columns.end(), "site") - table.columns.begin());
  for (const auto& r : table.rows) {
    if (static_cast<int>(r[idx]) == site) out.rows.push_back(r);
  }
  return out;
}

fpl::FitResult rescale(fpl::FitResult fit, const std::string& name, const std::string& renamed,
                       double factor) {
  for (auto& p : fit.params) {
    if (p.name == name) {
      p.name = renamed;
      p.value *= factor;
      p.sigma *= factor;
    }
  }
  return fit;
}

}  // namespace

extern "C" {

const char* fpl_version(void) { return fpl::kToolVersion; }

const char* fpl_last_error(void) { return last_error.c_str(); }

const char* fpl_status_name(fpl_status status) {
  switch (status) {
    case FPL_OK: return "ok";
    case FPL_ERR_DOMAIN: return "domain";
    case FPL_ERR_GEOMETRY: return "geometry";
    case FPL_ERR_RANGE: return "range";
    case FPL_ERR_CONFIG: return "config";
    case FPL_ERR_VALIDATION: return "validation";
    case FPL_ERR_NUMERICAL: return "numerical";
    case FPL_ERR_MISUSE: return "misuse";
    case FPL_ERR_AMBIGUITY: return "ambiguity";
    case FPL_ERR_NOT_PERIODIC: return "not-periodic";
    case FPL_ERR_UNDERDETERMINED: return "underdetermined";
    case FPL_ERR_IO: return "io";
    case FPL_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case FPL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

fpl_status fpl_config_load(const char* path, fpl_config** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guard([&] { *out = new fpl_config{fpl::load_config(path)}; });
}

fpl_status fpl_config_parse(const char* json_text, fpl_config** out) {
  if (!json_text || !out) return invalid("null argument");
  *out = nullptr;
  return guard([&] { *out = new fpl_config{fpl::parse_config_text(json_text)}; });
}

void fpl_config_free(fpl_config* cfg) { delete cfg; }

fpl_status fpl_config_hash(const fpl_config* cfg, uint64_t* out) {
  if (!cfg || !out) return invalid("null argument");
  *out = cfg->cfg.hash;
  return FPL_OK;
}

fpl_status fpl_config_output(const fpl_config* cfg, const char** dir, const char** name) {
  if (!cfg || !dir || !name) return invalid("null argument");
  *dir = cfg->cfg.output_dir.c_str();
  *name = cfg->cfg.output_name.c_str();
  return FPL_OK;
}

fpl_status fpl_validate(const fpl_config* cfg, fpl_diagnostics** out) {
  if (!cfg || !out) return invalid("null argument");
  *out = nullptr;
  return guard([&] { *out = new fpl_diagnostics{cfg->cfg.diagnostics}; });
}

size_t fpl_diagnostics_count(const fpl_diagnostics* diag) { return diag ? diag->items.size() : 0; }

const char* fpl_diagnostics_message(const fpl_diagnostics* diag, size_t index) {
  if (!diag || index >= diag->items.size()) return "";
  return diag->items[index].reason.c_str();
}

int fpl_diagnostics_segment(const fpl_diagnostics* diag, size_t index) {
  if (!diag || index >= diag->items.size()) return -1;
  return diag->items[index].segment;
}

void fpl_diagnostics_free(fpl_diagnostics* diag) { delete diag; }

fpl_status fpl_run_protocol(const fpl_config* cfg, fpl_protocol protocol, fpl_engine engine,
                            uint64_t seed, int seed_set, fpl_result** out) {
  if (!cfg || !out) return invalid("null argument");
  *out = nullptr;
  return guard([&] {
    const auto& base = cfg->cfg;
    reject_diagnostics(base);
    const auto engine_choice = engine_of(engine);
    const std::optional<std::uint64_t> seed_choice =
        seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt;
    if (!base.sweep) {
      const auto r = run_one(base, protocol, fpl::run_options(base, engine_choice, seed_choice));
      *out = make_protocol_result(r, json::object());
      return;
    }
    std::vector<double> axis;
    std::vector<fpl::ProtocolResult> results;
    for (const auto& v : base.sweep->values) {
      if (!v.is_number()) fpl::fail(fpl::ErrorKind::Config, "sweep values must be numbers");
      fpl::RunConfig point = fpl::parse_config(fpl::with_path_value(base.document, base.sweep->path, v));
      point.sweep.reset();
      reject_diagnostics(point);
      auto options = fpl::run_options(point, engine_choice, seed_choice);
      options.config_hash = base.hash;
      results.push_back(run_one(point, protocol, options));
      axis.push_back(v.get<double>());
    }
    const auto stacked = fpl::stack_sweep(base.sweep->column(), axis, results);
    *out = make_protocol_result(stacked, {{"sweep_path", base.sweep->path}});
  });
}

fpl_status fpl_run_floquet(const fpl_config* cfg, fpl_engine engine, fpl_result** out) {
  if (!cfg || !out) return invalid("null argument");
  *out = nullptr;
  return guard([&] {
    const auto& c = cfg->cfg;
    reject_diagnostics(c);
    const fpl::Engine e = engine_of(engine).value_or(c.engine);
    auto* r = new fpl_result;
    std::unique_ptr<fpl_result> owned(r);
    json meta{{"tool_version", fpl::kToolVersion},
              {"config_hash", fpl::hex64(c.hash)},
              {"engine", fpl::to_string(e)}};
    std::string csv = "mode,quasi_energy_hz\n";
    if (e == fpl::Engine::Effective) {
      const auto model = fpl::build_effective_model(c.network, c.schedule);
      meta["effective_model"] = fpl::effective_model_json(model);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(model.hamiltonian());
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double q = es.eigenvalues()(i) / fpl::kTwoPi;
        csv += std::to_string(i) + "," + fpl::format_number(q) + "\n";
        r->values.push_back(q);
      }
    } else {
      const auto fe = e == fpl::Engine::Envelope ? fpl::FloquetEngine::Envelope
                                                 : fpl::FloquetEngine::Position;
      const auto result = fpl::monodromy(c.network, c.schedule, fe, c.step);
      meta["floquet"] = fpl::floquet_json(result);
      for (std::size_t i = 0; i < result.quasi_energies.size(); ++i) {
        const double q = result.quasi_energies[i] / fpl::kTwoPi;
        csv += std::to_string(i) + "," + fpl::format_number(q) + "\n";
        r->values.push_back(q);
      }
      try {
        meta["effective_model"] =
            fpl::effective_model_json(fpl::build_effective_model(c.network, c.schedule));
      } catch (const fpl::Error& err) {
        meta["effective_model_error"] = err.what();
      }
    }
    r->csv = csv;
    r->json = meta.dump(2) + "\n";
    *out = owned.release();
  });
}

fpl_status fpl_fit_csv(fpl_fit_kind kind, const char* csv_path, const char* options_json,
                       fpl_result** out) {
  if (!csv_path || !out) return invalid("null argument");
  *out = nullptr;
  return guard([&] {
    json options = options_json ? json::parse(options_json) : json::object();
    const fpl::CsvTable table =
        select_site(fpl::read_csv(csv_path), options.value("site", 1));
    fpl::FitResult fit;
    std::string kind_name;
    switch (kind) {
      case FPL_FIT_EXCHANGE: {
        kind_name = "exchange";
        auto t = table.column("time_us");
        for (auto& x : t) x *= 1e-6;
        fit = fpl::fit_exchange(t, table.column("nbar"));
        fit = rescale(fit, "Omega_AC", "Omega_AC_hz", 1.0 / fpl::kTwoPi);
        fit = rescale(fit, "tau", "tau_us", 1e6);
        break;
      }
      case FPL_FIT_COMB: {
        kind_name = "comb";
        json grid = options;
        if (!grid.contains("carrier_hz") || !grid.contains("modulation_hz")) {
          const std::string meta_path =
              std::filesystem::path(csv_path).replace_extension(".meta.json").string();
          const json meta = json::parse(read_text(meta_path));
          grid["carrier_hz"] = meta.at("scalars").at("carrier_hz");
          grid["modulation_hz"] = meta.at("scalars").at("modulation_hz");
        }
        auto probes = table.column("probe_hz");
        for (auto& p : probes) p *= fpl::kTwoPi;
        const fpl::CombGrid g{grid.at("carrier_hz").get<double>() * fpl::kTwoPi,
                              grid.at("modulation_hz").get<double>() * fpl::kTwoPi};
        fit = fpl::fit_bessel_comb(probes, table.column("nbar"), g);
        fit = rescale(fit, "linewidth", "linewidth_hz", 1.0 / fpl::kTwoPi);
        break;
      }
      case FPL_FIT_SINUSOID: {
        kind_name = "sinusoid";
        fit = fpl::fit_sinusoid(table.column("dphi_rad"), table.column("nbar"));
        break;
      }
      default:
        fpl::fail(fpl::ErrorKind::Config, "unknown fit kind");
    }
    json j = fpl::fit_json(fit);
    j["kind"] = kind_name;
    j["tool_version"] = fpl::kToolVersion;
    auto* r = new fpl_result;
    r->json = j.dump(2) + "\n";
    for (const auto& p : fit.params) r->values.push_back(p.value);
    *out = r;
  });
}

const char* fpl_result_csv(const fpl_result* result) { return result ? result->csv.c_str() : ""; }

const char* fpl_result_json(const fpl_result* result) { return result ? result->json.c_str() : ""; }

size_t fpl_result_value_count(const fpl_result* result) { return result ? result->values.size() : 0; }

const double* fpl_result_values(const fpl_result* result) {
  return result && !result->values.empty() ? result->values.data() : nullptr;
}

fpl_status fpl_result_write(const fpl_result* result, const char* dir, const char* name) {
  if (!result || !dir || !name || !*name) return invalid("null argument");
  return guard([&] {
    const std::filesystem::path base = std::filesystem::path(dir) / name;
    if (result->csv.empty()) {
      fpl::write_file(base.string() + ".json", result->json);
    } else {
      fpl::write_file(base.string() + ".csv", result->csv);
      fpl::write_file(base.string() + ".meta.json", result->json);
    }
  });
}

void fpl_result_free(fpl_result* result) { delete result; }

double fpl_bessel_j(int order, double x) {
  try {
    return fpl::bessel_j(order, x);
  } catch (...) {
    return std::nan("");
  }
}

}  // extern "C"
