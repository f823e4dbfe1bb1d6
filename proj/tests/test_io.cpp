#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fpl/config.hpp"
#include "fpl/envelope.hpp"
#include "fpl/errors.hpp"
#include "fpl/table.hpp"

using namespace fpl;
using nlohmann::json;

namespace {

const char* kExchange = R"({
  "network": {
    "sites": [{"freq_hz": 4.0e6}, {"freq_hz": 4.1e6}],
    "couplings": [{"sites": [0, 1], "coupling_hz": 2156}]
  },
  "schedule": {"segments": [
    {"duration_us": 400, "modulations": [{"site": 1, "freq_hz": 1.0e5, "eta": 1.8, "phase_rad": 0.0}]}
  ]},
  "initial": {"nbar": [100, 0]},
  "protocol": {"exchange": {"observe": 1, "t_max_us": 400, "samples": 41}},
  "engine": "effective"
})";

const std::filesystem::path kConfigDir = FPL_CONFIG_DIR;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no fpl::Error thrown");
  return ErrorKind::Misuse;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fpl_test_io_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config converts experimental units") {
  const RunConfig cfg = parse_config_text(kExchange);
  REQUIRE(cfg.network.size() == 2);
  CHECK(cfg.network.site(1).omega == doctest::Approx(kTwoPi * 4.1e6));
  CHECK(cfg.network.coupling(0, 1) == doctest::Approx(kTwoPi * 2156.0));
  CHECK(cfg.schedule.total_duration() == doctest::Approx(400e-6));
  CHECK(cfg.schedule.segments[0].modulations[0].Omega_M == doctest::Approx(kTwoPi * 1e5));
  CHECK(cfg.initial.alphas[0] == cplx(10.0, 0.0));
  CHECK(cfg.engine == Engine::Effective);
  CHECK(cfg.diagnostics.empty());

  const ExchangeSpec ex = exchange_spec(cfg);
  CHECK(ex.times.size() == 41);
  CHECK(ex.times.back() == doctest::Approx(400e-6));
}

TEST_CASE("canonical hash ignores formatting and key order") {
  const json a = json::parse(kExchange);
  const json b = json::parse(R"({"engine":"effective","initial":{"nbar":[100,0]},
    "protocol":{"exchange":{"samples":41,"t_max_us":400,"observe":1}},
    "schedule":{"segments":[{"modulations":[{"phase_rad":0.0,"eta":1.8,"freq_hz":1.0e5,"site":1}],"duration_us":400}]},
    "network":{"couplings":[{"coupling_hz":2156,"sites":[0,1]}],"sites":[{"freq_hz":4.0e6},{"freq_hz":4.1e6}]}})");
  CHECK(canonical_hash(a) == canonical_hash(b));
  CHECK(canonical_hash(a) == canonical_hash(json::parse(a.dump())));
  const json c = with_path_value(a, "schedule.segments.0.modulations.0.eta", 1.7);
  CHECK(canonical_hash(c) != canonical_hash(a));
  CHECK(fnv1a("") == 14695981039346656037ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("config paths") {
  const json a = json::parse(kExchange);
  CHECK(path_exists(a, "network.sites.1.freq_hz"));
  CHECK_FALSE(path_exists(a, "network.sites.2.freq_hz"));
  CHECK_FALSE(path_exists(a, "network.nope"));
  CHECK(kind_of([&] { with_path_value(a, "network.nope", 1); }) == ErrorKind::Config);
  CHECK(with_path_value(a, "initial.nbar.0", 4)["initial"]["nbar"][0] == 4);
}

TEST_CASE("config errors and diagnostics") {
  CHECK(kind_of([] { parse_config_text("{"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config_text("[]"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config_text(R"({"network": {"sites": []}})"); }) == ErrorKind::Config);
  CHECK(kind_of([] { load_config("/nonexistent/fpl.json"); }) == ErrorKind::Io);

  json doc = json::parse(kExchange);
  doc["engine"] = "warp";
  CHECK(kind_of([&] { parse_config(doc); }) == ErrorKind::Config);

  doc = json::parse(kExchange);
  doc["noise"] = {{"dephasing_tau_us", 550}};
  RunConfig noisy = parse_config(doc);
  REQUIRE(noisy.diagnostics.size() == 1);
  CHECK(kind_of([&] { run_options(noisy, std::nullopt, std::nullopt); }) == ErrorKind::Validation);
  CHECK(run_options(noisy, std::nullopt, 5).seed == 5);

  doc = json::parse(kExchange);
  doc["schedule"]["segments"][0]["duration_us"] = 0;
  CHECK(parse_config(doc).diagnostics.size() == 1);

  doc = json::parse(kExchange);
  doc["calibration"] = {{"reference_freq_hz", 1e5}, {"table_mv", {{0, 0}, {100, 0.7}, {200, 0.6}}}};
  CHECK(parse_config(doc).diagnostics.size() == 1);

  doc = json::parse(kExchange);
  doc["sweep"] = {{"path", "initial.nothing"}, {"values", {1, 2}}};
  CHECK(parse_config(doc).diagnostics.size() == 1);
}

TEST_CASE("calibrated voltage sets the index") {
  json doc = json::parse(kExchange);
  doc["calibration"] = {{"reference_freq_hz", 1e5}, {"table_mv", {{0, 0}, {100, 0.63}, {200, 1.26}}}};
  doc["schedule"]["segments"][0]["modulations"][0].erase("eta");
  doc["schedule"]["segments"][0]["modulations"][0]["voltage_mv"] = 150;
  const RunConfig cfg = parse_config(doc);
  CHECK(cfg.schedule.segments[0].modulations[0].eta == doctest::Approx(0.945));
  doc["schedule"]["segments"][0]["modulations"][0]["voltage_mv"] = 250;
  CHECK(kind_of([&] { parse_config(doc); }) == ErrorKind::Range);
}

TEST_CASE("number formatting") {
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(4.1e6) == "4100000");
  CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("trajectory table has one row per site and sample") {
  OscillatorNetwork net({Site{0, kTwoPi * 4e6}, Site{1, kTwoPi * 4.1e6}, Site{2, kTwoPi * 4.2e6}},
                        {{{0, 1}, 1e4}, {{1, 2}, 1e4}});
  DriveSchedule sched;
  sched.segments.push_back({100e-6, {{1, kTwoPi * 1e5, 1.8, 0.0}}, {}, {}});
  AmplitudeState init;
  init.alphas = {3.0, 0.0, 0.0};
  const auto tr = integrate_envelope(net, sched, init, std::nullopt, 0.0, linspace(1e-6, 100e-6, 100));
  const std::string text = trajectory_csv(tr);
  const CsvTable table = parse_csv(text);
  CHECK(table.columns == std::vector<std::string>{"time_us", "site", "re_alpha", "im_alpha", "nbar"});
  CHECK(table.rows.size() == 300);
  CHECK(table.column("time_us").back() == doctest::Approx(100.0));
  CHECK(text == trajectory_csv(tr));
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("protocol tables, sweeps and metadata") {
  const RunConfig cfg = parse_config_text(kExchange);
  RunOptions o = run_options(cfg, std::nullopt, std::nullopt);
  const ProtocolResult r = run_exchange(exchange_spec(cfg), o);
  const CsvTable t = parse_csv(protocol_csv(r));
  CHECK(t.columns == std::vector<std::string>{"time_us", "nbar"});
  CHECK(t.rows.size() == 41);
  CHECK_FALSE(t.has("nbar_sem"));
  CHECK(kind_of([&] { t.column("missing"); }) == ErrorKind::Config);

  const json meta = protocol_meta(r);
  CHECK(meta["config_hash"] == hex64(cfg.hash));
  CHECK(meta["tool_version"] == kToolVersion);
  CHECK(meta["engine"] == "effective");

  json changed = cfg.document;
  changed["initial"]["nbar"][0] = 101;
  const RunConfig cfg2 = parse_config(changed);
  const ProtocolResult r2 = run_exchange(exchange_spec(cfg2), run_options(cfg2, std::nullopt, std::nullopt));
  CHECK(protocol_meta(r2)["config_hash"] != meta["config_hash"]);
  const RunConfig cfg3 = parse_config_text(kExchange);
  const ProtocolResult r3 = run_exchange(exchange_spec(cfg3), run_options(cfg3, std::nullopt, std::nullopt));
  CHECK(protocol_meta(r3).dump() == meta.dump());
  CHECK(protocol_csv(r3) == protocol_csv(r));

  const ProtocolResult stacked = stack_sweep("nbar0", {100.0, 101.0}, {r, r2});
  CHECK(stacked.axes.size() == 2);
  CHECK(stacked.values.size() == 82);
  CHECK(parse_csv(protocol_csv(stacked)).columns.front() == "nbar0");
  stacked.check();
}

TEST_CASE("fit json writes non-finite values as null") {
  FitResult f;
  f.params = {{"tau", std::numeric_limits<double>::infinity(), 0.0}};
  f.converged = true;
  const json j = fit_json(f);
  CHECK(j["params"]["tau"]["value"].is_null());
}

TEST_CASE("file writes are atomic and report failures") {
  const auto dir = scratch_dir("write");
  const auto path = (dir / "nested" / "a.csv").string();
  write_file(path, "x\n1\n");
  CHECK(read_csv(path).column("x") == std::vector<double>{1.0});
  std::filesystem::create_directories(dir / "blocked");
  CHECK(kind_of([&] { write_file((dir / "blocked").string(), "y"); }) == ErrorKind::Io);
  CHECK(kind_of([&] { read_csv((dir / "missing.csv").string()); }) == ErrorKind::Io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shipped configs round-trip, validate and run") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kConfigDir)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    CAPTURE(entry.path().filename().string());
    std::ifstream in(entry.path());
    const json doc = json::parse(in);
    CHECK(json::parse(doc.dump()).dump() == doc.dump());
    const RunConfig cfg = load_config(entry.path().string());
    CHECK(cfg.diagnostics.empty());
    CHECK(cfg.hash == canonical_hash(json::parse(doc.dump(2))));
    if (!doc.contains("protocol")) continue;

    // Each protocol on the effective engine (no noise), with the schema
    // checked through a CSV round trip.
    RunConfig quiet = cfg;
    quiet.noise.reset();
    const RunOptions o = run_options(quiet, Engine::Effective, std::nullopt);
    const json& p = doc.at("protocol");
    std::vector<ProtocolResult> results;
    if (p.contains("exchange")) results.push_back(run_exchange(exchange_spec(quiet), o));
    if (p.contains("phase_ramp")) results.push_back(run_phase_ramp_map(phase_ramp_spec(quiet), o));
    if (p.contains("dual_scan")) results.push_back(run_dual_phase_scan(dual_scan_spec(quiet), o));
    if (p.contains("two_path")) results.push_back(run_two_path_fringe(two_path_spec(quiet), o));
    if (p.contains("spectroscopy")) results.push_back(run_spectroscopy(spectroscopy_spec(quiet), o));
    CHECK_FALSE(results.empty());
    for (const auto& r : results) {
      const CsvTable t = parse_csv(protocol_csv(r));
      REQUIRE(t.columns.size() == r.axes.size() + 1);
      for (std::size_t a = 0; a < r.axes.size(); ++a) CHECK(t.columns[a] == r.axes[a].name);
      CHECK(t.columns.back() == "nbar");
      CHECK(t.rows.size() == r.point_count());
    }
  }
  CHECK(count >= 8);
}
