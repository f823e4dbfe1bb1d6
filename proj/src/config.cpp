#include "fpl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fpl/errors.hpp"

namespace fpl {

using nlohmann::json;

namespace {

constexpr double kHz = kTwoPi;  // Hz -> rad/s
constexpr double kUs = 1e-6;
constexpr double kUm = 1e-6;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  fail(ErrorKind::Config, where + ": " + what);
}

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) bad(where, std::string("missing '") + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number()) bad(where, std::string("'") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad(where, std::string("'") + key + "' must be finite");
  return x;
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.is_object() && obj.contains(key) ? number(obj, key, where) : fallback;
}

std::optional<double> maybe_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj, key, where);
}

int integer(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number_integer()) bad(where, std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

int integer_or(const json& obj, const char* key, int fallback, const std::string& where) {
  return obj.is_object() && obj.contains(key) ? integer(obj, key, where) : fallback;
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) bad(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) bad(where, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::pair<SiteId, SiteId> site_pair(const json& obj, const std::string& where) {
  const json& s = need(obj, "sites", where);
  if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer()) {
    bad(where, "'sites' must be a pair of site ids");
  }
  return {s[0].get<int>(), s[1].get<int>()};
}

// Grid given as {"values<sfx>": [...]} or {"start<sfx>", "stop<sfx>", "points"}.
std::vector<double> grid(const json& g, const std::string& suffix, double scale,
                         const std::string& where) {
  const std::string values_key = "values" + suffix;
  if (g.is_object() && g.contains(values_key)) {
    auto v = numbers(g.at(values_key), where + "." + values_key);
    if (v.empty()) bad(where, "grid is empty");
    for (auto& x : v) x *= scale;
    return v;
  }
  const double start = number(g, ("start" + suffix).c_str(), where);
  const double stop = number(g, ("stop" + suffix).c_str(), where);
  const int points = integer(g, "points", where);
  if (points < 1) bad(where, "'points' must be >= 1");
  if (points == 1) return {start * scale};
  return linspace(start * scale, stop * scale, static_cast<std::size_t>(points));
}

ModulationTone parse_modulation(const json& m, const std::optional<IndexCalibration>& cal,
                                const std::string& where) {
  ModulationTone t;
  t.site = integer_or(m, "site", 0, where);
  t.Omega_M = number(m, "freq_hz", where) * kHz;
  t.phi_M = number_or(m, "phase_rad", 0.0, where);
  const bool has_eta = m.contains("eta");
  const bool has_volts = m.contains("voltage_mv");
  if (has_eta == has_volts) bad(where, "give exactly one of 'eta' or 'voltage_mv'");
  if (has_eta) {
    t.eta = number(m, "eta", where);
  } else {
    if (!cal) bad(where, "'voltage_mv' needs a calibration block");
    t.eta = index_from_voltage(*cal, number(m, "voltage_mv", where) * 1e-3, t.Omega_M);
  }
  return t;
}

OscillatorNetwork parse_network(const json& doc) {
  const std::string where = "network";
  const json& block = need(doc, "network", "config");
  const json& sites_json = need(block, "sites", where);
  if (!sites_json.is_array() || sites_json.empty()) bad(where, "'sites' must be a non-empty array");
  std::vector<Site> sites;
  std::vector<Vec2> positions;
  bool all_positions = true;
  for (std::size_t i = 0; i < sites_json.size(); ++i) {
    const json& s = sites_json[i];
    const std::string w = where + ".sites[" + std::to_string(i) + "]";
    Site site;
    site.id = integer_or(s, "id", static_cast<int>(i), w);
    if (site.id != static_cast<int>(i)) bad(w, "site ids must equal their position in the list");
    site.omega = number(s, "freq_hz", w) * kHz;
    site.anharmonicity = number_or(s, "anharmonicity_hz", 0.0, w) * kHz;
    if (s.contains("position_um")) {
      const auto p = numbers(s.at("position_um"), w + ".position_um");
      if (p.size() != 2) bad(w, "'position_um' must have two components");
      site.position = Vec2{p[0] * kUm, p[1] * kUm};
      positions.push_back(*site.position);
    } else {
      all_positions = false;
    }
    sites.push_back(site);
  }
  const bool has_couplings = block.contains("couplings");
  const bool has_geometry = block.contains("geometry");
  if (has_couplings && has_geometry) bad(where, "give either 'couplings' or 'geometry', not both");
  if (has_geometry) {
    const json& g = block.at("geometry");
    if (!all_positions) bad(where, "geometry needs 'position_um' on every site");
    const double mass = number_or(g, "ion_mass_amu", phys::kMassMg24 / phys::kAtomicMassUnit, where + ".geometry") *
                        phys::kAtomicMassUnit;
    const double charge = number_or(g, "charge_e", 1.0, where + ".geometry") * phys::kElementaryCharge;
    std::map<std::pair<SiteId, SiteId>, double> orientation;
    if (g.contains("orientation")) {
      for (const auto& o : g.at("orientation")) {
        auto key = site_pair(o, where + ".geometry.orientation");
        if (key.first > key.second) std::swap(key.first, key.second);
        orientation[key] = number(o, "factor", where + ".geometry.orientation");
      }
    }
    std::vector<double> omegas;
    for (const auto& s : sites) omegas.push_back(s.omega);
    OscillatorNetwork built = build_network_from_geometry(positions, omegas, mass, charge, orientation);
    return OscillatorNetwork(sites, built.couplings());
  }
  std::map<std::pair<SiteId, SiteId>, double> couplings;
  if (has_couplings) {
    const json& c = block.at("couplings");
    if (!c.is_array()) bad(where, "'couplings' must be an array");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string w = where + ".couplings[" + std::to_string(i) + "]";
      auto key = site_pair(c[i], w);
      if (key.first > key.second) std::swap(key.first, key.second);
      if (couplings.count(key)) bad(w, "duplicate coupling");
      couplings[key] = number(c[i], "coupling_hz", w) * kHz;
    }
  }
  return OscillatorNetwork(sites, couplings);
}

std::optional<IndexCalibration> parse_calibration(const json& doc,
                                                  std::vector<Diagnostic>& diagnostics) {
  if (!doc.contains("calibration")) return std::nullopt;
  const std::string where = "calibration";
  const json& c = doc.at("calibration");
  IndexCalibration cal;
  cal.reference_Omega_M = number(c, "reference_freq_hz", where) * kHz;
  const json& table = need(c, "table_mv", where);
  if (!table.is_array() || table.size() < 2) bad(where, "'table_mv' needs at least two [mV, eta] rows");
  for (const auto& row : table) {
    const auto r = numbers(row, where + ".table_mv");
    if (r.size() != 2) bad(where, "'table_mv' rows are [mV, eta]");
    cal.table.emplace_back(r[0] * 1e-3, r[1]);
  }
  for (std::size_t i = 1; i < cal.table.size(); ++i) {
    if (!(cal.table[i].first > cal.table[i - 1].first)) {
      diagnostics.push_back({-1, "calibration voltages must be strictly increasing"});
      break;
    }
    if (cal.table[i].second < cal.table[i - 1].second) {
      diagnostics.push_back({-1, "calibration must be monotone (eta non-decreasing in voltage)"});
      break;
    }
  }
  if (cal.table.front().first != 0.0 || cal.table.front().second != 0.0) {
    diagnostics.push_back({-1, "calibration must start at (0 mV, eta 0)"});
  }
  if (!(cal.reference_Omega_M > 0.0)) diagnostics.push_back({-1, "calibration reference frequency must be > 0"});
  return cal;
}

DriveSchedule parse_schedule(const json& doc, const std::optional<IndexCalibration>& cal) {
  DriveSchedule sched;
  if (!doc.contains("schedule")) return sched;
  const json& segs = need(doc.at("schedule"), "segments", "schedule");
  if (!segs.is_array()) bad("schedule", "'segments' must be an array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string w = "schedule.segments[" + std::to_string(i) + "]";
    const json& s = segs[i];
    ScheduleSegment seg;
    seg.duration = number(s, "duration_us", w) * kUs;
    if (s.contains("modulations")) {
      for (const auto& m : s.at("modulations")) seg.modulations.push_back(parse_modulation(m, cal, w + ".modulations"));
    }
    if (s.contains("excitations")) {
      for (const auto& e : s.at("excitations")) {
        const std::string we = w + ".excitations";
        ExcitationTone t;
        t.site = integer(e, "site", we);
        t.Omega_E = number(e, "freq_hz", we) * kHz;
        t.phi_E = number_or(e, "phase_rad", 0.0, we);
        t.strength = 2.0 * number(e, "growth_per_us", we) / kUs;
        seg.excitations.push_back(t);
      }
    }
    if (s.contains("ramps")) {
      for (const auto& r : s.at("ramps")) {
        const std::string wr = w + ".ramps";
        Ramp ramp;
        const std::string kind = need(r, "kind", wr).get<std::string>();
        if (kind == "phase") {
          ramp.kind = RampKind::Phase;
        } else if (kind == "amplitude") {
          ramp.kind = RampKind::Amplitude;
        } else {
          bad(wr, "ramp kind must be 'phase' or 'amplitude'");
        }
        ramp.site = integer(r, "site", wr);
        ramp.duration = number(r, "duration_us", wr) * kUs;
        seg.ramps.push_back(ramp);
      }
    }
    sched.segments.push_back(seg);
  }
  return sched;
}

AmplitudeState parse_initial(const json& doc, std::size_t n) {
  AmplitudeState s;
  s.alphas.assign(n, cplx(0.0, 0.0));
  if (!doc.contains("initial")) return s;
  const json& b = doc.at("initial");
  const auto nbar = numbers(need(b, "nbar", "initial"), "initial.nbar");
  if (nbar.size() != n) bad("initial", "'nbar' needs one entry per site");
  std::vector<double> phase(n, 0.0);
  if (b.contains("phase_rad")) {
    phase = numbers(b.at("phase_rad"), "initial.phase_rad");
    if (phase.size() != n) bad("initial", "'phase_rad' needs one entry per site");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (nbar[j] < 0.0) bad("initial", "'nbar' entries must be >= 0");
    s.alphas[j] = std::polar(std::sqrt(nbar[j]), phase[j]);
  }
  return s;
}

const json& protocol_block(const RunConfig& cfg, const char* name) {
  const json& p = need(cfg.document, "protocol", "config");
  return need(p, name, "protocol");
}

std::vector<ModulationTone> first_segment_tones(const RunConfig& cfg, const char* who) {
  if (cfg.schedule.segments.empty()) bad(who, "needs a schedule with at least one segment");
  return cfg.schedule.segments.front().modulations;
}

}  // namespace

std::string SweepAxis::column() const {
  const auto dot = path.find_last_of('.');
  return dot == std::string::npos ? path : path.substr(dot + 1);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t canonical_hash(const json& document) { return fnv1a(document.dump()); }

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string item;
  while (std::getline(ss, item, '.')) parts.push_back(item);
  return parts;
}

const json* walk(const json& doc, const std::string& path) {
  const json* cur = &doc;
  for (const auto& part : split_path(path)) {
    if (cur->is_object()) {
      if (!cur->contains(part)) return nullptr;
      cur = &cur->at(part);
    } else if (cur->is_array()) {
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) return nullptr;
      const auto idx = std::stoul(part);
      if (idx >= cur->size()) return nullptr;
      cur = &cur->at(idx);
    } else {
      return nullptr;
    }
  }
  return cur;
}

}  // namespace

bool path_exists(const json& document, const std::string& path) {
  return !path.empty() && walk(document, path) != nullptr;
}

json with_path_value(const json& document, const std::string& path, const json& value) {
  if (!path_exists(document, path)) bad("sweep", "path '" + path + "' does not exist");
  json copy = document;
  json* cur = &copy;
  for (const auto& part : split_path(path)) {
    cur = cur->is_array() ? &cur->at(std::stoul(part)) : &cur->at(part);
  }
  *cur = value;
  return copy;
}

RunConfig parse_config(const json& document) {
  if (!document.is_object()) bad("config", "top level must be an object");
  RunConfig cfg;
  cfg.document = document;
  cfg.hash = canonical_hash(document);
  cfg.calibration = parse_calibration(document, cfg.diagnostics);
  cfg.network = parse_network(document);
  cfg.schedule = parse_schedule(document, cfg.calibration);
  cfg.initial = parse_initial(document, cfg.network.size());
  if (document.contains("engine")) cfg.engine = engine_from_string(document.at("engine").get<std::string>());
  if (document.contains("seed")) {
    const json& s = document.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      bad("config", "'seed' must be a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (document.contains("integrator")) {
    cfg.step = number_or(document.at("integrator"), "step_us", 0.0, "integrator") * kUs;
  }
  if (document.contains("output")) {
    const json& o = document.at("output");
    if (o.contains("dir")) cfg.output_dir = o.at("dir").get<std::string>();
    if (o.contains("name")) cfg.output_name = o.at("name").get<std::string>();
  }
  if (document.contains("noise")) {
    const json& n = document.at("noise");
    NoiseModel noise;
    if (auto tau = maybe_number(n, "dephasing_tau_us", "noise")) noise.dephasing_tau = *tau * kUs;
    noise.heating_rate = number_or(n, "heating_rate_per_ms", 0.0, "noise") * 1e3;
    cfg.shots = integer_or(n, "shots", 200, "noise");
    if (noise.dephasing_tau && !(*noise.dephasing_tau > 0.0)) {
      cfg.diagnostics.push_back({-1, "dephasing time must be > 0"});
    }
    if (noise.heating_rate < 0.0) cfg.diagnostics.push_back({-1, "heating rate must be >= 0"});
    if (cfg.shots < 1) cfg.diagnostics.push_back({-1, "shot count must be >= 1"});
    if (noise.enabled()) {
      cfg.noise = noise;
      if (!cfg.seed) cfg.diagnostics.push_back({-1, "noise is enabled but no seed is given"});
    }
  }
  if (document.contains("sweep")) {
    const json& s = document.at("sweep");
    SweepAxis axis;
    axis.path = need(s, "path", "sweep").get<std::string>();
    const json& values = need(s, "values", "sweep");
    if (!values.is_array() || values.empty()) bad("sweep", "'values' must be a non-empty array");
    axis.values.assign(values.begin(), values.end());
    if (!path_exists(document, axis.path)) {
      cfg.diagnostics.push_back({-1, "sweep path '" + axis.path + "' does not exist"});
    }
    cfg.sweep = axis;
  }
  if (!cfg.schedule.segments.empty()) {
    for (auto& d : validate_schedule(cfg.network, cfg.schedule)) cfg.diagnostics.push_back(d);
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config type error: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunOptions run_options(const RunConfig& cfg, std::optional<Engine> engine_override,
                       std::optional<std::uint64_t> seed_override) {
  RunOptions o;
  o.engine = engine_override.value_or(cfg.engine);
  o.noise = cfg.noise;
  o.shots = cfg.shots;
  o.step = cfg.step;
  o.config_hash = cfg.hash;
  const auto seed = seed_override ? seed_override : cfg.seed;
  if (cfg.noise && !seed) fail(ErrorKind::Validation, "noise is enabled but no seed is given");
  o.seed = seed.value_or(0);
  return o;
}

SpectroscopySpec spectroscopy_spec(const RunConfig& cfg) {
  const std::string w = "protocol.spectroscopy";
  const json& b = protocol_block(cfg, "spectroscopy");
  SpectroscopySpec s;
  s.network = cfg.network;
  s.site = integer_or(b, "site", 0, w);
  if (!cfg.network.has_site(s.site)) bad(w, "unknown site");
  if (b.contains("modulation")) {
    ModulationTone m = parse_modulation(b.at("modulation"), cfg.calibration, w + ".modulation");
    m.site = s.site;
    s.modulation = m;
  }
  s.t_probe = number_or(b, "t_probe_us", 50.0, w) * kUs;
  if (!(s.t_probe > 0.0)) bad(w, "'t_probe_us' must be > 0");
  const bool has_peak = b.contains("peak_nbar");
  const bool has_growth = b.contains("growth_per_us");
  if (has_peak == has_growth) bad(w, "give exactly one of 'peak_nbar' or 'growth_per_us'");
  s.strength = has_peak ? 2.0 * std::sqrt(number(b, "peak_nbar", w)) / s.t_probe
                        : 2.0 * number(b, "growth_per_us", w) / kUs;
  s.phi_E = number_or(b, "phase_rad", 0.0, w);
  s.probe_omegas = grid(need(b, "probe", w), "_hz", kHz, w + ".probe");
  return s;
}

ExchangeSpec exchange_spec(const RunConfig& cfg) {
  const std::string w = "protocol.exchange";
  const json& b = protocol_block(cfg, "exchange");
  if (cfg.schedule.segments.empty()) bad(w, "needs a schedule");
  ExchangeSpec s;
  s.network = cfg.network;
  s.schedule = cfg.schedule;
  s.initial = cfg.initial;
  s.observe = integer_or(b, "observe", 1, w);
  const double total = cfg.schedule.total_duration();
  const double t_max = number_or(b, "t_max_us", total / kUs, w) * kUs;
  if (!(t_max > 0.0) || t_max > total * (1.0 + 1e-12)) bad(w, "'t_max_us' must lie within the schedule");
  const int samples = integer_or(b, "samples", 201, w);
  if (samples < 2) bad(w, "'samples' must be >= 2");
  s.times = linspace(0.0, t_max, static_cast<std::size_t>(samples));
  return s;
}

PhaseRampSpec phase_ramp_spec(const RunConfig& cfg) {
  const std::string w = "protocol.phase_ramp";
  const json& b = protocol_block(cfg, "phase_ramp");
  PhaseRampSpec s;
  s.network = cfg.network;
  s.modulations = first_segment_tones(cfg, w.c_str());
  s.ramp_site = integer_or(b, "ramp_site", 1, w);
  s.t_prep = number(b, "t_prep_us", w) * kUs;
  s.t_ramp = number_or(b, "t_ramp_us", 0.0, w) * kUs;
  s.t_max = number(b, "t_max_us", w) * kUs;
  s.dphis = grid(need(b, "dphi", w), "_rad", 1.0, w + ".dphi");
  const int samples = integer_or(b, "samples", 101, w);
  if (samples < 2) bad(w, "'samples' must be >= 2");
  s.times = linspace(0.0, s.t_max, static_cast<std::size_t>(samples));
  s.initial = cfg.initial;
  s.observe = integer_or(b, "observe", 1, w);
  return s;
}

DualScanSpec dual_scan_spec(const RunConfig& cfg) {
  const std::string w = "protocol.dual_scan";
  const json& b = protocol_block(cfg, "dual_scan");
  DualScanSpec s;
  s.network = cfg.network;
  s.modulations = first_segment_tones(cfg, w.c_str());
  s.scan_site = integer_or(b, "scan_site", 1, w);
  s.t_pi = number_or(b, "t_pi_us", 0.0, w) * kUs;
  s.dphis = grid(need(b, "dphi", w), "_rad", 1.0, w + ".dphi");
  s.initial = cfg.initial;
  s.observe = integer_or(b, "observe", 1, w);
  return s;
}

TwoPathSpec two_path_spec(const RunConfig& cfg) {
  const std::string w = "protocol.two_path";
  const json& b = protocol_block(cfg, "two_path");
  TwoPathSpec s;
  s.network = cfg.network;
  s.modulations = first_segment_tones(cfg, w.c_str());
  if (b.contains("sources")) {
    const auto src = numbers(b.at("sources"), w + ".sources");
    if (src.size() != 2) bad(w, "'sources' must list two sites");
    s.source_a = static_cast<SiteId>(src[0]);
    s.source_b = static_cast<SiteId>(src[1]);
  }
  s.middle = integer_or(b, "middle", 1, w);
  if (b.contains("nbar")) {
    const auto n = numbers(b.at("nbar"), w + ".nbar");
    if (n.size() != 2) bad(w, "'nbar' must give the two source occupations");
    s.nbar_a = n[0];
    s.nbar_b = n[1];
  }
  s.phase_offset = maybe_number(b, "phase_offset_rad", w);
  s.t_pi = number_or(b, "t_pi_us", 0.0, w) * kUs;
  s.dphis = grid(need(b, "dphi", w), "_rad", 1.0, w + ".dphi");
  return s;
}

}  // namespace fpl
