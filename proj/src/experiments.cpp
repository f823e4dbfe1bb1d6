#include "fpl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "fpl/bessel.hpp"
#include "fpl/drive.hpp"
#include "fpl/envelope.hpp"
#include "fpl/errors.hpp"
#include "fpl/position.hpp"

namespace fpl {

namespace {

// Argument of the maximum of J_1.
constexpr double kJ1ArgMax = 1.8411837813406593;

double fold_phase(double x) {
  x = std::remainder(x, kTwoPi);
  if (x <= -kPi) x += kTwoPi;
  return x;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Rounds a default pulse length down to whole modulation periods so that the
// readout is stroboscopic (no micromotion in the sampled amplitudes).
double stroboscopic(double t, double Omega_M) {
  if (!(Omega_M > 0.0)) return t;
  const double period = kTwoPi / Omega_M;
  const double whole = std::floor(t / period + 1e-9);
  return whole >= 1.0 ? whole * period : t;
}

std::vector<double> to_us(const std::vector<double>& seconds) {
  std::vector<double> out;
  out.reserve(seconds.size());
  for (double t : seconds) out.push_back(t * 1e6);
  return out;
}

SiteId brightest_site(const AmplitudeState& s) {
  SiteId best = 0;
  for (std::size_t j = 1; j < s.alphas.size(); ++j) {
    if (std::norm(s.alphas[j]) > std::norm(s.alphas[static_cast<std::size_t>(best)])) {
      best = static_cast<SiteId>(j);
    }
  }
  return best;
}

void check_site(const OscillatorNetwork& net, SiteId site, const char* what) {
  if (!net.has_site(site)) {
    std::ostringstream os;
    os << what << " refers to unknown site " << site;
    fail(ErrorKind::Config, os.str());
  }
}

bool noisy(const RunOptions& o) { return o.noise.has_value() && o.noise->enabled(); }

struct Averaged {
  std::vector<double> mean;
  std::vector<double> sem;
};

// n_bar of one site at `times`, averaged over shots when noise is on.
Averaged observe(const OscillatorNetwork& net, const DriveSchedule& sched,
                 const AmplitudeState& initial, const std::vector<double>& times, SiteId site,
                 const RunOptions& options, std::uint64_t point_seed, bool parallel_shots) {
  const auto idx = static_cast<std::size_t>(site);
  Averaged out;
  if (!noisy(options)) {
    out.mean = simulate(net, sched, initial, times, options, point_seed).nbar_series(idx);
    return out;
  }
  if (options.shots < 1) fail(ErrorKind::Config, "shot count must be >= 1");
  const auto shots = static_cast<std::size_t>(options.shots);
  std::vector<std::vector<double>> traces(shots);
  parallel_for(shots, parallel_shots ? resolve_thread_count(options.threads) : 1,
               [&](std::size_t k) {
                 traces[k] = simulate(net, sched, initial, times, options,
                                      derive_seed(point_seed, k))
                                 .nbar_series(idx);
               });
  const std::size_t n = times.size();
  out.mean.assign(n, 0.0);
  out.sem.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& tr : traces) s += tr[i];
    const double m = s / static_cast<double>(shots);
    double v = 0.0;
    for (const auto& tr : traces) v += (tr[i] - m) * (tr[i] - m);
    out.mean[i] = m;
    out.sem[i] = shots > 1 ? std::sqrt(v / static_cast<double>(shots - 1) / static_cast<double>(shots))
                           : 0.0;
  }
  return out;
}

ProtocolResult make_result(ProtocolKind kind, const RunOptions& options) {
  ProtocolResult r;
  r.kind = kind;
  r.engine = options.engine;
  r.config_hash = options.config_hash;
  r.seed = options.seed;
  return r;
}

}  // namespace

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Spectroscopy: return "spectroscopy";
    case ProtocolKind::Exchange: return "exchange";
    case ProtocolKind::PhaseRampMap: return "phase_ramp_map";
    case ProtocolKind::DualPhaseScan: return "dual_phase_scan";
    case ProtocolKind::TwoPathFringe: return "two_path_fringe";
  }
  return "unknown";
}

std::string to_string(Engine engine) {
  switch (engine) {
    case Engine::Envelope: return "envelope";
    case Engine::Position: return "position";
    case Engine::Effective: return "effective";
  }
  return "unknown";
}

Engine engine_from_string(const std::string& name) {
  if (name == "envelope") return Engine::Envelope;
  if (name == "position") return Engine::Position;
  if (name == "effective") return Engine::Effective;
  fail(ErrorKind::Config, "unknown engine '" + name + "' (envelope|position|effective)");
}

std::size_t ProtocolResult::point_count() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return axes.empty() ? 0 : n;
}

void ProtocolResult::check() const {
  const std::size_t n = point_count();
  if (values.size() != n) fail(ErrorKind::Validation, "values do not match the axes shape");
  if (!sem.empty() && sem.size() != n) fail(ErrorKind::Validation, "sem does not match the axes shape");
  for (const auto& [name, v] : overlays) {
    if (v.size() != n) fail(ErrorKind::Validation, "overlay '" + name + "' does not match the axes shape");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::Validation, "n_bar values must be finite and >= 0");
  }
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FPL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || stop.load()) return;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(splitmix64(base) ^ (index + 0x632BE59BD9B4E019ULL));
}

AmplitudeState evolve_effective_schedule(const OscillatorNetwork& net, const DriveSchedule& sched,
                                         const AmplitudeState& initial, double t_to) {
  if (t_to < initial.time) fail(ErrorKind::Misuse, "effective evolution runs forward only");
  DriveEvaluator drive(net, sched);
  const auto& bounds = drive.boundaries();
  constexpr int kRampSteps = 64;
  AmplitudeState state = initial;
  while (t_to - state.time > 1e-15 * std::max(1.0, std::fabs(t_to))) {
    const std::size_t seg = drive.segment_at(state.time);
    const auto& segment = sched.segments[seg];
    if (!segment.excitations.empty()) {
      fail(ErrorKind::Misuse, "effective engine does not model excitation tones");
    }
    const double start = bounds[seg];
    const double end = seg + 1 == sched.segments.size() ? INFINITY : bounds[seg + 1];
    double ramp_len = 0.0;
    for (const auto& r : segment.ramps) ramp_len = std::max(ramp_len, r.duration);
    if (ramp_len > 0.0 && state.time < start + ramp_len * (1.0 - 1e-12)) {
      const double h = ramp_len / kRampSteps;
      const int k = std::min(kRampSteps - 1,
                             static_cast<int>(std::floor((state.time - start) / h + 1e-9)));
      const double stop = std::min(t_to, start + (k + 1) * h);
      const double mid = start + (k + 0.5) * h;
      ScheduleSegment frozen;
      frozen.duration = h;
      for (const auto& site : net.sites()) {
        const ModulationState m = drive.modulation(seg, site.id, mid);
        if (m.Omega_M > 0.0) frozen.modulations.push_back({site.id, m.Omega_M, m.eta, m.phi});
      }
      state = evolve_effective_envelope(build_effective_model(net, frozen), state, stop);
    } else {
      const double stop = std::min(t_to, end);
      state = evolve_effective_envelope(build_effective_model(net, segment), state, stop);
    }
  }
  state.time = t_to;
  return state;
}

Trajectory simulate(const OscillatorNetwork& net, const DriveSchedule& sched,
                    const AmplitudeState& initial, const std::vector<double>& times,
                    const RunOptions& options, std::uint64_t seed) {
  if (initial.alphas.size() != net.size()) {
    fail(ErrorKind::Config, "initial state size does not match the network");
  }
  switch (options.engine) {
    case Engine::Envelope: {
      std::optional<NoiseModel> noise;
      if (noisy(options)) {
        noise = *options.noise;
        noise->rng_seed = seed;
      }
      auto traj = integrate_envelope(net, sched, initial, noise, options.step, times);
      traj.metadata.rng_seed = seed;
      return traj;
    }
    case Engine::Position: {
      if (noisy(options)) fail(ErrorKind::Config, "noise is only supported on the envelope engine");
      return integrate_position(net, sched, initial, options.step, times);
    }
    case Engine::Effective: {
      if (noisy(options)) fail(ErrorKind::Config, "noise is only supported on the envelope engine");
      Trajectory traj;
      traj.metadata.schedule_hash = schedule_hash(net, sched);
      traj.metadata.engine = "effective";
      AmplitudeState state = initial;
      double last = -INFINITY;
      for (double t : times) {
        if (t <= last || t < initial.time) {
          fail(ErrorKind::Config, "sample times must be strictly increasing and >= start");
        }
        state = evolve_effective_schedule(net, sched, state, t);
        traj.samples.push_back(state);
        last = t;
      }
      return traj;
    }
  }
  fail(ErrorKind::Misuse, "unknown engine");
}

// ---- spectroscopy -------------------------------------------------------------

double spectroscopy_response(double omega, const std::optional<ModulationTone>& modulation,
                             double strength, double t_probe, double probe_omega) {
  const double detuning = probe_omega - omega;
  auto term = [&](double x) { return std::polar(std::fabs(x) < 1e-12 ? 1.0 : std::sin(x) / x, x); };
  cplx sum(0.0, 0.0);
  if (!modulation || modulation->eta == 0.0) {
    sum = term(-detuning * t_probe / 2.0);
  } else {
    const int m_max = channel_truncation(modulation->eta);
    const auto spectrum = channel_weights(modulation->eta, m_max);
    for (const auto& c : spectrum.channels) {
      const double x = (c.order * modulation->Omega_M - detuning) * t_probe / 2.0;
      sum += c.weight * std::polar(1.0, c.order * modulation->phi_M) * term(x);
    }
  }
  const double amp = 0.5 * strength * t_probe;
  return amp * amp * std::norm(sum);
}

ProtocolResult run_spectroscopy(const SpectroscopySpec& spec, const RunOptions& options) {
  check_site(spec.network, spec.site, "spectroscopy");
  if (!(spec.t_probe > 0.0)) fail(ErrorKind::Config, "probe duration must be > 0");
  if (spec.probe_omegas.empty()) fail(ErrorKind::Config, "probe range is empty");
  ProtocolResult result = make_result(ProtocolKind::Spectroscopy, options);
  const double omega = spec.network.site(spec.site).omega;

  const double linewidth = kTwoPi / spec.t_probe;
  for (std::size_t i = 1; i < spec.probe_omegas.size(); ++i) {
    if (std::fabs(spec.probe_omegas[i] - spec.probe_omegas[i - 1]) > linewidth) {
      result.warnings.push_back("probe step exceeds the 2 pi / t_probe linewidth; peaks may be missed");
      break;
    }
  }
  if (spec.modulation) {
    const int m_max = channel_truncation(spec.modulation->eta);
    const double lo = *std::min_element(spec.probe_omegas.begin(), spec.probe_omegas.end());
    const double hi = *std::max_element(spec.probe_omegas.begin(), spec.probe_omegas.end());
    const double reach = std::min(3, m_max) * spec.modulation->Omega_M;
    const double tol = 1e-9 * omega;
    if (lo > omega - reach + tol || hi < omega + reach - tol) {
      result.warnings.push_back("probe range does not cover the first three sideband pairs");
    }
  }

  const std::size_t n = spec.probe_omegas.size();
  std::vector<double> values(n), analytic(n);
  std::vector<double> sems;
  if (noisy(options)) sems.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    analytic[i] = spectroscopy_response(omega, spec.modulation, spec.strength, spec.t_probe,
                                        spec.probe_omegas[i]);
  }
  if (options.engine == Engine::Effective) {
    if (noisy(options)) fail(ErrorKind::Config, "noise is only supported on the envelope engine");
    if (!spec.network.couplings().empty()) {
      result.warnings.push_back("effective spectroscopy treats the probed site as isolated");
    }
    values = analytic;
  } else {
    const bool outer = n > 1;
    parallel_for(n, resolve_thread_count(options.threads), [&](std::size_t i) {
      ScheduleSegment seg;
      seg.duration = spec.t_probe;
      if (spec.modulation) {
        ModulationTone m = *spec.modulation;
        m.site = spec.site;
        seg.modulations.push_back(m);
      }
      seg.excitations.push_back({spec.site, spec.probe_omegas[i], spec.phi_E, spec.strength});
      DriveSchedule sched;
      sched.segments.push_back(seg);
      AmplitudeState init;
      init.alphas.assign(spec.network.size(), cplx(0.0, 0.0));
      const Averaged a = observe(spec.network, sched, init, {spec.t_probe}, spec.site, options,
                                 derive_seed(options.seed, i), !outer);
      values[i] = a.mean.front();
      if (!a.sem.empty()) sems[i] = a.sem.front();
    });
  }
  std::vector<double> probe_hz;
  for (double w : spec.probe_omegas) probe_hz.push_back(w / kTwoPi);
  result.axes.push_back({"probe_hz", probe_hz});
  result.values = std::move(values);
  result.sem = std::move(sems);
  result.overlays["analytic_nbar"] = std::move(analytic);
  result.scalars["t_probe_us"] = spec.t_probe * 1e6;
  result.scalars["carrier_hz"] = omega / kTwoPi;
  if (spec.modulation) result.scalars["modulation_hz"] = spec.modulation->Omega_M / kTwoPi;
  result.check();
  return result;
}

// ---- exchange -----------------------------------------------------------------

ProtocolResult run_exchange(const ExchangeSpec& spec, const RunOptions& options) {
  check_site(spec.network, spec.observe, "exchange observe");
  if (spec.times.empty()) fail(ErrorKind::Config, "exchange needs sample times");
  ProtocolResult result = make_result(ProtocolKind::Exchange, options);
  const Averaged a = observe(spec.network, spec.schedule, spec.initial, spec.times, spec.observe,
                             options, derive_seed(options.seed, 0), true);
  result.axes.push_back({"time_us", to_us(spec.times)});
  result.values = a.mean;
  result.sem = a.sem;

  // Two-level prediction from the first segment's effective hop.
  const SiteId source = brightest_site(spec.initial);
  if (!spec.schedule.segments.empty() && source != spec.observe) {
    try {
      const EffectiveModel model = build_effective_model(spec.network, spec.schedule.segments.front());
      const double hop = std::abs(model.hop(spec.observe, source));
      if (hop > 0.0) {
        result.scalars["omega_ac_hz"] = 2.0 * hop / kTwoPi;
        result.scalars["t_pi_us"] = kPi / (2.0 * hop) * 1e6;
        const double n0 = std::norm(spec.initial.alphas[static_cast<std::size_t>(source)]);
        std::vector<double> overlay;
        for (double t : spec.times) overlay.push_back(n0 * std::pow(std::sin(hop * (t - spec.initial.time)), 2));
        result.overlays["two_level_nbar"] = std::move(overlay);
      }
    } catch (const Error& e) {
      result.warnings.push_back(std::string("no effective prediction: ") + e.what());
    }
  }
  result.check();
  return result;
}

// ---- phase-ramp map -------------------------------------------------------------

DriveSchedule phase_ramp_schedule(const PhaseRampSpec& spec, double dphi) {
  if (!(spec.t_prep > 0.0) || spec.t_ramp < 0.0 || !(spec.t_prep + spec.t_ramp < spec.t_max)) {
    fail(ErrorKind::Config, "phase ramp needs 0 < t_prep and t_prep + t_ramp < t_max");
  }
  ScheduleSegment before;
  before.duration = spec.t_prep;
  before.modulations = spec.modulations;
  ScheduleSegment after;
  after.duration = spec.t_max - spec.t_prep;
  after.modulations = spec.modulations;
  bool found = false;
  for (auto& m : after.modulations) {
    if (m.site == spec.ramp_site) {
      m.phi_M += dphi;
      found = true;
    }
  }
  if (!found) fail(ErrorKind::Config, "ramp site carries no modulation tone");
  if (spec.t_ramp > 0.0) after.ramps.push_back({RampKind::Phase, spec.ramp_site, spec.t_ramp});
  DriveSchedule sched;
  sched.segments = {before, after};
  return sched;
}

ProtocolResult run_phase_ramp_map(const PhaseRampSpec& spec, const RunOptions& options) {
  check_site(spec.network, spec.observe, "phase-ramp observe");
  if (spec.dphis.empty() || spec.times.empty()) fail(ErrorKind::Config, "phase-ramp map needs dphi values and times");
  ProtocolResult result = make_result(ProtocolKind::PhaseRampMap, options);
  const std::size_t nd = spec.dphis.size(), nt = spec.times.size();
  std::vector<Averaged> rows(nd);
  std::vector<DriveSchedule> schedules;
  for (double d : spec.dphis) schedules.push_back(phase_ramp_schedule(spec, d));
  parallel_for(nd, resolve_thread_count(options.threads), [&](std::size_t i) {
    rows[i] = observe(spec.network, schedules[i], spec.initial, spec.times, spec.observe, options,
                      derive_seed(options.seed, i), false);
  });
  double peak = 0.0;
  for (const auto& r : rows) peak = std::max(peak, *std::max_element(r.mean.begin(), r.mean.end()));
  const double scale = peak > 0.0 ? 1.0 / peak : 1.0;
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < nt; ++k) {
      result.values.push_back(r.mean[k] * scale);
      if (!r.sem.empty()) result.sem.push_back(r.sem[k] * scale);
    }
  }
  result.axes.push_back({"dphi_rad", spec.dphis});
  result.axes.push_back({"time_us", to_us(spec.times)});
  result.scalars["peak_nbar"] = peak;
  result.scalars["t_prep_us"] = spec.t_prep * 1e6;
  result.scalars["t_ramp_us"] = spec.t_ramp * 1e6;
  result.check();
  return result;
}

// ---- dual-modulation phase scan -----------------------------------------------------

ProtocolResult run_dual_phase_scan(const DualScanSpec& spec, const RunOptions& options) {
  check_site(spec.network, spec.observe, "dual-scan observe");
  check_site(spec.network, spec.scan_site, "dual-scan scan site");
  if (spec.dphis.empty()) fail(ErrorKind::Config, "dual scan needs dphi values");
  double Omega_M = 0.0;
  for (const auto& m : spec.modulations) {
    if (Omega_M == 0.0) Omega_M = m.Omega_M;
    if (std::fabs(m.Omega_M - Omega_M) > 1e-12 * Omega_M) {
      fail(ErrorKind::Config, "dual scan needs equal modulation frequencies on both sites");
    }
  }
  ProtocolResult result = make_result(ProtocolKind::DualPhaseScan, options);
  const SiteId source = brightest_site(spec.initial);
  const double coupling = spec.network.coupling(source, spec.observe);
  if (!(coupling > 0.0)) fail(ErrorKind::Config, "dual scan sites are not coupled");
  const double t_pi =
      spec.t_pi > 0.0 ? spec.t_pi
                      : stroboscopic(kPi / (2.0 * coupling * bessel_j(1, kJ1ArgMax)), Omega_M);
  const std::size_t n = spec.dphis.size();
  std::vector<DriveSchedule> schedules(n);
  std::vector<double> analytic(n), weight(n);
  for (std::size_t i = 0; i < n; ++i) {
    ScheduleSegment seg;
    seg.duration = t_pi;
    seg.modulations = spec.modulations;
    for (auto& m : seg.modulations) {
      if (m.site == spec.scan_site) m.phi_M += spec.dphis[i];
    }
    schedules[i].segments.push_back(seg);
    const EffectiveModel model = build_effective_model(spec.network, seg);
    weight[i] = std::abs(model.hop(spec.observe, source)) / coupling;
    analytic[i] = evolve_effective_envelope(model, spec.initial, spec.initial.time + t_pi)
                      .nbar(static_cast<std::size_t>(spec.observe));
  }
  std::vector<double> values(n);
  std::vector<double> sems;
  if (options.engine == Engine::Effective) {
    if (noisy(options)) fail(ErrorKind::Config, "noise is only supported on the envelope engine");
    values = analytic;
  } else {
    if (noisy(options)) sems.assign(n, 0.0);
    parallel_for(n, resolve_thread_count(options.threads), [&](std::size_t i) {
      const Averaged a = observe(spec.network, schedules[i], spec.initial,
                                 {spec.initial.time + t_pi}, spec.observe, options,
                                 derive_seed(options.seed, i), false);
      values[i] = a.mean.front();
      if (!a.sem.empty()) sems[i] = a.sem.front();
    });
  }
  result.axes.push_back({"dphi_rad", spec.dphis});
  result.values = std::move(values);
  result.sem = std::move(sems);
  result.overlays["effective_nbar"] = std::move(analytic);
  result.overlays["abs_bessel_weight"] = std::move(weight);
  result.scalars["t_pi_us"] = t_pi * 1e6;
  result.check();
  return result;
}

// ---- two-path fringe ------------------------------------------------------------

double balanced_phase_offset(const EffectiveModel& model, SiteId a, SiteId middle, SiteId b) {
  const cplx ta = model.hop(middle, a);
  const cplx tb = model.hop(middle, b);
  if (std::abs(ta) == 0.0 || std::abs(tb) == 0.0) {
    fail(ErrorKind::Config, "both paths need an open channel into the middle site");
  }
  auto theta0 = [&](SiteId j) {
    const auto i = static_cast<std::size_t>(j);
    return model.eta[i] * std::sin(model.phi[i]);
  };
  return fold_phase(std::arg(ta) + theta0(a) - std::arg(tb) - theta0(b));
}

ProtocolResult run_two_path_fringe(const TwoPathSpec& spec, const RunOptions& options) {
  for (SiteId s : {spec.source_a, spec.middle, spec.source_b}) check_site(spec.network, s, "two-path");
  if (spec.dphis.empty()) fail(ErrorKind::Config, "two-path scan needs dphi values");
  ProtocolResult result = make_result(ProtocolKind::TwoPathFringe, options);
  ScheduleSegment seg;
  seg.modulations = spec.modulations;
  const EffectiveModel model = build_effective_model(spec.network, seg);
  const double offset =
      spec.phase_offset ? *spec.phase_offset
                        : balanced_phase_offset(model, spec.source_a, spec.middle, spec.source_b);
  const double lambda = std::hypot(std::abs(model.hop(spec.middle, spec.source_a)),
                                   std::abs(model.hop(spec.middle, spec.source_b)));
  if (spec.t_pi <= 0.0 && !(lambda > 0.0)) fail(ErrorKind::Config, "two-path sites have no open channel");
  const double t_pi =
      spec.t_pi > 0.0 ? spec.t_pi : stroboscopic(kPi / (2.0 * lambda), model.Omega_M);
  seg.duration = t_pi;
  DriveSchedule sched;
  sched.segments.push_back(seg);

  const std::size_t n = spec.dphis.size();
  std::vector<AmplitudeState> initials(n);
  std::vector<double> analytic(n);
  for (std::size_t i = 0; i < n; ++i) {
    AmplitudeState s;
    s.alphas.assign(spec.network.size(), cplx(0.0, 0.0));
    s.alphas[static_cast<std::size_t>(spec.source_a)] = std::sqrt(spec.nbar_a);
    s.alphas[static_cast<std::size_t>(spec.source_b)] =
        std::polar(std::sqrt(spec.nbar_b), spec.dphis[i] + offset);
    initials[i] = s;
    analytic[i] = evolve_effective_envelope(model, s, t_pi).nbar(static_cast<std::size_t>(spec.middle));
  }
  std::vector<double> values(n);
  std::vector<double> sems;
  if (options.engine == Engine::Effective) {
    if (noisy(options)) fail(ErrorKind::Config, "noise is only supported on the envelope engine");
    values = analytic;
  } else {
    if (noisy(options)) sems.assign(n, 0.0);
    parallel_for(n, resolve_thread_count(options.threads), [&](std::size_t i) {
      const Averaged a = observe(spec.network, sched, initials[i], {t_pi}, spec.middle, options,
                                 derive_seed(options.seed, i), false);
      values[i] = a.mean.front();
      if (!a.sem.empty()) sems[i] = a.sem.front();
    });
  }
  result.axes.push_back({"dphi_rad", spec.dphis});
  result.values = std::move(values);
  result.sem = std::move(sems);
  result.overlays["effective_nbar"] = std::move(analytic);
  result.scalars["t_pi_us"] = t_pi * 1e6;
  result.scalars["phase_offset_rad"] = offset;
  result.check();
  return result;
}

}  // namespace fpl
