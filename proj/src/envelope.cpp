#include "fpl/envelope.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "fpl/errors.hpp"

namespace fpl {

std::vector<double> linspace(double t0, double t1, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) return {t0};
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.back() = t1;
  return out;
}

namespace {

constexpr double kAutoStepsPerPeriod = 200.0;
constexpr double kMinStepsPerPeriod = 20.0;

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  void num(double v) { bytes(&v, sizeof v); }
  void num(int v) { bytes(&v, sizeof v); }
};

}  // namespace

std::uint64_t schedule_hash(const OscillatorNetwork& net, const DriveSchedule& sched) {
  Fnv f;
  for (const auto& s : net.sites()) {
    f.num(s.omega);
    f.num(s.anharmonicity);
  }
  for (const auto& [key, c] : net.couplings()) {
    f.num(key.first);
    f.num(key.second);
    f.num(c);
  }
  for (const auto& seg : sched.segments) {
    f.num(seg.duration);
    for (const auto& m : seg.modulations) {
      f.num(m.site);
      f.num(m.Omega_M);
      f.num(m.eta);
      f.num(m.phi_M);
    }
    for (const auto& e : seg.excitations) {
      f.num(e.site);
      f.num(e.Omega_E);
      f.num(e.phi_E);
      f.num(e.strength);
    }
    for (const auto& r : seg.ramps) {
      f.num(static_cast<int>(r.kind));
      f.num(r.site);
      f.num(r.duration);
    }
  }
  return f.h;
}

EnvelopePropagator::EnvelopePropagator(const OscillatorNetwork& net,
                                       const DriveSchedule& sched,
                                       std::optional<NoiseModel> noise, double dt_max)
    : net_(&net), drive_(net, sched), noise_(std::move(noise)) {
  omega_ref_ = net.reference_omega();
  const double fastest = std::max(drive_.fastest_envelope_frequency(), 1.0);
  const double period = kTwoPi / fastest;
  if (dt_max > 0.0) {
    if (dt_max > period / kMinStepsPerPeriod) {
      std::ostringstream os;
      os << "step size " << dt_max << " s infeasible: need <= "
         << period / kMinStepsPerPeriod << " s to resolve " << fastest << " rad/s";
      fail(ErrorKind::Config, os.str());
    }
    dt_ = dt_max;
  } else {
    dt_ = period / kAutoStepsPerPeriod;
  }
  for (const auto& [key, c] : net.couplings()) {
    if (c > 0.0) {
      pairs_.push_back({static_cast<std::size_t>(key.first),
                        static_cast<std::size_t>(key.second), c});
    }
  }
  const std::size_t n = net.size();
  jitter_.assign(n, 0.0);
  k1_.resize(n);
  k2_.resize(n);
  k3_.resize(n);
  k4_.resize(n);
  tmp_.resize(n);
  if (noise_) {
    if (noise_->dephasing_tau && !(*noise_->dephasing_tau > 0.0)) {
      fail(ErrorKind::Config, "dephasing tau must be > 0");
    }
    if (!(noise_->heating_rate >= 0.0)) fail(ErrorKind::Config, "heating rate must be >= 0");
    rng_.seed(noise_->rng_seed);
    if (noise_->dephasing_tau) {
      tau_c_ = *noise_->dephasing_tau / 100.0;
      const double sigma = std::sqrt(1.0 / (*noise_->dephasing_tau * tau_c_));
      std::normal_distribution<double> normal;
      for (auto& j : jitter_) j = sigma * normal(rng_);
      dt_ = std::min(dt_, tau_c_ / 20.0);
    }
  }
}

void EnvelopePropagator::rhs(std::size_t segment, double t, const std::vector<cplx>& y,
                             std::vector<cplx>& dy) const {
  const auto& sites = net_->sites();
  const cplx minus_i(0.0, -1.0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double w = drive_.instantaneous_omega(segment, static_cast<SiteId>(j), t) -
                     omega_ref_ + jitter_[j] + sites[j].anharmonicity * std::norm(y[j]);
    dy[j] = w * y[j];
  }
  for (const auto& p : pairs_) {
    dy[p.a] += p.rate * y[p.b];
    dy[p.b] += p.rate * y[p.a];
  }
  for (const auto& e : drive_.schedule().segments[segment].excitations) {
    const double phase = (e.Omega_E - omega_ref_) * t + e.phi_E;
    dy[static_cast<std::size_t>(e.site)] -= 0.5 * e.strength * std::polar(1.0, -phase);
  }
  for (auto& v : dy) v *= minus_i;
}

void EnvelopePropagator::rk4(std::size_t segment, double t, double h, std::vector<cplx>& y) {
  const std::size_t n = y.size();
  rhs(segment, t, y, k1_);
  for (std::size_t j = 0; j < n; ++j) tmp_[j] = y[j] + 0.5 * h * k1_[j];
  rhs(segment, t + 0.5 * h, tmp_, k2_);
  for (std::size_t j = 0; j < n; ++j) tmp_[j] = y[j] + 0.5 * h * k2_[j];
  rhs(segment, t + 0.5 * h, tmp_, k3_);
  for (std::size_t j = 0; j < n; ++j) tmp_[j] = y[j] + h * k3_[j];
  rhs(segment, t + h, tmp_, k4_);
  for (std::size_t j = 0; j < n; ++j) {
    y[j] += h / 6.0 * (k1_[j] + 2.0 * k2_[j] + 2.0 * k3_[j] + k4_[j]);
  }
}

void EnvelopePropagator::apply_noise(double h, std::vector<cplx>& y) {
  std::normal_distribution<double> normal;
  if (noise_->dephasing_tau) {
    const double sigma = std::sqrt(1.0 / (*noise_->dephasing_tau * tau_c_));
    const double decay = std::exp(-h / tau_c_);
    const double spread = sigma * std::sqrt(1.0 - decay * decay);
    for (auto& j : jitter_) j = j * decay + spread * normal(rng_);
  }
  if (noise_->heating_rate > 0.0) {
    const double s = std::sqrt(noise_->heating_rate * h / 2.0);
    for (auto& a : y) {
      const double re = normal(rng_);
      const double im = normal(rng_);
      a += cplx(s * re, s * im);
    }
  }
}

double EnvelopePropagator::step_for(const AmplitudeState& state) const {
  // The Kerr rotation K |alpha|^2 is state dependent; bound it by the total
  // quanta, which only drive and heating change.
  double kerr = 0.0;
  for (const auto& s : net_->sites()) kerr = std::max(kerr, std::fabs(s.anharmonicity));
  kerr *= state.total_quanta();
  if (kerr <= 0.0) return dt_;
  return std::min(dt_, kTwoPi / (kAutoStepsPerPeriod * kerr));
}

void EnvelopePropagator::propagate(AmplitudeState& state, double t_to) {
  if (state.alphas.size() != net_->size()) {
    fail(ErrorKind::Config, "state size does not match network");
  }
  const bool noisy = noise_ && noise_->enabled();
  if (t_to < state.time && noisy) {
    fail(ErrorKind::Misuse, "backward propagation requires noise off");
  }
  const auto& bounds = drive_.boundaries();
  const double dir = t_to >= state.time ? 1.0 : -1.0;
  while (dir * (t_to - state.time) > 0.0) {
    // Next boundary in the direction of travel, or the target.
    double stop = t_to;
    for (double b : bounds) {
      if (dir > 0 ? (b > state.time && b < stop) : (b < state.time && b > stop)) stop = b;
    }
    const double len = stop - state.time;
    const std::size_t seg = drive_.segment_at(state.time + 0.5 * len);
    const auto steps = static_cast<std::size_t>(std::ceil(std::fabs(len) / step_for(state) - 1e-9));
    const double h = len / static_cast<double>(std::max<std::size_t>(steps, 1));
    double t = state.time;
    for (std::size_t i = 0; i < std::max<std::size_t>(steps, 1); ++i) {
      rk4(seg, t, h, state.alphas);
      if (noisy) apply_noise(std::fabs(h), state.alphas);
      t = state.time + static_cast<double>(i + 1) * h;
      for (const auto& a : state.alphas) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
          std::ostringstream os;
          os << "numerical blow-up at t = " << t << " s";
          fail(ErrorKind::Numerical, os.str());
        }
      }
    }
    state.time = stop;
  }
}

Trajectory integrate_envelope(const OscillatorNetwork& net, const DriveSchedule& sched,
                              const AmplitudeState& initial,
                              const std::optional<NoiseModel>& noise, double dt_max,
                              const std::vector<double>& sample_times) {
  EnvelopePropagator prop(net, sched, noise, dt_max);
  Trajectory traj;
  traj.metadata.schedule_hash = schedule_hash(net, sched);
  traj.metadata.engine = "envelope";
  traj.metadata.step = prop.step();
  traj.metadata.noise = noise && noise->enabled();
  traj.metadata.rng_seed = noise ? noise->rng_seed : 0;
  AmplitudeState state = initial;
  double last = -INFINITY;
  for (double t : sample_times) {
    if (t <= last || t < initial.time) {
      fail(ErrorKind::Config, "sample times must be strictly increasing and >= start");
    }
    prop.propagate(state, t);
    traj.samples.push_back(state);
    last = t;
  }
  return traj;
}

}  // namespace fpl
