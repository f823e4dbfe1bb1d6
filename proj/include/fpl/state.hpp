#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace fpl {

using cplx = std::complex<double>;

/// Coherent-state amplitudes alpha_j (units sqrt(quanta)) at one instant.
struct AmplitudeState {
  std::vector<cplx> alphas;
  double time = 0.0;

  double nbar(std::size_t site) const { return std::norm(alphas[site]); }
  double total_quanta() const {
    double s = 0.0;
    for (const auto& a : alphas) s += std::norm(a);
    return s;
  }
};

struct TrajectoryMetadata {
  std::uint64_t schedule_hash = 0;
  std::string engine;
  double step = 0.0;  // s
  std::uint64_t rng_seed = 0;
  bool noise = false;
};

struct Trajectory {
  std::vector<AmplitudeState> samples;
  TrajectoryMetadata metadata;

  std::size_t site_count() const {
    return samples.empty() ? 0 : samples.front().alphas.size();
  }
  std::vector<double> nbar_series(std::size_t site) const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.nbar(site));
    return out;
  }
  std::vector<double> times() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.time);
    return out;
  }
};

/// Evenly spaced sample times t0, ..., t1 (count >= 2).
std::vector<double> linspace(double t0, double t1, std::size_t count);

}  // namespace fpl
