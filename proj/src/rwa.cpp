#include "fpl/rwa.hpp"

#include <cmath>
#include <cstdlib>
#include <queue>
#include <set>
#include <sstream>

#include "fpl/bessel.hpp"
#include "fpl/errors.hpp"

namespace fpl {

double ChannelSpectrum::weight(int order) const {
  for (const auto& c : channels) {
    if (c.order == order) return c.weight;
  }
  return 0.0;
}

int channel_truncation(double eta) { return static_cast<int>(std::ceil(eta)) + 12; }

ChannelSpectrum channel_weights(double eta, int m_max, double omega, double Omega_M) {
  if (eta < 0.0) fail(ErrorKind::Domain, "modulation index must be >= 0");
  if (m_max < 0) fail(ErrorKind::Domain, "m_max must be >= 0");
  const auto table = bessel_j_table(m_max, eta);
  ChannelSpectrum out;
  for (int m = -m_max; m <= m_max; ++m) {
    const double j = table[static_cast<std::size_t>(std::abs(m))];
    const double w = (m < 0 && (-m) % 2 == 1) ? -j : j;
    out.channels.push_back({m, omega + m * Omega_M, w});
  }
  return out;
}

cplx effective_coupling_single(double Omega_C, double eta, double phi_M, int s,
                               double mismatch) {
  if (s == 0 && mismatch != 0.0) {
    fail(ErrorKind::Misuse, "carrier channel (s = 0) cannot bridge a detuning");
  }
  return Omega_C * bessel_j(s, eta) * std::polar(1.0, s * phi_M);
}

cplx effective_coupling_dual(double Omega_C, double eta0, double eta1, double phi0,
                             double phi1, int s) {
  const cplx z = std::polar(eta1, phi1) - std::polar(eta0, phi0);
  const double eta_rel = std::abs(z);
  const double psi = eta_rel > 0.0 ? std::arg(z) : 0.0;
  return Omega_C * bessel_j(s, eta_rel) * std::polar(1.0, s * psi);
}

cplx effective_coupling_dual_channel_sum(double Omega_C, double eta0, double eta1,
                                         double phi0, double phi1, int s) {
  const int m_max = channel_truncation(std::max(eta0, eta1)) + std::abs(s);
  const auto j0 = bessel_j_table(m_max + std::abs(s), eta0);
  const auto j1 = bessel_j_table(m_max + std::abs(s), eta1);
  auto J = [](const std::vector<double>& t, int m) {
    const double v = t[static_cast<std::size_t>(std::abs(m))];
    return (m < 0 && (-m) % 2 == 1) ? -v : v;
  };
  cplx sum(0.0, 0.0);
  for (int b = -m_max; b <= m_max; ++b) {
    sum += J(j1, b + s) * J(j0, b) * std::polar(1.0, (b + s) * phi1 - b * phi0);
  }
  return Omega_C * sum;
}

cplx EffectiveModel::hop(SiteId j, SiteId k) const {
  if (j == k) return 0.0;
  auto it = hoppings.find(std::minmax(j, k));
  if (it == hoppings.end()) return 0.0;
  return j < k ? it->second : std::conj(it->second);
}

Eigen::MatrixXcd EffectiveModel::hamiltonian() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) h(j, j) = onsite[static_cast<std::size_t>(j)];
  for (const auto& [key, t] : hoppings) {
    h(key.first, key.second) = t;
    h(key.second, key.first) = std::conj(t);
  }
  return h;
}

AmplitudeState EffectiveModel::to_frame(const AmplitudeState& envelope) const {
  AmplitudeState out = envelope;
  const double t = envelope.time;
  for (std::size_t j = 0; j < size(); ++j) {
    const double theta = (frame_omega[j] - omega_ref) * t + eta[j] * std::sin(Omega_M * t + phi[j]);
    out.alphas[j] = envelope.alphas[j] * std::polar(1.0, theta);
  }
  return out;
}

AmplitudeState EffectiveModel::from_frame(const AmplitudeState& beta) const {
  AmplitudeState out = beta;
  const double t = beta.time;
  for (std::size_t j = 0; j < size(); ++j) {
    const double theta = (frame_omega[j] - omega_ref) * t + eta[j] * std::sin(Omega_M * t + phi[j]);
    out.alphas[j] = beta.alphas[j] * std::polar(1.0, -theta);
  }
  return out;
}

namespace {

struct Edge {
  SiteId j, k;
  int m;  // nu_k - nu_j = m * Omega_M
};

}  // namespace

EffectiveModel build_effective_model(const OscillatorNetwork& net, const ScheduleSegment& seg) {
  EffectiveModel model;
  const std::size_t n = net.size();
  model.omega_ref = net.reference_omega();
  model.eta.assign(n, 0.0);
  model.phi.assign(n, 0.0);
  model.onsite.assign(n, 0.0);
  model.frame_omega.assign(n, 0.0);
  for (const auto& m : seg.modulations) {
    if (!net.has_site(m.site)) fail(ErrorKind::Config, "modulation on unknown site");
    if (model.Omega_M == 0.0) {
      model.Omega_M = m.Omega_M;
    } else if (std::fabs(m.Omega_M - model.Omega_M) > 1e-12 * model.Omega_M) {
      fail(ErrorKind::Misuse, "effective model needs a common modulation frequency");
    }
    model.eta[static_cast<std::size_t>(m.site)] = m.eta;
    model.phi[static_cast<std::size_t>(m.site)] = m.phi_M;
  }
  const double Om = model.Omega_M;

  std::vector<Edge> edges;
  for (const auto& [key, coupling] : net.couplings()) {
    if (coupling <= 0.0) continue;
    const auto [j, k] = key;
    const double dw = net.site(k).omega - net.site(j).omega;
    const cplx z = std::polar(model.eta[static_cast<std::size_t>(j)], model.phi[static_cast<std::size_t>(j)]) -
                   std::polar(model.eta[static_cast<std::size_t>(k)], model.phi[static_cast<std::size_t>(k)]);
    const double window = 10.0 * coupling;
    std::vector<int> candidates;
    if (Om > 0.0) {
      const long centre = std::lround(dw / Om);
      for (long m = centre - 1; m <= centre + 1; ++m) {
        if (std::fabs(dw - static_cast<double>(m) * Om) < window &&
            std::fabs(bessel_j(static_cast<int>(m), std::abs(z))) > 1e-12) {
          candidates.push_back(static_cast<int>(m));
        }
      }
    } else if (std::fabs(dw) < window) {
      candidates.push_back(0);
    }
    if (candidates.size() > 1) {
      std::ostringstream os;
      os << "pair (" << j << "," << k << ") has competing resonant channels m = "
         << candidates[0] << " and m = " << candidates[1];
      fail(ErrorKind::Ambiguity, os.str());
    }
    if (candidates.empty()) continue;
    const int m = candidates.front();
    // Row j, column k: the channel-m hop from the relative phasor.
    model.hoppings[key] = effective_coupling_dual(
        coupling, model.eta[static_cast<std::size_t>(k)], model.eta[static_cast<std::size_t>(j)],
        model.phi[static_cast<std::size_t>(k)], model.phi[static_cast<std::size_t>(j)], m);
    edges.push_back({j, k, m});
  }

  // Frame frequencies: propagate nu along open channels from each component root.
  std::vector<bool> assigned(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (assigned[root]) continue;
    assigned[root] = true;
    model.frame_omega[root] = net.sites()[root].omega;
    std::queue<SiteId> queue;
    queue.push(static_cast<SiteId>(root));
    while (!queue.empty()) {
      const SiteId cur = queue.front();
      queue.pop();
      for (const auto& e : edges) {
        SiteId other;
        double nu;
        if (e.j == cur) {
          other = e.k;
          nu = model.frame_omega[static_cast<std::size_t>(cur)] + e.m * Om;
        } else if (e.k == cur) {
          other = e.j;
          nu = model.frame_omega[static_cast<std::size_t>(cur)] - e.m * Om;
        } else {
          continue;
        }
        const auto o = static_cast<std::size_t>(other);
        if (!assigned[o]) {
          assigned[o] = true;
          model.frame_omega[o] = nu;
          queue.push(other);
        } else if (std::fabs(model.frame_omega[o] - nu) > 1e-9 * std::max(1.0, nu)) {
          fail(ErrorKind::Ambiguity, "open channels around a loop disagree on the frame");
        }
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    model.onsite[j] = net.sites()[j].omega - model.frame_omega[j];
  }
  return model;
}

EffectiveModel build_effective_model(const OscillatorNetwork& net, const DriveSchedule& sched) {
  if (sched.segments.size() != 1) {
    fail(ErrorKind::Misuse, "effective model needs a single steady segment");
  }
  if (!sched.segments.front().ramps.empty()) {
    fail(ErrorKind::Misuse, "effective model segment must not contain ramps");
  }
  return build_effective_model(net, sched.segments.front());
}

double plaquette_flux(const EffectiveModel& model, const std::vector<SiteId>& cycle) {
  std::vector<SiteId> c = cycle;
  if (c.size() > 1 && c.front() == c.back()) c.pop_back();
  if (c.size() < 2) fail(ErrorKind::Misuse, "cycle needs at least two sites");
  double flux = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const SiteId cur = c[i];
    const SiteId next = c[(i + 1) % c.size()];
    const cplx t = model.hop(next, cur);
    if (std::abs(t) == 0.0) {
      std::ostringstream os;
      os << "missing hop between sites " << cur << " and " << next;
      fail(ErrorKind::Misuse, os.str());
    }
    flux += std::arg(t);
  }
  flux = std::remainder(flux, kTwoPi);
  if (flux <= -kPi) flux += kTwoPi;
  return flux;
}

AmplitudeState evolve_effective(const EffectiveModel& model, const AmplitudeState& initial,
                                double t) {
  const auto n = static_cast<Eigen::Index>(model.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(model.hamiltonian());
  Eigen::VectorXcd phases(n);
  for (Eigen::Index i = 0; i < n; ++i) phases(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
  Eigen::VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = initial.alphas[static_cast<std::size_t>(i)];
  const Eigen::VectorXcd out =
      es.eigenvectors() * phases.asDiagonal() * (es.eigenvectors().adjoint() * b);
  AmplitudeState result;
  result.time = initial.time + t;
  result.alphas.assign(out.data(), out.data() + n);
  return result;
}

AmplitudeState evolve_effective_envelope(const EffectiveModel& model,
                                         const AmplitudeState& envelope, double t_to) {
  return model.from_frame(evolve_effective(model, model.to_frame(envelope), t_to - envelope.time));
}

}  // namespace fpl
