#include "fpl/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fpl/envelope.hpp"
#include "fpl/errors.hpp"
#include "fpl/position.hpp"

namespace fpl {

double FloquetResult::determinant() const {
  return engine == FloquetEngine::Position ? position.determinant() : 1.0;
}

double FloquetResult::unitarity_defect() const {
  if (engine != FloquetEngine::Envelope) return 0.0;
  const auto n = envelope.rows();
  const Eigen::MatrixXcd d = envelope.adjoint() * envelope - Eigen::MatrixXcd::Identity(n, n);
  return d.cwiseAbs().maxCoeff();
}

double fold_quasi_energy(double omega, double fundamental) {
  double f = omega - fundamental * std::round(omega / fundamental);
  if (f <= -0.5 * fundamental) f += fundamental;
  if (f > 0.5 * fundamental) f -= fundamental;
  return f;
}

double circular_distance(double a, double b, double fundamental) {
  return std::fabs(fold_quasi_energy(a - b, fundamental));
}

namespace {

// Rational approximation p/q of x with q <= max_den, or false.
bool rational(double x, long max_den, long& p, long& q) {
  for (long den = 1; den <= max_den; ++den) {
    const double num = std::round(x * static_cast<double>(den));
    if (std::fabs(num / static_cast<double>(den) - x) <= 1e-9 * std::max(1.0, x)) {
      p = static_cast<long>(num);
      q = den;
      return true;
    }
  }
  return false;
}

}  // namespace

double common_period(const DriveSchedule& sched) {
  if (sched.segments.size() != 1) {
    fail(ErrorKind::NotPeriodic, "monodromy needs a single steady segment");
  }
  const auto& seg = sched.segments.front();
  if (!seg.ramps.empty()) fail(ErrorKind::NotPeriodic, "ramps break periodicity");
  if (seg.modulations.empty()) {
    fail(ErrorKind::NotPeriodic, "no modulation tone defines a period");
  }
  double base = seg.modulations.front().Omega_M;
  for (const auto& m : seg.modulations) base = std::min(base, m.Omega_M);
  long lcm_den = 1;
  for (const auto& m : seg.modulations) {
    long p = 0, q = 1;
    if (!rational(m.Omega_M / base, 64, p, q)) {
      std::ostringstream os;
      os << "not periodic: tone ratio " << m.Omega_M / base << " is incommensurate";
      fail(ErrorKind::NotPeriodic, os.str());
    }
    lcm_den = std::lcm(lcm_den, q);
  }
  return kTwoPi * static_cast<double>(lcm_den) / base;
}

FloquetResult monodromy(const OscillatorNetwork& net, const DriveSchedule& sched,
                        FloquetEngine engine, double dt) {
  const double period = common_period(sched);
  if (!sched.segments.front().excitations.empty()) {
    fail(ErrorKind::Misuse, "monodromy requires a schedule without excitation tones");
  }
  // The schedule is evaluated over exactly one period.
  DriveSchedule one = sched;
  one.segments.front().duration = period;

  FloquetResult out;
  out.engine = engine;
  out.period = period;
  out.fundamental = kTwoPi / period;
  const auto n = static_cast<Eigen::Index>(net.size());

  if (engine == FloquetEngine::Envelope) {
    for (const auto& s : net.sites()) {
      if (s.anharmonicity != 0.0) fail(ErrorKind::Misuse, "monodromy needs a linear network");
    }
    EnvelopePropagator prop(net, one, std::nullopt, dt);
    out.envelope.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      AmplitudeState s;
      s.alphas.assign(net.size(), cplx(0.0, 0.0));
      s.alphas[static_cast<std::size_t>(c)] = 1.0;
      prop.propagate(s, period);
      for (Eigen::Index r = 0; r < n; ++r) out.envelope(r, c) = s.alphas[static_cast<std::size_t>(r)];
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(out.envelope);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double eps = -std::arg(es.eigenvalues()(i)) / period + prop.reference_omega();
      out.quasi_energies.push_back(fold_quasi_energy(eps, out.fundamental));
    }
  } else {
    for (const auto& s : net.sites()) {
      if (s.anharmonicity != 0.0) fail(ErrorKind::Misuse, "monodromy needs a linear network");
    }
    PositionPropagator prop(net, one, dt);
    out.position.resize(2 * n, 2 * n);
    for (Eigen::Index c = 0; c < 2 * n; ++c) {
      PhaseSpaceState s;
      s.x.assign(net.size(), 0.0);
      s.v.assign(net.size(), 0.0);
      if (c < n) {
        s.x[static_cast<std::size_t>(c)] = 1.0;
      } else {
        s.v[static_cast<std::size_t>(c - n)] = 1.0;
      }
      prop.propagate(s, period);
      for (Eigen::Index r = 0; r < n; ++r) {
        out.position(r, c) = s.x[static_cast<std::size_t>(r)];
        out.position(r + n, c) = s.v[static_cast<std::size_t>(r)];
      }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(out.position);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
      const Eigen::VectorXcd u = es.eigenvectors().col(i);
      const cplx krein = u.head(n).dot(u.tail(n));  // x^H v
      if (krein.imag() < 0.0) {
        const double eps = -std::arg(es.eigenvalues()(i)) / period;
        out.quasi_energies.push_back(fold_quasi_energy(eps, out.fundamental));
      }
    }
  }
  std::sort(out.quasi_energies.begin(), out.quasi_energies.end());
  return out;
}

}  // namespace fpl
