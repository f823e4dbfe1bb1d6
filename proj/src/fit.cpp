#include "fpl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <optional>

#include "fpl/bessel.hpp"
#include "fpl/errors.hpp"

namespace fpl {

namespace {
constexpr double kPiLocal = 3.14159265358979323846;
}

const FitParam& FitResult::param(const std::string& name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  fail(ErrorKind::Misuse, "fit result has no parameter '" + name + "'");
}

bool FitResult::has_flag(const std::string& flag) const {
  return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

LmOutcome levenberg_marquardt(const LeastSquaresProblem& problem, Eigen::VectorXd p0,
                              const LmOptions& options) {
  const auto n = static_cast<Eigen::Index>(problem.parameter_count);
  const auto m = static_cast<Eigen::Index>(problem.residual_count);
  auto project = [&](Eigen::VectorXd& p) {
    if (problem.lower.size() == n) p = p.cwiseMax(problem.lower);
  };
  project(p0);
  Eigen::VectorXd r(m), r_new(m);
  Eigen::MatrixXd jac(m, n);
  problem.residuals(p0, r);
  double cost = r.squaredNorm();

  LmOutcome out;
  out.params = p0;
  double lambda = -1.0;
  double nu = 2.0;
  bool need_jacobian = true;
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    if (cost <= 1e-300) {
      out.converged = true;
      break;
    }
    if (need_jacobian) {
      problem.jacobian(out.params, jac);
      jtj = jac.transpose() * jac;
      jtr = jac.transpose() * r;
      need_jacobian = false;
      if (lambda < 0.0) lambda = options.initial_damping * jtj.diagonal().maxCoeff();
    }
    Eigen::VectorXd diag = jtj.diagonal();
    const double floor = std::max(diag.maxCoeff(), 1e-300) * 1e-12;
    diag = diag.cwiseMax(floor);
    Eigen::MatrixXd a = jtj;
    a.diagonal() += lambda * diag;
    const Eigen::VectorXd step = a.ldlt().solve(-jtr);
    Eigen::VectorXd trial = out.params + step;
    project(trial);
    problem.residuals(trial, r_new);
    const double cost_new = r_new.allFinite() ? r_new.squaredNorm()
                                              : std::numeric_limits<double>::infinity();
    if (cost_new < cost) {
      const double drop = cost - cost_new;
      const double moved = (trial - out.params).norm();
      out.params = trial;
      r = r_new;
      cost = cost_new;
      lambda *= 1.0 / 3.0;
      nu = 2.0;
      need_jacobian = true;
      if (drop <= options.relative_tolerance * cost ||
          moved <= std::sqrt(options.relative_tolerance) * (out.params.norm() + 1e-12)) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (lambda > 1e20 * std::max(1.0, jtj.diagonal().maxCoeff())) {
        // No descent direction left: a (local) minimum.
        out.converged = true;
        break;
      }
    }
  }
  out.cost = cost;
  problem.jacobian(out.params, jac);
  const Eigen::MatrixXd info = jac.transpose() * jac;
  const double dof = static_cast<double>(std::max<Eigen::Index>(m - n, 1));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(info);
  out.covariance = cod.pseudoInverse() * (cost / dof);
  return out;
}

// ---- exchange ---------------------------------------------------------------

double exchange_model(const Eigen::Vector4d& p, double t) {
  const double s = std::sin(0.5 * p(0) * t);
  return p(2) * s * s * std::exp(-p(1) * t) + p(3);
}

Eigen::Vector4d exchange_model_gradient(const Eigen::Vector4d& p, double t) {
  const double s = std::sin(0.5 * p(0) * t);
  const double e = std::exp(-p(1) * t);
  Eigen::Vector4d g;
  g(0) = p(2) * e * 0.5 * t * std::sin(p(0) * t);
  g(1) = -t * p(2) * s * s * e;
  g(2) = s * s * e;
  g(3) = 1.0;
  return g;
}

namespace {

double periodogram_peak(const std::vector<double>& t, const std::vector<double>& y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  const double span = t.back() - t.front();
  std::vector<double> dts;
  for (std::size_t i = 1; i < t.size(); ++i) dts.push_back(t[i] - t[i - 1]);
  std::nth_element(dts.begin(), dts.begin() + static_cast<long>(dts.size() / 2), dts.end());
  const double dt = dts[dts.size() / 2];
  const double w_lo = 0.5 * 2.0 * kPiLocal / span;
  const double w_hi = kPiLocal / dt;
  auto power = [&](double w) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) acc += (y[i] - mean) * std::polar(1.0, -w * t[i]);
    return std::norm(acc);
  };
  const int grid = 4000;
  double best_w = w_lo, best_p = -1.0;
  for (int i = 0; i <= grid; ++i) {
    const double w = w_lo + (w_hi - w_lo) * i / grid;
    const double p = power(w);
    if (p > best_p) {
      best_p = p;
      best_w = w;
    }
  }
  // Golden-section refinement within one grid cell.
  double a = best_w - (w_hi - w_lo) / grid, b = best_w + (w_hi - w_lo) / grid;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 60; ++i) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (power(c) > power(d)) b = d; else a = c;
  }
  return 0.5 * (a + b);
}

}  // namespace

FitResult fit_exchange(const std::vector<double>& times, const std::vector<double>& nbar) {
  if (times.size() != nbar.size() || times.size() < 6) {
    fail(ErrorKind::Underdetermined, "exchange fit needs at least 6 samples");
  }
  FitResult result;
  const auto [lo, hi] = std::minmax_element(nbar.begin(), nbar.end());
  const double mean = std::accumulate(nbar.begin(), nbar.end(), 0.0) / static_cast<double>(nbar.size());
  if (*hi - *lo <= 1e-12 * std::max(1.0, std::fabs(mean))) {
    result.params = {{"Omega_AC", 0.0, 0.0}, {"tau", std::numeric_limits<double>::infinity(), 0.0},
                     {"amplitude", 0.0, 0.0}, {"offset", mean, 0.0}};
    result.flags = {"degenerate"};
    result.converged = false;
    return result;
  }

  const double span = times.back() - times.front();
  std::vector<double> gammas{0.0};
  for (double f = 0.05; f <= 20.0; f *= 1.5) gammas.push_back(f / span);
  std::vector<std::vector<double>> decay(gammas.size(), std::vector<double>(times.size()));
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    for (std::size_t i = 0; i < times.size(); ++i) decay[g][i] = std::exp(-gammas[g] * times[i]);
  }
  const double n = static_cast<double>(times.size());
  const double sy = std::accumulate(nbar.begin(), nbar.end(), 0.0);
  double syy = 0.0;
  for (double y : nbar) syy += y * y;
  std::vector<double> s2(times.size());
  // Best (A, c) per gamma from the 2x2 normal equations.
  auto best_for = [&](double omega) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double s = std::sin(0.5 * omega * times[i]);
      s2[i] = s * s;
    }
    Eigen::Vector4d init(omega, 0.0, 0.0, sy / n);
    double cost = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      double sx = 0.0, sxx = 0.0, sxy = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double x = s2[i] * decay[g][i];
        sx += x;
        sxx += x * x;
        sxy += x * nbar[i];
      }
      const double det = n * sxx - sx * sx;
      if (!(det > 1e-12 * n * sxx)) continue;
      const double amp = (n * sxy - sx * sy) / det;
      const double offset = (sy - amp * sx) / n;
      const double c = syy - amp * sxy - offset * sy;
      if (c < cost) {
        cost = c;
        init << omega, gammas[g], amp, offset;
      }
    }
    return std::make_pair(cost, init);
  };

  // Starting points: the periodogram peak and the best of a coarse frequency
  // grid scored by the (A, c) projection. Short traces (about one period)
  // have no clean periodogram peak.
  std::vector<Eigen::Vector4d> starts{best_for(periodogram_peak(times, nbar)).second};
  {
    const double w_hi = kPiLocal * static_cast<double>(times.size() - 1) / span;
    const double w_lo = 0.25 * 2.0 * kPiLocal / span;
    const double dw = 0.1 * 2.0 * kPiLocal / span;
    double grid_cost = std::numeric_limits<double>::infinity();
    Eigen::Vector4d grid_init;
    for (double w = w_lo; w <= w_hi; w += dw) {
      const auto [c, init] = best_for(w);
      if (c < grid_cost) {
        grid_cost = c;
        grid_init = init;
      }
    }
    if (std::isfinite(grid_cost)) starts.push_back(grid_init);
  }

  LeastSquaresProblem problem;
  problem.parameter_count = 4;
  problem.residual_count = times.size();
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const Eigen::Vector4d q = p;
    for (std::size_t i = 0; i < times.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = exchange_model(q, times[i]) - nbar[i];
    }
  };
  problem.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& jac) {
    const Eigen::Vector4d q = p;
    for (std::size_t i = 0; i < times.size(); ++i) {
      jac.row(static_cast<Eigen::Index>(i)) = exchange_model_gradient(q, times[i]).transpose();
    }
  };
  problem.lower = Eigen::Vector4d(0.0, 0.0, -std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity());
  std::optional<LmOutcome> best;
  for (const auto& start : starts) {
    LmOutcome lm = levenberg_marquardt(problem, start);
    if (!best || lm.cost < best->cost) best = std::move(lm);
  }
  const LmOutcome& lm = *best;

  const double omega = lm.params(0), gamma = lm.params(1);
  const double s_omega = std::sqrt(std::max(lm.covariance(0, 0), 0.0));
  const double s_gamma = std::sqrt(std::max(lm.covariance(1, 1), 0.0));
  double tau = std::numeric_limits<double>::infinity(), s_tau = 0.0;
  // Decay slower than 1000 trace spans is indistinguishable from none.
  if (gamma > s_gamma && gamma * span > 1e-3) {
    tau = 1.0 / gamma;
    s_tau = s_gamma / (gamma * gamma);
  } else {
    result.flags.push_back("tau_unbounded");
  }
  const double amp = lm.params(2);
  const double s_amp = std::sqrt(std::max(lm.covariance(2, 2), 0.0));
  if (std::fabs(amp) <= std::max(3.0 * s_amp, 1e-9 * std::max(1.0, std::fabs(mean)))) {
    result.flags.push_back("amplitude_insignificant");
  }
  result.params = {{"Omega_AC", omega, s_omega},
                   {"tau", tau, s_tau},
                   {"amplitude", amp, s_amp},
                   {"offset", lm.params(3), std::sqrt(std::max(lm.covariance(3, 3), 0.0))}};
  result.residual_norm = std::sqrt(lm.cost);
  result.converged = lm.converged;
  result.iterations = lm.iterations;
  return result;
}

// ---- comb -------------------------------------------------------------------

namespace {

constexpr int kCombOrders = 18;

double sinc(double x) { return std::fabs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

double sinc_derivative(double x) {
  return std::fabs(x) < 1e-5 ? -x / 3.0 : (std::cos(x) - std::sin(x) / x) / x;
}

}  // namespace

double comb_model(const Eigen::Vector3d& p, const CombGrid& grid, double probe) {
  const auto j = bessel_j_table(kCombOrders + 1, p(0));
  double sum = 0.0;
  for (int m = -kCombOrders; m <= kCombOrders; ++m) {
    const double jm = j[static_cast<std::size_t>(std::abs(m))];
    const double s = sinc((probe - grid.omega - m * grid.Omega_M) / p(1));
    sum += jm * jm * s * s;
  }
  return p(2) * sum;
}

Eigen::Vector3d comb_model_gradient(const Eigen::Vector3d& p, const CombGrid& grid,
                                    double probe) {
  const auto j = bessel_j_table(kCombOrders + 1, p(0));
  auto J = [&](int m) {
    const double v = j[static_cast<std::size_t>(std::abs(m))];
    return (m < 0 && (-m) % 2 == 1) ? -v : v;
  };
  double sum = 0.0, d_eta = 0.0, d_width = 0.0;
  for (int m = -kCombOrders; m <= kCombOrders; ++m) {
    const double jm = J(m);
    const double x = (probe - grid.omega - m * grid.Omega_M) / p(1);
    const double s = sinc(x);
    sum += jm * jm * s * s;
    d_eta += jm * (J(m - 1) - J(m + 1)) * s * s;
    d_width += jm * jm * 2.0 * s * sinc_derivative(x) * (-x / p(1));
  }
  return {p(2) * d_eta, p(2) * d_width, sum};
}

FitResult fit_bessel_comb(const std::vector<double>& probe_omegas,
                          const std::vector<double>& nbar, const CombGrid& grid) {
  if (probe_omegas.size() != nbar.size() || probe_omegas.size() < 4) {
    fail(ErrorKind::Underdetermined, "comb fit needs at least 4 probe points");
  }
  if (!(grid.Omega_M > 0.0)) fail(ErrorKind::Domain, "channel spacing must be > 0");
  const double y_max = *std::max_element(nbar.begin(), nbar.end());
  if (!(y_max > 0.0)) fail(ErrorKind::Underdetermined, "comb spectrum has no signal");
  const double step = (probe_omegas.back() - probe_omegas.front()) /
                      static_cast<double>(probe_omegas.size() - 1);

  // Heights sampled at channel positions inside the probe range.
  std::vector<int> orders;
  std::vector<double> heights;
  for (int m = -kCombOrders; m <= kCombOrders; ++m) {
    const double w = grid.omega + m * grid.Omega_M;
    std::size_t best = 0;
    for (std::size_t i = 1; i < probe_omegas.size(); ++i) {
      if (std::fabs(probe_omegas[i] - w) < std::fabs(probe_omegas[best] - w)) best = i;
    }
    if (std::fabs(probe_omegas[best] - w) <= 0.5 * std::fabs(step) + 1e-9 * std::fabs(w)) {
      orders.push_back(m);
      heights.push_back(nbar[best]);
    }
  }
  const auto covers = [&](int m) { return std::find(orders.begin(), orders.end(), m) != orders.end(); };
  if (!covers(-1) || !covers(0) || !covers(1)) {
    fail(ErrorKind::Underdetermined, "probe range must cover the carrier and the first sideband pair");
  }
  int resolvable = 0;
  for (double h : heights) resolvable += h > 0.05 * y_max ? 1 : 0;

  // Seed eta by matching channel heights to scale * J_m^2.
  double eta_seed = 0.0, seed_cost = std::numeric_limits<double>::infinity();
  for (double eta = 0.0; eta <= 8.0; eta += 0.005) {
    const auto j = bessel_j_table(kCombOrders + 1, eta);
    double hj = 0.0, jj = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
      const double w = std::pow(j[static_cast<std::size_t>(std::abs(orders[i]))], 2);
      hj += heights[i] * w;
      jj += w * w;
    }
    const double scale = jj > 0.0 ? hj / jj : 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
      const double w = std::pow(j[static_cast<std::size_t>(std::abs(orders[i]))], 2);
      c += std::pow(heights[i] - scale * w, 2);
    }
    if (c < seed_cost) {
      seed_cost = c;
      eta_seed = eta;
    }
  }
  if (resolvable < 3 && eta_seed > 0.05) {
    fail(ErrorKind::Underdetermined,
         "fewer than 3 resolvable peaks for a modulated comb (eta seed " +
             std::to_string(eta_seed) + ")");
  }

  // Linewidth seed from the half-maximum width of the tallest peak.
  const auto peak = static_cast<std::size_t>(
      std::max_element(nbar.begin(), nbar.end()) - nbar.begin());
  std::size_t left = peak, right = peak;
  while (left > 0 && nbar[left] > 0.5 * y_max) --left;
  while (right + 1 < nbar.size() && nbar[right] > 0.5 * y_max) ++right;
  const double fwhm = std::max(probe_omegas[right] - probe_omegas[left], std::fabs(step));
  const double width_seed = fwhm / 2.7831;  // sinc^2 FWHM in units of the width

  Eigen::Vector3d init(eta_seed, width_seed, 1.0);
  init(2) = y_max / std::max(comb_model(init, grid, probe_omegas[peak]), 1e-300);

  LeastSquaresProblem problem;
  problem.parameter_count = 3;
  problem.residual_count = nbar.size();
  problem.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const Eigen::Vector3d q = p;
    for (std::size_t i = 0; i < nbar.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = comb_model(q, grid, probe_omegas[i]) - nbar[i];
    }
  };
  problem.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& jac) {
    const Eigen::Vector3d q = p;
    for (std::size_t i = 0; i < nbar.size(); ++i) {
      jac.row(static_cast<Eigen::Index>(i)) = comb_model_gradient(q, grid, probe_omegas[i]).transpose();
    }
  };
  problem.lower = Eigen::Vector3d(0.0, 1e-9 * grid.Omega_M, 0.0);
  const LmOutcome lm = levenberg_marquardt(problem, init);

  FitResult result;
  auto sd = [&](int i) { return std::sqrt(std::max(lm.covariance(i, i), 0.0)); };
  result.params = {{"eta", lm.params(0), sd(0)},
                   {"linewidth", lm.params(1), sd(1)},
                   {"scale", lm.params(2), sd(2)}};
  result.residual_norm = std::sqrt(lm.cost);
  result.converged = lm.converged;
  result.iterations = lm.iterations;
  if (resolvable < 3) result.flags.push_back("few_peaks");
  return result;
}

// ---- sinusoid ---------------------------------------------------------------

FitResult fit_sinusoid(const std::vector<double>& phis, const std::vector<double>& ys) {
  if (phis.size() != ys.size() || phis.size() < 5) {
    fail(ErrorKind::Underdetermined, "sinusoid fit needs at least 5 points");
  }
  const auto n = static_cast<Eigen::Index>(phis.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = phis[static_cast<std::size_t>(i)];
    design(i, 0) = std::cos(phi);
    design(i, 1) = std::sin(phi);
    design(i, 2) = 1.0;
    rhs(i) = ys[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    fail(ErrorKind::Underdetermined, "rank-deficient fringe design (phases not distinct)");
  }
  const Eigen::Vector3d sol = qr.solve(rhs);
  const double rss = (design * sol - rhs).squaredNorm();
  const double dof = static_cast<double>(std::max<Eigen::Index>(n - 3, 1));
  const Eigen::Matrix3d cov = (design.transpose() * design).inverse() * (rss / dof);

  const double a = sol(0), b = sol(1);
  const double amp = std::hypot(a, b);
  double phase = std::atan2(b, a);
  if (phase <= -kPiLocal) phase += 2.0 * kPiLocal;
  // Delta-method uncertainties for the polar parameters.
  double s_amp = 0.0, s_phase = 0.0;
  if (amp > 0.0) {
    const Eigen::Vector2d g_amp(a / amp, b / amp);
    const Eigen::Vector2d g_phase(-b / (amp * amp), a / (amp * amp));
    const Eigen::Matrix2d c2 = cov.topLeftCorner<2, 2>();
    s_amp = std::sqrt(std::max(g_amp.dot(c2 * g_amp), 0.0));
    s_phase = std::sqrt(std::max(g_phase.dot(c2 * g_phase), 0.0));
  }
  FitResult result;
  result.params = {{"amplitude", amp, s_amp},
                   {"offset", sol(2), std::sqrt(std::max(cov(2, 2), 0.0))},
                   {"phase", phase, s_phase}};
  result.residual_norm = std::sqrt(rss);
  result.converged = true;
  result.iterations = 1;
  return result;
}

}  // namespace fpl
