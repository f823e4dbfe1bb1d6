#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace fpl {

struct FitParam {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;  // 1-sigma
};

struct FitResult {
  std::vector<FitParam> params;
  double residual_norm = 0.0;  // sqrt(sum r^2)
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> flags;

  const FitParam& param(const std::string& name) const;
  double value(const std::string& name) const { return param(name).value; }
  double sigma(const std::string& name) const { return param(name).sigma; }
  bool has_flag(const std::string& flag) const;
};

// ---- generic damped least squares -----------------------------------------

struct LeastSquaresProblem {
  std::size_t parameter_count = 0;
  std::size_t residual_count = 0;
  std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)> residuals;
  std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& jac)> jacobian;  // dr/dp
  Eigen::VectorXd lower;  // empty = unbounded
};

struct LmOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-12;
  double initial_damping = 1e-3;
};

struct LmOutcome {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1 at the optimum
  double cost = 0.0;           // sum r^2
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt with Marquardt's diagonal scaling; parameters are
/// projected onto `lower` bounds after every step.
LmOutcome levenberg_marquardt(const LeastSquaresProblem& problem, Eigen::VectorXd p0,
                              const LmOptions& options = {});

// ---- exchange trace ---------------------------------------------------------

/// n(t) = A sin^2(Omega_AC t / 2) exp(-gamma t) + c with p = (Omega_AC, gamma, A, c).
double exchange_model(const Eigen::Vector4d& p, double t);
Eigen::Vector4d exchange_model_gradient(const Eigen::Vector4d& p, double t);

/// Fits the damped exchange model; reports Omega_AC (rad/s), tau (s),
/// amplitude and offset. A decay that is not significant, or slower than
/// 1000 trace spans, gives tau = +inf with the "tau_unbounded" flag; a constant trace is "degenerate" and not converged.
FitResult fit_exchange(const std::vector<double>& times, const std::vector<double>& nbar);

// ---- sideband comb ----------------------------------------------------------

struct CombGrid {
  double omega = 0.0;    // carrier, rad/s
  double Omega_M = 0.0;  // channel spacing, rad/s
};

/// y(w) = scale * sum_m J_m(eta)^2 sinc^2((w - omega - m Omega_M) / linewidth)
/// with p = (eta, linewidth, scale).
double comb_model(const Eigen::Vector3d& p, const CombGrid& grid, double probe);
Eigen::Vector3d comb_model_gradient(const Eigen::Vector3d& p, const CombGrid& grid,
                                    double probe);

/// Fits eta, linewidth (rad/s) and scale to a probe spectrum. The probe
/// range must include the carrier and both first sidebands; fewer than 3
/// resolvable peaks with a nonzero eta seed is Error(Underdetermined).
FitResult fit_bessel_comb(const std::vector<double>& probe_omegas,
                          const std::vector<double>& nbar, const CombGrid& grid);

// ---- fringe -----------------------------------------------------------------

/// y(phi) = A cos(phi - phi0) + c by linear least squares in the cos/sin basis.
/// Reports amplitude >= 0, offset and phase in (-pi, pi].
FitResult fit_sinusoid(const std::vector<double>& phis, const std::vector<double>& ys);

}  // namespace fpl
