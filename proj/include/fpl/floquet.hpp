#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fpl/model.hpp"

namespace fpl {

enum class FloquetEngine { Envelope, Position };

struct FloquetResult {
  FloquetEngine engine = FloquetEngine::Envelope;
  double period = 0.0;           // s
  double fundamental = 0.0;      // rad/s, 2 pi / period
  Eigen::MatrixXcd envelope;     // N x N, envelope engine only
  Eigen::MatrixXd position;      // 2N x 2N over (x, v), position engine only
  std::vector<double> quasi_energies;  // rad/s, folded into (-fundamental/2, fundamental/2]

  /// det of the position monodromy (1 for a symplectic map); 1 for envelope.
  double determinant() const;
  /// max |(M^H M - 1)_ij| for the envelope monodromy; 0 for position.
  double unitarity_defect() const;
};

/// Folds a frequency into (-fundamental/2, fundamental/2].
double fold_quasi_energy(double omega, double fundamental);

/// Smallest separation of two folded quasi-energies on the circle of
/// circumference `fundamental`.
double circular_distance(double a, double b, double fundamental);

/// Fundamental period of the schedule's (single) segment. Throws
/// Error(NotPeriodic) for incommensurate tones.
double common_period(const DriveSchedule& sched);

/// Monodromy over one common modulation period starting at t = 0. The
/// schedule must have one segment, modulation tones only and no excitation.
/// Quasi-energies are lab-frame values: the envelope engine adds back its
/// reference frequency, and the position engine keeps one quasi-energy per
/// positive-frequency (Krein-positive) mode. Both lists are sorted.
FloquetResult monodromy(const OscillatorNetwork& net, const DriveSchedule& sched,
                        FloquetEngine engine, double dt = 0.0);

}  // namespace fpl
