#pragma once

#include <vector>

namespace fpl {

/// J_0(x) .. J_{max_order}(x) for x >= 0 by Miller's downward recurrence,
/// normalized with J_0 + 2 * sum_k J_{2k} = 1.
std::vector<double> bessel_j_table(int max_order, double x);

/// Integer-order Bessel function of the first kind. Negative orders use
/// J_{-m} = (-1)^m J_m; negative x uses J_m(-x) = (-1)^m J_m(x).
double bessel_j(int order, double x);

}  // namespace fpl
