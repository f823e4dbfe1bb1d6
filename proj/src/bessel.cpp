#include "fpl/bessel.hpp"

#include <cmath>
#include <cstdlib>

namespace fpl {

std::vector<double> bessel_j_table(int max_order, double x) {
  if (max_order < 0) max_order = 0;
  std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double ax = std::fabs(x);
  // Start well above both the requested order and the argument; the
  // recurrence is dominated by the minimal solution J_n after a few steps.
  int start = static_cast<int>(std::max<double>(max_order, ax)) + 20 +
              static_cast<int>(std::sqrt(40.0 * std::max<double>(max_order, ax)));
  start += start % 2;

  constexpr double kBig = 1e250;
  constexpr double kSmall = 1e-250;
  double jp1 = 0.0;  // J_{n+1}
  double jn = 1e-300;
  double even_sum = 0.0;
  const double two_over_x = 2.0 / ax;
  for (int n = start; n > 0; --n) {
    const double jm1 = n * two_over_x * jn - jp1;
    jp1 = jn;
    jn = jm1;
    if (std::fabs(jn) > kBig) {
      jn *= kSmall;
      jp1 *= kSmall;
      even_sum *= kSmall;
      for (auto& v : out) v *= kSmall;
    }
    // jn now holds the unnormalized J_{n-1}
    const int order = n - 1;
    if (order <= max_order) out[static_cast<std::size_t>(order)] = jn;
    if (order > 0 && order % 2 == 0) even_sum += jn;
  }
  const double norm = jn + 2.0 * even_sum;
  for (auto& v : out) v /= norm;
  if (x < 0.0) {
    for (std::size_t m = 1; m < out.size(); m += 2) out[m] = -out[m];
  }
  return out;
}

double bessel_j(int order, double x) {
  const int m = std::abs(order);
  const double value = bessel_j_table(m, x)[static_cast<std::size_t>(m)];
  return (order < 0 && (m % 2 == 1)) ? -value : value;
}

}  // namespace fpl
