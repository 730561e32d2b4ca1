#ifndef EVPOS_INCOMPLETE_GAMMA_HPP
#define EVPOS_INCOMPLETE_GAMMA_HPP

// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).

#include <cmath>
#include <limits>

#include "evpos/errors.hpp"

namespace evpos {

namespace detail {

/// P(a, x) by the power series, for x < a + 1.
inline double gamma_p_series(double a, double x)
{
  double ap = a, del = 1.0 / a, sum = del;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16)
      break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Q(a, x) by the modified Lentz continued fraction, for x >= a + 1.
inline double gamma_q_fraction(double a, double x)
{
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny)
      d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny)
      c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16)
      break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

inline void check_gamma_args(double a, double x)
{
  if (!(a > 0.0) || !(x >= 0.0))
    throw PreconditionError("incomplete gamma: need a > 0 and x >= 0");
}

} // namespace detail

inline double gamma_p(double a, double x)
{
  detail::check_gamma_args(a, x);
  if (x == 0.0)
    return 0.0;
  if (std::isinf(x))
    return 1.0;
  return x < a + 1.0 ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_fraction(a, x);
}

inline double gamma_q(double a, double x)
{
  detail::check_gamma_args(a, x);
  if (x == 0.0)
    return 1.0;
  if (std::isinf(x))
    return 0.0;
  return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_fraction(a, x);
}

/// int_lo^hi of the Gamma(a, 1) density, from whichever tail keeps the difference accurate.
inline double gamma_cell_mass(double a, double lo, double hi)
{
  if (!(hi >= lo))
    throw PreconditionError("gamma_cell_mass: need lo <= hi");
  if (lo >= a + 1.0)
    return std::max(0.0, gamma_q(a, lo) - gamma_q(a, hi));
  return std::max(0.0, gamma_p(a, hi) - gamma_p(a, lo));
}

} // namespace evpos

#endif // EVPOS_INCOMPLETE_GAMMA_HPP
