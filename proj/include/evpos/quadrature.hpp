#ifndef EVPOS_QUADRATURE_HPP
#define EVPOS_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "evpos/errors.hpp"

namespace evpos {

/// Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Newton iteration on P_n from the Chebyshev guess.
inline GaussRule gauss_legendre_unit(int order)
{
  if (order < 1 || order > 64)
    throw PreconditionError("gauss_legendre_unit: order must be in [1, 64]");
  const int n = order;
  GaussRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    // ascending order on [0, 1]
    const auto k = static_cast<std::size_t>(n - 1 - i);
    r.nodes[k] = 0.5 * (1.0 + x);
    r.weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

/// Lagrange basis weights: row j holds l_0(y_j) ... l_{k-1}(y_j) for the points xs.
inline std::vector<std::vector<double>> lagrange_weights(const std::vector<double> &xs, const std::vector<double> &ys)
{
  std::vector<std::vector<double>> out(ys.size(), std::vector<double>(xs.size(), 1.0));
  for (std::size_t j = 0; j < ys.size(); ++j)
    for (std::size_t l = 0; l < xs.size(); ++l)
      for (std::size_t m = 0; m < xs.size(); ++m)
        if (m != l)
          out[j][l] *= (ys[j] - xs[m]) / (xs[l] - xs[m]);
  return out;
}

} // namespace evpos

#endif // EVPOS_QUADRATURE_HPP
