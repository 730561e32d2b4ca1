#ifndef EVPOS_WALSH_MODEL_HPP
#define EVPOS_WALSH_MODEL_HPP

// The left shift on step functions of depth d, in coordinates of the Walsh-Paley basis w_0..w_{2^d - 1}.

#include <cmath>
#include <string>

#include "evpos/errors.hpp"
#include "evpos/rational_step.hpp"
#include "evpos/semigroup.hpp"

namespace evpos {

/// Coordinates: e_k <-> w_k. The raw Rademacher function r_n is w_{2^{n-1}}.
/// Shifts by multiples of 2^-d keep the depth-d step functions invariant, so the model is exact
/// there; all entries are dyadic rationals and exact in double precision for d <= 20.
class WalshShiftProvider final : public SemigroupProvider {
public:
  explicit WalshShiftProvider(int depth) : depth_(depth)
  {
    if (depth < 1 || depth > 12)
      throw DepthExceeded("WalshShiftProvider: depth must be in [1, 12]");
    const Eigen::Index n = dim();
    signs_.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index c = 0; c < n; ++c) {
        int s = 1;
        for (int i = 0; i < depth_; ++i)
          if ((k >> i) & 1)
            s *= ((c >> (depth_ - i - 1)) & 1) ? -1 : 1;
        signs_(k, c) = s;
      }
  }

  static std::uint64_t rademacher_index(int n) { return std::uint64_t{1} << (n - 1); }

  int depth() const { return depth_; }
  double quantum() const { return std::ldexp(1.0, -depth_); }

  Eigen::Index dim() const override { return Eigen::Index{1} << depth_; }

  /// E(t)_{jk} = <w_j, S_t w_k> = 2^-d sum_c w_j(c) w_k(c + q), t = q 2^-d.
  Matrix evaluate(double t) const override
  {
    const long q = cells(t);
    const Eigen::Index n = dim();
    if (q >= n)
      return Matrix::Zero(n, n);
    Matrix shifted = Matrix::Zero(n, n); // columns c of w_k(. + q)
    shifted.leftCols(n - q) = signs_.rightCols(n - q);
    return (signs_ * shifted.transpose()) * quantum();
  }

  GrowthEnvelope envelope() const override { return {1.0, 0.0}; }
  CarrierKind carrier() const override { return CarrierKind::PiecewiseConstant; }
  std::string describe() const override
  {
    return "nilpotent left shift on L2(0,1), Walsh-Paley coordinates, depth " + std::to_string(depth_);
  }
  std::optional<double> time_quantum() const override { return quantum(); }
  double composition_tolerance() const override { return 0.0; }

  /// The same entry computed with exact rationals.
  Rational exact_entry(std::uint64_t j, std::uint64_t k, long q) const
  {
    return walsh_pairing(k, j, dyadic(q, depth_), depth_);
  }

private:
  long cells(double t) const
  {
    if (t < 0.0)
      throw PreconditionError("WalshShiftProvider: t must be >= 0");
    const double k = std::round(t / quantum());
    if (std::abs(k * quantum() - t) > 1e-12 * std::max(1.0, t))
      throw ShiftNotOnGrid("WalshShiftProvider: t = " + std::to_string(t) + " is not a multiple of 2^-" +
                           std::to_string(depth_));
    return static_cast<long>(k);
  }

  int depth_;
  Matrix signs_; // signs_(k, c) = w_k on cell c
};

} // namespace evpos

#endif // EVPOS_WALSH_MODEL_HPP
