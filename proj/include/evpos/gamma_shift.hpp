#ifndef EVPOS_GAMMA_SHIFT_HPP
#define EVPOS_GAMMA_SHIFT_HPP

// f -> L_t (k_t * f) on a uniform grid over [x_min, x_min + m h): k_t the Gamma(t, 1) density, L_t the left
// shift. Only whole-cell times t = q h are allowed, so the support bookkeeping stays in integers.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evpos/errors.hpp"
#include "evpos/incomplete_gamma.hpp"
#include "evpos/lattice.hpp"
#include "evpos/semigroup.hpp"

namespace evpos {

struct GridSpec {
  double x_min = 0.0;
  double h = 1.0;
  long count = 0;

  /// [-L, L] with step h; L / h must be an integer.
  static GridSpec symmetric(double half_width, double h)
  {
    if (!(h > 0.0) || !(half_width > 0.0))
      throw PreconditionError("GridSpec: need L > 0 and h > 0");
    const double cells = half_width / h;
    if (std::abs(cells - std::round(cells)) > 1e-9)
      throw PreconditionError("GridSpec: L must be a multiple of h");
    return {-half_width, h, 2 * static_cast<long>(std::round(cells))};
  }

  double left(long i) const { return x_min + static_cast<double>(i) * h; }
  double x_max() const { return left(count); }

  /// Index of the cell containing x; grid points belong to the cell on their right.
  long cell_of(double x) const
  {
    const double r = (x - x_min) / h;
    const double k = std::round(r);
    return static_cast<long>(std::abs(r - k) < 1e-9 ? k : std::floor(r));
  }

  /// Number of cells in a time t = q h; throws ShiftNotOnGrid otherwise.
  long steps(double t) const
  {
    if (t < 0.0)
      throw PreconditionError("GridSpec::steps: t must be >= 0");
    const double k = std::round(t / h);
    if (std::abs(k * h - t) > 1e-9 * std::max(1.0, t))
      throw ShiftNotOnGrid("t = " + std::to_string(t) + " is not a multiple of h = " + std::to_string(h));
    return static_cast<long>(k);
  }

  friend bool operator==(const GridSpec &a, const GridSpec &b)
  {
    return a.x_min == b.x_min && a.h == b.h && a.count == b.count;
  }
};

/// Cell values on a GridSpec. Every cell below support_lo is exactly +0.0.
class GridFunction {
public:
  GridFunction() = default;

  GridFunction(GridSpec spec, Vector samples, long support_lo)
      : spec_(spec), samples_(std::move(samples)), lo_(support_lo)
  {
    if (samples_.size() != spec_.count)
      throw PreconditionError("GridFunction: sample count does not match the grid");
    if (lo_ < 0 || lo_ > spec_.count)
      throw PreconditionError("GridFunction: support_lo out of range");
    if (!support_sound())
      throw PreconditionError("GridFunction: non-zero sample below support_lo");
  }

  static GridFunction zero(const GridSpec &spec) { return {spec, Vector::Zero(spec.count), spec.count}; }

  /// support_lo is the first non-zero sample.
  static GridFunction from_samples(const GridSpec &spec, const Vector &samples)
  {
    Vector s = samples;
    long lo = 0;
    while (lo < s.size() && s(lo) == 0.0)
      s(lo++) = 0.0; // normalizes -0.0
    return {spec, s, lo};
  }

  /// value on the cells with left endpoint in [a, b).
  static GridFunction indicator(const GridSpec &spec, double a, double b, double value = 1.0)
  {
    const long i0 = std::clamp(spec.cell_of(a), 0L, spec.count);
    const long i1 = std::clamp(spec.cell_of(b), 0L, spec.count);
    Vector s = Vector::Zero(spec.count);
    for (long i = i0; i < i1; ++i)
      s(i) = value;
    return {spec, s, i1 > i0 && value != 0.0 ? i0 : spec.count};
  }

  const GridSpec &spec() const { return spec_; }
  const Vector &samples() const { return samples_; }
  long support_lo() const { return lo_; }

  /// h sum |f_i|
  double mass() const { return spec_.h * samples_.cwiseAbs().sum(); }

  /// h sum of f_i over the cells with left endpoint in [a, b). Exactly 0 when the range lies below support_lo.
  double integral(double a, double b) const
  {
    const long i0 = std::clamp(spec_.cell_of(a), 0L, spec_.count);
    const long i1 = std::clamp(spec_.cell_of(b), 0L, spec_.count);
    double s = 0.0;
    for (long i = std::max(i0, lo_); i < i1; ++i)
      s += samples_(i);
    return spec_.h * s;
  }

  bool support_sound() const
  {
    for (long i = 0; i < lo_; ++i)
      if (samples_(i) != 0.0 || std::signbit(samples_(i)))
        return false;
    return true;
  }

  GridFunction scaled(double c) const
  {
    Vector s = Vector::Zero(spec_.count);
    for (long i = lo_; i < spec_.count; ++i)
      s(i) = c * samples_(i);
    return {spec_, s, c == 0.0 ? spec_.count : lo_};
  }

  friend GridFunction operator+(const GridFunction &f, const GridFunction &g)
  {
    if (!(f.spec_ == g.spec_))
      throw PreconditionError("GridFunction: grids differ");
    return {f.spec_, f.samples_ + g.samples_, std::min(f.lo_, g.lo_)};
  }

  GridFunction &operator+=(const GridFunction &g) { return *this = *this + g; }

private:
  GridSpec spec_;
  Vector samples_;
  long lo_ = 0;
};

struct GammaKernel {
  std::vector<double> weights; // w_j = int_{jh}^{(j+1)h} k_t
  double deficit = 0.0;        // 1 - sum w_j = Q(t, count h)
};

/// Cell masses of the Gamma(t, 1) density on [0, count h), as differences of P(t, .).
inline GammaKernel gamma_kernel_weights(double t, double h, long count)
{
  if (!(t > 0.0) || !(h > 0.0) || count < 1)
    throw PreconditionError("gamma_kernel_weights: need t > 0, h > 0 and count >= 1");
  GammaKernel k;
  k.weights.resize(static_cast<std::size_t>(count));
  for (long j = 0; j < count; ++j)
    k.weights[static_cast<std::size_t>(j)] = gamma_cell_mass(t, j * h, (j + 1) * h);
  k.deficit = gamma_q(t, count * h);
  return k;
}

struct GammaApplyStats {
  double right_outflow = 0.0; // signed mass the convolution carried past x_max
  double left_outflow = 0.0;  // signed mass the shift carried below x_min
  double kernel_deficit = 0.0;
};

/// L_t (k_t * f) for t = q h: causal convolution (support_lo unchanged), then a shift by q cells
/// (support_lo decreases by q).
inline GridFunction gamma_shift_apply(const GridFunction &f, double t, GammaApplyStats *stats = nullptr)
{
  const GridSpec &g = f.spec();
  const long q = g.steps(t);
  if (q == 0)
    return f;
  const long m = g.count;
  const long lo = f.support_lo();
  const auto k = gamma_kernel_weights(t, g.h, m);
  const Vector &x = f.samples();

  Vector conv = Vector::Zero(m);
  for (long j = lo; j < m; ++j) {
    double s = 0.0;
    for (long i = lo; i <= j; ++i)
      s += k.weights[static_cast<std::size_t>(j - i)] * x(i);
    conv(j) = s;
  }
  Vector out = Vector::Zero(m);
  const long out_lo = lo >= m ? m : std::max(0L, lo - q);
  for (long i = out_lo; i + q < m; ++i)
    out(i) = conv(i + q);

  if (stats) {
    stats->kernel_deficit = k.deficit;
    double in = 0.0, kept = 0.0, left = 0.0;
    for (long i = lo; i < m; ++i)
      in += x(i);
    for (long j = lo; j < m; ++j) {
      kept += conv(j);
      if (j < q)
        left += conv(j);
    }
    stats->right_outflow = g.h * (in - kept);
    stats->left_outflow = g.h * left;
  }
  return {g, out, out_lo};
}

/// The Gamma-shift semigroup on a grid, as matrices acting on cell values.
class GammaShiftProvider final : public SemigroupProvider {
public:
  explicit GammaShiftProvider(GridSpec spec) : spec_(spec)
  {
    if (spec_.count < 1 || !(spec_.h > 0.0))
      throw PreconditionError("GammaShiftProvider: empty grid");
  }

  const GridSpec &spec() const { return spec_; }

  Eigen::Index dim() const override { return spec_.count; }

  /// G(i, k) = w_{i + q - k} for k <= i + q < m.
  Matrix evaluate(double t) const override
  {
    const long q = spec_.steps(t);
    const long m = spec_.count;
    if (q == 0)
      return Matrix::Identity(m, m);
    const auto k = gamma_kernel_weights(t, spec_.h, m);
    Matrix g = Matrix::Zero(m, m);
    for (long i = 0; i + q < m; ++i)
      for (long c = 0; c <= i + q; ++c)
        g(i, c) = k.weights[static_cast<std::size_t>(i + q - c)];
    return g;
  }

  Vector apply(double t, const Vector &f) const override
  {
    return gamma_shift_apply(GridFunction::from_samples(spec_, f), t).samples();
  }

  /// L1 contraction.
  GrowthEnvelope envelope() const override { return {1.0, 0.0}; }
  CarrierKind carrier() const override { return CarrierKind::Grid; }
  std::string describe() const override
  {
    return "Gamma-shift semigroup on [" + std::to_string(spec_.x_min) + ", " + std::to_string(spec_.x_max()) +
           "), h = " + std::to_string(spec_.h);
  }
  std::optional<double> time_quantum() const override { return spec_.h; }
  /// The grid scheme satisfies the semigroup law only up to first order in h.
  double composition_tolerance() const override { return spec_.h; }

private:
  GridSpec spec_;
};

} // namespace evpos

#endif // EVPOS_GAMMA_SHIFT_HPP
