#ifndef EVPOS_SEMIGROUP_HPP
#define EVPOS_SEMIGROUP_HPP

// Time-indexed operator families t -> e^{tA} and their sampling.

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "evpos/errors.hpp"
#include "evpos/expm.hpp"
#include "evpos/lattice.hpp"
#include "evpos/models.hpp"
#include "evpos/parallel.hpp"

namespace evpos {

/// ||e^{tA}|| <= m * exp(omega * t), in the Euclidean norm of the carrier coordinates.
struct GrowthEnvelope {
  double m = 1.0;
  double omega = 0.0;

  double bound(double t) const { return m * std::exp(omega * t); }
};

enum class CarrierKind { Matrix, PiecewiseConstant, Grid, Product };

inline const char *to_string(CarrierKind k)
{
  switch (k) {
  case CarrierKind::Matrix:
    return "matrix";
  case CarrierKind::PiecewiseConstant:
    return "piecewise-constant";
  case CarrierKind::Grid:
    return "grid";
  case CarrierKind::Product:
    return "product";
  }
  return "unknown";
}

/// Uniform contract over every implemented semigroup. The carrier is always
/// identified with R^dim() and its entrywise order; evaluate(t) is the matrix
/// of e^{tA} in those coordinates. Implementations are immutable.
class SemigroupProvider {
public:
  virtual ~SemigroupProvider() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Matrix evaluate(double t) const = 0;
  virtual Vector apply(double t, const Vector &f) const { return evaluate(t) * f; }
  virtual GrowthEnvelope envelope() const = 0;
  virtual CarrierKind carrier() const = 0;
  virtual std::string describe() const = 0;

  /// Providers that can only be evaluated on multiples of a time step report it here.
  virtual std::optional<double> time_quantum() const { return std::nullopt; }

  /// The generator, when the provider is a matrix semigroup.
  virtual const Matrix *generator() const { return nullptr; }

  /// Tolerance of evaluate(s+t) = evaluate(s) evaluate(t), relative to the operator size.
  virtual double composition_tolerance() const { return 1e-9; }

  /// Whether t is an admissible evaluation time.
  bool admits(double t) const
  {
    if (t < 0.0)
      return false;
    if (auto q = time_quantum()) {
      const double k = std::round(t / *q);
      return std::abs(k * *q - t) <= 1e-9 * std::max(1.0, t);
    }
    return true;
  }
};

using ProviderPtr = std::shared_ptr<const SemigroupProvider>;

/// Strictly increasing sample times within [t_start, t_end].
class TimeGrid {
public:
  TimeGrid() = default;

  TimeGrid(double t_start, double t_end, std::vector<double> points)
      : t_start_(t_start), t_end_(t_end), points_(std::move(points))
  {
    validate();
  }

  /// n log-spaced points on [t_min, t_max], optionally with t = 0 prepended.
  static TimeGrid log_spaced(double t_min, double t_max, std::size_t n, bool include_zero = true)
  {
    if (!(t_min > 0.0) || !(t_max > t_min) || n < 2)
      throw PreconditionError("TimeGrid::log_spaced: need 0 < t_min < t_max and n >= 2");
    std::vector<double> pts;
    pts.reserve(n + 1);
    if (include_zero)
      pts.push_back(0.0);
    const double a = std::log(t_min), b = std::log(t_max);
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1)));
    pts.back() = t_max;
    return TimeGrid(include_zero ? 0.0 : t_min, t_max, std::move(pts));
  }

  /// n evenly spaced points on [t_min, t_max].
  static TimeGrid uniform(double t_min, double t_max, std::size_t n)
  {
    if (t_min < 0.0 || !(t_max > t_min) || n < 2)
      throw PreconditionError("TimeGrid::uniform: need 0 <= t_min < t_max and n >= 2");
    std::vector<double> pts(n);
    for (std::size_t i = 0; i < n; ++i)
      pts[i] = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(n - 1);
    return TimeGrid(t_min, t_max, std::move(pts));
  }

  /// The multiples k*q, k = k_min..k_max.
  static TimeGrid multiples(double q, long k_min, long k_max)
  {
    if (!(q > 0.0) || k_min < 0 || k_max <= k_min)
      throw PreconditionError("TimeGrid::multiples: bad range");
    std::vector<double> pts;
    for (long k = k_min; k <= k_max; ++k)
      pts.push_back(static_cast<double>(k) * q);
    const double lo = pts.front(), hi = pts.back();
    return TimeGrid(lo, hi, std::move(pts));
  }

  /// 256 log-spaced points on [1e-3, 20] plus t = 0.
  static TimeGrid default_grid() { return log_spaced(1e-3, 20.0, 256, true); }

  /// Rounds every point to the nearest multiple of q and removes duplicates.
  TimeGrid snapped(double q) const
  {
    if (!(q > 0.0))
      throw PreconditionError("TimeGrid::snapped: quantum must be > 0");
    std::vector<double> pts;
    for (double t : points_) {
      const double s = std::round(t / q) * q;
      if (pts.empty() || s > pts.back())
        pts.push_back(s);
    }
    const double lo = std::min(t_start_, pts.front()), hi = std::max(t_end_, pts.back());
    return TimeGrid(lo, hi, std::move(pts));
  }

  /// Snaps to the provider's time quantum when it has one.
  TimeGrid adapted_to(const SemigroupProvider &p) const
  {
    if (auto q = p.time_quantum())
      return snapped(*q);
    return *this;
  }

  /// Points with t >= t0.
  std::vector<double> tail(double t0) const
  {
    std::vector<double> out;
    for (double t : points_)
      if (t >= t0)
        out.push_back(t);
    return out;
  }

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  const std::vector<double> &points() const { return points_; }
  std::size_t size() const { return points_.size(); }

private:
  void validate() const
  {
    if (points_.empty())
      throw PreconditionError("TimeGrid: no points");
    if (t_start_ < 0.0 || points_.front() < t_start_ || points_.back() > t_end_)
      throw PreconditionError("TimeGrid: points outside [t_start, t_end]");
    for (std::size_t i = 1; i < points_.size(); ++i)
      if (!(points_[i] > points_[i - 1]))
        throw PreconditionError("TimeGrid: points must be strictly increasing");
  }

  double t_start_ = 0.0;
  double t_end_ = 0.0;
  std::vector<double> points_;
};

namespace detail {

inline double spectral_norm(const Matrix &m)
{
  if (m.size() == 0)
    return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

} // namespace detail

/// ||e^{tA}||_2 <= e^{mu t}, mu the logarithmic norm lambda_max((A + A^T)/2).
inline GrowthEnvelope log_norm_envelope(const Matrix &a)
{
  if (a.rows() == 0)
    return {1.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Matrix> sym(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return {1.0, sym.eigenvalues().maxCoeff() + 1e-12};
}

/// Growth envelope of a matrix semigroup. Diagonalizable generators get
/// M = 1.1 * cond_2(V), omega = max Re(lambda) + 1e-8; otherwise (or when a spot
/// check fails) the logarithmic-norm bound M = 1, omega = lambda_max((A + A^T)/2).
inline GrowthEnvelope matrix_growth_envelope(const Matrix &a)
{
  const auto n = a.rows();
  const GrowthEnvelope lognorm = log_norm_envelope(a);
  if (n == 0)
    return lognorm;

  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success)
    return lognorm;
  const Eigen::MatrixXcd v = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(v);
  const auto &sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0))
    return lognorm;
  const double kappa = sv(0) / smin;
  if (!std::isfinite(kappa) || kappa > 1e10)
    return lognorm;
  GrowthEnvelope env{1.1 * kappa, es.eigenvalues().real().maxCoeff() + 1e-8};

  for (double t : {0.05, 0.25, 1.0, 2.0, 4.0}) {
    try {
      const double lhs = detail::spectral_norm(expm(a, t));
      if (lhs > env.bound(t) * (1.0 + 1e-8))
        return lognorm;
    } catch (const OverflowError &) {
      break;
    }
  }
  // The log-norm bound wins when it is tighter over the unit interval.
  if (lognorm.omega <= env.omega && lognorm.m <= env.m)
    return lognorm;
  return env;
}

/// e^{tA} for a fixed generator A.
class MatrixSemigroup final : public SemigroupProvider {
public:
  explicit MatrixSemigroup(Matrix generator) : a_(std::move(generator))
  {
    if (a_.rows() != a_.cols() || a_.rows() == 0)
      throw PreconditionError("MatrixSemigroup: generator must be square and non-empty");
    if (!a_.allFinite())
      throw PreconditionError("MatrixSemigroup: generator has non-finite entries");
    env_ = matrix_growth_envelope(a_);
  }

  MatrixSemigroup(Matrix generator, GrowthEnvelope env) : a_(std::move(generator)), env_(env)
  {
    if (a_.rows() != a_.cols() || a_.rows() == 0)
      throw PreconditionError("MatrixSemigroup: generator must be square and non-empty");
  }

  Eigen::Index dim() const override { return a_.rows(); }
  Matrix evaluate(double t) const override
  {
    if (t < 0.0)
      throw PreconditionError("MatrixSemigroup::evaluate: t must be >= 0");
    return expm(a_, t);
  }
  GrowthEnvelope envelope() const override { return env_; }
  CarrierKind carrier() const override { return CarrierKind::Matrix; }
  std::string describe() const override { return "matrix semigroup, n = " + std::to_string(a_.rows()); }
  const Matrix *generator() const override { return &a_; }

  const Matrix &matrix() const { return a_; }

private:
  Matrix a_;
  GrowthEnvelope env_;
};

inline ProviderPtr make_matrix_semigroup(Matrix a) { return std::make_shared<MatrixSemigroup>(std::move(a)); }

struct OrbitPoint {
  double t = 0.0;
  Vector value;
};

/// (t, e^{tA} f) for every grid time. Each sample is evaluated from t = 0, never by stepping.
inline std::vector<OrbitPoint> orbit(const SemigroupProvider &p, const Vector &f, const TimeGrid &grid)
{
  if (f.size() != p.dim())
    throw PreconditionError("orbit: vector dimension does not match the carrier");
  const auto &pts = grid.points();
  return parallel_map(pts.size(), [&](std::size_t i) { return OrbitPoint{pts[i], p.apply(pts[i], f)}; });
}

/// Closed-form power formula and repeated multiplication, for comparison.
struct PowerFormulaCheck {
  Matrix formula;
  Matrix direct;
  double max_rel_error = 0.0;
};

/// Example generator only: A^n by the 8^n/2, 9^n/3 closed form and by repeated multiplication.
inline PowerFormulaCheck matrix_power_formula_check(int n)
{
  if (n < 0 || n > 12)
    throw PreconditionError("matrix_power_formula_check: n must lie in [0, 12]");
  const Matrix a = models::third_row_positive_generator();
  PowerFormulaCheck r;
  r.formula = models::third_row_positive_power_formula(n);
  r.direct = Matrix::Identity(3, 3);
  for (int k = 0; k < n; ++k)
    r.direct = r.direct * a;
  r.max_rel_error = (r.formula - r.direct).cwiseAbs().maxCoeff() / std::max(1.0, max_abs(r.direct));
  return r;
}

} // namespace evpos

#endif // EVPOS_SEMIGROUP_HPP
