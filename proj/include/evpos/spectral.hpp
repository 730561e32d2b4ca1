#ifndef EVPOS_SPECTRAL_HPP
#define EVPOS_SPECTRAL_HPP

// Dominant eigenvalue machinery: spectral bound, simplicity tests, rank-one
// spectral projections and Cesaro (mean ergodic) projections.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "evpos/errors.hpp"
#include "evpos/expm.hpp"
#include "evpos/lattice.hpp"

namespace evpos {

/// Margin below which a dominant eigenvalue is not treated as strictly dominant.
inline constexpr double kDominanceGap = 1e-8;
/// Eigen-residual tolerance, relative to max(1, ||A||_2).
inline constexpr double kEigenResidualTol = 1e-9;

inline double operator_norm2(const Matrix &m)
{
  if (m.size() == 0)
    return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

/// Eigenvalues sorted by decreasing real part (ties by decreasing imaginary part).
inline std::vector<std::complex<double>> sorted_eigenvalues(const Matrix &a)
{
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success)
    throw EigenSolverFailure("eigenvalue computation did not converge");
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](auto x, auto y) {
    return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
  });
  return ev;
}

/// s(A) = max Re(lambda).
inline double spectral_bound(const Matrix &a) { return sorted_eigenvalues(a).front().real(); }

/// spr(A) = max |lambda|.
inline double spectral_radius(const Matrix &a)
{
  double r = 0.0;
  for (auto z : sorted_eigenvalues(a))
    r = std::max(r, std::abs(z));
  return r;
}

namespace detail {

/// Inverse iteration for a real eigenvalue, started from `start`.
inline Vector inverse_iteration(const Matrix &a, double lambda, Vector start, int steps = 4)
{
  const auto n = a.rows();
  const double shift = lambda + 1e-10 * std::max(1.0, std::abs(lambda));
  Eigen::PartialPivLU<Matrix> lu(a - shift * Matrix::Identity(n, n));
  Vector x = start.norm() > 0.0 ? start.normalized() : Vector::Ones(n).normalized();
  for (int k = 0; k < steps; ++k) {
    Vector y = lu.solve(x);
    if (!y.allFinite() || y.norm() == 0.0)
      break;
    x = y.normalized();
  }
  return x;
}

/// Flips the sign so that the entry of largest modulus is positive.
inline Vector orient(Vector v)
{
  Eigen::Index i = 0;
  v.cwiseAbs().maxCoeff(&i);
  if (v(i) < 0.0)
    v = -v;
  return v;
}

inline Vector real_eigenvector_guess(const Matrix &a, double lambda)
{
  Eigen::EigenSolver<Matrix> es(a, true);
  if (es.info() != Eigen::Success)
    throw EigenSolverFailure("eigenvector computation did not converge");
  Eigen::Index best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double d = std::abs(es.eigenvalues()(i) - std::complex<double>(lambda, 0.0));
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return es.eigenvectors().col(best).real();
}

inline int numerical_rank(const Matrix &m, double tol)
{
  if (m.size() == 0)
    return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto &sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol)
      ++r;
  return r;
}

} // namespace detail

/// Dominant eigen-data of a real matrix: s(A), spectral gap, right/left eigenvectors.
struct DominantEigen {
  double spectral_bound = 0.0;
  double imag_part = 0.0;
  double spectral_gap = 0.0; // s(A) - max Re of the remaining spectrum
  bool real_simple = false;  // real, and strictly dominant by at least kDominanceGap
  Vector u;                  // right eigenvector, ||u||_2 = 1, oriented
  Vector phi;                // left eigenvector, <phi, u> = 1 when the pairing is non-zero
  double pairing = 0.0;      // <phi, u> before rescaling phi
  double residual_u = 0.0;
  double residual_phi = 0.0;
};

inline DominantEigen dominant_eigen(const Matrix &a)
{
  if (a.rows() != a.cols() || a.rows() == 0)
    throw PreconditionError("dominant_eigen: matrix must be square and non-empty");
  const auto n = a.rows();
  const auto ev = sorted_eigenvalues(a);
  DominantEigen d;
  d.spectral_bound = ev.front().real();
  d.imag_part = ev.front().imag();
  const double scale = std::max(1.0, operator_norm2(a));
  double next = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ev.size(); ++i)
    next = std::max(next, ev[i].real());
  d.spectral_gap = (n == 1) ? std::numeric_limits<double>::infinity() : d.spectral_bound - next;
  const bool is_real = std::abs(d.imag_part) <= kEigenResidualTol * scale;
  d.real_simple = is_real && d.spectral_gap >= kDominanceGap * scale;
  if (!is_real)
    return d;

  const double s = d.spectral_bound;
  d.u = detail::orient(detail::inverse_iteration(a, s, detail::real_eigenvector_guess(a, s)));
  const Matrix at = a.transpose();
  Vector phi = detail::orient(detail::inverse_iteration(at, s, detail::real_eigenvector_guess(at, s)));
  d.pairing = phi.dot(d.u);
  if (std::abs(d.pairing) > kEigenResidualTol) {
    phi /= d.pairing;
  }
  d.phi = phi;
  d.residual_u = (a * d.u - s * d.u).norm() / d.u.norm();
  d.residual_phi = (at * d.phi - s * d.phi).norm() / d.phi.norm();
  if (d.real_simple && (d.residual_u > kEigenResidualTol * scale || d.residual_phi > kEigenResidualTol * scale))
    throw EigenSolverFailure("dominant eigenpair residuals " + std::to_string(d.residual_u) + ", " +
                             std::to_string(d.residual_phi) + " exceed tolerance");
  return d;
}

/// Outcome of the geometric/algebraic simplicity test for an eigenvalue.
struct SimplicityReport {
  bool geometrically_simple = false;
  bool pairing_nonzero = false;
  bool algebraically_simple = false; // geometric simplicity together with <phi, u> != 0
  int rank_first = 0;                // rank(lambda I - A)
  int rank_squared = 0;              // rank((lambda I - A)^2)
  double pairing = 0.0;
  bool cross_check_agrees = false;   // rank((lambda I - A)^2) = dim - 1 iff algebraically simple

  explicit operator bool() const { return algebraically_simple; }
};

/// Geometric simplicity plus a non-vanishing pairing <phi, u> implies algebraic simplicity.
inline SimplicityReport algebraic_simplicity_test(const Matrix &a, double lambda, const Vector &u, const Vector &phi,
                                                  double tol = 1e-9)
{
  const auto n = a.rows();
  if (a.cols() != n || u.size() != n || phi.size() != n)
    throw PreconditionError("algebraic_simplicity_test: dimension mismatch");
  const double scale = std::max(1.0, operator_norm2(a));
  if ((a * u - lambda * u).norm() > tol * scale * u.norm() ||
      (a.transpose() * phi - lambda * phi).norm() > tol * scale * phi.norm() || u.norm() == 0.0 ||
      phi.norm() == 0.0)
    throw NotAnEigenpair("algebraic_simplicity_test: (lambda, u, phi) is not an eigen-triple");

  const Matrix shifted = lambda * Matrix::Identity(n, n) - a;
  SimplicityReport r;
  const double rank_tol = tol * scale * std::max<double>(1.0, static_cast<double>(n));
  r.rank_first = detail::numerical_rank(shifted, rank_tol);
  r.rank_squared = detail::numerical_rank(shifted * shifted, rank_tol * scale);
  r.geometrically_simple = r.rank_first == n - 1;
  r.pairing = phi.dot(u) / (phi.norm() * u.norm());
  r.pairing_nonzero = std::abs(r.pairing) > tol;
  r.algebraically_simple = r.geometrically_simple && r.pairing_nonzero;
  r.cross_check_agrees = r.algebraically_simple == (r.rank_squared == n - 1);
  return r;
}

/// A spectral or mean ergodic projection together with its residuals.
struct ProjectionReport {
  double lambda = 0.0;
  Matrix projection;
  int rank = 0;
  Vector u;
  Vector phi;
  double residual_idempotent = 0.0; // ||P^2 - P||
  double residual_eigen = 0.0;      // max(||AP - lambda P||, ||PA - lambda P||)
  double residual_rank_one = 0.0;   // ||P - u phi^T||, rank-one reports only
  bool rank_one_form = false;
  bool u_strictly_positive = false;
  bool phi_strictly_positive = false;
  bool positivity_asserted = false;

  // Cesaro data (mean ergodic projections only).
  std::vector<double> horizons;
  std::vector<double> distances; // ||C_T - P||_2
  double decay_constant = 0.0;   // max_T T * ||C_T - P||

  bool accepted(double tol = 1e-8) const
  {
    return residual_idempotent <= tol && residual_eigen <= tol && (!rank_one_form || residual_rank_one <= tol);
  }
};

/// Rank-one projection u phi^T onto the dominant eigenvalue, normalized by <phi, u> = 1.
/// With assert_strict_positivity the eigenvectors must be strictly positive (throws ConsistencyViolation otherwise).
inline ProjectionReport dominant_projection(const Matrix &a, bool assert_strict_positivity = false)
{
  const DominantEigen d = dominant_eigen(a);
  if (!d.real_simple || std::abs(d.pairing) <= kEigenResidualTol)
    throw CertificateMissing("dominant_projection: s(A) is not a simple, real, strictly dominant eigenvalue");
  ProjectionReport r;
  r.lambda = d.spectral_bound;
  r.u = d.u;
  r.phi = d.phi;
  r.projection = d.u * d.phi.transpose();
  r.rank = detail::numerical_rank(r.projection, 1e-8 * std::max(1.0, operator_norm2(r.projection)));
  r.rank_one_form = true;
  const double pn = std::max(1.0, operator_norm2(r.projection));
  const double scale = std::max(1.0, operator_norm2(a)) * pn;
  r.residual_idempotent = operator_norm2(r.projection * r.projection - r.projection) / pn;
  r.residual_eigen = std::max(operator_norm2(a * r.projection - r.lambda * r.projection),
                              operator_norm2(r.projection * a - r.lambda * r.projection)) /
                     scale;
  r.residual_rank_one = 0.0;
  r.u_strictly_positive = is_quasi_interior(d.u, 0.0);
  r.phi_strictly_positive = is_quasi_interior(d.phi, 0.0);
  r.positivity_asserted = assert_strict_positivity;
  if (assert_strict_positivity && !(r.u_strictly_positive && r.phi_strictly_positive))
    throw ConsistencyViolation("dominant_projection: eigenvectors of an eventually positive, persistently "
                               "irreducible generator are not strictly positive");
  return r;
}

/// Projection onto ker(A) along ran(A), i.e. the limit of the Cesaro means of a bounded semigroup.
inline Matrix kernel_projection(const Matrix &a, double tol, int *rank_out = nullptr)
{
  const auto n = a.rows();
  const double scale = std::max(1.0, operator_norm2(a));
  auto null_basis = [&](const Matrix &m) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const auto &sv = svd.singularValues();
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < n; ++i)
      if (sv(i) <= tol * scale)
        cols.push_back(i);
    Matrix b(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
      b.col(static_cast<Eigen::Index>(k)) = svd.matrixV().col(cols[k]);
    return b;
  };
  const Matrix right = null_basis(a);
  const Matrix left = null_basis(a.transpose());
  if (rank_out)
    *rank_out = static_cast<int>(right.cols());
  if (right.cols() == 0)
    return Matrix::Zero(n, n);
  if (left.cols() != right.cols())
    throw NoConvergence("kernel_projection: eigenvalue 0 is not semisimple");
  const Matrix g = left.transpose() * right;
  Eigen::FullPivLU<Matrix> lu(g);
  if (!lu.isInvertible())
    throw NoConvergence("kernel_projection: eigenvalue 0 is not semisimple");
  return right * lu.inverse() * left.transpose();
}

namespace detail {

/// Romberg integration of s -> e^{sA} over [0, 1].
inline Matrix integral_unit_interval(const Matrix &a, int max_level = 14, double rel_tol = 1e-14)
{
  const auto n = a.rows();
  std::vector<Matrix> prev, cur;
  Matrix trap = 0.5 * (Matrix::Identity(n, n) + expm(a, 1.0));
  prev.push_back(trap);
  for (int level = 1; level <= max_level; ++level) {
    const long panels = 1L << level;
    const double h = 1.0 / static_cast<double>(panels);
    Matrix mid = Matrix::Zero(n, n);
    for (long k = 1; k < panels; k += 2)
      mid += expm(a, static_cast<double>(k) * h);
    trap = 0.5 * trap + h * mid;
    cur.assign(1, trap);
    double factor = 4.0;
    for (std::size_t j = 1; j <= static_cast<std::size_t>(level); ++j) {
      cur.push_back(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (factor - 1.0));
      factor *= 4.0;
    }
    const double diff = (cur.back() - prev.back()).cwiseAbs().maxCoeff();
    const double size = std::max(1.0, cur.back().cwiseAbs().maxCoeff());
    prev.swap(cur);
    if (level >= 4 && diff <= rel_tol * size)
      break;
  }
  return prev.back();
}

} // namespace detail

/// Cesaro means C_T = (1/T) int_0^T e^{tA} dt for T = 1, 2, 4, ..., t_max, compared with the
/// projection onto ker(A) along ran(A). Requires s(A) = 0 and a bounded rescaled semigroup.
inline ProjectionReport mean_ergodic_projection(const Matrix &a, double t_max = 1024.0, double tol = 1e-8)
{
  const auto n = a.rows();
  if (a.cols() != n || n == 0)
    throw PreconditionError("mean_ergodic_projection: matrix must be square and non-empty");
  const double scale = std::max(1.0, operator_norm2(a));
  const double s = spectral_bound(a);
  if (std::abs(s) > tol * scale)
    throw PreconditionError("mean_ergodic_projection: spectral bound is " + std::to_string(s) + ", expected 0");

  ProjectionReport r;
  r.lambda = 0.0;
  r.projection = kernel_projection(a, tol, &r.rank);

  const Matrix unit = detail::integral_unit_interval(a);
  Matrix integral = Matrix::Zero(n, n);
  long done = 0;
  for (long horizon = 1; static_cast<double>(horizon) <= t_max; horizon *= 2) {
    for (; done < horizon; ++done) {
      const Matrix step = expm(a, static_cast<double>(done));
      if (max_abs(step) > 1e6)
        throw NoConvergence("mean_ergodic_projection: rescaled semigroup is unbounded on the horizon");
      integral += step * unit;
    }
    const Matrix c = integral / static_cast<double>(horizon);
    const double dist = operator_norm2(c - r.projection);
    r.horizons.push_back(static_cast<double>(horizon));
    r.distances.push_back(dist);
    r.decay_constant = std::max(r.decay_constant, dist * static_cast<double>(horizon));
  }
  if (r.horizons.empty())
    throw PreconditionError("mean_ergodic_projection: t_max must be >= 1");

  // T * ||C_T - P|| must not keep growing along the doubling schedule.
  const std::size_t half = r.horizons.size() / 2;
  double early = 0.0;
  for (std::size_t i = 0; i <= half; ++i)
    early = std::max(early, r.distances[i] * r.horizons[i]);
  const double last = r.distances.back() * r.horizons.back();
  if (last > 4.0 * early + 1e-12)
    throw NoConvergence("mean_ergodic_projection: Cesaro means do not settle at rate 1/T");

  const Matrix &p = r.projection;
  const double pn = std::max(1.0, operator_norm2(p));
  r.residual_idempotent = operator_norm2(p * p - p) / pn;
  r.residual_eigen = std::max(operator_norm2(a * p), operator_norm2(p * a)) / (scale * pn);
  if (r.rank == 1) {
    Eigen::JacobiSVD<Matrix> svd(p, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double sigma = svd.singularValues()(0);
    Vector u = detail::orient(svd.matrixU().col(0));
    Vector phi = sigma * svd.matrixV().col(0);
    if (svd.matrixU().col(0).dot(u) < 0.0)
      phi = -phi;
    r.u = u;
    r.phi = phi;
    r.rank_one_form = true;
    r.residual_rank_one = operator_norm2(p - u * phi.transpose()) / pn;
    r.u_strictly_positive = is_quasi_interior(u, 0.0);
    r.phi_strictly_positive = is_quasi_interior(phi, 0.0);
  }
  return r;
}

} // namespace evpos

#endif // EVPOS_SPECTRAL_HPP
