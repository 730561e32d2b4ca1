#ifndef EVPOS_MODELS_HPP
#define EVPOS_MODELS_HPP

// Named generators used by the reproduction suites and the CLI presets.

#include <cmath>

#include "evpos/lattice.hpp"

namespace evpos::models {

/// Symmetric 3x3 generator with spectrum {0, 8, 9}. Its semigroup is eventually
/// strongly positive but not positive; the third row and column stay positive.
inline Matrix third_row_positive_generator()
{
  Matrix a(3, 3);
  a << 7, -1, 3, //
      -1, 7, 3,  //
      3, 3, 3;
  return a;
}

/// Orthonormal eigenvectors (columns) for eigenvalues 0, 8, 9.
inline Matrix third_row_positive_eigenvectors()
{
  Matrix u(3, 3);
  const double s6 = std::sqrt(6.0), s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
  u.col(0) << -1 / s6, -1 / s6, 2 / s6;
  u.col(1) << 1 / s2, -1 / s2, 0;
  u.col(2) << 1 / s3, 1 / s3, 1 / s3;
  return u;
}

inline Vector third_row_positive_eigenvalues()
{
  Vector d(3);
  d << 0, 8, 9;
  return d;
}

/// Closed form e^{tA} = U diag(1, e^{8t}, e^{9t}) U^T for the generator above.
inline Matrix third_row_positive_semigroup(double t)
{
  const Matrix u = third_row_positive_eigenvectors();
  const Vector d = third_row_positive_eigenvalues();
  return u * (d * t).array().exp().matrix().asDiagonal() * u.transpose();
}

/// The perturbation diag(0, 0, b).
inline Matrix third_diagonal_perturbation(double b)
{
  Matrix p = Matrix::Zero(3, 3);
  p(2, 2) = b;
  return p;
}

/// Closed-form A^n built from 8^n/2 and 9^n/3. Valid for n >= 1 only: the 0^n term is dropped.
inline Matrix third_row_positive_power_formula(int n)
{
  const double e8 = std::pow(8.0, n) / 2.0;
  const double e9 = std::pow(9.0, n) / 3.0;
  Matrix p(3, 3);
  p << e8 + e9, -e8 + e9, e9, //
      -e8 + e9, e8 + e9, e9,  //
      e9, e9, e9;
  return p;
}

} // namespace evpos::models

#endif // EVPOS_MODELS_HPP
