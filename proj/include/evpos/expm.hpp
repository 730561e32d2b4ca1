#ifndef EVPOS_EXPM_HPP
#define EVPOS_EXPM_HPP

// Matrix exponential by scaling and squaring with diagonal Pade approximants
// (orders 3, 5, 7, 9, 13), following Higham's 2005 parameter selection.

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "evpos/errors.hpp"
#include "evpos/lattice.hpp"

namespace evpos {

namespace detail {

inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                                  30270240.0,    2162160.0,    110880.0,     3960.0,
                                                  90.0,          1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
    10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
    960960.0,            16380.0,             182.0,              1.0};

// 1-norm thresholds below which the order-m approximant meets unit roundoff.
inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

inline double norm1(const Matrix &a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
Matrix pade_low_order(const Matrix &a, const std::array<double, N> &b)
{
  const auto n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix even = b[0] * id;
  Matrix odd = b[1] * id;
  Matrix power = id;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even += b[k] * power;
    if (k + 1 < N)
      odd += b[k + 1] * power;
  }
  const Matrix u = a * odd;
  return (even - u).partialPivLu().solve(even + u);
}

inline Matrix pade13(const Matrix &a)
{
  const auto &b = kPade13;
  const auto n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  return (v - u).partialPivLu().solve(v + u);
}

} // namespace detail

/// Number of squarings used for a given generator and time (exposed for diagnostics).
inline int expm_squarings(const Matrix &a, double t)
{
  const double nrm = detail::norm1(a) * std::abs(t);
  if (nrm <= detail::kTheta13)
    return 0;
  return static_cast<int>(std::ceil(std::log2(nrm / detail::kTheta13)));
}

/// e^{tA}. Throws OverflowError when ||tA|| or the result leaves the double range.
inline Matrix expm(const Matrix &a, double t = 1.0)
{
  if (a.rows() != a.cols())
    throw PreconditionError("expm: matrix must be square");
  const auto n = a.rows();
  if (n == 0)
    return Matrix(0, 0);
  if (!a.allFinite() || !std::isfinite(t))
    throw OverflowError("expm: non-finite input");
  if (t == 0.0)
    return Matrix::Identity(n, n);

  const Matrix ta = t * a;
  const double nrm = detail::norm1(ta);
  if (!std::isfinite(nrm))
    throw OverflowError("expm: ||tA|| is not representable");

  Matrix r;
  if (nrm <= detail::kTheta3)
    r = detail::pade_low_order(ta, detail::kPade3);
  else if (nrm <= detail::kTheta5)
    r = detail::pade_low_order(ta, detail::kPade5);
  else if (nrm <= detail::kTheta7)
    r = detail::pade_low_order(ta, detail::kPade7);
  else if (nrm <= detail::kTheta9)
    r = detail::pade_low_order(ta, detail::kPade9);
  else {
    const int s = expm_squarings(a, t);
    if (s > 1000)
      throw OverflowError("expm: scaling exponent " + std::to_string(s) + " out of range");
    r = detail::pade13(ta / std::ldexp(1.0, s));
    for (int k = 0; k < s; ++k)
      r = r * r;
  }
  if (!r.allFinite())
    throw OverflowError("expm: result overflowed (||tA||_1 = " + std::to_string(nrm) + ")");
  return r;
}

} // namespace evpos

#endif // EVPOS_EXPM_HPP
