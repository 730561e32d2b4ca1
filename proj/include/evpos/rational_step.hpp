#ifndef EVPOS_RATIONAL_STEP_HPP
#define EVPOS_RATIONAL_STEP_HPP

// Exact step functions on [0, 1]: Rademacher and Walsh-Paley systems under the nilpotent left shift.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "evpos/errors.hpp"

namespace evpos {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr int kDefaultMaxDepth = 16;

inline Rational dyadic(std::int64_t m, int d)
{
  return Rational(m) / Rational(boost::multiprecision::cpp_int(1) << d);
}

inline std::string to_string(const Rational &r) { return r.str(); }

/// Right-continuous step function on [0, 1] with rational breakpoints 0 = b_0 < ... < b_k = 1
/// and value v_i on [b_i, b_{i+1}). Canonical: adjacent values differ.
class PiecewiseConstantFn {
public:
  PiecewiseConstantFn() : breaks_{Rational(0), Rational(1)}, values_{Rational(0)} {}

  PiecewiseConstantFn(std::vector<Rational> breaks, std::vector<Rational> values)
      : breaks_(std::move(breaks)), values_(std::move(values))
  {
    if (breaks_.size() < 2 || values_.size() + 1 != breaks_.size())
      throw PreconditionError("PiecewiseConstantFn: need k+1 breakpoints for k values");
    if (breaks_.front() != 0 || breaks_.back() != 1)
      throw PreconditionError("PiecewiseConstantFn: breakpoints must start at 0 and end at 1");
    for (std::size_t i = 1; i < breaks_.size(); ++i)
      if (!(breaks_[i] > breaks_[i - 1]))
        throw PreconditionError("PiecewiseConstantFn: breakpoints must be strictly increasing");
    canonicalize();
  }

  static PiecewiseConstantFn constant(const Rational &c) { return PiecewiseConstantFn({0, 1}, {c}); }

  /// Values v_0..v_{2^d - 1} on the dyadic cells [m/2^d, (m+1)/2^d).
  static PiecewiseConstantFn from_dyadic_cells(const std::vector<Rational> &cells, int d)
  {
    if (cells.size() != (std::size_t{1} << d))
      throw PreconditionError("PiecewiseConstantFn::from_dyadic_cells: need 2^d values");
    std::vector<Rational> breaks;
    for (std::size_t m = 0; m <= cells.size(); ++m)
      breaks.push_back(dyadic(static_cast<std::int64_t>(m), d));
    return PiecewiseConstantFn(std::move(breaks), cells);
  }

  const std::vector<Rational> &breakpoints() const { return breaks_; }
  const std::vector<Rational> &values() const { return values_; }

  /// f(x) for x in [0, 1); f(1) is the value of the last piece.
  Rational operator()(const Rational &x) const
  {
    if (x < 0 || x > 1)
      return Rational(0);
    auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
    i = std::min(i == 0 ? 0 : i - 1, values_.size() - 1);
    return values_[i];
  }

  bool is_zero() const { return values_.size() == 1 && values_.front() == 0; }

  Rational integral() const
  {
    Rational s = 0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      s += values_[i] * (breaks_[i + 1] - breaks_[i]);
    return s;
  }

  /// Pointwise combination op(f, g) on the common refinement.
  template <typename Op>
  static PiecewiseConstantFn combine(const PiecewiseConstantFn &f, const PiecewiseConstantFn &g, Op op)
  {
    std::vector<Rational> breaks;
    std::merge(f.breaks_.begin(), f.breaks_.end(), g.breaks_.begin(), g.breaks_.end(), std::back_inserter(breaks));
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    std::vector<Rational> values;
    values.reserve(breaks.size() - 1);
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
      while (f.breaks_[i + 1] <= breaks[k])
        ++i;
      while (g.breaks_[j + 1] <= breaks[k])
        ++j;
      values.push_back(op(f.values_[i], g.values_[j]));
    }
    return PiecewiseConstantFn(std::move(breaks), std::move(values));
  }

  friend PiecewiseConstantFn operator+(const PiecewiseConstantFn &f, const PiecewiseConstantFn &g)
  {
    return combine(f, g, [](const Rational &a, const Rational &b) { return Rational(a + b); });
  }
  friend PiecewiseConstantFn operator-(const PiecewiseConstantFn &f, const PiecewiseConstantFn &g)
  {
    return combine(f, g, [](const Rational &a, const Rational &b) { return Rational(a - b); });
  }
  friend PiecewiseConstantFn operator*(const PiecewiseConstantFn &f, const PiecewiseConstantFn &g)
  {
    return combine(f, g, [](const Rational &a, const Rational &b) { return Rational(a * b); });
  }
  friend PiecewiseConstantFn operator*(const Rational &c, const PiecewiseConstantFn &f)
  {
    std::vector<Rational> v = f.values_;
    for (auto &x : v)
      x *= c;
    return PiecewiseConstantFn(f.breaks_, std::move(v));
  }

  PiecewiseConstantFn abs() const
  {
    std::vector<Rational> v = values_;
    for (auto &x : v)
      if (x < 0)
        x = -x;
    return PiecewiseConstantFn(breaks_, std::move(v));
  }

  friend bool operator==(const PiecewiseConstantFn &f, const PiecewiseConstantFn &g)
  {
    return f.breaks_ == g.breaks_ && f.values_ == g.values_;
  }

  std::string to_string() const
  {
    std::string s;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (i)
        s += " ";
      s += "[" + breaks_[i].str() + "," + breaks_[i + 1].str() + "):" + values_[i].str();
    }
    return s;
  }

private:
  void canonicalize()
  {
    std::vector<Rational> b{breaks_.front()}, v;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!v.empty() && v.back() == values_[i]) {
        b.back() = breaks_[i + 1];
        continue;
      }
      v.push_back(values_[i]);
      b.push_back(breaks_[i + 1]);
    }
    breaks_ = std::move(b);
    values_ = std::move(v);
  }

  std::vector<Rational> breaks_;
  std::vector<Rational> values_;
};

/// <f, g> = int_0^1 f g.
inline Rational inner_product(const PiecewiseConstantFn &f, const PiecewiseConstantFn &g) { return (f * g).integral(); }

inline Rational norm2_squared(const PiecewiseConstantFn &f) { return inner_product(f, f); }

/// r_n(x) = (-1)^floor(2^n x), n >= 1.
inline PiecewiseConstantFn rademacher(int n, int max_depth = kDefaultMaxDepth)
{
  if (n < 1)
    throw PreconditionError("rademacher: index must be >= 1");
  if (n > max_depth)
    throw DepthExceeded("rademacher: index " + std::to_string(n) + " exceeds depth " + std::to_string(max_depth));
  std::vector<Rational> cells(std::size_t{1} << n);
  for (std::size_t m = 0; m < cells.size(); ++m)
    cells[m] = (m % 2 == 0) ? 1 : -1;
  return PiecewiseConstantFn::from_dyadic_cells(cells, n);
}

/// Walsh-Paley function w_n: the product of r_{i+1} over the set bits i of n; w_0 = 1.
inline PiecewiseConstantFn walsh(std::uint64_t n, int max_depth = kDefaultMaxDepth)
{
  int d = 0;
  while (d < 64 && (n >> d) != 0)
    ++d;
  if (d > max_depth)
    throw DepthExceeded("walsh: index " + std::to_string(n) + " needs depth " + std::to_string(d));
  if (d == 0)
    return PiecewiseConstantFn::constant(1);
  std::vector<Rational> cells(std::size_t{1} << d);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    int sign = 1;
    for (int i = 0; i < d; ++i)
      if ((n >> i) & 1u)
        sign *= ((c >> (d - i - 1)) & 1u) ? -1 : 1;
    cells[c] = sign;
  }
  return PiecewiseConstantFn::from_dyadic_cells(cells, d);
}

/// (S_t f)(x) = f(x + t) on [0, 1 - t), 0 on [1 - t, 1]; S_t = 0 for t >= 1.
inline PiecewiseConstantFn shift_apply(const PiecewiseConstantFn &f, const Rational &t)
{
  if (t < 0)
    throw PreconditionError("shift_apply: t must be >= 0");
  if (t == 0)
    return f;
  if (t >= 1)
    return PiecewiseConstantFn();
  const Rational end = Rational(1) - t;
  std::vector<Rational> breaks{Rational(0)}, values;
  const auto &b = f.breakpoints();
  const auto &v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Rational hi = b[i + 1] - t;
    if (hi <= 0)
      continue;
    values.push_back(v[i]);
    breaks.push_back(hi);
  }
  // The last piece ends at 1 - t; the tail [1 - t, 1] is zero.
  breaks.back() = end;
  values.push_back(0);
  breaks.push_back(1);
  return PiecewiseConstantFn(std::move(breaks), std::move(values));
}

/// <S_t r_k, r_j>, exact.
inline Rational pairing(int k, int j, const Rational &t, int max_depth = kDefaultMaxDepth)
{
  return inner_product(shift_apply(rademacher(k, max_depth), t), rademacher(j, max_depth));
}

/// <S_t w_k, w_j>, exact.
inline Rational walsh_pairing(std::uint64_t k, std::uint64_t j, const Rational &t, int max_depth = kDefaultMaxDepth)
{
  return inner_product(shift_apply(walsh(k, max_depth), t), walsh(j, max_depth));
}

struct WitnessSearchResult {
  std::optional<Rational> t; // first scanned t in (0, 1) with non-zero pairing
  Rational value = 0;
  std::size_t scanned = 0;
};

/// Scans t in {m / 2^d} u {1 - 2^-i : i <= d}, restricted to (0, 1), in increasing order.
inline WitnessSearchResult irreducibility_witness_search(int k, int j, int d, int max_depth = kDefaultMaxDepth)
{
  if (d < 0 || d > 62)
    throw PreconditionError("irreducibility_witness_search: depth out of range");
  std::vector<Rational> ts;
  for (std::int64_t m = 1; m < (std::int64_t{1} << d); ++m)
    ts.push_back(dyadic(m, d));
  for (int i = 1; i <= d; ++i)
    ts.push_back(Rational(1) - dyadic(1, i));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  const auto rk = rademacher(k, max_depth);
  const auto rj = rademacher(j, max_depth);
  WitnessSearchResult r;
  for (const auto &t : ts) {
    ++r.scanned;
    const Rational p = inner_product(shift_apply(rk, t), rj);
    if (p != 0) {
      r.t = t;
      r.value = p;
      return r;
    }
  }
  return r;
}

/// Supremum of the support: S_t f = 0 exactly iff t >= vanishing_time(f).
inline Rational vanishing_time(const PiecewiseConstantFn &f)
{
  const auto &b = f.breakpoints();
  const auto &v = f.values();
  for (std::size_t i = v.size(); i-- > 0;)
    if (v[i] != 0)
      return b[i + 1];
  return Rational(0);
}

} // namespace evpos

#endif // EVPOS_RATIONAL_STEP_HPP
