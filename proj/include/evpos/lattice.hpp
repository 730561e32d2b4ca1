#ifndef EVPOS_LATTICE_HPP
#define EVPOS_LATTICE_HPP

// Finite-dimensional Banach-lattice primitives on R^n with the entrywise order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evpos/errors.hpp"

namespace evpos {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Default absolute positivity tolerance used by the CLI.
inline constexpr double kDefaultPositivityTol = 1e-9;

inline bool all_finite(const Vector &v) { return v.allFinite(); }

/// Cone membership: every entry >= -tol.
inline bool is_positive(const Vector &v, double tol = 0.0)
{
  if (tol < 0.0)
    throw PreconditionError("is_positive: tol must be >= 0");
  return (v.array() >= -tol).all();
}

/// Positivity of an operator (it maps the cone into itself): every entry >= -tol.
inline bool is_positive(const Matrix &m, double tol = 0.0)
{
  if (tol < 0.0)
    throw PreconditionError("is_positive: tol must be >= 0");
  return (m.array() >= -tol).all();
}

/// Quasi-interior points of R^n_+ are exactly the strictly positive vectors.
inline bool is_quasi_interior(const Vector &v, double tol = 0.0)
{
  return v.size() > 0 && (v.array() > tol).all();
}

/// f >= 0 and f != 0.
inline bool is_nonzero_positive(const Vector &v, double tol = 0.0)
{
  return is_positive(v, tol) && (v.array() > tol).any();
}

inline Vector meet(const Vector &f, const Vector &g) { return f.cwiseMin(g); }
inline Vector join(const Vector &f, const Vector &g) { return f.cwiseMax(g); }
inline Vector modulus(const Vector &f) { return f.cwiseAbs(); }
inline Vector pos_part(const Vector &f) { return f.cwiseMax(0.0); }
inline Vector neg_part(const Vector &f) { return (-f).cwiseMax(0.0); }

struct LatticeOps {
  Vector meet;
  Vector join;
  Vector modulus;  // |f|
  Vector pos_part; // f^+
};

inline LatticeOps lattice_ops(const Vector &f, const Vector &g)
{
  if (f.size() != g.size())
    throw PreconditionError("lattice_ops: dimension mismatch");
  return {meet(f, g), join(f, g), modulus(f), pos_part(f)};
}

/// A closed ideal of R^n, i.e. the coordinate span of a subset S of {0, ..., dim-1}.
class IdealMask {
public:
  explicit IdealMask(std::size_t dim = 0) : bits_(dim, false) {}

  static IdealMask full(std::size_t dim)
  {
    IdealMask m(dim);
    std::fill(m.bits_.begin(), m.bits_.end(), true);
    return m;
  }

  static IdealMask from_indices(std::size_t dim, const std::vector<std::size_t> &idx)
  {
    IdealMask m(dim);
    for (auto i : idx)
      m.insert(i);
    return m;
  }

  /// Bit i of `word` selects coordinate i. Requires dim <= 64.
  static IdealMask from_word(std::size_t dim, std::uint64_t word)
  {
    if (dim > 64)
      throw DimensionTooLarge("IdealMask::from_word: dim > 64");
    IdealMask m(dim);
    for (std::size_t i = 0; i < dim; ++i)
      m.bits_[i] = (word >> i) & 1u;
    return m;
  }

  std::size_t dim() const { return bits_.size(); }

  bool contains(std::size_t i) const { return i < bits_.size() && bits_[i]; }

  void insert(std::size_t i)
  {
    if (i >= bits_.size())
      throw PreconditionError("IdealMask: index " + std::to_string(i) + " out of range");
    bits_[i] = true;
  }

  void erase(std::size_t i)
  {
    if (i < bits_.size())
      bits_[i] = false;
  }

  std::size_t count() const
  {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
  }

  bool empty() const { return count() == 0; }
  bool is_full() const { return count() == dim(); }
  /// {0} or the whole space.
  bool is_trivial() const { return empty() || is_full(); }

  std::vector<std::size_t> indices() const
  {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i])
        out.push_back(i);
    return out;
  }

  std::uint64_t word() const
  {
    if (dim() > 64)
      throw DimensionTooLarge("IdealMask::word: dim > 64");
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i])
        w |= std::uint64_t{1} << i;
    return w;
  }

  IdealMask complement() const
  {
    IdealMask m(dim());
    for (std::size_t i = 0; i < bits_.size(); ++i)
      m.bits_[i] = !bits_[i];
    return m;
  }

  /// Does v vanish outside the mask (up to tol)?
  bool contains_vector(const Vector &v, double tol = 0.0) const
  {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!contains(static_cast<std::size_t>(i)) && std::abs(v(i)) > tol)
        return false;
    return true;
  }

  friend bool operator==(const IdealMask &a, const IdealMask &b) { return a.bits_ == b.bits_; }

  /// Orders by dimension, then lexicographically by bit pattern (index 0 most significant).
  friend bool operator<(const IdealMask &a, const IdealMask &b)
  {
    if (a.dim() != b.dim())
      return a.dim() < b.dim();
    for (std::size_t i = a.dim(); i-- > 0;)
      if (a.bits_[i] != b.bits_[i])
        return b.bits_[i];
    return false;
  }

  std::string to_string() const
  {
    std::string s = "{";
    bool first = true;
    for (auto i : indices()) {
      if (!first)
        s += ",";
      s += std::to_string(i);
      first = false;
    }
    return s + "}";
  }

private:
  std::vector<bool> bits_;
};

/// The principal ideal E_h together with its gauge norm.
class GaugeContext {
public:
  explicit GaugeContext(Vector h) : h_(std::move(h)), support_(static_cast<std::size_t>(h_.size()))
  {
    if (!h_.allFinite() || (h_.array() < 0.0).any())
      throw PreconditionError("GaugeContext: h must be finite and >= 0");
    for (Eigen::Index i = 0; i < h_.size(); ++i)
      if (h_(i) > 0.0)
        support_.insert(static_cast<std::size_t>(i));
  }

  const Vector &h() const { return h_; }
  const IdealMask &support() const { return support_; }

private:
  Vector h_;
  IdealMask support_;
};

/// ||f||_h = inf{c > 0 : |f| <= c h}; nullopt when f is not in E_h.
/// Coordinates outside supp(h) with f_i = 0 contribute 0.
inline std::optional<double> gauge_norm(const Vector &f, const GaugeContext &ctx)
{
  const Vector &h = ctx.h();
  if (f.size() != h.size())
    throw PreconditionError("gauge_norm: dimension mismatch");
  double c = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (h(i) > 0.0)
      c = std::max(c, std::abs(f(i)) / h(i));
    else if (f(i) != 0.0)
      return std::nullopt;
  }
  return c;
}

/// Smallest entry of an operator matrix, with its position.
struct EntryWitness {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

inline EntryWitness min_entry(const Matrix &m)
{
  EntryWitness w;
  w.value = m.minCoeff(&w.row, &w.col);
  return w;
}

inline double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline Vector unit_vector(Eigen::Index dim, Eigen::Index i)
{
  Vector e = Vector::Zero(dim);
  e(i) = 1.0;
  return e;
}

} // namespace evpos

#endif // EVPOS_LATTICE_HPP
