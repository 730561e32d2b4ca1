#ifndef EVPOS_COUPLED_GAMMA_HPP
#define EVPOS_COUPLED_GAMMA_HPP

// The third-row-positive matrix coupled to the Gamma-shift grid semigroup through
//   B21 z = z_3 1_[1,2]   and   B12 f = (int_[-2,-1] f) e_3.
// The series is run on (z, f) pairs with exact support tracking for the grid component.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evpos/errors.hpp"
#include "evpos/expm.hpp"
#include "evpos/gamma_shift.hpp"
#include "evpos/models.hpp"
#include "evpos/perturbation.hpp"

namespace evpos {

struct CoupledGammaConfig {
  double h = 0.125;
  double half_width = 6.0;
  double t_max = 4.0;        // claims 3 and 4 are sampled on h, 2h, ..., t_max
  double witness_h = 0.01;   // finer grid for the small-time negativity witness
  double witness_half_width = 4.0;
  double witness_t = 0.01;
  double tol = 1e-9;
  int max_terms = 40;
};

struct ProductState {
  Vector z;
  GridFunction f;
};

/// The coupled system on R^3 x grid, evaluated on whole lattice times.
class CoupledGammaModel {
public:
  CoupledGammaModel(double h, double half_width) : a1_(models::third_row_positive_generator())
  {
    const double inv = 1.0 / h;
    if (std::abs(inv - std::round(inv)) > 1e-9)
      throw PreconditionError("coupled Gamma model: h must divide 1");
    if (half_width < 4.0)
      throw PreconditionError("coupled Gamma model: the grid must cover [-4, 4]");
    spec_ = GridSpec::symmetric(half_width, h);
  }

  const GridSpec &spec() const { return spec_; }
  const Matrix &a1() const { return a1_; }
  double h() const { return spec_.h; }

  GridFunction b21(const Vector &z) const
  {
    if (z(2) == 0.0)
      return GridFunction::zero(spec_);
    return GridFunction::indicator(spec_, 1.0, 2.0, z(2));
  }

  /// Exactly 0 when the support of f starts at or above -1.
  double b12(const GridFunction &f) const { return f.integral(-2.0, -1.0); }

  /// The same operators as matrices, for the premise and witness checks.
  Matrix b12_matrix() const
  {
    Matrix m = Matrix::Zero(3, spec_.count);
    for (long i = spec_.cell_of(-2.0); i < spec_.cell_of(-1.0); ++i)
      m(2, i) = spec_.h;
    return m;
  }
  Matrix b21_matrix() const
  {
    Matrix m = Matrix::Zero(spec_.count, 3);
    for (long i = spec_.cell_of(1.0); i < spec_.cell_of(2.0); ++i)
      m(i, 2) = 1.0;
    return m;
  }

  CoupledSystem system() const
  {
    CoupledSystem s{make_matrix_semigroup(a1_), std::make_shared<GammaShiftProvider>(spec_), b12_matrix(),
                    b21_matrix(), std::nullopt, 1.0};
    s.validate();
    return s;
  }

  /// ||B|| <= 1 for the norm max(||z||_2, ||f||_1); the matrix part has M = 1, w = 9 (symmetric generator).
  GrowthEnvelope envelope() const
  {
    const GrowthEnvelope e = log_norm_envelope(a1_);
    return {1.0, std::max(e.omega, 0.0)};
  }

  /// levels[n][q] = V_n(q h)(z, f) for q = 0 .. steps, by the lattice trapezoid rule.
  /// Stops early when a level vanishes exactly.
  std::vector<std::vector<ProductState>> series(const ProductState &x, long steps, int n_terms) const
  {
    const auto Q = static_cast<std::size_t>(steps);
    const double h = spec_.h;
    std::vector<Matrix> e1(Q + 1);
    std::vector<Vector> e1_col3(Q + 1);
    std::vector<GridFunction> g_ind(Q + 1); // G(kh) 1_[1,2]
    const GridFunction ind = GridFunction::indicator(spec_, 1.0, 2.0);
    for (std::size_t k = 0; k <= Q; ++k) {
      e1[k] = expm(a1_, h * double(k));
      e1_col3[k] = e1[k].col(2);
      g_ind[k] = gamma_shift_apply(ind, h * double(k));
    }
    std::vector<std::vector<ProductState>> levels(1);
    for (std::size_t q = 0; q <= Q; ++q)
      levels[0].push_back({e1[q] * x.z, gamma_shift_apply(x.f, h * double(q))});

    for (int n = 1; n <= n_terms; ++n) {
      const auto &prev = levels.back();
      std::vector<double> to_first(Q + 1), to_second(Q + 1);
      for (std::size_t p = 0; p <= Q; ++p) {
        to_first[p] = b12(prev[p].f);
        to_second[p] = prev[p].z(2);
      }
      std::vector<ProductState> next;
      bool all_zero = true;
      for (std::size_t q = 0; q <= Q; ++q) {
        ProductState s{Vector::Zero(3), GridFunction::zero(spec_)};
        for (std::size_t p = 0; p <= q && q > 0; ++p) {
          const double c = ((p == 0 || p == q) ? 0.5 : 1.0) * h;
          if (to_first[p] != 0.0)
            s.z += (c * to_first[p]) * e1_col3[q - p];
          if (to_second[p] != 0.0)
            s.f += g_ind[q - p].scaled(c * to_second[p]);
        }
        if (s.z.cwiseAbs().maxCoeff() != 0.0 || s.f.samples().cwiseAbs().maxCoeff() != 0.0)
          all_zero = false;
        next.push_back(std::move(s));
      }
      levels.push_back(std::move(next));
      if (all_zero)
        break;
    }
    return levels;
  }

  static ProductState sum_at(const std::vector<std::vector<ProductState>> &levels, std::size_t q)
  {
    ProductState s = levels[0][q];
    for (std::size_t n = 1; n < levels.size(); ++n) {
      s.z += levels[n][q].z;
      s.f += levels[n][q].f;
    }
    return s;
  }

private:
  Matrix a1_;
  GridSpec spec_;
};

struct NegativityWitness {
  double t = 0.0;
  double h = 0.0;
  Eigen::Index entry = 0;
  double value = 0.0;
  double expected = 0.0; // the same entry of e^{tA1} z
};

struct SupportSample {
  double t = 0.0;
  long support_lo = 0;
  long required_lo = 0; // the cell containing 1 - t
  long zero_cells = 0;  // cells of the second component that are exactly zero
};

struct PositivitySample {
  std::string vector_name;
  std::optional<double> onset; // first lattice time after the last negative sample
  double last_negative_t = 0.0;
  double min_after_onset = 0.0;
};

struct CoupledGammaReport {
  CoupledGammaConfig config;
  long cells = 0;
  int series_levels = 0;
  double max_tail = 0.0;

  CouplingPremise premise;
  bool claim1 = false;

  double max_first_component_deviation = 0.0; // over t < 2 and all test vectors
  double series_tolerance = 0.0;
  double max_v2_first_before_2 = 0.0;
  NegativityWitness small_time_witness;
  std::optional<NegativityWitness> lattice_witness;
  bool claim2 = false;

  std::vector<SupportSample> support;
  bool claim3 = false;

  std::vector<PositivitySample> positivity;
  bool claim4 = false;

  std::optional<CouplingIrreducibilityReport> coupling;
  std::string coupling_error;
  bool spread_ok = false;

  bool must_pass() const { return claim1 && claim2 && claim3; }
};

namespace detail {

inline std::vector<std::pair<std::string, Vector>> coupled_test_vectors()
{
  return {{"e1", unit_vector(3, 0)},
          {"e2", unit_vector(3, 1)},
          {"e3", unit_vector(3, 2)},
          {"ones", Vector::Ones(3)},
          {"(0.2,1,0.5)", (Vector(3) << 0.2, 1.0, 0.5).finished()}};
}

} // namespace detail

/// Claims: (1) the two premise families are positive; (2) for t < 2 the first component of e^{tC}(z, 0) is
/// e^{tA1} z, and it has a negative entry for z = e2 at small t; (3) the second component is supported in
/// [1 - t, x_max), so no orbit point is quasi-interior; (4) sampled orbits of positive vectors become positive.
inline CoupledGammaReport coupled_gamma_example(const CoupledGammaConfig &cfg = {})
{
  CoupledGammaReport r;
  r.config = cfg;
  const CoupledGammaModel model(cfg.h, cfg.half_width);
  const GridSpec &spec = model.spec();
  r.cells = spec.count;
  const long steps = spec.steps(cfg.t_max);
  const long before_two = spec.steps(2.0); // q < before_two means t < 2

  // (1)
  const CoupledSystem sys = model.system();
  r.premise = coupling_premise(sys, cfg.tol);
  r.claim1 = r.premise.holds();

  // (2) and (3) from the same series runs
  const GrowthEnvelope env = model.envelope();
  r.series_tolerance = 0.0;
  r.claim2 = true;
  r.claim3 = true;
  for (const auto &[name, z] : detail::coupled_test_vectors()) {
    const auto levels = model.series({z, GridFunction::zero(spec)}, steps, cfg.max_terms);
    r.series_levels = std::max(r.series_levels, static_cast<int>(levels.size()));
    const bool vanished = levels.size() <= static_cast<std::size_t>(cfg.max_terms);
    for (long q = 1; q <= steps; ++q) {
      const double t = q * spec.h;
      const auto s = CoupledGammaModel::sum_at(levels, static_cast<std::size_t>(q));
      const double tail = vanished ? 0.0 : dyson_phillips_tail(env, 1.0, t, static_cast<int>(levels.size()) - 1);
      r.max_tail = std::max(r.max_tail, tail);
      if (q < before_two) {
        const Vector direct = expm(model.a1(), t) * z;
        const double dev = (s.z - direct).cwiseAbs().maxCoeff();
        r.max_first_component_deviation = std::max(r.max_first_component_deviation, dev);
        r.series_tolerance = std::max(r.series_tolerance, tail);
        if (dev > tail)
          r.claim2 = false;
        if (levels.size() > 2)
          r.max_v2_first_before_2 =
              std::max(r.max_v2_first_before_2, levels[2][static_cast<std::size_t>(q)].z.cwiseAbs().maxCoeff());
        if (name == "e2" && !r.lattice_witness && s.z(0) < 0.0)
          r.lattice_witness = NegativityWitness{t, spec.h, 0, s.z(0), direct(0)};
      }
      const long required = spec.cell_of(1.0 - t);
      long zeros = 0;
      for (long i = 0; i < spec.count; ++i)
        zeros += s.f.samples()(i) == 0.0 ? 1 : 0;
      if (!s.f.support_sound() || s.f.support_lo() < required || zeros == 0)
        r.claim3 = false;
      if (name == "e3")
        r.support.push_back({t, s.f.support_lo(), required, zeros});
    }
  }

  // Small-time witness on a finer grid (t must be a lattice time).
  {
    const CoupledGammaModel fine(cfg.witness_h, cfg.witness_half_width);
    const long q = fine.spec().steps(cfg.witness_t);
    const Vector z = unit_vector(3, 1);
    const auto levels = fine.series({z, GridFunction::zero(fine.spec())}, q, cfg.max_terms);
    const auto s = CoupledGammaModel::sum_at(levels, static_cast<std::size_t>(q));
    const Vector direct = expm(fine.a1(), cfg.witness_t) * z;
    r.small_time_witness = NegativityWitness{cfg.witness_t, cfg.witness_h, 0, s.z(0), direct(0)};
    if (!(s.z(0) < -1e-6) || std::abs(s.z(0) - direct(0)) > 1e-12)
      r.claim2 = false;
  }

  // (4) positive test vectors in E1 x E2
  {
    std::vector<std::pair<std::string, ProductState>> xs{
        {"(ones, 0)", {Vector::Ones(3), GridFunction::zero(spec)}},
        {"(e1, 0)", {unit_vector(3, 0), GridFunction::zero(spec)}},
        {"(0, 1_[-3,-2])", {Vector::Zero(3), GridFunction::indicator(spec, -3.0, -2.0)}},
        {"(ones, ones)", {Vector::Ones(3), GridFunction::indicator(spec, spec.x_min, spec.x_max())}}};
    r.claim4 = true;
    for (const auto &[name, x] : xs) {
      const auto levels = model.series(x, steps, cfg.max_terms);
      PositivitySample ps;
      ps.vector_name = name;
      long last_negative = -1;
      std::vector<double> mins(static_cast<std::size_t>(steps) + 1);
      for (long q = 0; q <= steps; ++q) {
        const auto s = CoupledGammaModel::sum_at(levels, static_cast<std::size_t>(q));
        const double scale = std::max(1.0, std::max(s.z.cwiseAbs().maxCoeff(), s.f.samples().cwiseAbs().maxCoeff()));
        const double mn = std::min(s.z.minCoeff(), s.f.samples().minCoeff());
        mins[static_cast<std::size_t>(q)] = mn;
        if (mn < -cfg.tol * scale)
          last_negative = q;
      }
      ps.last_negative_t = last_negative < 0 ? 0.0 : last_negative * spec.h;
      if (last_negative < steps - steps / 4) {
        ps.onset = (last_negative + 1) * spec.h;
        ps.min_after_onset = *std::min_element(mins.begin() + (last_negative + 1), mins.end());
      } else {
        r.claim4 = false;
      }
      r.positivity.push_back(ps);
    }
  }

  // Irreducibility evidence: strict positivity spread of the grid component, and the mixed-ideal witnesses.
  {
    Vector v = Vector::Zero(spec.count);
    v(spec.cell_of(-0.5)) = 1.0;
    const auto f = GridFunction::from_samples(spec, v);
    r.spread_ok = true;
    for (long q = 1; q <= steps; ++q) {
      const auto g = gamma_shift_apply(f, q * spec.h);
      for (long i = spec.cell_of(-q * spec.h); i + q < spec.count; ++i)
        if (!(g.samples()(i) > 0.0))
          r.spread_ok = false;
    }
    try {
      r.coupling = coupling_irreducibility_check(sys, TimeGrid::multiples(spec.h, 0, steps), cfg.tol, false);
    } catch (const Error &e) {
      r.coupling_error = e.what();
    }
  }
  return r;
}

} // namespace evpos

#endif // EVPOS_COUPLED_GAMMA_HPP
