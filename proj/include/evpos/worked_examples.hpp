#ifndef EVPOS_WORKED_EXAMPLES_HPP
#define EVPOS_WORKED_EXAMPLES_HPP

// Scripted verification suites for the three reference models. Each claim carries its witness data.

#include <random>
#include <string>
#include <vector>

#include "evpos/coupled_gamma.hpp"
#include "evpos/rational_step.hpp"
#include "evpos/report.hpp"

namespace evpos {

struct Claim {
  std::string id;
  std::string statement;
  bool must_pass = true;
  bool passed = false;
  Json witness;
};

struct ExampleRun {
  std::string name;
  Json config;
  std::vector<Claim> claims;

  bool ok() const
  {
    for (const auto &c : claims)
      if (c.must_pass && !c.passed)
        return false;
    return true;
  }
  const Claim *find(const std::string &id) const
  {
    for (const auto &c : claims)
      if (c.id == id)
        return &c;
    return nullptr;
  }
};

inline void to_json(Json &j, const Claim &c)
{
  j = Json{{"id", c.id}, {"statement", c.statement}, {"must_pass", c.must_pass}, {"passed", c.passed},
           {"witness", c.witness}};
}

inline void to_json(Json &j, const ExampleRun &r)
{
  j = Json{{"example", r.name}, {"config", r.config}, {"ok", r.ok()}, {"claims", r.claims}};
}

// ---------------------------------------------------------------------------------------------
// Rademacher functions under the left shift on [0, 1]

struct ShiftExampleConfig {
  int depth = 10;  // witness search depth
  int max_index = 4;
};

inline ExampleRun run_shift_example(const ShiftExampleConfig &cfg = {})
{
  if (cfg.depth < 1 || cfg.depth > 20 || cfg.max_index < 2 || cfg.max_index > 12)
    throw PreconditionError("shift example: need depth in [1, 20] and max_index in [2, 12]");
  ExampleRun run;
  run.name = "ex3_10";
  run.config = Json{{"depth", cfg.depth}, {"max_index", cfg.max_index}};
  const int kmax = cfg.max_index;

  {
    Claim c{"orthonormal", "<r_k, r_j> = delta_kj exactly", true, true, Json::array()};
    for (int k = 1; k <= kmax; ++k)
      for (int j = 1; j <= kmax; ++j) {
        const Rational p = inner_product(rademacher(k), rademacher(j));
        if (p != Rational(k == j ? 1 : 0)) {
          c.passed = false;
          c.witness.push_back(Json{{"k", k}, {"j", j}, {"value", to_string(p)}});
        }
      }
    run.claims.push_back(c);
  }
  {
    Claim c{"nilpotent", "<S_1 r_k, r_j> = 0 exactly and S_1 r_k = 0, so the semigroup is not persistently irreducible",
            true, true, Json::array()};
    for (int k = 1; k <= kmax; ++k) {
      const Rational vt = vanishing_time(rademacher(k));
      for (int j = 1; j <= kmax; ++j) {
        const Rational p = pairing(k, j, Rational(1));
        if (p != 0)
          c.passed = false;
      }
      if (vt > 1)
        c.passed = false;
      c.witness.push_back(Json{{"k", k}, {"vanishing_time", to_string(vt)}});
    }
    run.claims.push_back(c);
  }
  {
    Claim c{"irreducibility-witnesses",
            "for every k != j there is a dyadic t in (0, 1) with <S_t r_k, r_j> != 0", true, true, Json::array()};
    for (int k = 1; k <= kmax; ++k)
      for (int j = 1; j <= kmax; ++j) {
        if (k == j)
          continue;
        const auto w = irreducibility_witness_search(k, j, cfg.depth);
        Json e{{"k", k}, {"j", j}, {"scanned", w.scanned}};
        if (w.t) {
          e["t"] = to_string(*w.t);
          e["value"] = to_string(w.value);
          if (!(*w.t > 0 && *w.t < 1) || w.value == 0 || pairing(k, j, *w.t) != w.value)
            c.passed = false;
        } else {
          e["t"] = nullptr;
          c.passed = false;
        }
        c.witness.push_back(e);
      }
    run.claims.push_back(c);
  }
  {
    // Whether the weak condition at arbitrary times holds here is open; only evidence is recorded.
    Claim c{"diagonal-pairings", "<S_t r_k, r_k> on the dyadic grid of the search depth (evidence only)", false, true,
            Json::array()};
    for (int k = 1; k <= kmax; ++k) {
      int nonzero = 0;
      const int d = std::min(cfg.depth, 8);
      for (std::int64_t m = 1; m < (std::int64_t{1} << d); ++m)
        nonzero += pairing(k, k, dyadic(m, d)) != 0 ? 1 : 0;
      c.witness.push_back(Json{{"k", k}, {"grid_depth", d}, {"nonzero_samples", nonzero}});
    }
    run.claims.push_back(c);
  }
  return run;
}

// ---------------------------------------------------------------------------------------------
// The 3x3 matrix with positive third row and column

struct MatrixExampleConfig {
  double tol = kDefaultPositivityTol;
  std::size_t grid_points = 256;
  double t_max = 20.0;
  std::optional<int> dp_terms;
  unsigned seed = 20240611u;
};

inline ExampleRun run_matrix_example(const MatrixExampleConfig &cfg = {})
{
  ExampleRun run;
  run.name = "ex5_2";
  run.config = Json{{"tol", jio::num(cfg.tol)},
                    {"grid_points", cfg.grid_points},
                    {"t_max", jio::num(cfg.t_max)},
                    {"dp_terms", cfg.dp_terms ? Json(*cfg.dp_terms) : Json(nullptr)},
                    {"seed", cfg.seed}};
  const Matrix a = models::third_row_positive_generator();
  const MatrixSemigroup sg(a);
  const TimeGrid grid = TimeGrid::log_spaced(1e-3, cfg.t_max, cfg.grid_points, true);

  {
    Claim c{"power-formula", "A^n matches the closed form in 8^n/2 and 9^n/3 to relative 1e-12, n = 1..6", true, true,
            Json::array()};
    for (int n = 1; n <= 6; ++n) {
      const auto chk = matrix_power_formula_check(n);
      c.passed = c.passed && chk.max_rel_error <= 1e-12;
      c.witness.push_back(Json{{"n", n}, {"max_rel_error", jio::num(chk.max_rel_error)}});
    }
    run.claims.push_back(c);
  }
  {
    Claim c{"eigenpairs", "A u_i = lambda_i u_i for lambda = 0, 8, 9, residual <= 1e-12", true, true, Json::array()};
    const Matrix u = models::third_row_positive_eigenvectors();
    const Vector d = models::third_row_positive_eigenvalues();
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double res = (a * u.col(i) - d(i) * u.col(i)).norm();
      c.passed = c.passed && res <= 1e-12;
      c.witness.push_back(Json{{"lambda", jio::num(d(i))}, {"residual", jio::num(res)}});
    }
    run.claims.push_back(c);
  }
  {
    Claim c{"third-row-column", "the third row and column of e^{tA} are >= -1e-10 on the grid", true, true, Json()};
    double mn = std::numeric_limits<double>::infinity(), at = 0.0;
    for (double t : grid.points()) {
      if (t == 0.0)
        continue;
      const Matrix e = expm(a, t);
      const double m = std::min(e.row(2).minCoeff(), e.col(2).minCoeff());
      if (m < mn) {
        mn = m;
        at = t;
      }
    }
    c.passed = mn >= -1e-10;
    c.witness = Json{{"min", jio::num(mn)}, {"t", jio::num(at)}, {"samples", grid.size() - 1}};
    run.claims.push_back(c);
  }
  {
    const double t = 0.01;
    const double v = expm(a, t)(0, 1);
    Claim c{"not-positive", "e^{tA} has a negative entry for small t", true, v < 0.0,
            Json{{"t", jio::num(t)}, {"row", 0}, {"col", 1}, {"value", jio::num(v)}}};
    run.claims.push_back(c);
  }
  PositivityVerdict verdict;
  {
    SpectralCertificate cert;
    std::tie(cert, verdict) = certify_eventual_strong_positivity(a, grid, cfg.tol);
    Claim c{"certificate", "certified onset t0; e^{tA} > 0 at 50 random t >= t0; ||e^{-9t}e^{tA} - J/3|| <= 1e-6 at t = 20",
            true, false, Json()};
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(0.0, 20.0);
    double worst = std::numeric_limits<double>::infinity(), worst_t = 0.0;
    if (verdict.certified && verdict.strong_onset_t0) {
      for (int i = 0; i < 50; ++i) {
        const double t = *verdict.strong_onset_t0 + dist(rng);
        const double m = expm(a, t).minCoeff();
        if (m < worst) {
          worst = m;
          worst_t = t;
        }
      }
    }
    const Matrix j3 = Matrix::Constant(3, 3, 1.0 / 3.0);
    const double dist20 = (std::exp(-9.0 * 20.0) * expm(a, 20.0) - j3).cwiseAbs().maxCoeff();
    c.passed = verdict.certified && verdict.cls == VerdictClass::UniformlyEventuallyStronglyPositive && worst > 0.0 &&
               dist20 <= 1e-6;
    c.witness = Json{{"class", to_string(verdict.cls)},
                     {"t0", jio::opt_num(verdict.strong_onset_t0)},
                     {"min_entry_after_t0", jio::num(worst)},
                     {"at", jio::num(worst_t)},
                     {"rescaled_distance_t20", jio::num(dist20)}};
    run.claims.push_back(c);
  }
  {
    const auto irr = classify(sg, grid, cfg.tol);
    Claim c{"persistently-irreducible", "no non-trivial ideal is eventually invariant", true,
            irr.classification == IrreducibilityClass::PersistentlyIrreducible && irr.diagram_consistent,
            Json{{"classification", to_string(irr.classification)}, {"method", irr.method}}};
    run.claims.push_back(c);
  }
  {
    const auto p = dominant_projection(a, true);
    const double err = (p.projection - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff();
    Claim c{"dominant-projection", "P = u phi^T = J/3 with strictly positive u, phi", true,
            p.accepted() && err <= 1e-10 && p.u_strictly_positive && p.phi_strictly_positive,
            Json{{"lambda", jio::num(p.lambda)},
                 {"distance_to_J3", jio::num(err)},
                 {"residual_idempotent", jio::num(p.residual_idempotent)},
                 {"residual_eigen", jio::num(p.residual_eigen)}}};
    run.claims.push_back(c);
    const Vector u3 = Vector::Constant(3, 1.0 / std::sqrt(3.0));
    const auto s = algebraic_simplicity_test(a, 9.0, u3, u3);
    run.claims.push_back({"algebraic-simplicity", "9 is an algebraically simple eigenvalue", true,
                          s.algebraically_simple && s.cross_check_agrees,
                          Json{{"pairing", jio::num(s.pairing)}, {"rank", s.rank_first}}});
  }
  {
    const auto p = mean_ergodic_projection(a - 9.0 * Matrix::Identity(3, 3));
    const double err = (p.projection - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff();
    bool rate = !p.horizons.empty();
    for (std::size_t i = 0; i < p.horizons.size(); ++i)
      rate = rate && p.distances[i] <= 10.0 / p.horizons[i];
    run.claims.push_back({"mean-ergodic", "Cesaro means of e^{t(A - 9)} converge to J/3 with ||C_T - P|| <= 10/T",
                          true, err <= 1e-8 && rate,
                          Json{{"distance_to_J3", jio::num(err)}, {"decay_constant", jio::num(p.decay_constant)}}});
  }
  DysonPhillipsConfig dp;
  dp.max_terms = cfg.dp_terms;
  {
    Claim c{"domination", "B = diag(0,0,b) >= 0 premise holds and e^{t(A+B)} >= e^{tA}, b = 0, 1, 5", true, true,
            Json::array()};
    for (double b : {0.0, 1.0, 5.0}) {
      const auto d = domination_survey(sg, models::third_diagonal_perturbation(b), grid, dp, cfg.tol);
      const bool ok = d.premise.holds && d.conclusion_checked && d.conclusion_min >= -1e-9;
      c.passed = c.passed && ok;
      c.witness.push_back(Json{{"b", jio::num(b)},
                               {"premise_holds", d.premise.holds},
                               {"conclusion_min", jio::num(d.conclusion_min)},
                               {"t", jio::num(d.conclusion_t)},
                               {"method", d.method}});
    }
    run.claims.push_back(c);
  }
  {
    Claim c{"dyson-phillips", "the truncated series for B = diag(0,0,1) matches expm within tail + 1e-8 (relative)",
            true, true, Json::array()};
    const Matrix b = models::third_diagonal_perturbation(1.0);
    for (double t : {0.5, 1.0, 2.0}) {
      const auto s = dyson_phillips_terms(sg, b, t, dp);
      const Matrix e = expm(a + b, t);
      const double err = (s.sum - e).norm();
      const double allowed = s.tail_bound + s.quadrature_error + 1e-8 * std::max(1.0, e.norm());
      c.passed = c.passed && err <= allowed;
      c.witness.push_back(Json{{"t", jio::num(t)},
                               {"terms", s.n_terms},
                               {"difference", jio::num(err)},
                               {"allowed", jio::num(allowed)}});
    }
    run.claims.push_back(c);
  }
  return run;
}

// ---------------------------------------------------------------------------------------------
// The matrix coupled to the Gamma-shift grid

inline ExampleRun run_coupled_example(const CoupledGammaConfig &cfg = {})
{
  const CoupledGammaReport r = coupled_gamma_example(cfg);
  ExampleRun run;
  run.name = "ex5_6";
  run.config = Json{{"h", jio::num(cfg.h)},
                    {"L", jio::num(cfg.half_width)},
                    {"t_max", jio::num(cfg.t_max)},
                    {"witness_h", jio::num(cfg.witness_h)},
                    {"witness_L", jio::num(cfg.witness_half_width)},
                    {"tol", jio::num(cfg.tol)},
                    {"cells", r.cells},
                    {"series_levels", r.series_levels},
                    {"max_tail", jio::num(r.max_tail)}};
  {
    Json w{{"upper", detail::premise_json(r.premise.upper)}, {"lower", detail::premise_json(r.premise.lower)}};
    run.claims.push_back({"claim1-premise", "e^{tA1} B12 G(s) >= 0 and G(t) B21 e^{sA1} >= 0 on the sample grid",
                          true, r.claim1, w});
  }
  {
    Json w{{"max_first_component_deviation", jio::num(r.max_first_component_deviation)},
           {"series_tolerance", jio::num(r.series_tolerance)},
           {"max_second_order_first_component_before_2", jio::num(r.max_v2_first_before_2)},
           {"small_time_witness",
            {{"t", jio::num(r.small_time_witness.t)},
             {"h", jio::num(r.small_time_witness.h)},
             {"entry", r.small_time_witness.entry},
             {"value", jio::num(r.small_time_witness.value)},
             {"expm_value", jio::num(r.small_time_witness.expected)}}}};
    if (r.lattice_witness)
      w["lattice_witness"] = Json{{"t", jio::num(r.lattice_witness->t)}, {"value", jio::num(r.lattice_witness->value)}};
    run.claims.push_back({"claim2-first-component",
                          "for t < 2 the first component of e^{tC}(z, 0) is e^{tA1} z; negative for z = e2 at t = 0.01",
                          true, r.claim2, w});
  }
  {
    Json w = Json::array();
    for (const auto &s : r.support)
      w.push_back(Json{{"t", jio::num(s.t)},
                       {"support_lo", s.support_lo},
                       {"required_lo", s.required_lo},
                       {"zero_cells", s.zero_cells}});
    run.claims.push_back({"claim3-support", "the second component of e^{tC}(z, 0) vanishes below 1 - t (exact)", true,
                          r.claim3, w});
  }
  {
    Json w = Json::array();
    for (const auto &p : r.positivity)
      w.push_back(Json{{"vector", p.vector_name},
                       {"onset", jio::opt_num(p.onset)},
                       {"last_negative_t", jio::num(p.last_negative_t)},
                       {"min_after_onset", jio::num(p.min_after_onset)}});
    run.claims.push_back({"claim4-eventual-positivity",
                          "positive initial values have positive orbits from some sampled time on (grid-limited evidence)",
                          false, r.claim4, w});
  }
  {
    Json w{{"spread_ok", r.spread_ok}, {"error", r.coupling_error}};
    if (r.coupling) {
      auto list = [](const std::vector<CouplingWitness> &v) {
        Json a = Json::array();
        for (const auto &x : v)
          a.push_back(Json{{"t0", jio::num(x.t0)}, {"s", jio::num(x.s)}, {"norm", jio::num(x.norm)}});
        return a;
      };
      w["excludes_first"] = list(r.coupling->excludes_first);
      w["excludes_second"] = list(r.coupling->excludes_second);
    }
    run.claims.push_back({"mixed-ideals", "E1 x {0} and {0} x E2 are not eventually invariant (evidence)", false,
                          r.spread_ok && r.coupling.has_value(), w});
  }
  return run;
}

} // namespace evpos

#endif // EVPOS_WORKED_EXAMPLES_HPP
