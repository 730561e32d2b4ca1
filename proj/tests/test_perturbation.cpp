#include <gtest/gtest.h>

#include <random>

#include "evpos/expm.hpp"
#include "evpos/irreducibility.hpp"
#include "evpos/models.hpp"
#include "evpos/perturbation.hpp"
#include "evpos/positivity.hpp"

using namespace evpos;

namespace {

Matrix a52() { return models::third_row_positive_generator(); }

Matrix random_matrix(std::mt19937 &rng, Eigen::Index n, double norm)
{
  std::normal_distribution<double> nd;
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = nd(rng);
  return m * (norm / operator_norm2(m));
}

/// A matrix semigroup that may only be evaluated on multiples of h.
class QuantizedMatrixSemigroup final : public SemigroupProvider {
public:
  QuantizedMatrixSemigroup(Matrix a, double h) : inner_(std::move(a)), h_(h) {}
  Eigen::Index dim() const override { return inner_.dim(); }
  Matrix evaluate(double t) const override
  {
    if (!admits(t))
      throw ShiftNotOnGrid("off lattice");
    return inner_.evaluate(t);
  }
  GrowthEnvelope envelope() const override { return inner_.envelope(); }
  CarrierKind carrier() const override { return CarrierKind::Matrix; }
  std::string describe() const override { return "quantized matrix semigroup"; }
  std::optional<double> time_quantum() const override { return h_; }

private:
  MatrixSemigroup inner_;
  double h_;
};

} // namespace

TEST(Quadrature, GaussLegendreExactness)
{
  for (int order : {1, 2, 5, 8, 12}) {
    const auto r = gauss_legendre_unit(order);
    for (int deg = 0; deg < 2 * order; ++deg) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i)
        s += r.weights[i] * std::pow(r.nodes[i], deg);
      EXPECT_NEAR(s, 1.0 / (deg + 1), 1e-14) << order << " " << deg;
    }
    EXPECT_TRUE(std::is_sorted(r.nodes.begin(), r.nodes.end()));
  }
  const auto two = gauss_legendre_unit(2);
  EXPECT_NEAR(two.nodes[0], 0.5 - 0.5 / std::sqrt(3.0), 1e-15);
  EXPECT_THROW(gauss_legendre_unit(0), PreconditionError);
}

TEST(Quadrature, LagrangeWeightsReproducePolynomials)
{
  const std::vector<double> xs{0.0, 0.2, 0.5, 0.9};
  const auto w = lagrange_weights(xs, {0.1, 0.7, 1.3});
  for (std::size_t j = 0; j < 3; ++j) {
    const double y = std::vector<double>{0.1, 0.7, 1.3}[j];
    double s = 0.0;
    for (std::size_t l = 0; l < xs.size(); ++l)
      s += w[j][l] * (xs[l] * xs[l] * xs[l] - 2.0 * xs[l]);
    EXPECT_NEAR(s, y * y * y - 2.0 * y, 1e-13);
  }
}

TEST(DysonPhillips, TailBoundClosedForm)
{
  // M = 1, omega = 0: the tail is e^x - sum_{k <= N} x^k / k!.
  const GrowthEnvelope env{1.0, 0.0};
  for (double x : {0.3, 1.0, 2.5}) {
    double partial = 0.0, term = 1.0;
    for (int k = 0; k <= 6; ++k) {
      partial += term;
      term *= x / (k + 1);
    }
    EXPECT_NEAR(dyson_phillips_tail(env, 1.0, x, 6), std::exp(x) - partial, 1e-13 * std::exp(x));
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int n = 1; n < 30; ++n) {
    const double t = dyson_phillips_tail({1.3, 0.7}, 2.0, 1.5, n);
    EXPECT_LT(t, prev);
    prev = t;
  }
  EXPECT_EQ(dyson_phillips_tail(env, 0.0, 1.0, 3), 0.0);
}

TEST(DysonPhillips, ZeroPerturbation)
{
  const MatrixSemigroup p(a52());
  const auto r = dyson_phillips_terms(p, Matrix::Zero(3, 3), 1.0);
  EXPECT_TRUE(r.level_vanished);
  ASSERT_GE(r.terms.size(), 2u);
  for (std::size_t n = 1; n < r.terms.size(); ++n)
    EXPECT_EQ(max_abs(r.terms[n]), 0.0);
  EXPECT_LT(max_abs(r.sum - expm(a52(), 1.0)), 1e-12 * max_abs(r.sum));
}

TEST(DysonPhillips, FirstTermConstantIntegrand)
{
  const MatrixSemigroup p(Matrix::Zero(3, 3));
  const Matrix b = models::third_diagonal_perturbation(2.0) + Matrix::Constant(3, 3, 0.25);
  for (double t : {0.3, 1.0, 2.0}) {
    DysonPhillipsConfig cfg;
    cfg.max_terms = 1;
    cfg.max_terms_cap = 1;
    const auto r = dyson_phillips_terms(p, b, t, cfg);
    EXPECT_LT(max_abs(r.terms[1] - t * b), 1e-10);
  }
}

TEST(DysonPhillips, ExampleMatchesExpm)
{
  const MatrixSemigroup p(a52());
  const Matrix b = models::third_diagonal_perturbation(1.0);
  for (double t : {0.5, 1.0, 2.0}) {
    const auto r = dyson_phillips_terms(p, b, t);
    const double err = operator_norm2(r.sum - expm(a52() + b, t));
    EXPECT_LE(err, r.tail_bound + r.quadrature_error) << "t = " << t;
    EXPECT_LT(err / operator_norm2(r.sum), 1e-11);
  }
}

TEST(DysonPhillipsProperty, SeriesConsistency)
{
  std::mt19937 rng(401);
  std::uniform_int_distribution<int> nd(1, 10);
  std::uniform_real_distribution<double> norm(0.2, 5.0);
  std::uniform_real_distribution<double> td(0.1, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = nd(rng);
    const Matrix a = random_matrix(rng, n, norm(rng));
    const Matrix b = random_matrix(rng, n, norm(rng));
    const double t = td(rng);
    const MatrixSemigroup p(a);
    const auto r = dyson_phillips_terms(p, b, t);
    const double err = operator_norm2(r.sum - expm(a + b, t));
    EXPECT_LE(err, r.tail_bound + 10.0 * r.quadrature_error + 1e-14 * operator_norm2(r.sum))
        << "trial " << trial << " n " << n << " tail " << r.tail_bound << " quad " << r.quadrature_error;
  }
}

TEST(DysonPhillipsProperty, TermPositivityUnderPremise)
{
  const MatrixSemigroup p(a52());
  for (double bv : {0.5, 1.0, 5.0}) {
    const Matrix b = models::third_diagonal_perturbation(bv);
    ASSERT_TRUE(premise_check(p, b, p).holds);
    for (double t : {0.1, 0.7, 1.5}) {
      const auto r = dyson_phillips_terms(p, b, t);
      const double slack = 10.0 * r.quadrature_error + 1e-12 * max_abs(r.sum);
      for (std::size_t n = 1; n < r.terms.size(); ++n)
        EXPECT_GE(min_entry(r.terms[n]).value, -slack) << "b " << bv << " t " << t << " n " << n;
    }
  }
}

TEST(DysonPhillips, LatticeTrapezoidConvergesAndEstimates)
{
  std::mt19937 rng(409);
  const Matrix a = random_matrix(rng, 4, 1.0);
  const Matrix b = random_matrix(rng, 4, 1.0);
  const Matrix exact = expm(a + b, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const QuantizedMatrixSemigroup p(a, h);
    const auto r = dyson_phillips_terms(p, b, 1.0);
    EXPECT_EQ(r.rule, "lattice-trapezoid");
    const double err = operator_norm2(r.sum - exact);
    EXPECT_LT(err, prev / 3.0);
    ASSERT_TRUE(r.quadrature_error_available);
    EXPECT_LT(err, 3.0 * r.quadrature_error + r.tail_bound);
    EXPECT_GT(err, r.quadrature_error / 3.0);
    prev = err;
  }
  const QuantizedMatrixSemigroup p(a, 0.25);
  EXPECT_THROW(dyson_phillips_terms(p, b, 0.3), ShiftNotOnGrid);
}

TEST(DysonPhillips, LatticeOrbitMatchesOperatorSeries)
{
  std::mt19937 rng(419);
  const Matrix a = random_matrix(rng, 3, 1.0);
  const Matrix b = random_matrix(rng, 3, 1.0);
  const QuantizedMatrixSemigroup p(a, 0.125);
  const Vector x = Vector::LinSpaced(3, 1.0, 2.0);
  const auto orb = dyson_phillips_lattice_orbit(p, b, x, 8, 20);
  DysonPhillipsConfig cfg;
  cfg.max_terms = 20;
  const auto op = dyson_phillips_terms(p, b, 1.0, cfg);
  EXPECT_LT((orb.sum_at(8) - op.sum * x).norm(), 1e-12);
}

TEST(DysonPhillips, BudgetAndPreconditions)
{
  const MatrixSemigroup p(a52());
  DysonPhillipsConfig cfg;
  cfg.budget = 10;
  EXPECT_THROW(dyson_phillips_terms(p, Matrix::Identity(3, 3), 1.0, cfg), QuadratureBudgetExceeded);
  EXPECT_THROW(dyson_phillips_terms(p, Matrix::Identity(2, 2), 1.0), PreconditionError);
  EXPECT_THROW(dyson_phillips_terms(p, Matrix::Identity(3, 3), -1.0), PreconditionError);
  const auto r0 = dyson_phillips_terms(p, Matrix::Identity(3, 3), 0.0);
  EXPECT_EQ(r0.sum, Matrix(Matrix::Identity(3, 3)));
}

TEST(Domination, ExampleThirdDiagonal)
{
  const MatrixSemigroup p(a52());
  for (double bv : {0.0, 1.0, 5.0}) {
    const auto r = domination_check(p, models::third_diagonal_perturbation(bv), TimeGrid::default_grid());
    EXPECT_TRUE(r.premise.holds);
    EXPECT_TRUE(r.conclusion_holds);
    EXPECT_GE(r.conclusion_min, -1e-9) << "b = " << bv;
    EXPECT_EQ(r.premise.samples, 33u * 33u);
  }
}

TEST(Domination, NilpotentPerturbationOfZero)
{
  const MatrixSemigroup p(Matrix::Zero(2, 2));
  Matrix b(2, 2);
  b << 0, 1, 0, 0;
  const auto r = domination_check(p, b, TimeGrid::default_grid());
  EXPECT_TRUE(r.conclusion_holds);
  EXPECT_NEAR(r.conclusion_min, 0.0, 1e-15);
}

TEST(Domination, FirstDiagonalViolatesPremise)
{
  const MatrixSemigroup p(a52());
  Matrix b = Matrix::Zero(3, 3);
  b(0, 0) = 1.0;
  EXPECT_THROW(domination_check(p, b, TimeGrid::default_grid()), PremiseViolation);
  const auto r = domination_survey(p, b, TimeGrid::default_grid());
  ASSERT_FALSE(r.premise.holds);
  const auto &w = *r.premise.witness;
  const Matrix direct = expm(a52(), w.t) * b * expm(a52(), w.s);
  EXPECT_DOUBLE_EQ(direct(w.row, w.col), w.value);
  EXPECT_LT(w.value, 0.0);
  // Small times already show the violation.
  const Matrix small = expm(a52(), 0.01) * b * expm(a52(), 0.01);
  EXPECT_LT(min_entry(small).value, 0.0);
}

TEST(DominationProperty, MonotoneInB)
{
  const auto grid = TimeGrid::log_spaced(1e-3, 5.0, 40, true);
  const std::vector<double> bs{0.0, 0.5, 1.0, 2.0, 5.0};
  for (std::size_t i = 0; i < bs.size(); ++i)
    for (std::size_t j = i + 1; j < bs.size(); ++j) {
      const MatrixSemigroup base(a52() + models::third_diagonal_perturbation(bs[i]));
      const Matrix db = models::third_diagonal_perturbation(bs[j] - bs[i]);
      const auto r = domination_survey(base, db, grid);
      ASSERT_TRUE(r.premise.holds) << bs[i] << " -> " << bs[j];
      EXPECT_TRUE(r.conclusion_holds);
      for (double t : grid.points()) {
        const Matrix hi = expm(a52() + models::third_diagonal_perturbation(bs[j]), t);
        const Matrix lo = expm(a52() + models::third_diagonal_perturbation(bs[i]), t);
        EXPECT_GE(min_entry(hi - lo).value, -1e-9 * std::max(1.0, max_abs(hi)));
      }
    }
}

TEST(Domination, LatticeProviderUsesSeries)
{
  Matrix a(2, 2);
  a << -1, 0.5, 0.5, -1;
  Matrix b(2, 2);
  b << 0, 0.3, 0.2, 0;
  const QuantizedMatrixSemigroup p(a, 0.125);
  const auto r = domination_survey(p, b, TimeGrid::uniform(0.0, 2.0, 17));
  EXPECT_EQ(r.method, "dyson-phillips-lattice");
  EXPECT_TRUE(r.premise.holds);
  EXPECT_TRUE(r.conclusion_holds);
  EXPECT_GE(r.conclusion_min, 0.0);
}

TEST(InvarianceTransfer, BlockTriangular)
{
  // span{e0, e1} is invariant under A and under B, hence under A + B.
  Matrix a(3, 3);
  a << -2, 1, 0.5, 0.7, -1, 0.2, 0, 0, -3;
  Matrix b(3, 3);
  b << 0, 0.4, 0.1, 0.3, 0, 0.6, 0, 0, 0;
  const IdealMask s = IdealMask::from_indices(3, {0, 1});
  const auto ideals = enumerate_invariant_ideals_brute_force(a + b);
  EXPECT_NE(std::find(ideals.begin(), ideals.end(), s), ideals.end());
  const MatrixSemigroup p(a);
  const auto r = invariance_transfer_check(p, b, s, TimeGrid::default_grid());
  EXPECT_TRUE(r.transfers);
  EXPECT_EQ(*r.unperturbed_onset, 0.0);
  EXPECT_EQ(*r.family_onset, 0.0);
}

TEST(InvarianceTransfer, TrivialCases)
{
  const MatrixSemigroup p(a52());
  EXPECT_TRUE(invariance_transfer_check(p, Matrix::Zero(3, 3), IdealMask::full(3), TimeGrid::default_grid()).transfers);
  EXPECT_TRUE(invariance_transfer_check(p, models::third_diagonal_perturbation(2.0), IdealMask::full(3),
                                        TimeGrid::default_grid())
                  .transfers);
  Matrix d(2, 2);
  d << -1, 0, 0.5, -2;
  const MatrixSemigroup q(d);
  const IdealMask s = IdealMask::from_indices(2, {1});
  EXPECT_TRUE(invariance_transfer_check(q, Matrix::Zero(2, 2), s, TimeGrid::default_grid()).transfers);
}

TEST(InvarianceTransfer, PremiseFailures)
{
  const MatrixSemigroup p(a52());
  Matrix b = Matrix::Zero(3, 3);
  b(0, 0) = 1.0;
  EXPECT_THROW(invariance_transfer_check(p, b, IdealMask::full(3), TimeGrid::default_grid()), PremiseViolation);
  // {2} is not invariant under the perturbed semigroup at all.
  EXPECT_THROW(invariance_transfer_check(p, models::third_diagonal_perturbation(1.0), IdealMask::from_indices(3, {2}),
                                         TimeGrid::default_grid()),
               PremiseViolation);
}

TEST(Coupling, ZeroCouplingIsDirectSum)
{
  Matrix a2(2, 2);
  a2 << -1, 2, 0.5, -3;
  CoupledSystem sys{make_matrix_semigroup(a52()), make_matrix_semigroup(a2), Matrix::Zero(3, 2), Matrix::Zero(2, 3),
                    std::nullopt, std::nullopt};
  const auto r = couple(sys, 0.8);
  Matrix expected = Matrix::Zero(5, 5);
  expected.topLeftCorner(3, 3) = expm(a52(), 0.8);
  expected.bottomRightCorner(2, 2) = expm(a2, 0.8);
  EXPECT_LT(max_abs(r.value - expected), 1e-12 * max_abs(expected));
  EXPECT_TRUE(r.series.level_vanished);
}

TEST(Coupling, MatrixCarriersMatchBlockExpm)
{
  std::mt19937 rng(431);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a1 = random_matrix(rng, 3, 1.0), a2 = random_matrix(rng, 2, 1.0);
    CoupledSystem sys{make_matrix_semigroup(a1), make_matrix_semigroup(a2), random_matrix(rng, 3, 0.0) * 0.0,
                      Matrix::Zero(2, 3), std::nullopt, std::nullopt};
    std::normal_distribution<double> nd;
    sys.b12 = Matrix::NullaryExpr(3, 2, [&]() { return nd(rng); });
    sys.b21 = Matrix::NullaryExpr(2, 3, [&]() { return nd(rng); });
    const auto r = couple(sys, 1.2);
    ASSERT_TRUE(r.expm_difference.has_value());
    const Matrix c = *sys.assembled_generator();
    EXPECT_LE(operator_norm2(r.value - expm(c, 1.2)), r.series.tail_bound + 10.0 * r.series.quadrature_error + 1e-12);
    EXPECT_DOUBLE_EQ(*r.expm_difference, operator_norm2(r.value - expm(c, 1.2)));
  }
}

TEST(Coupling, PremiseWarning)
{
  Matrix b12 = Matrix::Zero(3, 3);
  b12(0, 0) = 1.0;
  CoupledSystem sys{make_matrix_semigroup(a52()), make_matrix_semigroup(a52()), b12, b12, std::nullopt, std::nullopt};
  const auto r = couple(sys, 0.5);
  EXPECT_FALSE(r.premise.holds());
  EXPECT_EQ(r.warnings.size(), 2u);
}

TEST(Coupling, FactorizationValidation)
{
  const Matrix ones = Matrix::Ones(3, 1);
  CouplingFactorization f{ones, Matrix::Constant(1, 1, 2.0), ones.transpose(), ones, Matrix::Constant(1, 1, 0.5),
                          ones.transpose()};
  CoupledSystem sys{make_matrix_semigroup(a52()), make_matrix_semigroup(a52()), 2.0 * Matrix::Ones(3, 3),
                    0.5 * Matrix::Ones(3, 3), f, std::nullopt};
  EXPECT_NO_THROW(sys.validate());
  sys.b12(0, 0) += 1e-6;
  EXPECT_THROW(sys.validate(), PreconditionError);
  sys.factorization.reset();
  sys.b21 = Matrix::Ones(2, 3);
  EXPECT_THROW(sys.validate(), PreconditionError);
}

TEST(Coupling, TwoExamplesRankOne)
{
  CoupledSystem sys{make_matrix_semigroup(a52()), make_matrix_semigroup(a52()), 0.5 * Matrix::Ones(3, 3),
                    0.5 * Matrix::Ones(3, 3), std::nullopt, std::nullopt};
  EXPECT_TRUE(coupling_premise(sys).holds());
  const auto grid = TimeGrid::log_spaced(1e-3, 10.0, 64, true);
  const auto r = coupling_irreducibility_check(sys, grid);
  EXPECT_TRUE(r.persistently_irreducible);
  EXPECT_TRUE(r.subsystems_verified);
  EXPECT_EQ(r.excludes_first.size(), 7u);
  EXPECT_EQ(r.excludes_second.size(), 7u);
  // SCC oracle on the assembled 6 x 6 sign pattern.
  const Matrix c = *sys.assembled_generator();
  EXPECT_TRUE(strongly_connected(sign_pattern_digraph(c)));
  EXPECT_EQ(classify(MatrixSemigroup(c), grid).classification, IrreducibilityClass::PersistentlyIrreducible);

  sys.b21.setZero();
  EXPECT_THROW(coupling_irreducibility_check(sys, grid), PreconditionError);
}

TEST(CouplingProperty, PreservesEventualPositivity)
{
  std::mt19937 rng(433);
  std::uniform_real_distribution<double> ud(0.05, 3.0);
  const auto grid = TimeGrid::log_spaced(1e-3, 20.0, 128, true);
  for (int trial = 0; trial < 8; ++trial) {
    Matrix a2 = Matrix::Constant(2, 2, ud(rng));
    a2.diagonal() = -Vector::Constant(2, ud(rng));
    CoupledSystem sys{make_matrix_semigroup(a52()), make_matrix_semigroup(a2), ud(rng) * Matrix::Ones(3, 2),
                      Matrix::Zero(2, 3), std::nullopt, std::nullopt};
    sys.b21.col(2).setConstant(ud(rng));
    ASSERT_TRUE(is_eventually_positive(classify_on_grid(*sys.p1, grid).cls));
    ASSERT_TRUE(is_eventually_positive(classify_on_grid(*sys.p2, grid).cls));
    ASSERT_TRUE(coupling_premise(sys).holds()) << trial;
    const MatrixSemigroup coupled(*sys.assembled_generator());
    EXPECT_TRUE(is_eventually_positive(classify_on_grid(coupled, grid).cls)) << trial;
  }
}
