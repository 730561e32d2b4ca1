#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "evpos/expm.hpp"
#include "evpos/models.hpp"
#include "evpos/semigroup.hpp"
#include "evpos/spectral.hpp"

using namespace evpos;

namespace {

Matrix random_matrix(std::mt19937 &rng, int n, double norm_cap)
{
  std::normal_distribution<double> nd;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a(i, j) = nd(rng);
  return a * (norm_cap / operator_norm2(a));
}

} // namespace

TEST(Expm, ZeroGeneratorGivesIdentity)
{
  for (double t : {0.0, 0.5, 7.0})
    EXPECT_EQ(expm(Matrix::Zero(3, 3), t), Matrix::Identity(3, 3));
}

TEST(Expm, ExampleMatrixEigenpairs)
{
  const Matrix a = models::third_row_positive_generator();
  const Matrix u = models::third_row_positive_eigenvectors();
  const Vector d = models::third_row_positive_eigenvalues();
  for (int k = 0; k < 3; ++k)
    EXPECT_LE((a * u.col(k) - d(k) * u.col(k)).norm(), 1e-12);
  EXPECT_LE((u.transpose() * u - Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(Expm, ExampleMatrixMatchesDiagonalization)
{
  const Matrix a = models::third_row_positive_generator();
  for (double t : {1e-3, 0.01, 0.3, 1.0, 2.5, 5.0}) {
    const Matrix closed = models::third_row_positive_semigroup(t);
    EXPECT_LE((expm(a, t) - closed).cwiseAbs().maxCoeff(), 1e-12 * closed.cwiseAbs().maxCoeff()) << "t=" << t;
  }
}

TEST(Expm, AgreesWithIndependentImplementation)
{
  std::mt19937 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 6;
    const Matrix a = random_matrix(rng, n, 0.5 + trial % 7);
    const Matrix ours = expm(a, 1.3);
    const Matrix ref = (1.3 * a).exp();
    EXPECT_LE((ours - ref).norm(), 1e-11 * (1.0 + ref.norm()));
  }
}

TEST(Expm, OverflowIsSignalled)
{
  Matrix a = Matrix::Identity(2, 2) * 1e300;
  EXPECT_THROW(expm(a, 1e10), OverflowError);
  EXPECT_THROW(expm(Matrix::Identity(2, 2) * 800.0, 1.0), OverflowError);
}

TEST(SemigroupProperty, SemigroupLaw)
{
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> td(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix a = random_matrix(rng, n, 5.0 * (trial % 10 + 1) / 10.0);
    const double s = td(rng), t = td(rng);
    const Matrix lhs = expm(a, s) * expm(a, t);
    const Matrix rhs = expm(a, s + t);
    EXPECT_LE(operator_norm2(lhs - rhs), 1e-9 * (1.0 + operator_norm2(rhs)));
  }
}

TEST(SemigroupProperty, ExponentialsAreInvertible)
{
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> td(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const Matrix a = random_matrix(rng, n, 2.0);
    const double t = td(rng);
    const Matrix prod = expm(a, t) * expm(-a, t);
    EXPECT_LE(operator_norm2(prod - Matrix::Identity(n, n)), 1e-9);
  }
}

TEST(SemigroupProperty, ThirdRowAndColumnStayPositive)
{
  const Matrix a = models::third_row_positive_generator();
  const TimeGrid grid = TimeGrid::log_spaced(1e-3, 20.0, 256, false);
  for (double t : grid.points()) {
    const Matrix e = expm(a, t);
    EXPECT_GE(e.row(2).minCoeff(), -1e-10 * e.cwiseAbs().maxCoeff()) << t;
    EXPECT_GE(e.col(2).minCoeff(), -1e-10 * e.cwiseAbs().maxCoeff()) << t;
  }
}

TEST(SemigroupProperty, RescaledSemigroupConvergesToRankOneProjection)
{
  const Matrix a = models::third_row_positive_generator();
  const Matrix p = Matrix::Constant(3, 3, 1.0 / 3.0);
  // Fitted constant: the distance is exactly e^{-t} (the u_2 u_2^T term) in the 2-norm.
  double c_fit = 0.0;
  for (double t = 5.0; t <= 15.0; t += 0.5) {
    const double dist = operator_norm2(std::exp(-9.0 * t) * expm(a, t) - p);
    c_fit = std::max(c_fit, dist * std::exp(t));
  }
  EXPECT_LE(c_fit, 1.0 + 1e-6);
  EXPECT_GE(c_fit, 1.0 - 1e-6);
}

TEST(PowerFormula, SmallPowers)
{
  const auto one = matrix_power_formula_check(1);
  EXPECT_EQ(one.formula, models::third_row_positive_generator());
  const auto two = matrix_power_formula_check(2);
  EXPECT_DOUBLE_EQ(two.direct(0, 0), 59.0);
  EXPECT_DOUBLE_EQ(two.direct(0, 1), -5.0);
  EXPECT_DOUBLE_EQ(two.direct(0, 2), 27.0);
  EXPECT_EQ(two.formula, two.direct);
  for (int n = 1; n <= 12; ++n)
    EXPECT_LE(matrix_power_formula_check(n).max_rel_error, 1e-12) << n;
}

TEST(PowerFormula, ZeroPowerIsNotCovered)
{
  const auto zero = matrix_power_formula_check(0);
  EXPECT_NE(zero.formula, Matrix(Matrix::Identity(3, 3)));
  EXPECT_EQ(zero.direct, Matrix(Matrix::Identity(3, 3)));
  EXPECT_THROW(matrix_power_formula_check(13), PreconditionError);
}

TEST(Orbit, IdentitySemigroupIsConstant)
{
  MatrixSemigroup sg(Matrix::Zero(3, 3));
  Vector f(3);
  f << 1, -2, 3;
  for (const auto &pt : orbit(sg, f, TimeGrid::uniform(0.0, 4.0, 9)))
    EXPECT_EQ(pt.value, f);
}

TEST(Orbit, ExampleOrbitTurnsNegativeFirst)
{
  MatrixSemigroup sg(models::third_row_positive_generator());
  const auto pts = orbit(sg, unit_vector(3, 1), TimeGrid(0.01, 0.01, {0.01}));
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_LT(pts[0].value(0), 0.0);
  EXPECT_THROW(orbit(sg, Vector::Ones(2), TimeGrid::default_grid()), PreconditionError);
}

TEST(Envelope, BoundsHoldOnSamples)
{
  std::mt19937 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 5;
    const Matrix a = random_matrix(rng, n, 3.0);
    MatrixSemigroup sg(a);
    const auto env = sg.envelope();
    EXPECT_GE(env.m, 1.0);
    for (double t : {0.0, 0.1, 0.7, 1.5, 3.0})
      EXPECT_LE(operator_norm2(sg.evaluate(t)), env.bound(t) * (1 + 1e-8));
  }
  MatrixSemigroup ex(models::third_row_positive_generator());
  EXPECT_NEAR(ex.envelope().omega, 9.0, 1e-7);
}

TEST(TimeGridTest, ConstructionAndSnapping)
{
  const auto g = TimeGrid::default_grid();
  EXPECT_EQ(g.size(), 257u);
  EXPECT_EQ(g.points().front(), 0.0);
  EXPECT_DOUBLE_EQ(g.points()[1], 1e-3);
  EXPECT_DOUBLE_EQ(g.points().back(), 20.0);
  const auto s = g.snapped(0.125);
  for (std::size_t i = 1; i < s.size(); ++i)
    EXPECT_GT(s.points()[i], s.points()[i - 1]);
  for (double t : s.points())
    EXPECT_DOUBLE_EQ(std::round(t * 8.0) / 8.0, t);
  EXPECT_THROW(TimeGrid(0.0, 1.0, {0.5, 0.25}), PreconditionError);
  EXPECT_THROW(TimeGrid(0.0, 1.0, {}), PreconditionError);
  EXPECT_EQ(g.tail(10.0).front() >= 10.0, true);
}
