#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evpos/models.hpp"
#include "evpos/spectral.hpp"

using namespace evpos;

namespace {

Matrix mat2(double a, double b, double c, double d)
{
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

} // namespace

TEST(Spectral, ExampleDominantEigenpair)
{
  const Matrix a = models::third_row_positive_generator();
  const auto d = dominant_eigen(a);
  EXPECT_NEAR(d.spectral_bound, 9.0, 1e-12);
  EXPECT_NEAR(d.spectral_gap, 1.0, 1e-12);
  EXPECT_TRUE(d.real_simple);
  const Vector u3 = Vector::Ones(3) / std::sqrt(3.0);
  EXPECT_LE((d.u - u3).norm(), 1e-12);
  EXPECT_LE((d.phi - u3).norm(), 1e-12);
  EXPECT_NEAR(spectral_radius(a), 9.0, 1e-12);
}

TEST(Spectral, ExampleProjectionIsAveraging)
{
  const auto r = dominant_projection(models::third_row_positive_generator(), true);
  EXPECT_LE((r.projection - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.rank, 1);
  EXPECT_TRUE(r.accepted());
  EXPECT_TRUE(r.u_strictly_positive);
  EXPECT_TRUE(r.phi_strictly_positive);
}

TEST(Spectral, ProjectionNeedsDominantRealEigenvalue)
{
  EXPECT_THROW(dominant_projection(mat2(0, 1, -1, 0)), CertificateMissing);
  EXPECT_THROW(dominant_projection(Matrix::Identity(2, 2)), CertificateMissing);
  // Simple dominant eigenvalue with a sign-changing eigenvector.
  EXPECT_NO_THROW(dominant_projection(mat2(1, 0, 0, 2)));
  EXPECT_THROW(dominant_projection(mat2(2, -1, -1, 2), true), ConsistencyViolation);
}

TEST(Simplicity, JordanBlockIsGeometricallyButNotAlgebraicallySimple)
{
  const Matrix j = mat2(0, 1, 0, 0);
  const auto r = algebraic_simplicity_test(j, 0.0, unit_vector(2, 0), unit_vector(2, 1));
  EXPECT_TRUE(r.geometrically_simple);
  EXPECT_FALSE(r.pairing_nonzero);
  EXPECT_FALSE(r.algebraically_simple);
  EXPECT_FALSE(static_cast<bool>(r));
  EXPECT_EQ(r.rank_squared, 0);
  EXPECT_TRUE(r.cross_check_agrees);
}

TEST(Simplicity, DoubleEigenvalueIsNotGeometricallySimple)
{
  const auto r = algebraic_simplicity_test(Matrix::Identity(2, 2), 1.0, unit_vector(2, 0), unit_vector(2, 0));
  EXPECT_FALSE(r.geometrically_simple);
  EXPECT_TRUE(r.pairing_nonzero);
  EXPECT_FALSE(r.algebraically_simple);
  EXPECT_TRUE(r.cross_check_agrees);
}

TEST(Simplicity, RejectsNonEigenpairs)
{
  const Matrix a = models::third_row_positive_generator();
  EXPECT_THROW(algebraic_simplicity_test(a, 9.0, unit_vector(3, 0), Vector::Ones(3)), NotAnEigenpair);
  EXPECT_THROW(algebraic_simplicity_test(a, 9.0, Vector::Zero(3), Vector::Zero(3)), NotAnEigenpair);
  EXPECT_THROW(algebraic_simplicity_test(a, 9.0, Vector::Ones(2), Vector::Ones(3)), PreconditionError);
}

TEST(SimplicityProperty, RandomSimpleEigenvaluesPassAndAgreeWithSquaredRank)
{
  std::mt19937 rng(31);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 5;
    // Similarity transform of a diagonal with distinct entries.
    Matrix v(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        v(i, j) = nd(rng);
    v += 3.0 * Matrix::Identity(n, n);
    Vector diag(n);
    for (int i = 0; i < n; ++i)
      diag(i) = static_cast<double>(i) - 1.0;
    const Matrix vinv = v.inverse();
    const Matrix a = v * diag.asDiagonal() * vinv;
    const int k = trial % n;
    const Vector u = v.col(k);
    const Vector phi = vinv.row(k).transpose();
    const auto r = algebraic_simplicity_test(a, diag(k), u, phi, 1e-7);
    EXPECT_TRUE(r.algebraically_simple) << trial;
    EXPECT_TRUE(r.cross_check_agrees) << trial;
    EXPECT_EQ(r.rank_squared, n - 1);
  }
}

TEST(SpectralProperty, PositiveMatricesHaveStrictlyPositiveDominantProjection)
{
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 6;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        a(i, j) = ud(rng);
    const auto r = dominant_projection(a, true);
    EXPECT_TRUE(r.accepted()) << trial;
    EXPECT_GT(r.projection.minCoeff(), 0.0);
    EXPECT_NEAR(r.phi.dot(r.u), 1.0, 1e-10);
    // Perron root oracle: lies between min and max row sums.
    EXPECT_GE(r.lambda, a.rowwise().sum().minCoeff() - 1e-12);
    EXPECT_LE(r.lambda, a.rowwise().sum().maxCoeff() + 1e-12);
  }
}

TEST(MeanErgodic, SymmetricExchangeConvergesToAveraging)
{
  const auto r = mean_ergodic_projection(mat2(-1, 1, 1, -1));
  EXPECT_LE((r.projection - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(r.rank, 1);
  EXPECT_TRUE(r.accepted());
  EXPECT_LE(r.distances.back(), 1e-3);
  // C_T - P = (1 - e^{-2T}) / (2T) * (I - P), whose 2-norm times T tends to 1/2.
  EXPECT_NEAR(r.decay_constant, 0.5, 1e-6);
}

TEST(MeanErgodic, RotationConvergesToZero)
{
  const auto r = mean_ergodic_projection(mat2(0, 1, -1, 0));
  EXPECT_EQ(r.rank, 0);
  EXPECT_LE(r.projection.norm(), 1e-15);
  // ||C_T|| = |sin(T/2)| / (T/2) <= 2 / T.
  for (std::size_t i = 0; i < r.horizons.size(); ++i)
    EXPECT_LE(r.distances[i], 2.0 / r.horizons[i] + 1e-10);
}

TEST(MeanErgodic, ShiftedExampleMatchesDominantProjection)
{
  const Matrix a = models::third_row_positive_generator() - 9.0 * Matrix::Identity(3, 3);
  const auto r = mean_ergodic_projection(a);
  EXPECT_TRUE(r.accepted());
  EXPECT_TRUE(r.rank_one_form);
  EXPECT_TRUE(r.u_strictly_positive);
  EXPECT_TRUE(r.phi_strictly_positive);
  EXPECT_LE((r.projection - Matrix::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MeanErgodic, Failures)
{
  EXPECT_THROW(mean_ergodic_projection(mat2(1, 0, 0, -1)), PreconditionError);
  EXPECT_THROW(mean_ergodic_projection(mat2(0, 1, 0, 0)), NoConvergence);
  EXPECT_THROW(kernel_projection(mat2(0, 1, 0, 0), 1e-9), NoConvergence);
}
