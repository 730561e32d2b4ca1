#include <gtest/gtest.h>

#include "evpos/coupled_gamma.hpp"

using namespace evpos;

namespace {

const CoupledGammaReport &report()
{
  static const CoupledGammaReport r = coupled_gamma_example();
  return r;
}

} // namespace

TEST(CoupledGamma, OperatorsHaveUnitNorm)
{
  const CoupledGammaModel m(0.125, 6.0);
  // ||B12||_{L1 -> R3} = h * max column sum, ||B21|| = L1 mass of 1_[1,2]
  EXPECT_DOUBLE_EQ(m.b12_matrix().cwiseAbs().colwise().sum().maxCoeff(), 0.125);
  EXPECT_DOUBLE_EQ(m.b21(unit_vector(3, 2)).mass(), 1.0);
  EXPECT_EQ(m.b21(unit_vector(3, 0)).support_lo(), m.spec().count);
  EXPECT_EQ(m.spec().cell_of(1.0), 56);
  EXPECT_EQ(m.spec().cell_of(-1.0), 40);
}

TEST(CoupledGamma, FunctionalVanishesExactlyAboveMinusOne)
{
  const CoupledGammaModel m(0.125, 6.0);
  const auto f = GridFunction::indicator(m.spec(), -1.0, 3.0, 7.5);
  EXPECT_EQ(m.b12(f), 0.0);
  EXPECT_FALSE(std::signbit(m.b12(f)));
  const auto g = GridFunction::indicator(m.spec(), -1.5, 3.0);
  EXPECT_DOUBLE_EQ(m.b12(g), 0.5);
}

TEST(CoupledGamma, SeriesMatchesDenseLatticeOracle)
{
  const CoupledGammaModel m(0.125, 6.0);
  const auto sys = m.system();
  const long steps = 32;
  Vector z(3);
  z << 0.3, -1.0, 2.0;
  Vector f = Vector::Zero(m.spec().count);
  f(30) = 1.0;
  f(70) = -0.5;
  const auto levels = m.series({z, GridFunction::from_samples(m.spec(), f)}, steps, 8);
  Vector x(3 + m.spec().count);
  x << z, f;
  const auto dense = dyson_phillips_lattice_orbit(*sys.unperturbed(), sys.perturbation(), x, steps, 8);
  for (long q = 0; q <= steps; q += 4) {
    const auto s = CoupledGammaModel::sum_at(levels, static_cast<std::size_t>(q));
    Vector y(x.size());
    y << s.z, s.f.samples();
    const Vector ref = dense.sum_at(static_cast<std::size_t>(q));
    EXPECT_LE((y - ref).cwiseAbs().maxCoeff(), 1e-13 * std::max(1.0, ref.cwiseAbs().maxCoeff())) << "q = " << q;
  }
}

TEST(CoupledGamma, SeriesTerminatesAfterTwoRoundTrips)
{
  const CoupledGammaModel m(0.125, 6.0);
  const auto levels = m.series({Vector::Ones(3), GridFunction::zero(m.spec())}, 32, 40);
  // V_4 needs two passes through [1,2] -> [-2,-1], each taking time >= 2.
  EXPECT_EQ(levels.size(), 5u);
  for (const auto &s : levels.back()) {
    EXPECT_EQ(s.z.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.f.support_lo(), m.spec().count);
  }
  for (std::size_t q = 0; q < 16; ++q)
    EXPECT_EQ(levels[2][q].z.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(levels[2][20].z.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CoupledGamma, PremiseHolds)
{
  EXPECT_TRUE(report().claim1);
  EXPECT_GT(report().premise.upper.samples, 0u);
  EXPECT_GT(report().premise.lower.samples, 0u);
}

TEST(CoupledGamma, FirstComponentIdentityAndNegativity)
{
  const auto &r = report();
  EXPECT_TRUE(r.claim2);
  EXPECT_EQ(r.max_first_component_deviation, 0.0);
  EXPECT_EQ(r.max_v2_first_before_2, 0.0);
  // (e^{tA}e2)_1 = 1/6 - e^{8t}/2 + e^{9t}/3
  const double t = 0.01;
  const double closed = 1.0 / 6.0 - std::exp(8 * t) / 2.0 + std::exp(9 * t) / 3.0;
  EXPECT_NEAR(r.small_time_witness.value, closed, 1e-13);
  EXPECT_LT(r.small_time_witness.value, -1e-6);
  ASSERT_TRUE(r.lattice_witness.has_value());
  EXPECT_DOUBLE_EQ(r.lattice_witness->t, 0.125);
}

TEST(CoupledGamma, SupportConfinedBehindFront)
{
  const auto &r = report();
  EXPECT_TRUE(r.claim3);
  ASSERT_EQ(r.support.size(), 32u);
  for (const auto &s : r.support) {
    EXPECT_GE(s.support_lo, s.required_lo);
    EXPECT_GT(s.zero_cells, 0);
  }
}

TEST(CoupledGamma, PositiveVectorsBecomePositive)
{
  const auto &r = report();
  EXPECT_TRUE(r.claim4);
  for (const auto &p : r.positivity) {
    ASSERT_TRUE(p.onset.has_value()) << p.vector_name;
    EXPECT_GE(p.min_after_onset, 0.0);
  }
}

TEST(CoupledGamma, MixedIdealsExcluded)
{
  const auto &r = report();
  EXPECT_TRUE(r.spread_ok);
  ASSERT_TRUE(r.coupling.has_value()) << r.coupling_error;
  EXPECT_EQ(r.coupling->excludes_first.size(), 7u);
  EXPECT_EQ(r.coupling->excludes_second.size(), 7u);
  EXPECT_TRUE(r.must_pass());
}

TEST(CoupledGamma, RejectsBadGrids)
{
  EXPECT_THROW(CoupledGammaModel(0.3, 6.0), PreconditionError);
  EXPECT_THROW(CoupledGammaModel(0.125, 3.0), PreconditionError);
  CoupledGammaConfig cfg;
  cfg.t_max = 0.3;
  EXPECT_THROW(coupled_gamma_example(cfg), ShiftNotOnGrid);
}
