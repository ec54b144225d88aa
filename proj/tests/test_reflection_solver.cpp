#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sturmtrap/reflection_solver.hpp"

using namespace sturmtrap;

namespace {

// Zero-range threshold limit, from B(ω) ∝ √ω H_{2/5}: 4cos²(2π/5).
const double kUniversal = 4.0 * std::cos(0.4 * pi) * std::cos(0.4 * pi);

double zero_range_p(double energy, double rate, double mass = 1.0, ReflectionOptions opt = {}) {
  const ZeroRangeChannels ch(mass);
  return ReflectionSolver<ZeroRangeChannels>(ch, energy, rate, opt).solve().p(0, 0);
}

double rect_p(double e_bar, double v_bar, bool m2, ReflectionOptions opt = {}) {
  return solve_single_sturmian(TrapSpec::rectangular(0.5, e_bar, v_bar), 0, m2, opt).p(0, 0);
}

}  // namespace

TEST(ReflectionSolver, UniversalConstantOracle) {
  EXPECT_NEAR(kUniversal, (3.0 - std::sqrt(5.0)) / 2.0, 1e-15);
}

TEST(ReflectionSolver, ZeroRangeThresholdIsUniversal) {
  for (double v : {0.1, 1.0, 10.0, 100.0}) EXPECT_NEAR(zero_range_p(0.0, v), kUniversal, 1e-4) << "v=" << v;
}

TEST(ReflectionSolver, ZeroRangeLimitsAndMonotonicity) {
  EXPECT_GT(zero_range_p(-3.0, 1.0), 0.99);
  EXPECT_LT(zero_range_p(3.0, 1.0), 0.02);
  double prev = 1.0;
  for (double g = -4.0; g <= 4.0; g += 0.5) {
    const double p = zero_range_p(g, 1.0);
    EXPECT_LT(p, prev) << "gamma=" << g;
    EXPECT_GE(p, 0.0);
    prev = p;
  }
}

TEST(ReflectionSolver, ScalingInvarianceInGamma) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> lg(-1.0, 1.0), gam(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    const double v = std::pow(10.0, lg(rng)), mu = std::pow(10.0, lg(rng)), g = gam(rng);
    const TrapSpec spec = TrapSpec::zero_range(g * std::pow(v, 0.4) / std::pow(mu, 0.4), v, mu);
    ASSERT_NEAR(scaling(spec).gamma, g, 1e-12);
    const double physical = zero_range_p(spec.threshold_offset, v, mu);
    const double scaled = solve_single_sturmian(spec, 0, false).p(0, 0);
    EXPECT_NEAR(physical, scaled, 1e-6) << "v=" << v << " mu=" << mu << " gamma=" << g;
  }
}

TEST(ReflectionSolver, OdeIsLinear) {
  const ZeroRangeChannels ch;
  ReflectionOptions opt;
  opt.rtol = 1e-12;
  const ReflectionSolver<ZeroRangeChannels> solver(ch, 0.5, 1.0, opt);
  const ContourPath path{5.0, 0.05, -10.0};
  Eigen::MatrixXcd y1(2, 1), y2(2, 1);
  y1 << cplx(1.0, 0.5), cplx(-0.3, 2.0);
  y2 << cplx(-2.0, 1.0), cplx(0.7, 0.1);
  const cplx a(0.3, -1.2), b(2.5, 0.4);
  const Eigen::MatrixXcd sum = solver.propagate(path, 0.0, path.s_end(), a * y1 + b * y2);
  const Eigen::MatrixXcd parts = a * solver.propagate(path, 0.0, path.s_end(), y1) +
                                 b * solver.propagate(path, 0.0, path.s_end(), y2);
  EXPECT_LT((sum - parts).norm() / sum.norm(), 1e-8);
}

TEST(ReflectionSolver, PropagationIsReversible) {
  const ZeroRangeChannels ch;
  ReflectionOptions opt;
  opt.rtol = 1e-12;
  const ReflectionSolver<ZeroRangeChannels> solver(ch, -0.5, 1.0, opt);
  const ContourPath path{3.0, 0.1, -3.0};
  Eigen::MatrixXcd y(2, 1);
  y << cplx(1.0, 0.0), cplx(0.0, 1.0);
  const Eigen::MatrixXcd there = solver.propagate(path, 0.0, path.s_end(), y);
  const Eigen::MatrixXcd back = solver.propagate(path, path.s_end(), 0.0, there);
  EXPECT_LT((back - y).norm(), 1e-8);
}

TEST(ReflectionSolver, ToleranceHalvingIsStable) {
  ReflectionOptions tight;
  tight.rtol = 5e-11;
  EXPECT_NEAR(zero_range_p(0.7, 1.0), zero_range_p(0.7, 1.0, 1.0, tight), 1e-6);
  EXPECT_NEAR(rect_p(0.0, 1.0, false), rect_p(0.0, 1.0, false, tight), 1e-6);
}

TEST(ReflectionSolver, WindowAndArcRobustness) {
  const ZeroRangeChannels ch;
  const ReflectionSolver<ZeroRangeChannels> base(ch, -0.8, 1.0);
  const double p = base.solve().p(0, 0);
  ReflectionOptions wide;
  wide.omega_min = 2.0 * base.auto_omega_min();
  wide.omega_max = 2.0 * base.auto_omega_max();
  EXPECT_NEAR(zero_range_p(-0.8, 1.0, 1.0, wide), p, 1e-5);
  ReflectionOptions arc;
  arc.arc_radius = 0.2;
  EXPECT_NEAR(zero_range_p(-0.8, 1.0, 1.0, arc), p, 1e-7);
}

TEST(ReflectionSolver, DiagnosticsAreClean) {
  const auto r = solve_single_sturmian(TrapSpec::rectangular(0.5, 0.0, 0.5), 0, false);
  EXPECT_EQ(r.flux_violations, 0);
  EXPECT_TRUE(r.window_stable);
  EXPECT_LT(r.window_sensitivity, 1e-6);
  EXPECT_LT(r.fit_residual, 1e-5);
  EXPECT_LT(r.omega_min, 0.0);
  EXPECT_GT(r.omega_max, 0.0);
  EXPECT_NEAR(r.p_total[0] + r.loss[0], 1.0, 1e-15);
}

TEST(ReflectionSolver, FluxIsMonotoneWithoutCouplings) {
  const ZeroRangeChannels ch;
  for (double g : {-2.0, 0.0, 2.0}) {
    const auto r = ReflectionSolver<ZeroRangeChannels>(ch, g, 1.0).solve();
    EXPECT_EQ(r.flux_violations, 0) << "gamma=" << g;
  }
}

TEST(ReflectionSolver, RectangularSlowLimits) {
  EXPECT_GT(rect_p(-4.0, 0.05, false), 0.95);
  EXPECT_LT(rect_p(4.0, 0.05, false), 0.05);
  // ℰ̄ = 0 approaches the zero-range value as the scaled width ∝ v̄^{2/5} shrinks.
  double prev = 1.0;
  for (double v : {0.05, 0.01, 0.002}) {
    const double dev = std::abs(rect_p(0.0, v, false) - kUniversal);
    EXPECT_LT(dev, prev) << "v=" << v;
    prev = dev;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(ReflectionSolver, RectangularRapidLimit) {
  double prev = 0.0;
  for (double v : {50.0, 150.0, 500.0}) {
    const double p = rect_p(0.0, v, false);
    EXPECT_GT(p, prev) << "v=" << v;
    prev = p;
  }
  EXPECT_GT(prev, 0.9);
}

TEST(ReflectionSolver, DiagonalM2Matters) {
  EXPECT_GT(std::abs(rect_p(0.0, 40.0, true) - rect_p(0.0, 40.0, false)), 1e-3);
}

TEST(ReflectionSolver, OneChannelCoupledMatchesSingleWithM2) {
  const TrapSpec spec = TrapSpec::rectangular(0.5, 1.0, 2.0);
  const double single = solve_single_sturmian(spec, 0, true).p(0, 0);
  const double coupled = solve_coupled(spec, 0, 1).p(0, 0);
  EXPECT_NEAR(single, coupled, 1e-8);
}

TEST(ReflectionSolver, TwoChannelProbabilitiesAreBounded) {
  const auto r = solve_coupled(TrapSpec::rectangular(0.5, 0.0, 10.0), 0, 2);
  ASSERT_EQ(r.channels.size(), 2u);
  for (Eigen::Index m = 0; m < 2; ++m) {
    for (Eigen::Index n = 0; n < 2; ++n) EXPECT_GE(r.p_stay(m, n), 0.0);
    EXPECT_LE(r.p_total[static_cast<std::size_t>(m)], 1.0 + 1e-6);
  }
  EXPECT_GT(r.p(0, 1), 1e-3);
}

TEST(ReflectionSolver, PhysicalUnitsMatchInternalUnits) {
  // a = 0.8, μ = 1.7 maps to the same internal problem as (ℰ̄, v̄).
  const TrapSpec phys = TrapSpec::rectangular(0.8, 0.3, 0.9, 1.7);
  const ScalingParams sc = scaling(phys);
  EXPECT_NEAR(solve_single_sturmian(phys, 0, false).p(0, 0), rect_p(sc.e_bar, sc.v_bar, false), 1e-12);
}

TEST(ReflectionSolver, Errors) {
  const ZeroRangeChannels ch;
  EXPECT_THROW((ReflectionSolver<ZeroRangeChannels>(ch, 0.0, 0.0)), ConfigError);
  EXPECT_THROW(solve_coupled(TrapSpec::rectangular(0.5, 0.0, 1.0), 4, 2), ChannelBudgetExceeded);
  EXPECT_THROW(solve_coupled(TrapSpec::rectangular(0.5, 0.0, 1.0), 1, 2), ChannelBudgetExceeded);
  EXPECT_THROW(solve_single_sturmian(TrapSpec::zero_range(0.0, 1.0), 2, false), ChannelBudgetExceeded);
  ReflectionOptions bad;
  bad.omega_min = 1.0;
  EXPECT_THROW((ReflectionSolver<ZeroRangeChannels>(ch, 0.0, 1.0, bad).solve()), ConfigError);
}
