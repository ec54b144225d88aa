#include <gtest/gtest.h>

#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sturmtrap/trap_model.hpp"

using namespace sturmtrap;

namespace {

double norm2(const AdiabaticState& st, double a, double kappa) {
  auto f = [&](double x) { const double p = st(x); return p * p; };
  using boost::math::quadrature::gauss_kronrod;
  const double inner = gauss_kronrod<double, 61>::integrate(f, 0.0, a, 12, 1e-14);
  // Exterior is exactly exponential.
  const double edge = st(a);
  return 2.0 * (inner + edge * edge / (2.0 * kappa));
}

}  // namespace

TEST(TrapModel, ProfilesIntegrateToOne) {
  for (double a : {0.1, 0.5, 2.0, 7.5}) {
    EXPECT_NEAR(profile_integral(TrapSpec::rectangular(a, 0, 1)), 1.0, 1e-12);
    EXPECT_NEAR(profile_integral(TrapSpec::parabolic(a, 0, 1)), 1.0, 1e-12);
  }
  EXPECT_EQ(profile_integral(TrapSpec::zero_range(0, 1)), 1.0);
}

TEST(TrapModel, PotentialExamples) {
  const auto r0 = TrapSpec::rectangular(0.5, 0.0, 1.0);
  EXPECT_EQ(potential_at(r0, 0.0, 0.0).value, 0.0);
  EXPECT_EQ(potential_at(r0, 0.6, 1.0).value, 0.0);
  EXPECT_DOUBLE_EQ(potential_at(TrapSpec::rectangular(0.5, 2.0, 1.0), 0.0, 0.0).value, 2.0);
  const auto d = potential_at(TrapSpec::zero_range(1.0, 2.0), 0.3, 0.5);
  EXPECT_TRUE(d.distributional);
  EXPECT_DOUBLE_EQ(d.value, 0.0);
}

TEST(TrapModel, ValidationRejectsBadInput) {
  EXPECT_THROW(TrapSpec::zero_range(0, 0).validate(), ConfigError);
  EXPECT_THROW(TrapSpec::zero_range(0, 1, -1).validate(), ConfigError);
  EXPECT_THROW(TrapSpec::rectangular(0.0, 0, 1).validate(), ConfigError);
  EXPECT_NO_THROW(TrapSpec::rectangular(0.5, -3, 1).validate());
}

TEST(TrapModel, ZeroRangeBoundState) {
  // Attractive for ℰ - v²t² < 0.
  const auto st = bound_state_zero_range(TrapSpec::zero_range(-1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(st.energy, -0.5);
  EXPECT_THROW(bound_state_zero_range(TrapSpec::zero_range(1.0, 1.0), 0.0), NoBoundState);
  EXPECT_THROW(bound_state_zero_range(TrapSpec::zero_range(1.0, 1.0), 1.0), NoBoundState);
  EXPECT_THROW(bound_state_zero_range(TrapSpec::zero_range(0.0, 1.0), 0.0), NoBoundState);
  // E_0(t) = -μ(ℰ - v²t²)²/2.
  const auto spec = TrapSpec::zero_range(0.7, 1.3, 2.1);
  for (double t : {-3.0, -1.5, 2.0}) {
    const double s = spec.strength(t);
    const auto b = bound_state_zero_range(spec, t);
    EXPECT_NEAR(b.energy, -spec.mass * s * s / 2.0, 1e-13 * std::abs(b.energy));
    EXPECT_NEAR(norm2(b, 0.0, b.kappa), 1.0, 1e-12);
  }
}

TEST(TrapModel, RectangularStateCountMatchesBisectionOracle) {
  // Oracle: count sign changes of z sin z - √(z0²-z²) cos z on a fine grid.
  auto oracle_count = [](double z0) {
    int n = 0;
    const int m = 200000;
    double prev = -z0;
    for (int i = 1; i <= m; ++i) {
      const double z = z0 * i / m;
      const double f = z * std::sin(z) - std::sqrt(std::max(0.0, z0 * z0 - z * z)) * std::cos(z);
      if ((prev < 0) != (f < 0)) ++n;
      prev = f;
    }
    return n;
  };
  for (double s : {-0.3, -5.0, -19.0, -21.0, -100.0, -400.0}) {
    const auto spec = TrapSpec::rectangular(0.5, s, 1.0);
    const auto states = bound_states(spec, 0.0);
    EXPECT_EQ(static_cast<int>(states.size()), oracle_count(rectangular_z0(spec, s))) << s;
  }
  // Exactly one even state below the first entry strength -2π² (a = 1/2, μ = 1).
  EXPECT_EQ(bound_states(TrapSpec::rectangular(0.5, -19.0, 1.0), 0.0).size(), 1u);
  EXPECT_EQ(bound_states(TrapSpec::rectangular(0.5, -20.0, 1.0), 0.0).size(), 2u);
  EXPECT_THROW(bound_states_rectangular(TrapSpec::rectangular(0.5, 1.0, 1.0), 0.0), NoBoundState);
}

TEST(TrapModel, RectangularNormalizedAndOrdered) {
  for (double s : {-0.01, -3.0, -50.0, -500.0}) {
    const auto spec = TrapSpec::rectangular(0.5, s, 1.0);
    const auto states = bound_states(spec, 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) {
      EXPECT_NEAR(norm2(states[i], 0.5, states[i].kappa), 1.0, 1e-10);
      if (i > 0) {
        EXPECT_GT(states[i].energy, states[i - 1].energy);
      }
    }
  }
}

TEST(TrapModel, RectangularThresholdContinuity) {
  double prev = -1.0;
  for (double s : {-1e-2, -1e-4, -1e-6}) {
    const double e = bound_states(TrapSpec::rectangular(0.5, s, 1.0), 0.0).front().energy;
    EXPECT_LT(e, 0.0);
    EXPECT_GT(e, prev);
    prev = e;
  }
  EXPECT_GT(prev, -1e-10);
}

TEST(TrapModel, RectangularDeepWellApproachesBox) {
  // E_n + U → (2n+1)²π²/(8μa²) with relative correction ≈ 2/z0; U = 1e6
  // gives z0 ≈ 707.
  const double a = 0.5, s = -2.0 * a * 1e6;
  const auto states = bound_states(TrapSpec::rectangular(a, s, 1.0), 0.0);
  const double u = -s / (2.0 * a);
  for (int n = 0; n < 4; ++n) {
    const double box = (2 * n + 1) * (2 * n + 1) * pi * pi / (8.0 * a * a);
    EXPECT_NEAR((states[n].energy + u) / box, 1.0, 0.01);
  }
}

TEST(TrapModel, ParabolicStatesNormalized) {
  for (double s : {-5.0, -60.0, -300.0}) {
    const auto spec = TrapSpec::parabolic(0.5, s, 1.0);
    const auto states = bound_states(spec, 0.0);
    ASSERT_FALSE(states.empty()) << s;
    for (std::size_t i = 0; i < states.size(); ++i) {
      EXPECT_NEAR(norm2(states[i], 0.5, states[i].kappa), 1.0, 1e-10);
      if (i > 0) {
        EXPECT_GT(states[i].energy, states[i - 1].energy);
      }
    }
  }
  // Physical-unit path agrees with scaled units.
  const auto a1 = bound_states(TrapSpec::parabolic(1.3, -40.0, 1.0, 0.7), 0.0);
  const auto a2 = bound_states(to_scaled(TrapSpec::parabolic(1.3, -40.0, 1.0, 0.7)), 0.0);
  ASSERT_EQ(a1.size(), a2.size());
  const double es = scaling(TrapSpec::parabolic(1.3, -40.0, 1.0, 0.7)).energy_scale;
  for (std::size_t i = 0; i < a1.size(); ++i) EXPECT_NEAR(a1[i].energy * es, a2[i].energy, 1e-9);
}

TEST(TrapModel, ScalingMatchesClosedForm) {
  const auto spec = TrapSpec::zero_range(1.7, 0.3, 2.5);
  const auto s = scaling(spec);
  EXPECT_DOUBLE_EQ(s.gamma, 1.7 * std::pow(2.5, 0.4) * std::pow(0.3, -0.4));
  const auto r = scaling(TrapSpec::rectangular(0.5, 3.0, 2.0));
  EXPECT_DOUBLE_EQ(r.e_bar, 3.0);
  EXPECT_DOUBLE_EQ(r.v_bar, 2.0);
}

TEST(TrapModel, ZeroRangeEnergiesScaleWithGamma) {
  // Equal γ ⇒ equal scaled energies at matched τ.
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  for (int i = 0; i < 10; ++i) {
    const double mu = u(rng), v = u(rng), gamma = u(rng) - 2.5;
    const double e = gamma * std::pow(mu, -0.4) * std::pow(v, 0.4);
    const auto spec = TrapSpec::zero_range(e, v, mu);
    const auto sc = scaling(spec);
    EXPECT_NEAR(sc.gamma, gamma, 1e-12);
    const double tau = -3.0;
    const double t = tau / sc.tau_scale;
    const auto scaled = bound_state_zero_range(to_scaled(spec), tau);
    const auto phys = bound_state_zero_range(spec, t);
    EXPECT_NEAR(phys.energy * sc.energy_scale, scaled.energy, 1e-10 * std::abs(scaled.energy));
  }
}

TEST(TrapModel, ExistenceWindows) {
  const auto zr = TrapSpec::zero_range(1.0, 2.0);
  EXPECT_DOUBLE_EQ(existence_window(zr, 0).t_entry, 0.5);
  EXPECT_TRUE(existence_window(TrapSpec::zero_range(-1.0, 1.0), 0).always);
  const auto rect = TrapSpec::rectangular(0.5, 0.0, 1.0);
  EXPECT_NEAR(existence_window(rect, 1).t_entry, std::sqrt(2.0) * pi, 1e-12);
  const auto par = TrapSpec::parabolic(0.5, 0.0, 1.0);
  const double s1 = entry_strength(par, 1);
  EXPECT_EQ(bound_states(par, std::sqrt(-s1) * 0.999).size(), 1u);
  EXPECT_EQ(bound_states(par, std::sqrt(-s1) * 1.001).size(), 2u);
}
