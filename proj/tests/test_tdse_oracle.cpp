#include <gtest/gtest.h>

#include <cmath>

#include "sturmtrap/tdse_oracle.hpp"

using namespace sturmtrap;

namespace {

const double kUniversal = 4.0 * std::cos(0.4 * pi) * std::cos(0.4 * pi);

TdseOptions quick(int samples = 1) {
  TdseOptions o;
  o.samples = samples;
  return o;
}

// Fraction of an outgoing Gaussian packet (momentum k) left in the free
// region after it has had time to cross the absorber twice.
double absorber_reflection(const TrapSpec& spec, double k_factor) {
  TdseGrid g = resolve_grid(spec, 0);
  g.well = false;
  const double k = k_factor * g.momentum_scale, lambda = 2.0 * pi / g.momentum_scale;
  g.inner_length = 80.0 * lambda;
  g.points = static_cast<std::size_t>((g.inner_length + g.absorber_width) / g.dx);
  GridState st(g);
  const double x0 = 40.0 * lambda, sigma = 8.0 * lambda;
  std::vector<cplx> y(g.points);
  for (std::size_t j = 0; j < g.points; ++j) {
    const double x = static_cast<double>(j) * g.dx;
    y[j] = std::exp(-0.5 * std::pow((x - x0) / sigma, 2) + I * k * x);
  }
  y[0] *= std::sqrt(0.5);
  st.set(y, 0.0);
  const double n0 = st.norm();
  const double horizon = (2.0 * g.absorber_width + 40.0 * lambda + 4.0 * sigma) / k;
  const double dt = 0.2 / (k * k);
  const int n = static_cast<int>(horizon / dt);
  for (int i = 1; i <= n; ++i) st.step(i * dt);
  double inner = 0.0;
  for (std::size_t j = 0; static_cast<double>(j) * g.dx < g.inner_length; ++j) inner += std::norm(st.y()[j]);
  return 2.0 * inner / n0;
}

}  // namespace

TEST(TdseOracle, AbsorberReflectsLessThanOnePpm) {
  for (const auto& spec : {TrapSpec::zero_range(0.0, 1.0), TrapSpec::rectangular(0.5, 0.0, 40.0)})
    for (double kf : {1.0, 2.0}) EXPECT_LT(absorber_reflection(spec, kf), 1e-6) << to_string(spec.shape) << " k/k0=" << kf;
}

TEST(TdseOracle, FreePropagationIsUnitary) {
  TdseOptions o;
  o.absorber = false;
  TdseGrid g = resolve_grid(TrapSpec::zero_range(0.0, 1.0), 0, o);
  g.well = false;
  GridState st(g);
  std::vector<cplx> y(g.points);
  for (std::size_t j = 0; j < g.points; ++j) {
    const double x = static_cast<double>(j) * g.dx;
    y[j] = std::exp(-0.5 * (x - 5.0) * (x - 5.0) + 2.0 * I * x);
  }
  st.set(y, 0.0);
  const double n0 = st.norm();
  for (int i = 1; i <= 1000; ++i) st.step(0.01 * i);
  EXPECT_LT(std::abs(st.norm() / n0 - 1.0), 1e-10);
}

TEST(TdseOracle, FullRunIsUnitaryWithoutAbsorber) {
  TdseOptions o = quick(50);
  o.absorber = false;
  const auto r = evolve(TrapSpec::zero_range(0.0, 1.0), 0, o);
  for (double n : r.trace.norm) EXPECT_LT(std::abs(n - 1.0), 1e-8);
}

TEST(TdseOracle, AbsorbedProbabilityOnlyLeaves) {
  const auto r = evolve(TrapSpec::zero_range(2.0, 1.0), 0, quick(100));
  for (std::size_t k = 1; k < r.trace.norm.size(); ++k) EXPECT_LE(r.trace.norm[k], r.trace.norm[k - 1] + 1e-12);
  double bound = 0.0;
  for (double p : r.p_final) bound += p;
  EXPECT_GE(r.norm_final, bound - 1e-3);
  EXPECT_LT(r.norm_final, 0.999);  // the escaped part reached the absorber
}

TEST(TdseOracle, SecondOrderInTime) {
  const TrapSpec spec = TrapSpec::zero_range(0.5, 1.0);
  const TdseGrid g = resolve_grid(spec, 0);
  auto p = [&](double f) {
    TdseOptions o = quick();
    o.time_stretch = g.time_stretch;
    o.du = f * g.du;
    return evolve(spec, 0, o).p(0);
  };
  const double p1 = p(2.0), p2 = p(1.0), p4 = p(0.5);
  EXPECT_NEAR((p1 - p2) / (p2 - p4), 4.0, 0.5);
}

TEST(TdseOracle, ZeroRangeAnchors) {
  EXPECT_NEAR(evolve(TrapSpec::zero_range(0.0, 1.0), 0, quick()).p(0), kUniversal, 0.01);
  EXPECT_GT(evolve(TrapSpec::zero_range(-3.0, 1.0), 0, quick()).p(0), 0.99);
  EXPECT_LT(evolve(TrapSpec::zero_range(3.0, 1.0), 0, quick()).p(0), 0.02);
}

TEST(TdseOracle, ScaledUnitsAreUsed) {
  // Same γ, different (v, μ): identical scaled problem.
  const TrapSpec a = TrapSpec::zero_range(0.7, 1.0);
  const TrapSpec b = TrapSpec::zero_range(0.7 * std::pow(3.0, 0.4) / std::pow(2.0, 0.4), 3.0, 2.0);
  EXPECT_NEAR(evolve(a, 0, quick()).p(0), evolve(b, 0, quick()).p(0), 1e-9);
}

TEST(TdseOracle, MaskedWhileTheStateIsUnbound) {
  const auto r = evolve(TrapSpec::zero_range(1.0, 1.0), 0, quick(160));
  const auto& tr = r.trace;
  bool saw_masked = false, saw_after = false;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double tau = tr.times[k];
    EXPECT_EQ(tr.exists[k][0] != 0, std::abs(tau) > 1.0) << "tau=" << tau;
    saw_masked |= std::abs(tau) < 1.0;
    if (tau > 1.2) {
      saw_after = true;
      EXPECT_GT(tr.populations[k][0], 0.05);  // partial recapture
    }
    EXPECT_LE(tr.populations[k][0], 1.0 + 1e-8);
    EXPECT_GE(tr.populations[k][0], 0.0);
  }
  EXPECT_TRUE(saw_masked);
  EXPECT_TRUE(saw_after);
  EXPECT_LT(r.p(0), kUniversal);
}

TEST(TdseOracle, PopulationOscillatesBeforeSettling) {
  const auto r = evolve(TrapSpec::zero_range(0.0, 1.0), 0, TdseOptions{});
  const auto& tr = r.trace;
  int extrema = 0;
  double last_change = 0.0;
  for (std::size_t k = 2; k < tr.times.size(); ++k) {
    const double a = tr.populations[k - 2][0], b = tr.populations[k - 1][0], c = tr.populations[k][0];
    if (tr.times[k - 2] > 0.2 && (b - a) * (c - b) < 0.0 && std::abs(b - a) > 1e-3) ++extrema;
    if (tr.times[k] > 6.0) last_change = std::max(last_change, std::abs(c - r.p(0)));
  }
  EXPECT_GE(extrema, 2);
  EXPECT_LT(last_change, 1e-4);
}

TEST(TdseOracle, ExcitedStatesScoopPopulationAsTheyEnter) {
  TdseOptions o = quick(120);
  o.max_states = 3;
  const auto r = evolve(TrapSpec::rectangular(0.5, 0.0, 10.0), 0, o);
  const auto& tr = r.trace;
  // Entry times: s(τ) = -2π²j² at τ_j = √2 πj/v̄.
  const double t1 = std::sqrt(2.0) * pi / 10.0, t2 = 2.0 * t1;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    EXPECT_EQ(tr.exists[k][1] != 0, std::abs(tr.times[k]) > t1);
    EXPECT_EQ(tr.exists[k][2] != 0, std::abs(tr.times[k]) > t2);
  }
  EXPECT_GT(r.p(2), 0.01);
  EXPECT_GT(r.p(4), 1e-3);
  EXPECT_LT(r.p(0) + r.p(2) + r.p(4), 1.0);
}

TEST(TdseOracle, GridStatesMatchAnalyticStates) {
  const TrapSpec spec = TrapSpec::rectangular(0.5, 0.0, 1.0);
  for (double t : {1.0, 5.0, 9.0}) {
    const auto grid = track_bound_states(spec, t);
    const auto exact = bound_states(to_scaled(spec), t);
    ASSERT_EQ(grid.size(), std::min<std::size_t>(exact.size(), 4)) << "t=" << t;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      EXPECT_EQ(grid[k].first, 2 * exact[k].index);
      // Second-order error ∝ (kh)² with the interior momentum k ~ √(2|s|).
      EXPECT_NEAR(grid[k].second, exact[k].energy, 2e-3 * std::abs(to_scaled(spec).strength(t)));
    }
  }
}

TEST(TdseOracle, StateCountGrowsAsTheWellDeepens) {
  const TrapSpec spec = TrapSpec::rectangular(0.5, 0.0, 1.0);
  TdseOptions o;
  o.max_states = 10;
  std::size_t prev = 0;
  for (double t = 0.5; t < 12.0; t += 0.5) {
    const auto n = track_bound_states(spec, t, o).size();
    EXPECT_GE(n, prev);
    // Root count of z tan z = √(z0² - z²): ⌈z0/π⌉ even states.
    const double z0 = std::sqrt(0.5 * t * t);
    EXPECT_EQ(n, static_cast<std::size_t>(std::ceil(z0 / pi))) << "t=" << t;
    prev = n;
  }
}

TEST(TdseOracle, LabelsStableUnderRefinement) {
  const TrapSpec spec = TrapSpec::rectangular(0.5, -1.0, 2.0);
  TdseOptions fine;
  fine.dx = 0.5 * resolve_grid(spec, 0).dx;
  const auto a = track_bound_states(spec, 3.0), b = track_bound_states(spec, 3.0, fine);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].first, b[k].first);
}

TEST(TdseOracle, SelfCheckFlagsCoarseGrids) {
  TdseOptions ok = quick();
  ok.self_check = true;
  const auto r = evolve(TrapSpec::zero_range(0.0, 1.0), 0, ok);
  EXPECT_LT(r.self_check_change, 0.005);
  TdseOptions coarse = ok;
  coarse.dx = 0.5;
  EXPECT_THROW(evolve(TrapSpec::rectangular(0.5, 0.0, 10.0), 0, coarse), GridUnderResolved);
}

TEST(TdseOracle, TraceCsvLayout) {
  TdseOptions o = quick(20);
  const auto r = evolve(TrapSpec::zero_range(1.0, 1.0), 0, o);
  const CsvTable t = trace_csv(r);
  ASSERT_EQ(t.columns().size(), 3u);
  EXPECT_EQ(t.columns()[0], "tau");
  EXPECT_EQ(t.columns()[1], "P_0");
  EXPECT_EQ(t.columns()[2], "norm");
  bool has_nan = false;
  for (const auto& row : t.rows()) has_nan |= std::isnan(row[1]);
  EXPECT_TRUE(has_nan);
  bool has_dx = false;
  for (const auto& kv : t.header()) has_dx |= kv.first == "dx";
  EXPECT_TRUE(has_dx);
}

TEST(TdseOracle, SurvivalRecord) {
  TdseOptions o = quick();
  o.max_states = 2;
  const auto r = evolve(TrapSpec::rectangular(0.5, 0.0, 10.0), 0, o);
  const auto s = r.survival();
  ASSERT_EQ(s.channels.size(), 2u);
  EXPECT_DOUBLE_EQ(s.p(0, 0), r.p(0));
  EXPECT_DOUBLE_EQ(s.p(0, 1), r.p(2));
  EXPECT_NEAR(s.p_total[0] + s.loss[0], 1.0, 1e-15);
  EXPECT_TRUE(std::isnan(s.p(1, 1)));
}

TEST(TdseOracle, Errors) {
  EXPECT_THROW(evolve(TrapSpec::zero_range(0.0, 1.0), 2), ChannelBudgetExceeded);
  EXPECT_THROW(evolve(TrapSpec::rectangular(0.5, 0.0, 1.0), 1), DomainError);
  TdseOptions bad;
  bad.t_min = 1.0;
  EXPECT_THROW(evolve(TrapSpec::zero_range(0.0, 1.0), 0, bad), ConfigError);
}
