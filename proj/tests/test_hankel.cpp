#include <gtest/gtest.h>

#include "sturmtrap/hankel.hpp"

using namespace sturmtrap;

namespace {

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST(Hankel, WronskianAtOnePlusI) {
  const cplx z(1.0, 1.0);
  const auto h = hankel_pair(0.4, SheetPoint::principal(z));
  const auto d = hankel_pair_derivative(0.4, SheetPoint::principal(z));
  const cplx w = h.h1 * d.h2 - d.h1 * h.h2;
  EXPECT_LT(rel(w, -4.0 * I / (pi * z)), 1e-10);
}

TEST(Hankel, WronskianOnComplexGrid) {
  // 10 × 10 grid in |z| ∈ [0.2, 60], arg ∈ (-π, π).
  int n = 0;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double r = 0.2 * std::pow(300.0, i / 9.0);
    for (int j = 0; j < 10; ++j) {
      const double th = -0.95 * pi + 1.9 * pi * j / 9.0;
      const SheetPoint z{r, th};
      const auto h = hankel_pair(0.4, z);
      const auto d = hankel_pair_derivative(0.4, z);
      const cplx w = h.h1 * d.h2 - d.h1 * h.h2;
      worst = std::max(worst, rel(w, -4.0 * I / (pi * z.value())));
      ++n;
    }
  }
  EXPECT_EQ(n, 100);
  EXPECT_LT(worst, 1e-10);
}

TEST(Hankel, HalfOrderClosedForm) {
  // H¹_{1/2}(z) = -i(2/πz)^{1/2} e^{iz}
  for (cplx z : {cplx(2.0), cplx(0.3, 0.7), cplx(40.0, 3.0), cplx(-5.0, 2.0)}) {
    const cplx oracle = -I * std::sqrt(2.0 / (pi * z)) * std::exp(I * z);
    EXPECT_LT(rel(hankel(0.5, 1, z), oracle), 1e-12) << z;
    const cplx oracle2 = I * std::sqrt(2.0 / (pi * z)) * std::exp(-I * z);
    EXPECT_LT(rel(hankel(0.5, 2, z), oracle2), 1e-12) << z;
  }
}

TEST(Hankel, SeriesAndAsymptoticAgreeInOverlapBand) {
  for (double r : {25.0, 27.5, 30.0}) {
    for (double th : {-1.4, -0.6, 0.0, 0.9, 1.5, 2.3, 3.9, 5.5}) {
      const SheetPoint z{r, th};
      const auto a = detail::hankel_series(0.4, z);
      const auto b = detail::hankel_asymptotic(0.4, z);
      EXPECT_LT(std::abs(a.h1 - b.h1), 1e-8 * std::max(std::abs(a.h1), std::abs(a.h2))) << r << " " << th;
      EXPECT_LT(std::abs(a.h2 - b.h2), 1e-8 * std::max(std::abs(a.h1), std::abs(a.h2))) << r << " " << th;
    }
  }
}

TEST(Hankel, LargeArgumentLeadingForm) {
  const double nu = 0.4;
  for (double x : {40.0, 100.0, 1000.0}) {
    const cplx lead = std::sqrt(2.0 / (pi * x)) * std::exp(I * (x - nu * pi / 2 - pi / 4));
    EXPECT_LT(rel(hankel(nu, 1, cplx(x)), lead), 1.0 / x);
  }
}

TEST(Hankel, ConnectionFormula) {
  // H¹(z') = 2cos(2π/5)H¹(z) + e^{-2πi/5}H²(z) with z' = ρe^{3πi/4} and
  // z = z'e^{iπ}: z sits on the continued sheet (arg 7π/4).
  const double nu = 0.4;
  for (double r : {0.5, 2.0, 10.0}) {
    const SheetPoint zp{r, 0.75 * pi};
    const SheetPoint z{r, 1.75 * pi};
    const auto h = hankel_pair(nu, z);
    const cplx lhs = hankel(nu, 1, zp);
    const cplx res = lhs - 2.0 * std::cos(2 * pi / 5) * h.h1 - std::exp(-2.0 * pi * I / 5.0) * h.h2;
    EXPECT_LT(std::abs(res), 1e-9 * std::abs(lhs)) << r;
  }
}

TEST(Hankel, Errors) {
  EXPECT_THROW(hankel(0.4, 1, cplx(0.0)), DomainError);
  EXPECT_THROW(hankel(1.0, 1, cplx(2.0)), DomainError);
  EXPECT_THROW(hankel(0.4, 3, cplx(2.0)), DomainError);
}

TEST(Hankel, ReferenceValues) {
  // Independent 30-digit values (mpmath).
  EXPECT_LT(rel(hankel(0.4, 1, cplx(3, 2)), cplx(0.0160068268551297932, 0.0541405731644728946)), 1e-12);
  EXPECT_LT(rel(hankel(0.4, 2, cplx(3, 2)), cplx(-0.915767689290156955, -2.98542325245710178)), 1e-12);
  EXPECT_LT(rel(hankel(0.4, 1, cplx(0.1, -0.05)), cplx(0.790745960373902569, -2.14251171846954033)), 1e-12);
  EXPECT_LT(rel(hankel(0.4, 2, std::polar(45.0, 2.0)), cplx(67265419255481661.85, 20098035229333157.63)), 1e-10);
  EXPECT_LT(rel(hankel(0.4, 1, std::polar(80.0, -1.2)), cplx(-2.14199847926562006e31, 2.14130202467746068e30)), 1e-10);
}
