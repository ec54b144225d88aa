// Piecewise Taylor-series shooting for S'' = 2μ(ρ W(x) - ω) S on [0, a]
// with even initial data S(0)=1, S'(0)=0, where W is a polynomial on the
// well. Coefficients are carried as first-order jets in (ρ, ω) so the
// matching residual and its partial derivatives come out of one pass.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sturmtrap/core.hpp"
#include "sturmtrap/detail/quadrature.hpp"

namespace sturmtrap::detail {

/// Value with partial derivatives with respect to ρ and ω.
struct Jet {
  cplx v{}, dr{}, dw{};

  Jet() = default;
  Jet(cplx value, cplx d_rho = 0.0, cplx d_omega = 0.0) : v(value), dr(d_rho), dw(d_omega) {}

  Jet& operator+=(const Jet& o) { v += o.v; dr += o.dr; dw += o.dw; return *this; }
  Jet& operator-=(const Jet& o) { v -= o.v; dr -= o.dr; dw -= o.dw; return *this; }
  Jet& operator*=(cplx s) { v *= s; dr *= s; dw *= s; return *this; }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, cplx s) { return a *= s; }
  friend Jet operator*(cplx s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    return {a.v * b.v, a.dr * b.v + a.v * b.dr, a.dw * b.v + a.v * b.dw};
  }
};

/// Even polynomial profile W(x) = Σ c_k |x|^k for |x| ≤ a, zero outside.
struct PolynomialProfile {
  std::vector<double> coeffs;
  double half_width = 0.5;

  double operator()(double x) const {
    const double ax = std::abs(x);
    if (ax > half_width) return 0.0;
    double s = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) s = s * ax + coeffs[k];
    return s;
  }

  /// Largest |W| on the well (coefficients are small-degree, sample densely).
  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i <= 64; ++i) m = std::max(m, std::abs((*this)(half_width * i / 64.0)));
    return m;
  }

  /// Coefficients of W(x0 + t) as a polynomial in t.
  std::vector<double> shifted(double x0) const {
    const std::size_t n = coeffs.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double binom = 1.0;
      double pw = std::pow(x0, static_cast<double>(k));
      for (std::size_t j = 0; j <= k; ++j) {
        // term c_k * C(k,j) * x0^(k-j) * t^j
        out[j] += coeffs[k] * binom * pw;
        binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
        pw = (x0 != 0.0) ? pw / x0 : (j + 1 == k ? 1.0 : 0.0);
      }
    }
    return out;
  }
};

/// Taylor expansion of S about x0, valid on [x0, x0 + h].
struct TaylorPatch {
  double x0 = 0.0;
  double h = 0.0;
  std::vector<Jet> c;

  Jet value(double t) const {
    Jet s;
    for (std::size_t j = c.size(); j-- > 0;) s = s * cplx(t) + c[j];
    return s;
  }
  Jet slope(double t) const {
    Jet s;
    for (std::size_t j = c.size(); j-- > 1;) s = s * cplx(t) + c[j] * cplx(static_cast<double>(j));
    return s;
  }
};

struct ShootingResult {
  Jet s_edge;   // S(a)
  Jet ds_edge;  // S'(a)
  std::vector<TaylorPatch> patches;
};

/// Integrates S'' = 2μ(ρW - ω)S from x = 0 to x = a.
inline ShootingResult shoot(const PolynomialProfile& w, cplx rho, cplx omega, double mass = 1.0,
                            bool keep_patches = false) {
  const double a = w.half_width;
  const double scale = std::sqrt(2.0 * mass * (std::abs(rho) * w.max_abs() + std::abs(omega))) + 1.0;
  const int n_patch = std::max(1, static_cast<int>(std::ceil(a * scale / 1.2)));
  const double h = a / n_patch;

  ShootingResult res;
  Jet s0{1.0}, ds0{0.0};
  const Jet rho_j{rho, 1.0, 0.0};
  const Jet omega_j{omega, 0.0, 1.0};
  constexpr std::size_t kMaxTerms = 200;

  for (int ip = 0; ip < n_patch; ++ip) {
    const double x0 = ip * h;
    const std::vector<double> wk = w.shifted(x0);
    std::vector<Jet> c{s0, ds0};
    c.reserve(64);
    double peak = std::max(std::abs(s0.v), std::abs(ds0.v) * h);
    int small_run = 0;
    for (std::size_t j = 0; j + 2 < kMaxTerms; ++j) {
      Jet acc = omega_j * c[j] * cplx(-1.0);
      Jet conv;
      for (std::size_t k = 0; k < wk.size() && k <= j; ++k) conv += c[j - k] * cplx(wk[k]);
      acc += rho_j * conv;
      const double denom = static_cast<double>((j + 1) * (j + 2));
      Jet next = acc * cplx(2.0 * mass / denom);
      c.push_back(next);
      const double hp = std::pow(h, static_cast<double>(j + 2));
      const double mag = std::max({std::abs(next.v), std::abs(next.dr), std::abs(next.dw)}) * hp;
      peak = std::max(peak, mag);
      if (mag < 1e-18 * peak && j + 2 > wk.size()) {
        if (++small_run >= 3) break;
      } else {
        small_run = 0;
      }
    }
    TaylorPatch patch{x0, h, std::move(c)};
    s0 = patch.value(h);
    ds0 = patch.slope(h);
    if (keep_patches) res.patches.push_back(std::move(patch));
  }
  res.s_edge = s0;
  res.ds_edge = ds0;
  return res;
}

/// W-weighted bilinear integrals over the full well for an even shooting
/// solution: returns {∫W S², ∫W S·Ṡ, ∫W Ṡ²} where Ṡ = S_ρ ρ' + S_ω.
struct WeightedMoments {
  cplx ss{}, sd{}, dd{};
};

inline WeightedMoments weighted_moments(const PolynomialProfile& w, const ShootingResult& r,
                                        cplx drho_domega) {
  WeightedMoments m;
  const auto& gl = gauss_legendre<32>();
  for (const auto& patch : r.patches) {
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = 0.5 * patch.h * (gl.nodes[i] + 1.0);
      const double wt = 0.5 * patch.h * gl.weights[i] * w(patch.x0 + t);
      const Jet s = patch.value(t);
      const cplx sdot = s.dr * drho_domega + s.dw;
      m.ss += wt * s.v * s.v;
      m.sd += wt * s.v * sdot;
      m.dd += wt * sdot * sdot;
    }
  }
  // Even integrand: full well is twice the half well.
  m.ss *= 2.0;
  m.sd *= 2.0;
  m.dd *= 2.0;
  return m;
}

}  // namespace sturmtrap::detail
