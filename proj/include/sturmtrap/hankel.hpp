// Hankel functions H^(1,2)_ν(z) of real, non-integer order for complex z on
// any sheet of the logarithm.
//
// |z| ≤ 30: ascending series for J_{±ν} in 50-digit arithmetic (the series
// absorbs the cancellation in H = (J_{-ν} - e^{∓iνπ}J_ν)/(±i sin νπ)).
// |z| > 30: Hankel's asymptotic expansion with optimal truncation, evaluated
// after rotating arg z into [-π/2, π/2] with the sheet-connection formulas.
#pragma once

#include <cmath>
#include <complex>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include "sturmtrap/core.hpp"

namespace sturmtrap {

/// z = r e^{iθ} with θ kept explicitly, so values past the principal sheet are
/// addressable.
struct SheetPoint {
  double r = 0.0;
  double theta = 0.0;

  static SheetPoint principal(cplx z) { return {std::abs(z), std::arg(z)}; }
  cplx value() const { return std::polar(r, theta); }
};

struct HankelPair {
  cplx h1{}, h2{};
};

namespace detail {

inline constexpr double kHankelSeriesRadius = 30.0;

inline bool is_integer_order(double nu) { return std::abs(nu - std::round(nu)) < 1e-14; }

/// J_{ν}(z) on an arbitrary sheet from the ascending series, 50 digits.
inline boost::multiprecision::cpp_complex_50 bessel_j_series(double nu_d, SheetPoint z) {
  using real = boost::multiprecision::cpp_bin_float_50;
  using mp = boost::multiprecision::cpp_complex_50;
  const real nu(nu_d);
  const real half_r = real(z.r) / 2;
  // (z/2)^ν = exp(ν ln(r/2) + iνθ)
  const real mag = exp(nu * log(half_r));
  const real ph = nu * real(z.theta);
  const mp pref(mag * cos(ph), mag * sin(ph));
  const real r2 = half_r * half_r;
  const mp w = -mp(r2 * cos(2 * real(z.theta)), r2 * sin(2 * real(z.theta)));  // -(z/2)²

  // term_k = w^k / (k! Γ(ν+k+1)); Γ(ν+1) via the multiprecision gamma.
  mp term = mp(1) / mp(boost::multiprecision::tgamma(nu + 1));
  mp sum = term;
  const real tiny = real("1e-52");
  real peak = abs(term);
  for (int k = 1; k < 2000; ++k) {
    term *= w / mp(real(k) * (nu + k));
    sum += term;
    const real at = abs(term);
    if (at > peak) peak = at;
    if (at < tiny * peak && at < tiny * abs(sum)) break;
  }
  return pref * sum;
}

inline HankelPair hankel_series(double nu, SheetPoint z) {
  using real = boost::multiprecision::cpp_bin_float_50;
  using mp = boost::multiprecision::cpp_complex_50;
  if (is_integer_order(nu)) throw DomainError("hankel: integer order is not supported");
  const mp jp = bessel_j_series(nu, z);
  const mp jm = bessel_j_series(-nu, z);
  const real pi50 = boost::math::constants::pi<real>();
  const real s = sin(real(nu) * pi50);
  const real c = cos(real(nu) * pi50);
  const mp e_minus(c, -s), e_plus(c, s);
  const mp i_s(0, s);
  const mp h1 = (jm - e_minus * jp) / i_s;
  const mp h2 = (jm - e_plus * jp) / (-i_s);
  return {cplx(static_cast<double>(h1.real()), static_cast<double>(h1.imag())),
          cplx(static_cast<double>(h2.real()), static_cast<double>(h2.imag()))};
}

/// Asymptotic expansion for |arg z| ≤ π/2, |z| large. Terms are summed until
/// they stop decreasing or drop below double precision.
inline HankelPair hankel_asymptotic_principal(double nu, cplx z) {
  const double mu4 = 4.0 * nu * nu;
  cplx s1 = 1.0, s2 = 1.0;
  cplx t = 1.0;  // a_k / z^k
  double prev = 1.0;
  cplx ik = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    t *= (mu4 - odd * odd) / (8.0 * k) / z;
    const double at = std::abs(t);
    if (at > prev) break;
    ik *= I;
    s1 += ik * t;
    s2 += std::conj(ik) * t;
    prev = at;
    if (at < 1e-17 * std::abs(s1)) break;
  }
  const cplx pre = std::sqrt(2.0 / (pi * z));
  const cplx om = z - 0.5 * nu * pi - 0.25 * pi;
  return {pre * std::exp(I * om) * s1, pre * std::exp(-I * om) * s2};
}

/// Continues (H¹, H²) from z to z e^{mπi}.
inline HankelPair rotate_sheets(double nu, const HankelPair& h, int m) {
  if (m == 0) return h;
  if (is_integer_order(nu)) throw DomainError("hankel: integer order is not supported");
  const double s = std::sin(nu * pi);
  const cplx em = std::exp(-I * (nu * pi)), ep = std::exp(I * (nu * pi));
  const double sm = std::sin(m * nu * pi);
  return {(-std::sin((m - 1) * nu * pi) * h.h1 - em * sm * h.h2) / s,
          (std::sin((m + 1) * nu * pi) * h.h2 + ep * sm * h.h1) / s};
}

inline HankelPair hankel_asymptotic(double nu, SheetPoint z) {
  const int m = static_cast<int>(std::round(z.theta / pi));
  const double theta0 = z.theta - m * pi;
  const HankelPair base = hankel_asymptotic_principal(nu, std::polar(z.r, theta0));
  return rotate_sheets(nu, base, m);
}

}  // namespace detail

/// Both Hankel functions at a point on any sheet.
inline HankelPair hankel_pair(double nu, SheetPoint z) {
  if (!(z.r > 0.0)) throw DomainError("hankel: z = 0");
  if (z.r <= detail::kHankelSeriesRadius) return detail::hankel_series(nu, z);
  return detail::hankel_asymptotic(nu, z);
}

/// H^(kind)_ν(z), principal branch (arg z ∈ (-π, π]).
inline cplx hankel(double nu, int kind, cplx z) {
  if (kind != 1 && kind != 2) throw DomainError("hankel: kind must be 1 or 2");
  if (z == cplx(0.0)) throw DomainError("hankel: z = 0");
  const HankelPair h = hankel_pair(nu, SheetPoint::principal(z));
  return kind == 1 ? h.h1 : h.h2;
}

inline cplx hankel(double nu, int kind, SheetPoint z) {
  if (kind != 1 && kind != 2) throw DomainError("hankel: kind must be 1 or 2");
  const HankelPair h = hankel_pair(nu, z);
  return kind == 1 ? h.h1 : h.h2;
}

/// dH/dz from H'_ν = H_{ν-1} - (ν/z) H_ν (valid on every sheet).
inline HankelPair hankel_pair_derivative(double nu, SheetPoint z) {
  const HankelPair lo = hankel_pair(nu - 1.0, z);
  const HankelPair h = hankel_pair(nu, z);
  const cplx zz = z.value();
  return {lo.h1 - nu / zz * h.h1, lo.h2 - nu / zz * h.h2};
}

inline cplx hankel_derivative(double nu, int kind, cplx z) {
  const HankelPair d = hankel_pair_derivative(nu, SheetPoint::principal(z));
  return kind == 1 ? d.h1 : d.h2;
}

}  // namespace sturmtrap
