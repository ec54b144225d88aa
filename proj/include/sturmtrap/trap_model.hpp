// Trap potentials V(x,t) = (ℰ - v²t²) W(x), adiabatic bound states and the
// dimensionless scalings used by every solver.
//
// Sign convention: the well is attractive while s(t) = ℰ - v²t² < 0, so a
// state bound at t → -∞ is squeezed out near t = 0 when ℰ > 0.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "sturmtrap/core.hpp"
#include "sturmtrap/detail/quadrature.hpp"
#include "sturmtrap/detail/taylor_shooting.hpp"

namespace sturmtrap {

enum class Shape { ZeroRange, Rectangular, ParabolicCutoff };

inline const char* to_string(Shape s) {
  switch (s) {
    case Shape::ZeroRange: return "zero-range";
    case Shape::Rectangular: return "rectangular";
    case Shape::ParabolicCutoff: return "parabolic";
  }
  return "?";
}

inline Shape shape_from_string(const std::string& s) {
  if (s == "zero-range") return Shape::ZeroRange;
  if (s == "rectangular") return Shape::Rectangular;
  if (s == "parabolic") return Shape::ParabolicCutoff;
  throw ConfigError("trap.shape", "unknown shape '" + s + "'");
}

struct TrapSpec {
  Shape shape = Shape::ZeroRange;
  double half_width = 0.5;  // a; ignored for ZeroRange
  double mass = 1.0;        // μ
  double threshold_offset = 0.0;  // ℰ
  double rate = 1.0;        // v

  static TrapSpec zero_range(double e, double v, double mu = 1.0) {
    return {Shape::ZeroRange, 0.0, mu, e, v};
  }
  static TrapSpec rectangular(double a, double e, double v, double mu = 1.0) {
    return {Shape::Rectangular, a, mu, e, v};
  }
  static TrapSpec parabolic(double a, double e, double v, double mu = 1.0) {
    return {Shape::ParabolicCutoff, a, mu, e, v};
  }

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("trap.mass", "must be > 0");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("trap.rate", "must be > 0");
    if (!std::isfinite(threshold_offset)) throw ConfigError("trap.threshold_offset", "must be finite");
    if (shape != Shape::ZeroRange && !(half_width > 0.0))
      throw ConfigError("trap.half_width", "must be > 0");
  }

  /// s(t) = ℰ - v²t².
  double strength(double t) const { return threshold_offset - rate * rate * t * t; }

  /// W(x); the zero-range δ(x) has no pointwise value and returns 0.
  double profile(double x) const {
    const double ax = std::abs(x);
    switch (shape) {
      case Shape::ZeroRange: return 0.0;
      case Shape::Rectangular: return ax <= half_width ? 0.5 / half_width : 0.0;
      case Shape::ParabolicCutoff:
        return ax <= half_width ? 1.5 * x * x / (half_width * half_width * half_width) : 0.0;
    }
    return 0.0;
  }
};

/// ∫W dx: exact for ZeroRange, adaptive quadrature otherwise.
inline double profile_integral(const TrapSpec& spec) {
  if (spec.shape == Shape::ZeroRange) return 1.0;
  const double a = spec.half_width;
  auto f = [&](double x) { return spec.profile(x); };
  return 2.0 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, a, 8, 1e-15);
}

struct PotentialValue {
  double value = 0.0;
  bool distributional = false;  // value multiplies δ(x)
};

inline PotentialValue potential_at(const TrapSpec& spec, double x, double t) {
  if (spec.shape == Shape::ZeroRange) return {spec.strength(t), true};
  return {spec.strength(t) * spec.profile(x), false};
}

struct ScalingParams {
  // ZeroRange: τ = τ_scale·t, y = y_scale·x, γ = ℰμ^{2/5}v^{-2/5}.
  double gamma = 0.0;
  double tau_scale = 1.0;
  double y_scale = 1.0;
  // Finite range, unit-width well with ∫W = 1 and μ = 1:
  // ℰ̄ = 2μaℰ, v̄ = 4√2 μ^{3/2} a^{5/2} v, ω̄ = 4μa²ω, τ = t/(4μa²), y = x/2a.
  double e_bar = 0.0;
  double v_bar = 0.0;
  double energy_scale = 1.0;  // ω̄/ω
  double length_scale = 1.0;  // x/y
};

inline ScalingParams scaling(const TrapSpec& spec) {
  ScalingParams s;
  const double mu = spec.mass, v = spec.rate;
  if (spec.shape == Shape::ZeroRange) {
    s.gamma = spec.threshold_offset * std::pow(mu, 0.4) * std::pow(v, -0.4);
    s.tau_scale = std::pow(mu, 0.2) * std::pow(v, 0.8);
    s.y_scale = std::pow(mu, 0.6) * std::pow(v, 0.4);
    s.energy_scale = std::pow(mu, -0.2) * std::pow(v, -0.8);  // ω̄ = ω/τ_scale
    s.length_scale = 1.0 / s.y_scale;
    s.e_bar = s.gamma;
    s.v_bar = 1.0;
  } else {
    const double a = spec.half_width;
    s.e_bar = 2.0 * mu * a * spec.threshold_offset;
    s.v_bar = 4.0 * std::sqrt(2.0) * std::pow(mu, 1.5) * std::pow(a, 2.5) * v;
    s.energy_scale = 4.0 * mu * a * a;
    s.length_scale = 2.0 * a;
    s.tau_scale = 1.0 / s.energy_scale;
    s.y_scale = 1.0 / s.length_scale;
  }
  return s;
}

/// Equivalent trap in internal units (μ = 1; ZeroRange also v = 1; finite
/// range on a unit-width well).
inline TrapSpec to_scaled(const TrapSpec& spec) {
  const ScalingParams s = scaling(spec);
  if (spec.shape == Shape::ZeroRange) return TrapSpec::zero_range(s.gamma, 1.0, 1.0);
  return {spec.shape, 0.5, 1.0, s.e_bar, s.v_bar};
}

/// One even-parity adiabatic state of the instantaneous Hamiltonian.
struct AdiabaticState {
  int index = 0;
  double energy = 0.0;
  double kappa = 0.0;  // exterior decay constant √(-2μE)
  std::function<double(double)> wavefunction;  // normalized, real

  double operator()(double x) const { return wavefunction(x); }
};

inline AdiabaticState bound_state_zero_range(const TrapSpec& spec, double t) {
  if (spec.shape != Shape::ZeroRange) throw DomainError("bound_state_zero_range: shape is not zero-range");
  const double s = spec.strength(t);
  if (!(s < 0.0)) throw NoBoundState("zero-range well is not attractive at this time");
  const double kappa = spec.mass * (-s);
  AdiabaticState st;
  st.index = 0;
  st.kappa = kappa;
  st.energy = -kappa * kappa / (2.0 * spec.mass);
  const double amp = std::sqrt(kappa);
  st.wavefunction = [amp, kappa](double x) { return amp * std::exp(-kappa * std::abs(x)); };
  return st;
}

/// z0 = a√(2μU) for the rectangular well of depth U = |s|/2a.
inline double rectangular_z0(const TrapSpec& spec, double s) {
  return std::sqrt(std::max(0.0, spec.mass * spec.half_width * (-s)));
}

/// Even states of a rectangular well of strength s < 0 (z tan z = √(z0²-z²)).
inline std::vector<AdiabaticState> rectangular_states_at_strength(const TrapSpec& spec, double s) {
  const double a = spec.half_width, mu = spec.mass;
  const double z0 = rectangular_z0(spec, s);
  std::vector<AdiabaticState> out;
  for (int j = 0; j * pi < z0; ++j) {
    auto f = [z0](double z) { return z * std::sin(z) - std::sqrt(std::max(0.0, z0 * z0 - z * z)) * std::cos(z); };
    const double lo = j * pi;
    const double hi = std::min(j * pi + 0.5 * pi, z0);
    double z;
    if (hi - lo < 1e-300) {
      z = lo;
    } else {
      boost::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(f, lo, hi, f(lo), f(hi),
                                                 boost::math::tools::eps_tolerance<double>(52), it);
      z = 0.5 * (r.first + r.second);
    }
    const double zc = std::sqrt(std::max(0.0, z0 * z0 - z * z));
    if (!(zc > 0.0)) continue;  // exactly at threshold: not bound
    const double p = z / a, kappa = zc / a;
    const double c = std::cos(p * a);
    const double norm2 = a + std::sin(2.0 * p * a) / (2.0 * p) + c * c / kappa;
    const double amp = 1.0 / std::sqrt(norm2);
    AdiabaticState st;
    st.index = j;
    st.kappa = kappa;
    st.energy = -kappa * kappa / (2.0 * mu);
    st.wavefunction = [amp, p, kappa, a, c](double x) {
      const double ax = std::abs(x);
      return ax <= a ? amp * std::cos(p * ax) : amp * c * std::exp(-kappa * (ax - a));
    };
    out.push_back(std::move(st));
  }
  return out;
}

namespace detail {

/// Unit-width polynomial profile for a finite-range shape (μ = 1, a = 1/2).
inline PolynomialProfile scaled_profile(Shape shape) {
  if (shape == Shape::Rectangular) return {{1.0}, 0.5};
  if (shape == Shape::ParabolicCutoff) return {{0.0, 0.0, 12.0}, 0.5};
  throw DomainError("scaled_profile: zero-range has no polynomial profile");
}

/// Even bound states of S'' = 2(sW - E)S on the unit-width well, by scanning
/// the matching residual S'(a) + κS(a) in E and refining with TOMS 748.
inline std::vector<AdiabaticState> polynomial_states_scaled(const PolynomialProfile& w, double s) {
  std::vector<AdiabaticState> out;
  if (!(s < 0.0)) return out;
  const double a = w.half_width;
  const double e_floor = s * w.max_abs();
  auto residual = [&](double e) {
    const double kappa = std::sqrt(-2.0 * e);
    const auto r = shoot(w, s, e);
    // Scale out the growth of S so the bracket test sees O(1) numbers.
    const double m = std::max(std::abs(r.s_edge.v), std::abs(r.ds_edge.v) / (1.0 + kappa));
    return (r.ds_edge.v.real() + kappa * r.s_edge.v.real()) / m;
  };
  // Uniform grid in the local momentum √(E - E_floor).
  const double pmax = std::sqrt(-e_floor);
  const int n = 400 + static_cast<int>(40.0 * pmax);
  auto e_at = [&](int i) {
    const double u = pmax * i / n;
    return std::min(e_floor + u * u, -1e-14);
  };
  double e_prev = e_at(0), f_prev = residual(e_prev);
  for (int i = 1; i <= n; ++i) {
    const double e = e_at(i);
    const double f = residual(e);
    if ((f_prev < 0.0) != (f < 0.0) && e > e_prev) {
      boost::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(residual, e_prev, e, f_prev, f,
                                                 boost::math::tools::eps_tolerance<double>(50), it);
      const double e_root = 0.5 * (r.first + r.second);
      const double kappa = std::sqrt(-2.0 * e_root);
      auto sr = std::make_shared<ShootingResult>(shoot(w, s, e_root, 1.0, true));
      // Reject spurious sign flips at poles of the scaled residual.
      if (std::abs(residual(e_root)) < 1e-6) {
        double inner = 0.0;
        const auto& gl = gauss_legendre<32>();
        for (const auto& patch : sr->patches)
          for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double tt = 0.5 * patch.h * (gl.nodes[k] + 1.0);
            const double sv = patch.value(tt).v.real();
            inner += 0.5 * patch.h * gl.weights[k] * sv * sv;
          }
        const double se = sr->s_edge.v.real();
        const double amp = 1.0 / std::sqrt(2.0 * inner + se * se / kappa);
        AdiabaticState st;
        st.index = static_cast<int>(out.size());
        st.energy = e_root;
        st.kappa = kappa;
        st.wavefunction = [sr, amp, kappa, a, se](double x) {
          const double ax = std::abs(x);
          if (ax >= a) return amp * se * std::exp(-kappa * (ax - a));
          const auto& ps = sr->patches;
          std::size_t k = std::min(ps.size() - 1, static_cast<std::size_t>(ax / ps.front().h));
          return amp * ps[k].value(ax - ps[k].x0).v.real();
        };
        out.push_back(std::move(st));
      }
    }
    e_prev = e;
    f_prev = f;
  }
  return out;
}

}  // namespace detail

/// All even bound states at time t, ordered by energy.
inline std::vector<AdiabaticState> bound_states(const TrapSpec& spec, double t) {
  const double s = spec.strength(t);
  std::vector<AdiabaticState> out;
  switch (spec.shape) {
    case Shape::ZeroRange:
      if (s < 0.0) out.push_back(bound_state_zero_range(spec, t));
      break;
    case Shape::Rectangular:
      out = rectangular_states_at_strength(spec, s);
      break;
    case Shape::ParabolicCutoff: {
      const ScalingParams sc = scaling(spec);
      const double s_bar = 2.0 * spec.mass * spec.half_width * s;
      auto scaled = detail::polynomial_states_scaled(detail::scaled_profile(spec.shape), s_bar);
      const double l = sc.length_scale, es = sc.energy_scale;
      for (auto& st : scaled) {
        AdiabaticState p;
        p.index = st.index;
        p.energy = st.energy / es;
        p.kappa = st.kappa / l;
        p.wavefunction = [f = st.wavefunction, l](double x) { return f(x / l) / std::sqrt(l); };
        out.push_back(std::move(p));
      }
      break;
    }
  }
  return out;
}

inline std::vector<AdiabaticState> bound_states_rectangular(const TrapSpec& spec, double t) {
  if (spec.shape != Shape::Rectangular) throw DomainError("bound_states_rectangular: shape is not rectangular");
  auto out = bound_states(spec, t);
  if (out.empty()) throw NoBoundState("no even state bound in the rectangular well");
  return out;
}

/// Strength s_n < 0 at which the n-th even state (n = 0, 1, ...) enters the
/// well; 0 for the ground state of every shape considered here.
inline double entry_strength(const TrapSpec& spec, int n) {
  if (n == 0) return 0.0;
  if (spec.shape == Shape::ZeroRange) return -std::numeric_limits<double>::infinity();
  if (spec.shape == Shape::Rectangular) return -(n * pi) * (n * pi) / (spec.mass * spec.half_width);
  // Parabolic: bisect on the state count in scaled units.
  const auto w = detail::scaled_profile(spec.shape);
  auto count = [&](double s_bar) { return static_cast<int>(detail::polynomial_states_scaled(w, s_bar).size()); };
  double lo = -1.0, hi = 0.0;
  while (count(lo) <= n) lo *= 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (count(mid) > n ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / (2.0 * spec.mass * spec.half_width);
}

/// Open time intervals on which even state n is bound (|t| > t_n symmetric).
struct ExistenceWindow {
  bool always = false;   // bound for every t
  bool never = false;
  double t_entry = 0.0;  // bound for |t| > t_entry otherwise
};

inline ExistenceWindow existence_window(const TrapSpec& spec, int n) {
  const double s_n = entry_strength(spec, n);
  ExistenceWindow w;
  if (!std::isfinite(s_n)) {
    w.never = true;
    return w;
  }
  // Bound when ℰ - v²t² < s_n.
  const double d = spec.threshold_offset - s_n;
  if (d < 0.0) {
    w.always = true;
  } else {
    w.t_entry = std::sqrt(d) / spec.rate;
  }
  return w;
}

/// Start time for dynamics: |E_0(t_min)| ≥ factor × v^{4/5}μ^{1/5}.
inline double start_time(const TrapSpec& spec, double factor = 50.0) {
  const double target = factor * std::pow(spec.rate, 0.8) * std::pow(spec.mass, 0.2);
  double t = -1.0 / spec.rate;
  for (int i = 0; i < 200; ++i) {
    const auto states = bound_states(spec, t);
    if (!states.empty() && -states.front().energy >= target) return t;
    t *= 1.25;
  }
  return t;
}

}  // namespace sturmtrap
