// Exact and near-exact results at the continuum threshold.
//
// Zero range, ℰ = 0: B'' = v⁻² i√(2/μ) √ω B is solved by
//   B(ω) = √ω H¹_{2/5}(z),  z = (4/5)(2/μ)^{1/4} v⁻¹ e^{3πi/4} ω^{5/4},
// continued through the upper half plane, so ω = |ω|e^{iπ} puts z on the
// sheet arg z = 2π. Rotating H¹ back to arg z = 0 splits it into H¹ (incoming)
// and H² (outgoing) with |ratio|² = 4cos²(2π/5).
//
// Finite range, state m near its entry strength ρ⁰: κ(ρ) ≈ C(ρ⁰ - ρ) turns the
// Sturmian branch into ρ_m(ω) ≈ ρ⁰ + i√(2μω)/C, the zero-range law with μ → C².
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "sturmtrap/core.hpp"
#include "sturmtrap/csv.hpp"
#include "sturmtrap/hankel.hpp"
#include "sturmtrap/reflection_solver.hpp"
#include "sturmtrap/sturmian_basis.hpp"
#include "sturmtrap/trap_model.hpp"

namespace sturmtrap {

inline constexpr double kThresholdOrder = 0.4;

/// 4cos²(2π/5) = (3 - √5)/2.
inline double universal_constant() {
  const double c = std::cos(0.4 * pi);
  return 4.0 * c * c;
}

/// |z|/|ω|^{5/4} for the threshold solution.
inline double threshold_z_coefficient(double rate, double mass = 1.0) {
  return 0.8 * std::pow(2.0 / mass, 0.25) / rate;
}

/// K in |B| ~ ω^{-1/8} exp(-K ω^{5/4}/v).
inline double threshold_decay_constant(double mass = 1.0) { return std::pow(2.0, 1.75) / (5.0 * std::pow(mass, 0.25)); }

inline SheetPoint threshold_argument(cplx omega, double rate, double mass = 1.0) {
  const double th = sheet_arg(omega);
  return {threshold_z_coefficient(rate, mass) * std::pow(std::abs(omega), 1.25), 0.75 * pi + 1.25 * th};
}

/// B(ω) = √ω H¹_{2/5}(z) for ω on the first sheet (arg ω ∈ [0, 2π)); the
/// finite limit is returned at ω = 0.
inline cplx analytic_threshold_solution(cplx omega, double rate, double mass = 1.0) {
  const double nu = kThresholdOrder;
  if (omega == cplx(0.0)) {
    const double half_c = 0.5 * threshold_z_coefficient(rate, mass);
    return std::pow(half_c, -nu) * std::exp(-I * (0.75 * pi * nu)) /
           (boost::math::tgamma(1.0 - nu) * I * std::sin(nu * pi));
  }
  const double th = sheet_arg(omega);
  const cplx root = std::polar(std::sqrt(std::abs(omega)), 0.5 * th);
  return root * hankel(nu, 1, threshold_argument(omega, rate, mass));
}

inline cplx analytic_threshold_solution(double omega, double rate, double mass = 1.0) {
  return analytic_threshold_solution(cplx(omega, 0.0), rate, mass);
}

/// dB/dω of the threshold solution (ω ≠ 0).
inline cplx analytic_threshold_derivative(cplx omega, double rate, double mass = 1.0) {
  if (omega == cplx(0.0)) throw DomainError("analytic_threshold_derivative: ω = 0");
  const double nu = kThresholdOrder;
  const double th = sheet_arg(omega);
  const cplx root = std::polar(std::sqrt(std::abs(omega)), 0.5 * th);
  const SheetPoint z = threshold_argument(omega, rate, mass);
  const cplx h = hankel(nu, 1, z);
  const cplx dh = hankel_pair_derivative(nu, z).h1;
  return h / (2.0 * root) + root * dh * 1.25 * z.value() / omega;
}

/// Amplitudes of the threshold solution at ω → -∞ on the real axis:
/// H¹(r e^{2πi}) = a_in H¹(r) + a_out H²(r).
struct ThresholdAmplitudes {
  cplx incoming, outgoing;
  double probability() const { return std::norm(outgoing / incoming); }
};

inline ThresholdAmplitudes threshold_connection() {
  const double nu = kThresholdOrder;
  return {detail::rotate_sheets(nu, HankelPair{1.0, 0.0}, 2).h1, detail::rotate_sheets(nu, HankelPair{0.0, 1.0}, 2).h1};
}

/// Numerically integrated B(ω) vs the analytic solution on the part of the
/// contour with |ω| ≤ window·v^{4/5}μ^{-1/5}.
struct ThresholdComparison {
  double max_relative_deviation = 0.0;
  std::size_t points = 0;
  cplx normalization;
};

inline ThresholdComparison compare_threshold_solution(double rate, double mass = 1.0, double window = 5.0,
                                                      ReflectionOptions opt = {}) {
  opt.record_trajectory = true;
  const ZeroRangeChannels ch(mass);
  const ReflectionSolver<ZeroRangeChannels> solver(ch, 0.0, rate, opt);
  const BackwardSolution sol = solver.integrate_backward();
  const double lim = window * std::pow(rate, 0.8) / std::pow(mass, 0.2);
  std::vector<cplx> ratio;
  std::size_t ref = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& smp : sol.trajectory) {
    if (std::abs(smp.omega) > lim) continue;
    const cplx num = smp.b(0, 0) * std::exp(smp.log_scale);
    ratio.push_back(num / analytic_threshold_solution(smp.omega, rate, mass));
    if (std::abs(smp.omega) < best) {
      best = std::abs(smp.omega);
      ref = ratio.size() - 1;
    }
  }
  ThresholdComparison out;
  if (ratio.empty()) throw Error("compare_threshold_solution: no samples in the window");
  out.normalization = ratio[ref];
  out.points = ratio.size();
  for (const cplx& r : ratio) out.max_relative_deviation = std::max(out.max_relative_deviation, std::abs(r / ratio[ref] - 1.0));
  return out;
}

/// κ(ρ) ≈ C(ρ⁰ - ρ) near the entry strength of an even state (internal units:
/// μ = 1, unit-width well; ρ < ρ⁰ is bound).
struct ThresholdPoleModel {
  int channel = 0;          // n = 0, 2, 4, ...
  double c = 0.0;           // slope C > 0
  double rho0 = 0.0;        // entry strength ρ⁰
  double intercept = 0.0;   // fitted κ at ρ⁰ (ideally 0)
  double window = 0.0;      // fitted ρ ∈ [ρ⁰ - window, ρ⁰)
  double residual = 0.0;    // max |κ - fit| / max κ
  double mass = 1.0;
  std::vector<double> rho, kappa;

  double kappa_at(double r) const { return c * (rho0 - r); }
  double scattering_length(double r) const { return -1.0 / kappa_at(r); }
  cplx predicted_rho(cplx omega) const { return rho0 + I * std::sqrt(2.0 * mass) * sheet_sqrt(omega) / c; }

  CsvTable csv() const {
    CsvTable t({"rho", "kappa", "kappa_fit"});
    t.meta("channel", static_cast<double>(channel));
    t.meta("C", c);
    t.meta("rho0", rho0);
    t.meta("window", window);
    t.meta("residual", residual);
    for (std::size_t i = 0; i < rho.size(); ++i) t.row({rho[i], kappa[i], kappa_at(rho[i])});
    return t;
  }
};

namespace detail {

inline double bound_kappa_internal(Shape shape, int j, double s) {
  std::vector<AdiabaticState> st;
  if (shape == Shape::Rectangular)
    st = rectangular_states_at_strength(TrapSpec::rectangular(0.5, 0.0, 1.0), s);
  else
    st = polynomial_states_scaled(scaled_profile(shape), s);
  for (const auto& x : st)
    if (x.index == j) return x.kappa;
  throw NoBoundState("state " + std::to_string(j) + " is not bound at strength " + format_number(s));
}

}  // namespace detail

/// Fits C from bound-state decay constants on |ρ - ρ⁰| ≤ 0.05|ρ⁰| (0.05 for
/// ρ⁰ = 0), halving the window until the linear residual is below `tol`.
inline ThresholdPoleModel fit_threshold_pole(const TrapSpec& spec, int channel, double tol = 1e-3) {
  if (spec.shape == Shape::ZeroRange) throw DomainError("fit_threshold_pole: finite-range shapes only");
  if (channel < 0 || channel % 2 != 0) throw DomainError("fit_threshold_pole: channel must be even");
  const int j = channel / 2;
  const TrapSpec internal = spec.shape == Shape::Rectangular ? TrapSpec::rectangular(0.5, 0.0, 1.0)
                                                             : TrapSpec::parabolic(0.5, 0.0, 1.0);
  ThresholdPoleModel m;
  m.channel = channel;
  m.rho0 = entry_strength(internal, j);
  double window = m.rho0 == 0.0 ? 0.05 : 0.05 * std::abs(m.rho0);
  for (int attempt = 0; attempt < 20; ++attempt, window *= 0.5) {
    const int npts = 21;
    std::vector<double> r(npts), k(npts);
    for (int i = 0; i < npts; ++i) {
      r[i] = m.rho0 - window * (i + 1.0) / npts;
      k[i] = detail::bound_kappa_internal(spec.shape, j, r[i]);
    }
    Eigen::MatrixXd A(npts, 2);
    Eigen::VectorXd y(npts);
    for (int i = 0; i < npts; ++i) {
      A(i, 0) = m.rho0 - r[i];
      A(i, 1) = 1.0;
      y(i) = k[i];
    }
    const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(y);
    const double res = (A * sol - y).cwiseAbs().maxCoeff() / y.cwiseAbs().maxCoeff();
    m.c = sol(0);
    m.intercept = sol(1);
    m.window = window;
    m.residual = res;
    m.rho = r;
    m.kappa = k;
    if (res <= tol) {
      if (!(m.c > 0.0)) throw FitWindowTooWide("fitted slope is not positive");
      return m;
    }
  }
  throw FitWindowTooWide("linear κ(ρ) residual " + format_number(m.residual) + " above " + format_number(tol));
}

/// Reduced single channel ρ(ω) = ρ⁰ + i√(2μω)/C.
class ThresholdPoleChannels {
 public:
  explicit ThresholdPoleChannels(const ThresholdPoleModel& m) : m_(m) {}

  std::size_t size() const { return 1; }
  int index(std::size_t) const { return m_.channel; }
  cplx rho(std::size_t, cplx omega) const { return m_.predicted_rho(omega); }
  bool has_couplings() const { return false; }

  void evaluate(cplx omega, ChannelCoefficients& c) const {
    c.rho.assign(1, m_.predicted_rho(omega));
    c.drho.assign(1, I * std::sqrt(2.0 * m_.mass) / (2.0 * m_.c * sheet_sqrt(omega)));
    c.m1.setZero(1, 1);
    c.m2.setZero(1, 1);
  }
  void evaluate_rhs(cplx omega, ChannelCoefficients& c) const { evaluate(omega, c); }

 private:
  ThresholdPoleModel m_;
};

/// P_stay of the reduced equation B'' + v⁻²(ρ⁰ - ρ(ω))B = 0 at ℰ = ρ⁰.
inline double reduced_threshold_probability(const ThresholdPoleModel& m, double v_bar, const ReflectionOptions& opt = {}) {
  const ThresholdPoleChannels ch(m);
  return ReflectionSolver<ThresholdPoleChannels>(ch, m.rho0, v_bar, opt).solve().p(0, 0);
}

/// Single-Sturmian P_mm with state m tuned to touch threshold (ℰ̄ = ρ⁰_m).
inline double threshold_touch_probability(Shape shape, int channel, double v_bar, bool with_m2 = false,
                                          const ReflectionOptions& opt = {}) {
  const TrapSpec internal = shape == Shape::Rectangular ? TrapSpec::rectangular(0.5, 0.0, v_bar)
                                                        : TrapSpec::parabolic(0.5, 0.0, v_bar);
  TrapSpec spec = internal;
  spec.threshold_offset = entry_strength(internal, channel / 2);
  return solve_single_sturmian(spec, channel, with_m2, opt).p(0, 0);
}

}  // namespace sturmtrap
