// Direct grid integration of
//
//   i∂ₜψ = -ψ''/2μ + s(t)W(x)ψ,   s(t) = ℰ - v²t²,
//
// for even states on the half line x ≥ 0, in the scaled units of to_scaled().
// Second-order finite differences on a uniform grid x_j = jh; the node at
// x = 0 owns the half cell [0, h/2], which turns the even-parity condition
// (and, for the zero-range well, the jump ψ'(0+) = μsψ(0)) into an ordinary
// matrix row. With y_j = √w_j ψ_j the Hamiltonian is a real symmetric
// tridiagonal matrix, Crank-Nicolson is exactly unitary, and bound-state
// projections are plain dot products. A quadratic imaginary potential ahead
// of a hard wall absorbs outgoing flux.
//
// Time steps are uniform in u with dt/du = 1/(1 + θs(t)²), so the deep-well
// ends of the passage get short steps while the scheme stays smooth (second
// order) under refinement of du.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sturmtrap/core.hpp"
#include "sturmtrap/csv.hpp"
#include "sturmtrap/detail/quadrature.hpp"
#include "sturmtrap/reflection_solver.hpp"
#include "sturmtrap/trap_model.hpp"

namespace sturmtrap {

/// Grid and scheme constants; NaN entries are filled by resolve_grid().
/// All lengths and times are in scaled units.
struct TdseOptions {
  double dx = std::numeric_limits<double>::quiet_NaN();
  double inner_length = std::numeric_limits<double>::quiet_NaN();  // well plus free buffer
  double absorber_width = std::numeric_limits<double>::quiet_NaN();
  double absorber_strength = std::numeric_limits<double>::quiet_NaN();
  double du = std::numeric_limits<double>::quiet_NaN();            // stretched time step
  double time_stretch = std::numeric_limits<double>::quiet_NaN();  // θ
  double t_min = std::numeric_limits<double>::quiet_NaN();         // t_max = -t_min
  int samples = 200;     // trace points
  int max_states = 4;    // tracked even states
  bool absorber = true;
  bool self_check = false;
  double self_check_tol = 0.005;
  // Accuracy knobs used by the automatic choices above.
  double dx_factor = 0.1;          // k_res·dx
  double dt_factor = 0.1;          // E_res·du
  double start_phase = 0.5;        // |E_0(t_min)|·dt at the first step
  double absorber_wavelengths = 15.0;
  double start_factor = 50.0;      // |E(t_min)| ≥ factor·v^{4/5} (finite range)
};

/// Resolved grid for one run.
struct TdseGrid {
  TrapSpec scaled;
  double dx = 0.0, inner_length = 0.0, absorber_width = 0.0, absorber_strength = 0.0;
  double du = 0.0, time_stretch = 0.0, t_min = 0.0;
  std::size_t points = 0;
  bool absorber = true;
  bool well = true;             // false: free propagation (calibration runs)
  double momentum_scale = 0.0;  // k used for the absorber calibration

  double length() const { return dx * static_cast<double>(points); }
  double t_max() const { return -t_min; }
};

namespace detail {

/// Even state number j of channel index n (rectangular and parabolic use even n).
inline int even_state_number(const TrapSpec& spec, int channel) {
  if (channel < 0) throw DomainError("channel index must be >= 0");
  if (spec.shape == Shape::ZeroRange) {
    if (channel != 0) throw ChannelBudgetExceeded("the zero-range well has a single bound state");
    return 0;
  }
  if (channel % 2 != 0) throw DomainError("only even-parity channels are supported");
  return channel / 2;
}

inline double max_profile(const TrapSpec& scaled) {
  switch (scaled.shape) {
    case Shape::ZeroRange: return 0.0;
    case Shape::Rectangular: return scaled.profile(0.0);
    case Shape::ParabolicCutoff: return scaled.profile(scaled.half_width);
  }
  return 0.0;
}

}  // namespace detail

/// Fill the automatic grid choices for channel m of spec.
inline TdseGrid resolve_grid(const TrapSpec& spec, int m, const TdseOptions& opt = {}) {
  spec.validate();
  const int j = detail::even_state_number(spec, m);
  TdseGrid g;
  g.scaled = to_scaled(spec);
  const TrapSpec& s = g.scaled;
  const bool zr = s.shape == Shape::ZeroRange;
  const double e_v = std::pow(s.rate, 0.8);  // v^{4/5}μ^{1/5} with μ = 1
  const double k_v = std::sqrt(2.0 * e_v);
  const double w_max = detail::max_profile(s);

  if (std::isfinite(opt.t_min)) {
    g.t_min = opt.t_min;
  } else if (zr) {
    g.t_min = -std::max(8.0, 2.0 * std::sqrt(std::max(0.0, s.threshold_offset)));
  } else {
    const double depth = std::max(0.0, s.threshold_offset - entry_strength(s, j));
    g.t_min = -std::sqrt(depth + opt.start_factor * e_v / std::max(w_max, 1.0)) / s.rate;
  }
  if (!(g.t_min < 0.0)) throw ConfigError("tdse.t_min", "must be < 0");

  // Energy the grid must resolve: the passage scale, the well at t = 0, and
  // the first excited entry if the well gets that deep. Deeper phases are
  // adiabatic and only need a discrete bound state, not an accurate one.
  double e_res = std::max(e_v, zr ? 0.5 * s.threshold_offset * s.threshold_offset : std::abs(s.threshold_offset) * w_max);
  if (!zr) e_res = std::max(e_res, std::min(-s.strength(g.t_min), -entry_strength(s, std::max(j, 1))) * w_max);
  const double k_res = std::sqrt(2.0 * e_res);
  g.momentum_scale = k_v;

  g.dx = std::isfinite(opt.dx) ? opt.dx : (zr ? opt.dx_factor / k_res : std::min(opt.dx_factor / k_res, s.half_width / 20.0));
  g.inner_length = std::isfinite(opt.inner_length) ? opt.inner_length : std::max(zr ? 0.0 : 50.0 * s.half_width, 20.0 / k_v);
  g.absorber = opt.absorber;
  g.absorber_width = std::isfinite(opt.absorber_width) ? opt.absorber_width : opt.absorber_wavelengths * 2.0 * pi / k_v;
  // Round-trip attenuation exp(-4ηw/3k) = 1e-8 at k = 4k_res.
  g.absorber_strength = std::isfinite(opt.absorber_strength) ? opt.absorber_strength
                                                              : 0.75 * std::log(1e8) * 4.0 * k_res / g.absorber_width;
  const double total = g.inner_length + (g.absorber ? g.absorber_width : 0.0);
  g.points = static_cast<std::size_t>(std::ceil(total / g.dx));

  g.du = std::isfinite(opt.du) ? opt.du : opt.dt_factor / e_res;
  if (std::isfinite(opt.time_stretch)) {
    g.time_stretch = opt.time_stretch;
  } else {
    const double s0 = s.strength(g.t_min);
    const double e0 = zr ? 0.5 * s0 * s0 : std::abs(s0) * w_max;
    g.time_stretch = std::max(0.0, (g.du * e0 / opt.start_phase - 1.0) / (s0 * s0));
  }
  if (!(g.dx > 0.0) || !(g.du > 0.0) || g.points < 8) throw ConfigError("tdse.grid", "non-positive grid step");
  return g;
}

/// Bound state of the discrete Hamiltonian (symmetrized amplitudes y_j).
struct GridEigenstate {
  int index = 0;
  double energy = 0.0;
  std::vector<double> y;  // normalized: 2Σy² = 1
};

/// ψ on the half-line grid and its Crank-Nicolson propagator.
class GridState {
 public:
  explicit GridState(const TdseGrid& g) : g_(g), n_(g.points), wbar_(n_), gamma_(n_, 0.0), y_(n_) {
    const double h = g.dx;
    kinetic_ = 1.0 / (g.scaled.mass * h * h);
    off_.assign(n_ > 0 ? n_ - 1 : 0, -0.5 * kinetic_);
    if (n_ > 1) off_[0] = -kinetic_ / std::sqrt(2.0);
    // Cell averages of W; node 0 owns [0, h/2].
    const TrapSpec& s = g.scaled;
    if (!g.well) {
    } else if (s.shape == Shape::ZeroRange) {
      wbar_[0] = 1.0 / h;
    } else {
      const double a = s.half_width;
      for (std::size_t j = 0; j < n_; ++j) {
        const double lo = j == 0 ? 0.0 : (static_cast<double>(j) - 0.5) * h;
        const double hi = (static_cast<double>(j) + 0.5) * h;
        if (lo >= a) break;
        auto f = [&](double x) { return s.profile(x); };
        double acc = detail::integrate_gl<8>(f, lo, std::min(hi, a));
        wbar_[j] = acc / (hi - lo);
      }
    }
    if (g.absorber) {
      const double x0 = g.inner_length;
      for (std::size_t j = 0; j < n_; ++j) {
        const double x = static_cast<double>(j) * h;
        if (x > x0) gamma_[j] = g.absorber_strength * std::pow((x - x0) / g.absorber_width, 2);
      }
    }
  }

  const TdseGrid& grid() const { return g_; }
  std::size_t size() const { return n_; }
  double time() const { return t_; }
  const std::vector<cplx>& y() const { return y_; }

  void set(const std::vector<double>& y, double t) {
    y_.assign(y.begin(), y.end());
    t_ = t;
  }
  void set(const std::vector<cplx>& y, double t) {
    y_ = y;
    t_ = t;
  }

  /// ‖ψ‖² on the full line.
  double norm() const {
    double acc = 0.0;
    for (const auto& v : y_) acc += std::norm(v);
    return 2.0 * acc;
  }

  /// ⟨φ|ψ⟩ on the full line for a real even state.
  cplx overlap(const std::vector<double>& phi) const {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) acc += phi[j] * y_[j];
    return 2.0 * acc;
  }

  /// Diagonal of the real Hamiltonian at strength s.
  double diag(std::size_t j, double s) const { return kinetic_ + s * wbar_[j]; }

  /// One Crank-Nicolson step from t_ to t1 with H at the midpoint.
  void step(double t1) {
    const double dt = t1 - t_;
    const double s = g_.scaled.strength(0.5 * (t_ + t1));
    const cplx c = 0.5 * I * dt;
    // rhs = (1 - cH)y, then solve (1 + cH)y' = rhs by Thomas elimination.
    rhs_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const cplx hd = diag(j, s) - I * gamma_[j];
      cplx hy = hd * y_[j];
      if (j > 0) hy += off_[j - 1] * y_[j - 1];
      if (j + 1 < n_) hy += off_[j] * y_[j + 1];
      rhs_[j] = y_[j] - c * hy;
    }
    cprime_.resize(n_);
    cplx denom = 1.0 + c * (diag(0, s) - I * gamma_[0]);
    cprime_[0] = n_ > 1 ? c * off_[0] / denom : 0.0;
    rhs_[0] /= denom;
    for (std::size_t j = 1; j < n_; ++j) {
      const cplx sub = c * off_[j - 1];
      denom = 1.0 + c * (diag(j, s) - I * gamma_[j]) - sub * cprime_[j - 1];
      cprime_[j] = j + 1 < n_ ? c * off_[j] / denom : 0.0;
      rhs_[j] = (rhs_[j] - sub * rhs_[j - 1]) / denom;
    }
    for (std::size_t j = n_ - 1; j-- > 0;) rhs_[j] -= cprime_[j] * rhs_[j + 1];
    y_.swap(rhs_);
    t_ = t1;
  }

  /// Number of eigenvalues of the real Hamiltonian below lambda (Sturm count).
  int count_below(double s, double lambda) const {
    int count = 0;
    double q = diag(0, s) - lambda;
    if (q < 0.0) ++count;
    for (std::size_t j = 1; j < n_; ++j) {
      if (q == 0.0) q = 1e-300;
      q = diag(j, s) - lambda - off_[j - 1] * off_[j - 1] / q;
      if (q < 0.0) ++count;
    }
    return count;
  }

  /// Bound states (E < 0) of the real Hamiltonian at time t, lowest first.
  /// Previous states, when given, seed Rayleigh-quotient iteration; every
  /// eigenvalue is checked against the Sturm count, with bisection as fallback.
  std::vector<GridEigenstate> bound_states(double t, int max_states,
                                           const std::vector<GridEigenstate>* previous = nullptr) const {
    const double s = g_.scaled.strength(t);
    std::vector<GridEigenstate> out;
    const int nb = std::min(count_below(s, 0.0), max_states);
    if (nb <= 0) return out;
    for (int k = 0; k < nb; ++k) {
      GridEigenstate st;
      st.index = k;
      bool ok = false;
      if (previous && k < static_cast<int>(previous->size())) {
        st.y = (*previous)[static_cast<std::size_t>(k)].y;
        ok = rayleigh_iteration(s, k, st);
      }
      if (!ok) {
        st.energy = bisect(s, k);
        st.y = inverse_iteration(s, st.energy);
      }
      out.push_back(std::move(st));
    }
    return out;
  }

 private:
  double apply_quotient(double s, const std::vector<double>& x) const {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      double hx = diag(j, s) * x[j];
      if (j > 0) hx += off_[j - 1] * x[j - 1];
      if (j + 1 < n_) hx += off_[j] * x[j + 1];
      num += x[j] * hx;
      den += x[j] * x[j];
    }
    return num / den;
  }

  double bisect(double s, int k) const {
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < n_; ++j) lo = std::min(lo, diag(j, s) - 2.0 * kinetic_);
    while (hi - lo > 1e-14 * std::max(1.0, std::abs(lo))) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (count_below(s, mid) > k ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }

  bool rayleigh_iteration(double s, int k, GridEigenstate& st) const {
    double lambda = apply_quotient(s, st.y);
    for (int it = 0; it < 4; ++it) {
      st.y = inverse_iteration(s, lambda, 1);
      const double next = apply_quotient(s, st.y);
      const bool done = std::abs(next - lambda) <= 1e-13 * std::max(1.0, std::abs(next));
      lambda = next;
      if (done) break;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(lambda));
    if (!(lambda < 0.0) || count_below(s, lambda - tol) != k || count_below(s, lambda + tol) != k + 1) return false;
    st.energy = lambda;
    st.y = inverse_iteration(s, lambda, 1, st.y);
    return true;
  }

  std::vector<double> inverse_iteration(double s, double lambda, int iterations = 3,
                                        std::vector<double> x = {}) const {
    if (x.empty()) x.assign(n_, 1.0);
    std::vector<double> cp(n_), r(n_);
    const double shift = lambda + 1e-12 * std::max(1.0, std::abs(lambda));
    for (int it = 0; it < iterations; ++it) {
      double denom = diag(0, s) - shift;
      cp[0] = n_ > 1 ? off_[0] / denom : 0.0;
      r[0] = x[0] / denom;
      for (std::size_t j = 1; j < n_; ++j) {
        denom = diag(j, s) - shift - off_[j - 1] * cp[j - 1];
        cp[j] = j + 1 < n_ ? off_[j] / denom : 0.0;
        r[j] = (x[j] - off_[j - 1] * r[j - 1]) / denom;
      }
      for (std::size_t j = n_ - 1; j-- > 0;) r[j] -= cp[j] * r[j + 1];
      double nrm = 0.0;
      for (double v : r) nrm += v * v;
      nrm = std::sqrt(2.0 * nrm);
      const double sign = r[0] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) x[j] = sign * r[j] / nrm;
    }
    return x;
  }

  TdseGrid g_;
  std::size_t n_;
  double kinetic_ = 0.0;
  std::vector<double> wbar_, gamma_, off_;
  std::vector<cplx> y_, rhs_, cprime_;
  double t_ = 0.0;
};

/// Populations P_n(τ) = |⟨φ_n(τ)|ψ(τ)⟩|²; masked where state n is not bound.
struct PopulationTrace {
  std::vector<int> channels;
  std::vector<double> times;
  std::vector<std::vector<double>> populations;  // [sample][state]
  std::vector<std::vector<char>> exists;         // [sample][state]
  std::vector<double> norm;

  CsvTable csv() const {
    std::vector<std::string> cols{"tau"};
    for (int n : channels) cols.push_back("P_" + std::to_string(n));
    cols.push_back("norm");
    CsvTable t(cols);
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<double> row{times[k]};
      for (std::size_t i = 0; i < channels.size(); ++i)
        row.push_back(exists[k][i] ? populations[k][i] : std::numeric_limits<double>::quiet_NaN());
      row.push_back(norm[k]);
      t.row(row);
    }
    return t;
  }
};

struct TdseResult {
  int start_channel = 0;
  TdseGrid grid;
  PopulationTrace trace;
  std::vector<int> channels;   // bound at t_max
  std::vector<double> p_final;  // P_n(t_max)
  double norm_final = 0.0;
  long steps = 0;
  double self_check_change = std::numeric_limits<double>::quiet_NaN();

  double p(int channel) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i] == channel) return p_final[i];
    return 0.0;
  }

  SurvivalResult survival() const {
    SurvivalResult r;
    r.channels = channels;
    const auto n = static_cast<Eigen::Index>(channels.size());
    r.p_stay = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    r.p_total.assign(channels.size(), std::numeric_limits<double>::quiet_NaN());
    r.loss = r.p_total;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (channels[static_cast<std::size_t>(i)] != start_channel) continue;
      double total = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        r.p_stay(i, k) = p_final[static_cast<std::size_t>(k)];
        total += p_final[static_cast<std::size_t>(k)];
      }
      r.p_total[static_cast<std::size_t>(i)] = total;
      r.loss[static_cast<std::size_t>(i)] = 1.0 - total;
    }
    r.steps = steps;
    return r;
  }
};

namespace detail {

/// Stretched-time map U(t) = (t - t_min) + θ∫s², exact for s = ℰ - v²t².
struct StretchedTime {
  double e, v2, theta, t0;

  double primitive(double t) const {
    return t + theta * (e * e * t - 2.0 * e * v2 * t * t * t / 3.0 + v2 * v2 * std::pow(t, 5) / 5.0);
  }
  double u(double t) const { return primitive(t) - primitive(t0); }
  double dudt(double t) const {
    const double s = e - v2 * t * t;
    return 1.0 + theta * s * s;
  }
  /// Inverse by Newton from a nearby guess (U is strictly increasing).
  double t(double u_target, double guess) const {
    double t = guess;
    for (int i = 0; i < 60; ++i) {
      const double dt = (u(t) - u_target) / dudt(t);
      t -= dt;
      if (std::abs(dt) <= 1e-15 * (1.0 + std::abs(t))) break;
    }
    return t;
  }
};

inline TdseResult evolve_on(const TdseGrid& g, int m, int samples, int max_states) {
  const TrapSpec& s = g.scaled;
  const int jm = even_state_number(s, m);
  const int channel_step = s.shape == Shape::ZeroRange ? 1 : 2;
  const int tracked = s.shape == Shape::ZeroRange ? 1 : std::max(max_states, jm + 1);

  GridState psi(g);
  const double t0 = g.t_min, t1 = g.t_max();
  auto start = psi.bound_states(t0, jm + 1);
  if (static_cast<int>(start.size()) <= jm)
    throw NoBoundState("start state " + std::to_string(m) + " is not bound on the grid at t_min");
  psi.set(start[static_cast<std::size_t>(jm)].y, t0);

  TdseResult res;
  res.start_channel = m;
  res.grid = g;
  auto& tr = res.trace;
  for (int k = 0; k < tracked; ++k) tr.channels.push_back(channel_step * k);
  std::vector<ExistenceWindow> windows;
  for (int k = 0; k < tracked; ++k) windows.push_back(existence_window(s, k));

  std::vector<GridEigenstate> states;
  auto record = [&](double t) {
    states = psi.bound_states(t, tracked, &states);
    std::vector<double> pop(static_cast<std::size_t>(tracked), 0.0);
    std::vector<char> ex(static_cast<std::size_t>(tracked), 0);
    for (int k = 0; k < tracked; ++k) {
      const auto& w = windows[static_cast<std::size_t>(k)];
      const bool bound = !w.never && (w.always || std::abs(t) > w.t_entry);
      ex[static_cast<std::size_t>(k)] = bound ? 1 : 0;
      if (bound && k < static_cast<int>(states.size()))
        pop[static_cast<std::size_t>(k)] = std::norm(psi.overlap(states[static_cast<std::size_t>(k)].y));
    }
    tr.times.push_back(t);
    tr.populations.push_back(std::move(pop));
    tr.exists.push_back(std::move(ex));
    tr.norm.push_back(psi.norm());
  };

  const StretchedTime map{s.threshold_offset, s.rate * s.rate, g.time_stretch, t0};
  const double u_total = map.u(t1);
  const long nsteps = std::max(1L, static_cast<long>(std::ceil(u_total / g.du)));
  const double du = u_total / static_cast<double>(nsteps);
  const double sample_dt = (t1 - t0) / std::max(1, samples);
  double next_sample = t0;
  double t = t0;
  record(t);
  next_sample += sample_dt;
  for (long k = 1; k <= nsteps; ++k) {
    const double tn = k == nsteps ? t1 : map.t(du * static_cast<double>(k), t);
    psi.step(tn);
    t = tn;
    if (k < nsteps && t >= next_sample) {
      record(t);
      while (next_sample <= t) next_sample += sample_dt;
    }
  }
  record(t1);
  res.steps = nsteps;

  const auto final_states = psi.bound_states(t1, tracked, &states);
  for (std::size_t k = 0; k < final_states.size(); ++k) {
    res.channels.push_back(channel_step * static_cast<int>(k));
    res.p_final.push_back(std::norm(psi.overlap(final_states[k].y)));
  }
  res.norm_final = psi.norm();
  return res;
}

}  // namespace detail

/// Evolve the even state m from t_min to t_max = -t_min.
inline TdseResult evolve(const TrapSpec& spec, int m, const TdseOptions& opt = {}) {
  const TdseGrid g = resolve_grid(spec, m, opt);
  TdseResult res = detail::evolve_on(g, m, opt.samples, opt.max_states);
  if (opt.self_check) {
    TdseGrid fine = g;
    fine.dx = 0.5 * g.dx;
    fine.points = 2 * g.points;
    const TdseResult check = detail::evolve_on(fine, m, 1, opt.max_states);
    res.self_check_change = std::abs(check.p(m) - res.p(m));
    if (res.self_check_change > opt.self_check_tol)
      throw GridUnderResolved("doubling the grid changes P_stay by " + format_number(res.self_check_change),
                              res.self_check_change);
  }
  return res;
}

/// Even bound states of the discrete Hamiltonian at time t, for labelling
/// checks: (channel, energy) pairs.
inline std::vector<std::pair<int, double>> track_bound_states(const TrapSpec& spec, double t, const TdseOptions& opt = {}) {
  const TdseGrid g = resolve_grid(spec, 0, opt);
  const GridState psi(g);
  const int step = g.scaled.shape == Shape::ZeroRange ? 1 : 2;
  std::vector<std::pair<int, double>> out;
  for (const auto& st : psi.bound_states(t, opt.max_states)) out.emplace_back(step * st.index, st.energy);
  return out;
}

/// Trace CSV with grid and scheme metadata.
inline CsvTable trace_csv(const TdseResult& r) {
  CsvTable t = r.trace.csv();
  const auto& g = r.grid;
  t.meta("shape", to_string(g.scaled.shape));
  t.meta("threshold_offset", g.scaled.threshold_offset);
  t.meta("rate", g.scaled.rate);
  t.meta("start_channel", std::to_string(r.start_channel));
  t.meta("scheme", "crank-nicolson");
  t.meta("dx", g.dx);
  t.meta("points", std::to_string(g.points));
  t.meta("inner_length", g.inner_length);
  t.meta("absorber_width", g.absorber_width);
  t.meta("absorber_strength", g.absorber_strength);
  t.meta("du", g.du);
  t.meta("time_stretch", g.time_stretch);
  t.meta("t_min", g.t_min);
  t.meta("steps", std::to_string(r.steps));
  t.meta("norm_final", r.norm_final);
  for (std::size_t k = 0; k < r.channels.size(); ++k) t.meta("P_final_" + std::to_string(r.channels[k]), r.p_final[k]);
  return t;
}

}  // namespace sturmtrap
