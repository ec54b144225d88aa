// Backward integration of the ω-space system
//
//   B_m'' + v⁻²(ℰ - ρ_m)B_m + Σ_n (2 M1_mn B_n' + M2_mn B_n) = 0
//
// from the decaying WKB branch at ω_max to the oscillatory region at ω_min,
// followed by a least-squares split of B_n into q^{-1/2}e^{±iS/v} waves.
//
// The equation is the analytic continuation of the conjugated (B*) system, so
// it can follow a contour that leaves the real axis: real ω from ω_max down
// to δ, the half circle δe^{iθ} (θ: 0 → π) in the upper half plane, then real
// ω from -δ to ω_min. No coefficient is evaluated at the branch point ω = 0.
// For B the wave e^{-iS/v} is incoming and e^{+iS/v} outgoing; conjugation
// swaps the two and leaves every |amplitude| unchanged.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "sturmtrap/core.hpp"
#include "sturmtrap/csv.hpp"
#include "sturmtrap/detail/quadrature.hpp"
#include "sturmtrap/sturmian_basis.hpp"
#include "sturmtrap/trap_model.hpp"

namespace sturmtrap {

/// ρ_n, dρ_n/dω and coupling matrices at one contour point.
struct ChannelCoefficients {
  std::vector<cplx> rho, drho;
  Eigen::MatrixXcd m1, m2;
};

/// Zero-range δ-well: ρ_0 = i√(2ω/μ), M1 = M2 = 0.
class ZeroRangeChannels {
 public:
  explicit ZeroRangeChannels(double mass = 1.0) : mass_(mass) {}

  std::size_t size() const { return 1; }
  int index(std::size_t) const { return 0; }
  cplx rho(std::size_t, cplx omega) const { return rho_zero_range(omega, mass_); }
  bool has_couplings() const { return false; }

  void evaluate(cplx omega, ChannelCoefficients& c) const {
    c.rho.assign(1, rho_zero_range(omega, mass_));
    c.drho.assign(1, I * std::sqrt(2.0 / mass_) / (2.0 * sheet_sqrt(omega)));
    c.m1.setZero(1, 1);
    c.m2.setZero(1, 1);
  }
  void evaluate_rhs(cplx omega, ChannelCoefficients& c) const { evaluate(omega, c); }

 private:
  double mass_;
};

/// Rectangular even channels (internal units) with optional couplings.
class RectangularChannels {
 public:
  enum class Coupling { None, DiagonalM2, Full };

  RectangularChannels(std::vector<int> indices, Coupling coupling, double omega_lo, double omega_hi)
      : coupling_(coupling) {
    for (int n : indices) channels_.emplace_back(n, omega_lo, omega_hi);
  }

  std::size_t size() const { return channels_.size(); }
  int index(std::size_t i) const { return channels_[i].index(); }
  cplx rho(std::size_t i, cplx omega) const { return channels_[i].rho(omega); }
  bool has_couplings() const { return coupling_ != Coupling::None; }
  const std::vector<RectangularChannel>& channels() const { return channels_; }

  void evaluate(cplx omega, ChannelCoefficients& c) const {
    const std::size_t n = channels_.size();
    std::vector<SturmianPoint> pts;
    pts.reserve(n);
    c.rho.resize(n);
    c.drho.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back(channels_[i].at(omega));
      c.rho[i] = pts[i].rho;
      c.drho[i] = pts[i].drho;
    }
    if (coupling_ == Coupling::Full) {
      auto cm = coupling_matrices(pts);
      c.m1 = std::move(cm.m1);
      c.m2 = std::move(cm.m2);
      return;
    }
    c.m1.setZero(n, n);
    c.m2.setZero(n, n);
    if (coupling_ == Coupling::DiagonalM2)
      for (std::size_t i = 0; i < n; ++i) c.m2(i, i) = channels_[i].m2_diagonal(pts[i]);
  }
  void evaluate_rhs(cplx omega, ChannelCoefficients& c) const { evaluate(omega, c); }

 private:
  Coupling coupling_;
  std::vector<RectangularChannel> channels_;
};

/// One even channel of a polynomial well with optional diagonal M2. The RHS
/// path warm-starts Newton from the previous roots, so an instance must not be
/// shared between concurrent solves.
class PolynomialChannels {
 public:
  PolynomialChannels(detail::PolynomialProfile w, int n, bool with_m2, double omega_lo, double omega_hi)
      : channel_(std::move(w), n, omega_lo, omega_hi), with_m2_(with_m2) {}

  std::size_t size() const { return 1; }
  int index(std::size_t) const { return channel_.index(); }
  cplx rho(std::size_t, cplx omega) const { return channel_.rho(omega); }
  bool has_couplings() const { return with_m2_; }

  void evaluate(cplx omega, ChannelCoefficients& c) const {
    const auto pt = channel_.at(omega);
    c.rho.assign(1, pt.rho);
    c.drho.assign(1, pt.drho);
    c.m1.setZero(1, 1);
    c.m2.setZero(1, 1);
    if (with_m2_) c.m2(0, 0) = channel_.m2_diagonal(pt);
  }

  /// ρ (and M2 when enabled) only; dρ/dω is left unset without M2.
  void evaluate_rhs(cplx omega, ChannelCoefficients& c) const {
    SturmianPoint pt;
    pt.omega = omega;
    pt.k = channel_momentum(omega);
    pt.rho = warm_root(pt.k);
    c.rho.assign(1, pt.rho);
    c.drho.assign(1, cplx(std::nan(""), 0.0));
    c.m1.setZero(1, 1);
    c.m2.setZero(1, 1);
    if (with_m2_) {
      pt.drho = channel_.table().slope(pt.rho, pt.k) / pt.k;
      c.drho[0] = pt.drho;
      c.m2(0, 0) = channel_.m2_diagonal(pt);
    }
  }

 private:
  cplx warm_root(cplx k) const {
    const auto& t = channel_.table();
    if (history_ > 0) {
      cplx guess = x1_;
      if (history_ > 1 && k1_ != k0_) guess += (x1_ - x0_) / (k1_ - k0_) * (k - k1_);
      if (auto x = t.solve_from(k, guess)) return remember(k, *x);
    }
    return remember(k, t.solve(k));
  }
  cplx remember(cplx k, cplx x) const {
    k0_ = k1_;
    x0_ = x1_;
    k1_ = k;
    x1_ = x;
    history_ = std::min(history_ + 1, 2);
    return x;
  }

  PolynomialWellChannel channel_;
  bool with_m2_;
  mutable cplx k0_, x0_, k1_, x1_;
  mutable int history_ = 0;
};

struct ReflectionOptions {
  double rtol = 1e-10;            // local error tolerance of the RKF78 stepper
  double decay_target = 25.0;     // accumulated ∫|Im q|/v dω required at ω_max
  double wkb_tolerance = 1e-4;    // v|ρ'|/(2|q|³) at ω_min
  double fit_wavelengths = 2.0;   // fit window width in local WKB wavelengths
  int fit_min_samples = 64;
  double window_shift = 0.2;      // relative shift of the stability windows
  double stability_tol = 1e-4;    // allowed |ΔP| between shifted windows
  double arc_radius = 0.0;        // δ; 0 selects 0.1·min(1, v^{4/5})
  double omega_min = std::numeric_limits<double>::quiet_NaN();  // NaN: automatic
  double omega_max = std::numeric_limits<double>::quiet_NaN();
  bool record_trajectory = false;
  double flux_tol = 1e-8;
};

/// Contour ω(s) parametrized by arc length.
struct ContourPath {
  double omega_max = 0.0, delta = 0.0, omega_min = 0.0;

  double s_arc_begin() const { return omega_max - delta; }
  double s_arc_end() const { return s_arc_begin() + pi * delta; }
  double s_end() const { return s_arc_end() + (-delta - omega_min); }

  /// 0: upper real segment, 1: arc, 2: lower real segment. Boundaries belong
  /// to the segment that starts there.
  int segment(double s) const { return s < s_arc_begin() ? 0 : (s < s_arc_end() ? 1 : 2); }

  /// ω(s) with the formula of segment `seg`, also at its end points.
  cplx omega(int seg, double s) const {
    if (seg == 0) return omega_max - s;
    if (seg == 1) return std::polar(delta, (s - s_arc_begin()) / delta);
    return -delta - (s - s_arc_end());
  }
  cplx domega(int seg, double s) const { return seg == 1 ? I * omega(1, s) / delta : cplx(-1.0); }
  cplx omega(double s) const { return omega(segment(s), s); }
  std::array<double, 4> breaks() const { return {0.0, s_arc_begin(), s_arc_end(), s_end()}; }
};

/// B (channel × solution) and dB/dω at one contour point.
struct TrajectorySample {
  double s = 0.0;
  cplx omega;
  Eigen::MatrixXcd b, db;
  cplx log_scale = 0.0;  // single channel: B = b·exp(log_scale) up to one global factor
};

struct BackwardSolution {
  ContourPath path;
  std::vector<TrajectorySample> window;      // ω ≤ ω_min + 1.5·W, in the final basis
  std::vector<TrajectorySample> trajectory;  // whole path when recorded (per-step basis)
  double window_width = 0.0;
  long steps = 0;
  long rejected = 0;
  long flux_violations = 0;
};

struct SurvivalResult {
  std::vector<int> channels;  // channel indices n
  Eigen::MatrixXd p_stay;     // [m][n]: start in m, end in n
  std::vector<double> p_total, loss;
  Eigen::MatrixXcd incoming, outgoing;  // per channel (row) and decaying solution (column)
  double fit_residual = 0.0;
  double window_sensitivity = 0.0;
  bool window_stable = true;
  double omega_min = 0.0, omega_max = 0.0, arc_radius = 0.0;
  long steps = 0;
  long flux_violations = 0;

  double p(std::size_t m, std::size_t n) const { return p_stay(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)); }
};

template <class Channels>
class ReflectionSolver {
 public:
  ReflectionSolver(const Channels& channels, double energy, double rate, ReflectionOptions opt = {})
      : ch_(channels), energy_(energy), rate_(rate), opt_(opt) {
    if (!(rate > 0.0)) throw ConfigError("rate", "must be > 0");
  }

  double energy() const { return energy_; }
  double rate() const { return rate_; }
  const ReflectionOptions& options() const { return opt_; }

  /// Local momentum q_n = √(ℰ - ρ_n) (principal root).
  cplx q(std::size_t n, cplx omega) const { return std::sqrt(energy_ - ch_.rho(n, omega)); }

  double arc_radius() const {
    return opt_.arc_radius > 0.0 ? opt_.arc_radius : 0.1 * std::min(1.0, std::pow(rate_, 0.8));
  }

  /// Smallest ω where every channel has accumulated ∫|Im q|/v ≥ decay_target
  /// from the threshold and the WKB start is sound (v|ρ'|/2|q|³ ≤ 0.1).
  /// Backward integration amplifies the bounded solution by the same factor,
  /// so a rough start there is enough.
  double auto_omega_max() const {
    if (!std::isnan(opt_.omega_max)) return opt_.omega_max;
    const double scale = std::pow(rate_, 0.8);
    std::vector<double> acc(ch_.size(), 0.0);
    double w = arc_radius();
    std::vector<double> prev(ch_.size());
    for (std::size_t n = 0; n < ch_.size(); ++n) prev[n] = std::abs(q(n, w).imag());
    for (int it = 0; it < 100000; ++it) {
      const double dw = 0.02 * (w + scale);
      const double wn = w + dw;
      bool done = true;
      for (std::size_t n = 0; n < ch_.size(); ++n) {
        const double cur = std::abs(q(n, wn).imag());
        acc[n] += 0.5 * (prev[n] + cur) * dw / rate_;
        prev[n] = cur;
        done = done && acc[n] >= opt_.decay_target;
      }
      w = wn;
      if (done) {
        ChannelCoefficients c;
        ch_.evaluate(w, c);
        for (std::size_t n = 0; n < ch_.size() && done; ++n)
          done = rate_ * std::abs(c.drho[n]) / (2.0 * std::pow(std::abs(energy_ - c.rho[n]), 1.5)) <= 0.1;
      }
      if (done) return w;
    }
    throw Error("auto_omega_max: decay target not reached");
  }

  /// Turning point of channel n (ρ_n(ω) = ℰ) if ℰ < ρ_n(0), else 0.
  double reference_point(std::size_t n) const {
    const double r0 = ch_.rho(n, cplx(-1e-300, 0.0)).real();
    if (energy_ >= r0) return 0.0;
    auto f = [&](double w) { return ch_.rho(n, w).real() - energy_; };
    double hi = -1e-12, lo = -1.0;
    while (f(lo) > 0.0) lo *= 2.0;
    boost::uintmax_t it = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), it);
    return 0.5 * (r.first + r.second);
  }

  /// WKB error measure v|ρ'|/(2|q|³) of channel n at real ω < 0.
  double wkb_error(std::size_t n, double omega) const {
    ChannelCoefficients c;
    ch_.evaluate(omega, c);
    const cplx qq = std::sqrt(energy_ - c.rho[n]);
    return rate_ * std::abs(c.drho[n]) / (2.0 * std::pow(std::abs(qq), 3));
  }

  double auto_omega_min() const {
    if (!std::isnan(opt_.omega_min)) return opt_.omega_min;
    const double scale = std::pow(rate_, 0.8);
    double start = -arc_radius();
    for (std::size_t n = 0; n < ch_.size(); ++n) start = std::min(start, reference_point(n));
    double w = start - scale;
    for (int it = 0; it < 100000; ++it) {
      ChannelCoefficients c;
      ch_.evaluate(w, c);
      bool ok = true;
      for (std::size_t n = 0; n < ch_.size() && ok; ++n) {
        const cplx qq = std::sqrt(energy_ - c.rho[n]);
        ok = rate_ * std::abs(c.drho[n]) / (2.0 * std::pow(std::abs(qq), 3)) <= opt_.wkb_tolerance;
      }
      if (ok) return w;
      w -= 0.02 * (std::abs(w) + scale);
    }
    throw Error("auto_omega_min: WKB tolerance not reached");
  }

  BackwardSolution integrate_backward() const {
    namespace ode = boost::numeric::odeint;
    using state = state_type;
    const std::size_t N = ch_.size();
    const auto NN = static_cast<Eigen::Index>(N);

    BackwardSolution sol;
    sol.path = ContourPath{auto_omega_max(), arc_radius(), auto_omega_min()};
    const ContourPath& path = sol.path;
    if (!(path.omega_max > path.delta) || !(path.omega_min < -path.delta))
      throw ConfigError("omega_window", "need omega_min < -delta < delta < omega_max");

    // Fit window width from the longest local wavelength at ω_min.
    double qmin = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < N; ++n) qmin = std::min(qmin, std::abs(q(n, path.omega_min)));
    sol.window_width = opt_.fit_wavelengths * 2.0 * pi * rate_ / qmin;
    const double store_above = path.omega_min + (1.0 + 2.0 * opt_.window_shift + 0.1) * sol.window_width;
    const double h_window = sol.window_width / (2.0 * opt_.fit_min_samples);

    // Decaying WKB start in each channel: B = q^{-1/2}, B' from the branch
    // that decays toward +ω.
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(NN, NN), dB = Eigen::MatrixXcd::Zero(NN, NN);
    {
      ChannelCoefficients c;
      ch_.evaluate(path.omega_max, c);
      for (std::size_t n = 0; n < N; ++n) {
        const cplx qq = std::sqrt(energy_ - c.rho[n]);
        const cplx lam = (I * qq).real() < 0.0 ? I * qq / rate_ : -I * qq / rate_;
        const cplx dq = -c.drho[n] / (2.0 * qq);
        const auto i = static_cast<Eigen::Index>(n);
        B(i, i) = 1.0 / std::sqrt(qq);
        dB(i, i) = (lam - dq / (2.0 * qq)) * B(i, i);
      }
    }

    int seg = 0;
    auto rhs = [&](const state& y, state& dyds, double s_at) { derivative(path, seg, y, dyds, s_at); };

    using stepper_t = ode::runge_kutta_fehlberg78<state, double, state, double>;
    auto ctrl = ode::make_controlled(opt_.rtol, opt_.rtol, stepper_t());

    state y;
    pack(NN, B, dB, y);
    double s = 0.0, h = 1e-3 * (1.0 + std::pow(rate_, 0.8));
    cplx log_scale = 0.0;
    const auto breaks = path.breaks();

    auto record = [&](double s_at, const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& db) {
      const cplx w = path.omega(s_at);
      if (opt_.record_trajectory) sol.trajectory.push_back({s_at, w, b, db, log_scale});
      if (path.segment(s_at) == 2 && w.real() <= store_above)
        sol.window.push_back({s_at, w, b, db, log_scale});
    };
    record(s, B, dB);

    while (s < path.s_end()) {
      seg = path.segment(s);
      const double next_break = breaks[static_cast<std::size_t>(seg) + 1];
      double hmax = next_break - s;
      if (seg == 1) hmax = std::min(hmax, pi * path.delta / 16.0);
      if (seg == 2 && path.omega(s).real() - h_window <= store_above) hmax = std::min(hmax, h_window);
      h = std::min(h, hmax);

      const state y_old = y;
      const auto res = ctrl.try_step(rhs, y, s, h);
      if (res == ode::fail) {
        ++sol.rejected;
        if (h < 1e-13 * (1.0 + std::abs(s))) throw StiffnessFailure("step size underflow", path.omega(s));
        continue;
      }
      ++sol.steps;
      // Snap onto a segment boundary reached up to roundoff.
      if (std::abs(s - next_break) < 1e-12 * (1.0 + std::abs(s))) s = next_break;

      unpack(NN, y, B, dB);
      if (N == 1 && !ch_.has_couplings() && seg != 1) {
        // Im(B̄B') must not grow in the integration direction.
        const cplx b0 = y_old[0], d0 = y_old[1];
        const double j_before = (std::conj(b0) * d0).imag();
        const double j_after = (std::conj(B(0, 0)) * dB(0, 0)).imag();
        const double scale = std::abs(B(0, 0)) * std::abs(dB(0, 0)) + std::abs(b0) * std::abs(d0);
        if (j_after > j_before + opt_.flux_tol * scale) ++sol.flux_violations;
      }

      // Re-orthonormalize [B; B'] (linear ODE: any invertible recombination is exact).
      Eigen::MatrixXcd Y(2 * NN, NN);
      Y << B, dB;
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Y);
      const Eigen::MatrixXcd R = qr.matrixQR().topRows(NN).template triangularView<Eigen::Upper>();
      const Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(2 * NN, NN);
      const Eigen::MatrixXcd Rinv = R.inverse();
      B = Q.topRows(NN);
      dB = Q.bottomRows(NN);
      if (N == 1) log_scale += std::log(R(0, 0));
      for (auto& smp : sol.window) {
        smp.b = smp.b * Rinv;
        smp.db = smp.db * Rinv;
      }
      pack(NN, B, dB, y);
      record(s, B, dB);
    }
    return sol;
  }

  SurvivalResult decompose_wkb(const BackwardSolution& sol) const {
    const std::size_t N = ch_.size();
    const auto NN = static_cast<Eigen::Index>(N);
    const double w0 = sol.path.omega_min;
    const double W = sol.window_width;
    const double sh = opt_.window_shift * W;

    // Samples ordered by increasing ω.
    std::vector<const TrajectorySample*> smp;
    for (const auto& t : sol.window) smp.push_back(&t);
    std::sort(smp.begin(), smp.end(), [](auto* a, auto* b) { return a->omega.real() < b->omega.real(); });
    if (smp.empty()) throw FitDegenerate("no samples in the fit region");

    // Phase integrals S_n(ω) = ∫_{ω_ref}^{ω} q_n at every sample.
    std::vector<std::vector<double>> S(N, std::vector<double>(smp.size()));
    std::vector<std::vector<double>> Q(N, std::vector<double>(smp.size()));
    for (std::size_t n = 0; n < N; ++n) {
      auto qr = [&](double w) { return std::sqrt(std::max(0.0, (energy_ - ch_.rho(n, w)).real())); };
      const double ref = reference_point(n);
      boost::math::quadrature::tanh_sinh<double> ts;
      const double w_first = smp.front()->omega.real();
      double acc = -ts.integrate(qr, w_first, ref, 1e-13);
      S[n][0] = acc;
      const auto& gl = detail::gauss_legendre<8>();
      for (std::size_t k = 0; k < smp.size(); ++k) {
        const double wk = smp[k]->omega.real();
        if (k > 0) {
          const double wa = smp[k - 1]->omega.real();
          const double c = 0.5 * (wa + wk), hw = 0.5 * (wk - wa);
          double inc = 0.0;
          for (std::size_t i = 0; i < 8; ++i) inc += gl.weights[i] * qr(c + hw * gl.nodes[i]);
          acc += inc * hw;
          S[n][k] = acc;
        }
        Q[n][k] = qr(wk);
      }
    }

    struct Fit {
      Eigen::MatrixXcd in, out;
      double residual = 0.0;
    };
    auto fit_window = [&](double lo, double hi) {
      Fit f;
      f.in.resize(NN, NN);
      f.out.resize(NN, NN);
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < smp.size(); ++k) {
        const double w = smp[k]->omega.real();
        if (w >= lo - 1e-12 * std::abs(lo) && w <= hi) idx.push_back(k);
      }
      if (static_cast<int>(idx.size()) < opt_.fit_min_samples)
        throw FitDegenerate("fit window holds " + std::to_string(idx.size()) + " samples");
      const auto M = static_cast<Eigen::Index>(idx.size());
      for (std::size_t n = 0; n < N; ++n) {
        Eigen::MatrixXcd A(M, 2);
        for (Eigen::Index r = 0; r < M; ++r) {
          const std::size_t k = idx[static_cast<std::size_t>(r)];
          const double amp = 1.0 / std::sqrt(Q[n][k]);
          const double ph = S[n][k] / rate_;
          A(r, 0) = amp * std::exp(I * ph);   // outgoing
          A(r, 1) = amp * std::exp(-I * ph);  // incoming
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        if (!(sv(1) > 1e-10 * sv(0))) throw FitDegenerate("incoming and outgoing waves are collinear");
        for (Eigen::Index j = 0; j < NN; ++j) {
          Eigen::VectorXcd yv(M);
          for (Eigen::Index r = 0; r < M; ++r) yv(r) = smp[idx[static_cast<std::size_t>(r)]]->b(static_cast<Eigen::Index>(n), j);
          const Eigen::VectorXcd c = svd.solve(yv);
          f.out(static_cast<Eigen::Index>(n), j) = c(0);
          f.in(static_cast<Eigen::Index>(n), j) = c(1);
          const double ny = yv.norm();
          if (ny > 0.0) f.residual = std::max(f.residual, (A * c - yv).norm() / ny);
        }
      }
      return f;
    };
    auto probabilities = [&](const Fit& f) {
      Eigen::MatrixXd P(NN, NN);
      const Eigen::FullPivLU<Eigen::MatrixXcd> lu(f.in);
      if (!lu.isInvertible()) throw FitDegenerate("incoming amplitude matrix is singular");
      for (Eigen::Index m = 0; m < NN; ++m) {
        const Eigen::VectorXcd d = lu.solve(Eigen::VectorXcd::Unit(NN, m));
        const Eigen::VectorXcd a = f.out * d;
        for (Eigen::Index n = 0; n < NN; ++n) P(m, n) = std::norm(a(n));
      }
      return P;
    };

    const Fit base = fit_window(w0 + sh, w0 + sh + W);
    const Eigen::MatrixXd P = probabilities(base);
    double sens = 0.0;
    for (double off : {0.0, 2.0 * sh}) {
      const Fit f = fit_window(w0 + off, w0 + off + W);
      sens = std::max(sens, (probabilities(f) - P).cwiseAbs().maxCoeff());
    }

    SurvivalResult r;
    for (std::size_t n = 0; n < N; ++n) r.channels.push_back(ch_.index(n));
    r.p_stay = P;
    for (Eigen::Index m = 0; m < NN; ++m) {
      r.p_total.push_back(P.row(m).sum());
      r.loss.push_back(1.0 - P.row(m).sum());
    }
    r.incoming = base.in;
    r.outgoing = base.out;
    r.fit_residual = base.residual;
    r.window_sensitivity = sens;
    r.window_stable = sens <= opt_.stability_tol;
    r.omega_min = sol.path.omega_min;
    r.omega_max = sol.path.omega_max;
    r.arc_radius = sol.path.delta;
    r.steps = sol.steps;
    r.flux_violations = sol.flux_violations;
    return r;
  }

  SurvivalResult solve() const { return decompose_wkb(integrate_backward()); }

  /// Plain propagation of the columns of Y = [B; B'] (2N × K) from s0 to s1
  /// along `path`, without renormalization.
  Eigen::MatrixXcd propagate(const ContourPath& path, double s0, double s1, const Eigen::MatrixXcd& Y) const {
    namespace ode = boost::numeric::odeint;
    const auto NN = static_cast<Eigen::Index>(ch_.size());
    if (Y.rows() != 2 * NN) throw DomainError("propagate: Y must have 2N rows");
    Eigen::MatrixXcd out(Y.rows(), Y.cols());
    using stepper_t = ode::runge_kutta_fehlberg78<state_type, double, state_type, double>;
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      // Embed the column as the first solution of an N × N block.
      Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(NN, NN), db = Eigen::MatrixXcd::Zero(NN, NN);
      b.col(0) = Y.col(c).head(NN);
      db.col(0) = Y.col(c).tail(NN);
      state_type y;
      pack(NN, b, db, y);
      const auto br = path.breaks();
      const double dir = s1 >= s0 ? 1.0 : -1.0;
      double a = s0;
      while (dir * (s1 - a) > 0.0) {
        // Segment containing the open interval just ahead of a.
        const int seg = path.segment(a + dir * 1e-12 * (1.0 + std::abs(a)));
        const double edge = dir > 0 ? br[static_cast<std::size_t>(seg) + 1] : br[static_cast<std::size_t>(seg)];
        const double b_end = dir > 0 ? std::min(edge, s1) : std::max(edge, s1);
        ode::integrate_adaptive(ode::make_controlled(opt_.rtol, opt_.rtol, stepper_t()),
                                [&](const state_type& x, state_type& dx, double s) { derivative(path, seg, x, dx, s); },
                                y, a, b_end, (b_end - a) / 100.0);
        a = b_end;
      }
      unpack(NN, y, b, db);
      out.col(c) << b.col(0), db.col(0);
    }
    return out;
  }

 private:
  using state_type = std::vector<cplx>;

  static void pack(Eigen::Index NN, const Eigen::MatrixXcd& b, const Eigen::MatrixXcd& db, state_type& y) {
    y.resize(static_cast<std::size_t>(2 * NN * NN));
    for (Eigen::Index j = 0; j < NN; ++j)
      for (Eigen::Index i = 0; i < NN; ++i) {
        y[static_cast<std::size_t>(j * NN + i)] = b(i, j);
        y[static_cast<std::size_t>(NN * NN + j * NN + i)] = db(i, j);
      }
  }
  static void unpack(Eigen::Index NN, const state_type& y, Eigen::MatrixXcd& b, Eigen::MatrixXcd& db) {
    b.resize(NN, NN);
    db.resize(NN, NN);
    for (Eigen::Index j = 0; j < NN; ++j)
      for (Eigen::Index i = 0; i < NN; ++i) {
        b(i, j) = y[static_cast<std::size_t>(j * NN + i)];
        db(i, j) = y[static_cast<std::size_t>(NN * NN + j * NN + i)];
      }
  }

  /// d/ds of [B; B'] along the path.
  void derivative(const ContourPath& path, int seg, const state_type& y, state_type& dyds, double s) const {
    const auto NN = static_cast<Eigen::Index>(ch_.size());
    const cplx w = path.omega(seg, s), ws = path.domega(seg, s);
    ChannelCoefficients c;
    ch_.evaluate_rhs(w, c);
    Eigen::MatrixXcd b, db;
    unpack(NN, y, b, db);
    Eigen::MatrixXcd d2b(NN, NN);
    for (Eigen::Index i = 0; i < NN; ++i)
      d2b.row(i) = -(energy_ - c.rho[static_cast<std::size_t>(i)]) / (rate_ * rate_) * b.row(i);
    if (ch_.has_couplings()) d2b -= 2.0 * c.m1 * db + c.m2 * b;
    dyds.resize(y.size());
    for (Eigen::Index j = 0; j < NN; ++j)
      for (Eigen::Index i = 0; i < NN; ++i) {
        dyds[static_cast<std::size_t>(j * NN + i)] = db(i, j) * ws;
        dyds[static_cast<std::size_t>(NN * NN + j * NN + i)] = d2b(i, j) * ws;
      }
  }

  const Channels& ch_;
  double energy_, rate_;
  ReflectionOptions opt_;
};

/// Generous ω range for building finite-range channel tables.
struct ChannelRange {
  double lo, hi;
};

inline ChannelRange channel_range(double energy, double rate, int n_max, const ReflectionOptions& opt) {
  const double edge = std::abs(energy) + 0.5 * (n_max + 1.0) * (n_max + 1.0) * pi * pi;
  double lo = -(2.0 * std::pow(rate / (2.0 * opt.wkb_tolerance), 2.0 / 3.0) + edge + 50.0);
  double hi = edge + 3.0 * std::pow(1.5 * opt.decay_target * rate, 2.0 / 3.0) + 50.0;
  if (!std::isnan(opt.omega_min)) lo = std::min(lo, 1.2 * opt.omega_min);
  if (!std::isnan(opt.omega_max)) hi = std::max(hi, 1.2 * opt.omega_max);
  return {lo, hi};
}

/// Single-Sturmian survival probability P_stay[m][m] for an even channel m.
/// Finite-range and zero-range specs are solved in internal units.
inline SurvivalResult solve_single_sturmian(const TrapSpec& spec, int m, bool with_m2,
                                            const ReflectionOptions& opt = {}) {
  spec.validate();
  const TrapSpec sc = to_scaled(spec);
  switch (spec.shape) {
    case Shape::ZeroRange: {
      if (m != 0) throw ChannelBudgetExceeded("zero-range well has a single channel");
      const ZeroRangeChannels ch(1.0);
      return ReflectionSolver<ZeroRangeChannels>(ch, sc.threshold_offset, sc.rate, opt).solve();
    }
    case Shape::Rectangular: {
      const auto r = channel_range(sc.threshold_offset, sc.rate, m, opt);
      const RectangularChannels ch({m}, with_m2 ? RectangularChannels::Coupling::DiagonalM2
                                                : RectangularChannels::Coupling::None,
                                   r.lo, r.hi);
      return ReflectionSolver<RectangularChannels>(ch, sc.threshold_offset, sc.rate, opt).solve();
    }
    case Shape::ParabolicCutoff: {
      const auto r = channel_range(sc.threshold_offset, sc.rate, m + 2, opt);
      const PolynomialChannels ch(detail::scaled_profile(spec.shape), m, with_m2, r.lo, r.hi);
      return ReflectionSolver<PolynomialChannels>(ch, sc.threshold_offset, sc.rate, opt).solve();
    }
  }
  throw DomainError("solve_single_sturmian: unknown shape");
}

/// Coupled-channel run over the even channels 0, 2, ..., 2(n_channels-1).
/// The returned matrix holds every initial channel; `m` must be in the set.
inline SurvivalResult solve_coupled(const TrapSpec& spec, int m, int n_channels, const ReflectionOptions& opt = {}) {
  spec.validate();
  if (spec.shape != Shape::Rectangular) throw DomainError("solve_coupled: rectangular wells only");
  if (n_channels < 1) throw ConfigError("n_channels", "must be ≥ 1");
  if (m < 0 || m % 2 != 0 || m / 2 >= n_channels)
    throw ChannelBudgetExceeded("channel " + std::to_string(m) + " is outside the coupled set");
  const TrapSpec sc = to_scaled(spec);
  std::vector<int> idx;
  for (int i = 0; i < n_channels; ++i) idx.push_back(2 * i);
  const auto r = channel_range(sc.threshold_offset, sc.rate, idx.back(), opt);
  const RectangularChannels ch(idx, RectangularChannels::Coupling::Full, r.lo, r.hi);
  return ReflectionSolver<RectangularChannels>(ch, sc.threshold_offset, sc.rate, opt).solve();
}

/// B_n(ω) along the contour (first decaying solution), for debugging.
inline CsvTable trajectory_csv(const BackwardSolution& sol) {
  std::vector<std::string> cols{"s", "re_omega", "im_omega"};
  const auto n = sol.trajectory.empty() ? 0 : sol.trajectory.front().b.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    cols.push_back("re_B" + std::to_string(i));
    cols.push_back("im_B" + std::to_string(i));
  }
  cols.push_back("re_log_scale");
  cols.push_back("im_log_scale");
  CsvTable t(cols);
  t.meta("omega_max", sol.path.omega_max);
  t.meta("omega_min", sol.path.omega_min);
  t.meta("arc_radius", sol.path.delta);
  t.meta("basis", "re-orthonormalized each step; single channel: B = value*exp(log_scale)");
  for (const auto& s : sol.trajectory) {
    std::vector<double> r{s.s, s.omega.real(), s.omega.imag()};
    for (Eigen::Index i = 0; i < n; ++i) {
      r.push_back(s.b(i, 0).real());
      r.push_back(s.b(i, 0).imag());
    }
    r.push_back(s.log_scale.real());
    r.push_back(s.log_scale.imag());
    t.row(r);
  }
  return t;
}

}  // namespace sturmtrap
