// Sturmian eigenvalues ρ_n(ω) and eigenfunctions S_n(x, ω) for even
// channels, and the coupling matrices
//   M1_mn = (S_m|∂_ω S_n),  M2_mn = (S_m|∂²_ω S_n),  (f|g) = ∫ f W g dx
// (bilinear, no conjugation).
//
// Finite-range channels live in internal units: μ = 1, unit-width well
// (|x| ≤ 1/2) with ∫W = 1. A branch is a root X(k) of an equation analytic in
// the external momentum k = √(2ω); ω ≤ 0 maps to the positive imaginary
// k-axis and ω > 0 (upper lip of the cut) to the positive real k-axis, so the
// threshold is an ordinary point in k. Roots are tabulated by continuation
// from the exactly known value at k = 0 and evaluated anywhere in the first
// k-quadrant by Newton from the nearest node.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sturmtrap/core.hpp"
#include "sturmtrap/csv.hpp"
#include "sturmtrap/detail/quadrature.hpp"
#include "sturmtrap/detail/taylor_shooting.hpp"
#include "sturmtrap/trap_model.hpp"

namespace sturmtrap {

/// ρ_0(ω) = i√(2ω/μ), first sheet.
inline cplx rho_zero_range(cplx omega, double mass = 1.0) {
  return I * std::sqrt(2.0 / mass) * sheet_sqrt(omega);
}

/// Internal momentum-like k(ω) = √(2ω) used by the unit-width channels.
inline cplx channel_momentum(cplx omega) { return std::sqrt(2.0) * sheet_sqrt(omega); }

namespace detail {

/// E0(z) = cos√z, E1(z) = sin√z/√z and the first two derivatives of E1.
struct EntireCS {
  cplx e0, e1, e1p, e1pp;
};

inline EntireCS entire_cs(cplx z) {
  EntireCS r;
  if (std::abs(z) < 2.0) {
    cplx pw = 1.0;  // (-z)^j
    double f0 = 1.0, f1 = 1.0;  // (2j)!, (2j+1)!
    r.e0 = r.e1 = r.e1p = r.e1pp = 0.0;
    cplx pm1 = 0.0, pm2 = 0.0;  // (-1)^j z^{j-1}, (-1)^j z^{j-2}
    for (int j = 0; j < 30; ++j) {
      if (j > 0) {
        f0 *= (2.0 * j - 1.0) * (2.0 * j);
        f1 *= (2.0 * j) * (2.0 * j + 1.0);
      }
      r.e0 += pw / f0;
      r.e1 += pw / f1;
      if (j == 1) pm1 = -1.0;
      if (j >= 2) pm1 *= -z;
      if (j == 2) pm2 = 1.0;
      if (j >= 3) pm2 *= -z;
      if (j >= 1) r.e1p += static_cast<double>(j) * pm1 / f1;
      if (j >= 2) r.e1pp += static_cast<double>(j * (j - 1)) * pm2 / f1;
      pw *= -z;
    }
    return r;
  }
  const cplx s = std::sqrt(z);
  r.e0 = std::cos(s);
  r.e1 = std::sin(s) / s;
  r.e1p = (r.e0 - r.e1) / (2.0 * z);
  r.e1pp = (-0.5 * r.e1 - r.e1p) / (2.0 * z) - (r.e0 - r.e1) / (2.0 * z * z);
  return r;
}

/// Value and partial derivatives of a branch equation f(X, k) = 0.
struct RootValue {
  cplx f, fx, fk, fxx, fxk, fkk;
};

/// Rectangular even channel, X = P = p²:
///   f = (P/2) sinc(p/2) + ik cos(p/2)   (⇔ tan(p/2) + ik/p = 0).
struct RectangularEquation {
  RootValue operator()(cplx P, cplx k) const {
    const EntireCS e = entire_cs(P / 4.0);
    const cplx s = e.e1, c = e.e0, sp = e.e1p / 4.0, spp = e.e1pp / 16.0;
    RootValue r;
    r.f = 0.5 * P * s + I * k * c;
    r.fx = 0.5 * s + 0.5 * P * sp - I * k * s / 8.0;
    r.fxx = sp + 0.5 * P * spp - I * k * sp / 8.0;
    r.fk = I * c;
    r.fxk = -I * s / 8.0;
    r.fkk = 0.0;
    return r;
  }
};

/// General polynomial well, X = ρ: f = S'(a) - ikS(a) from Taylor shooting.
/// Second derivatives are not provided.
struct PolynomialEquation {
  PolynomialProfile w;

  RootValue operator()(cplx rho, cplx k) const {
    const auto r = shoot(w, rho, 0.5 * k * k);
    RootValue v{};
    v.f = r.ds_edge.v - I * k * r.s_edge.v;
    v.fx = r.ds_edge.dr - I * k * r.s_edge.dr;
    v.fk = (r.ds_edge.dw - I * k * r.s_edge.dw) * k - I * r.s_edge.v;
    return v;
  }
};

inline cplx k_of_u(double u) { return u >= 0.0 ? cplx(u, 0.0) : cplx(0.0, -u); }

/// Continuation table of one root X(k) along the L-shaped path
/// k = i|u| (u < 0) and k = u (u ≥ 0).
template <class Eq>
class BranchTable {
 public:
  struct Node {
    double u;
    cplx k, x, xk;
  };

  BranchTable(Eq eq, cplx x_at_zero, double u_lo, double u_hi, double pred_tol = 1e-3)
      : eq_(std::move(eq)), pred_tol_(pred_tol) {
    cplx x0 = x_at_zero;
    if (!newton(0.0, x0, 30)) throw ContinuationFailure("branch root at threshold did not converge", 0.0);
    std::vector<Node> lo, hi;
    const Node start{0.0, 0.0, x0, slope(x0, 0.0)};
    extend(start, u_lo, lo);
    extend(start, u_hi, hi);
    std::reverse(lo.begin(), lo.end());
    nodes_ = std::move(lo);
    nodes_.push_back(start);
    nodes_.insert(nodes_.end(), hi.begin(), hi.end());
  }

  const Eq& equation() const { return eq_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  double u_min() const { return nodes_.front().u; }
  double u_max() const { return nodes_.back().u; }

  std::size_t nearest(cplx k) const {
    const double u = k.imag() > k.real() ? -k.imag() : k.real();
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), u,
                               [](const Node& n, double val) { return n.u < val; });
    std::size_t j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - nodes_.begin(), nodes_.size() - 1));
    std::size_t best = j;
    double db = std::abs(nodes_[j].k - k);
    for (std::size_t c : {j > 0 ? j - 1 : j, j + 1 < nodes_.size() ? j + 1 : j}) {
      const double d = std::abs(nodes_[c].k - k);
      if (d < db) {
        db = d;
        best = c;
      }
    }
    return best;
  }

  /// Root on this branch at momentum k.
  cplx solve(cplx k) const {
    const Node& n = nodes_[nearest(k)];
    const cplx guess = n.x + n.xk * (k - n.k);
    cplx x = guess;
    if (newton(k, x, 12) && std::abs(x - guess) <= 0.05 * (1.0 + std::abs(x))) return x;
    // Homotopy from the node in small steps.
    for (int m = 2; m <= 12; ++m) {
      const int steps = 1 << m;
      cplx xs = n.x, prev_k = n.k, xk = n.xk;
      bool ok = true;
      for (int i = 1; i <= steps && ok; ++i) {
        const cplx ki = n.k + (k - n.k) * (static_cast<double>(i) / steps);
        const cplx g = xs + xk * (ki - prev_k);
        cplx xi = g;
        ok = newton(ki, xi, 12) && std::abs(xi - g) <= pred_tol_ * (1.0 + std::abs(xi));
        xs = xi;
        xk = slope(xs, ki);
        prev_k = ki;
      }
      if (ok) return xs;
    }
    throw ContinuationFailure("branch evaluation lost the root", 0.5 * n.k * n.k);
  }

  /// Newton from an external guess; nullopt if it fails or lands farther from
  /// the guess than the continuation predictor tolerance.
  std::optional<cplx> solve_from(cplx k, cplx guess) const {
    cplx x = guess;
    if (newton(k, x, 8) && std::abs(x - guess) <= pred_tol_ * (1.0 + std::abs(x))) return x;
    return std::nullopt;
  }

  /// dX/dk and d²X/dk² at a root.
  cplx slope(cplx x, cplx k) const {
    const RootValue r = eq_(x, k);
    return -r.fk / r.fx;
  }
  std::pair<cplx, cplx> derivatives(cplx x, cplx k) const {
    const RootValue r = eq_(x, k);
    const cplx xk = -r.fk / r.fx;
    const cplx xkk = -(r.fxx * xk * xk + 2.0 * r.fxk * xk + r.fkk) / r.fx;
    return {xk, xkk};
  }

  bool newton(cplx k, cplx& x, int max_iter) const {
    for (int it = 0; it < max_iter; ++it) {
      const RootValue r = eq_(x, k);
      if (r.fx == cplx(0.0)) return false;
      const cplx dx = r.f / r.fx;
      x -= dx;
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
      if (std::abs(dx) <= 1e-13 * (1.0 + std::abs(x))) return true;
    }
    return false;
  }

 private:
  void extend(const Node& start, double u_end, std::vector<Node>& out) const {
    const double dir = u_end >= start.u ? 1.0 : -1.0;
    Node cur = start;
    double h = 1e-3;
    while (dir * (u_end - cur.u) > 0.0) {
      const double hmax = 0.05 * (1.0 + std::abs(cur.u));
      h = std::min({h, hmax, dir * (u_end - cur.u)});
      const double u = cur.u + dir * h;
      const cplx k = k_of_u(u);
      const cplx pred = cur.x + cur.xk * (k - cur.k);
      cplx x = pred;
      const bool conv = newton(k, x, 8);
      const double err = std::abs(x - pred) / (pred_tol_ * (1.0 + std::abs(x)));
      if (!conv || err > 1.0) {
        h *= 0.5;
        if (h < 1e-12) throw ContinuationFailure("branch continuation stalled", 0.5 * cur.k * cur.k);
        continue;
      }
      cur = Node{u, k, x, slope(x, k)};
      out.push_back(cur);
      if (err < 0.25) h *= 1.5;
    }
  }

  Eq eq_;
  double pred_tol_;
  std::vector<Node> nodes_;
};

inline double u_for_omega(double omega) {
  return omega >= 0.0 ? std::sqrt(2.0 * omega) : -std::sqrt(-2.0 * omega);
}

}  // namespace detail

/// Channel data at one contour point (internal units). Derivatives are with
/// respect to ω along the contour.
struct SturmianPoint {
  cplx omega, k;
  cplx rho, drho, d2rho;
  cplx x, dx, d2x;  // branch unknown: P = p² (rectangular) or ρ (polynomial)
  cplx norm = 1.0;  // N, so that S/N has (S|S) = 1
  double residual = 0.0;
};

/// Rectangular even channel n (n = 0, 2, 4, ...), internal units.
/// ρ_n(0) = -(nπ)²/2; for ω → -∞, p_n → (n+1)π.
class RectangularChannel {
 public:
  RectangularChannel(int n, double omega_lo = -400.0, double omega_hi = 400.0)
      : n_(n),
        table_(std::make_shared<detail::BranchTable<detail::RectangularEquation>>(
            detail::RectangularEquation{}, cplx((n * pi) * (n * pi)), detail::u_for_omega(omega_lo),
            detail::u_for_omega(omega_hi))) {
    if (n < 0 || n % 2 != 0) throw DomainError("RectangularChannel: index must be even and ≥ 0");
    // Sign of N continued along the nodes from k = 0.
    const auto& nodes = table_->nodes();
    norms_.resize(nodes.size());
    std::size_t z = 0;
    while (nodes[z].u < 0.0) ++z;
    norms_[z] = std::sqrt(norm2(nodes[z].x));
    for (std::size_t i = z + 1; i < nodes.size(); ++i) norms_[i] = pick(norm2(nodes[i].x), norms_[i - 1]);
    for (std::size_t i = z; i-- > 0;) norms_[i] = pick(norm2(nodes[i].x), norms_[i + 1]);
  }

  int index() const { return n_; }
  double omega_min() const { return -0.5 * table_->u_min() * table_->u_min(); }
  double omega_max() const { return 0.5 * table_->u_max() * table_->u_max(); }

  /// N²(P) = (1 + sinc p)/2.
  static cplx norm2(cplx P) {
    const auto e = detail::entire_cs(P / 4.0);
    return 0.5 * (1.0 + e.e1 * e.e0);
  }

  SturmianPoint at(cplx omega) const {
    SturmianPoint pt;
    pt.omega = omega;
    pt.k = channel_momentum(omega);
    pt.x = table_->solve(pt.k);
    const auto [xk, xkk] = table_->derivatives(pt.x, pt.k);
    pt.dx = xk / pt.k;
    pt.d2x = xkk / (pt.k * pt.k) - xk / (pt.k * pt.k * pt.k);
    pt.rho = omega - 0.5 * pt.x;
    pt.drho = 1.0 - 0.5 * pt.dx;
    pt.d2rho = -0.5 * pt.d2x;
    pt.norm = pick(norm2(pt.x), norms_[table_->nearest(pt.k)]);
    const cplx p = std::sqrt(pt.x);
    pt.residual = std::abs(std::tan(0.5 * p) + I * pt.k / p);
    if (pt.x == cplx(0.0)) pt.residual = 0.0;
    return pt;
  }

  cplx rho(cplx omega) const { return at(omega).rho; }

  /// M2_nn = (S_n|∂²_ω S_n) = -P'² ∫ (∂_P φ)² over the well, since (φ|φ) = 1.
  cplx m2_diagonal(const SturmianPoint& pt) const {
    const cplx P = pt.x;
    const cplx N = pt.norm;
    const cplx NP = detail::entire_cs(P).e1p / (4.0 * N);
    const auto& gl = detail::gauss_legendre<32>();
    cplx acc = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double x = 0.25 * (1.0 + gl.nodes[i]);
      const auto e = detail::entire_cs(P * x * x);
      const cplx phi_p = -x * x * e.e1 / (2.0 * N) - e.e0 * NP / (N * N);
      acc += gl.weights[i] * phi_p * phi_p;
    }
    return -pt.dx * pt.dx * 0.5 * acc;
  }

  /// S_n(x, ω), normalized so (S|S) = 1.
  cplx eigenfunction(double x, cplx omega) const {
    const SturmianPoint pt = at(omega);
    const double ax = std::abs(x);
    if (ax <= 0.5) return detail::entire_cs(pt.x * ax * ax).e0 / pt.norm;
    return detail::entire_cs(pt.x / 4.0).e0 / pt.norm * std::exp(I * pt.k * (ax - 0.5));
  }

  const detail::BranchTable<detail::RectangularEquation>& table() const { return *table_; }

 private:
  static cplx pick(cplx n2, cplx ref) {
    const cplx n = std::sqrt(n2);
    return std::abs(n - ref) <= std::abs(n + ref) ? n : -n;
  }

  int n_;
  std::shared_ptr<const detail::BranchTable<detail::RectangularEquation>> table_;
  std::vector<cplx> norms_;
};

/// Even channel of a polynomial well on |x| ≤ 1/2 (internal units), tracked
/// from the threshold root ρ_n(0); carries only the diagonal M2.
class PolynomialWellChannel {
 public:
  PolynomialWellChannel(detail::PolynomialProfile w, int n, double omega_lo = -400.0, double omega_hi = 400.0)
      : n_(n), w_(std::move(w)) {
    if (n < 0 || n % 2 != 0) throw DomainError("PolynomialWellChannel: index must be even and ≥ 0");
    table_ = std::make_shared<detail::BranchTable<detail::PolynomialEquation>>(
        detail::PolynomialEquation{w_}, cplx(threshold_root(w_, n / 2)), detail::u_for_omega(omega_lo),
        detail::u_for_omega(omega_hi));
  }

  int index() const { return n_; }

  /// j-th root (ρ ≤ 0, decreasing) of S'(a; ρ, ω = 0) = 0.
  static double threshold_root(const detail::PolynomialProfile& w, int j) {
    if (j == 0) return 0.0;
    auto f = [&](double r) { return detail::shoot(w, r, 0.0).ds_edge.v.real(); };
    double prev_r = -1e-9, prev_f = f(prev_r);
    int found = 0;
    for (double r = -0.05;; r -= 0.05 * std::max(1.0, std::sqrt(-r) * 0.5)) {
      const double fr = f(r);
      if ((fr < 0.0) != (prev_f < 0.0)) {
        if (++found == j) {
          double lo = r, hi = prev_r, flo = fr;
          for (int i = 0; i < 200 && hi - lo > 1e-15 * std::abs(lo); ++i) {
            const double mid = 0.5 * (lo + hi), fm = f(mid);
            if ((fm < 0.0) == (flo < 0.0)) {
              lo = mid;
              flo = fm;
            } else {
              hi = mid;
            }
          }
          return 0.5 * (lo + hi);
        }
      }
      prev_r = r;
      prev_f = fr;
      if (r < -1e6) throw ContinuationFailure("threshold root not found", 0.0);
    }
  }

  SturmianPoint at(cplx omega) const {
    SturmianPoint pt;
    pt.omega = omega;
    pt.k = channel_momentum(omega);
    pt.x = table_->solve(pt.k);
    pt.rho = pt.x;
    pt.dx = table_->slope(pt.x, pt.k) / pt.k;
    pt.drho = pt.dx;
    pt.d2x = pt.d2rho = cplx(std::nan(""), 0.0);
    const auto r = detail::shoot(w_, pt.rho, omega);
    pt.norm = std::sqrt(detail::weighted_moments(w_, detail::shoot(w_, pt.rho, omega, 1.0, true), 0.0).ss);
    pt.residual = std::abs(r.ds_edge.v - I * pt.k * r.s_edge.v) / std::max(1.0, std::abs(r.s_edge.v));
    return pt;
  }

  cplx rho(cplx omega) const { return table_->solve(channel_momentum(omega)); }

  /// M2_nn = -(∂Ŝ|∂Ŝ) for Ŝ = S/N.
  cplx m2_diagonal(const SturmianPoint& pt) const {
    const auto r = detail::shoot(w_, pt.rho, pt.omega, 1.0, true);
    const auto m = detail::weighted_moments(w_, r, pt.drho);
    return -(m.dd / m.ss - m.sd * m.sd / (m.ss * m.ss));
  }

  const detail::PolynomialProfile& profile() const { return w_; }
  const detail::BranchTable<detail::PolynomialEquation>& table() const { return *table_; }

 private:
  int n_;
  detail::PolynomialProfile w_;
  std::shared_ptr<const detail::BranchTable<detail::PolynomialEquation>> table_;
};

struct CouplingMatrices {
  cplx omega;
  Eigen::MatrixXcd m1, m2;
  bool threshold_singular = false;  // |ω| < ω_guard: values returned, flagged
};

namespace detail {

/// Per-channel quantities entering the rectangular overlap formulas.
struct RectColumn {
  cplx P, dP, d2P, N, NQ, NQQ;
};

inline RectColumn rect_column(const SturmianPoint& pt) {
  const auto e = entire_cs(pt.x / 4.0);
  // A = N² = (1 + E1 E0)/2 as a function of Q = P.
  const cplx aq = (e.e1p * e.e0 - 0.5 * e.e1 * e.e1) / 8.0;
  const cplx aqq = (e.e1pp * e.e0 - 1.5 * e.e1 * e.e1p) / 32.0;
  RectColumn c;
  c.P = pt.x;
  c.dP = pt.dx;
  c.d2P = pt.d2x;
  c.N = pt.norm;
  c.NQ = aq / (2.0 * c.N);
  c.NQQ = aqq / (2.0 * c.N) - aq * aq / (4.0 * c.N * c.N * c.N);
  return c;
}

/// cos(√P x) and its first two P-derivatives at the quadrature nodes of
/// [0, 1/2], with the weights folded in for the even full-well integral.
struct RectNodal {
  std::array<cplx, 64> c0, c1, c2;
};

inline RectNodal rect_nodal(cplx P) {
  const auto& gl = gauss_legendre<64>();
  RectNodal r;
  for (std::size_t i = 0; i < 64; ++i) {
    const double x = 0.25 * (gl.nodes[i] + 1.0);
    const double x2 = x * x;
    const auto e = entire_cs(P * x2);
    r.c0[i] = e.e0;
    r.c1[i] = -0.5 * x2 * e.e1;
    r.c2[i] = -0.5 * x2 * x2 * e.e1p;
  }
  return r;
}

/// I_j = ∫_{-1/2}^{1/2} cos(p_m x) ∂^j_Q cos(√Q x)|_{Q=P_n} dx, j = 0, 1, 2.
inline std::array<cplx, 3> rect_overlaps(const RectNodal& m, const RectNodal& n) {
  const auto& gl = gauss_legendre<64>();
  std::array<cplx, 3> s{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < 64; ++i) {
    const double w = 0.5 * gl.weights[i];  // 2 × (1/4) for the even full well
    s[0] += w * m.c0[i] * n.c0[i];
    s[1] += w * m.c0[i] * n.c1[i];
    s[2] += w * m.c0[i] * n.c2[i];
  }
  return s;
}

inline std::array<cplx, 3> rect_overlaps(cplx pm, cplx pn) { return rect_overlaps(rect_nodal(pm), rect_nodal(pn)); }

}  // namespace detail

/// (S_m(ω)|S_n(ω)) for two rectangular channels.
inline cplx sturmian_overlap(const RectangularChannel& a, const RectangularChannel& b, cplx omega) {
  const auto pa = a.at(omega), pb = b.at(omega);
  return detail::rect_overlaps(pa.x, pb.x)[0] / (pa.norm * pb.norm);
}

/// Closed-form M1, M2 for rectangular channels from the pre-evaluated points.
inline CouplingMatrices coupling_matrices(const std::vector<SturmianPoint>& pts, double omega_guard = 1e-6) {
  const std::size_t n = pts.size();
  CouplingMatrices cm;
  cm.omega = n ? pts[0].omega : cplx(0.0);
  cm.m1 = Eigen::MatrixXcd::Zero(n, n);
  cm.m2 = Eigen::MatrixXcd::Zero(n, n);
  cm.threshold_singular = std::abs(cm.omega) < omega_guard;
  std::vector<detail::RectColumn> cols;
  std::vector<detail::RectNodal> nodal;
  for (const auto& p : pts) {
    cols.push_back(detail::rect_column(p));
    nodal.push_back(detail::rect_nodal(p.x));
  }
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& a = cols[m];
      const auto& b = cols[j];
      const auto ov = detail::rect_overlaps(nodal[m], nodal[j]);
      const cplx nm = a.N, nn = b.N;
      const cplx gq = ov[1] / (nm * nn) - ov[0] * b.NQ / (nm * nn * nn);
      const cplx gqq = ov[2] / (nm * nn) - 2.0 * ov[1] * b.NQ / (nm * nn * nn) +
                       ov[0] * (2.0 * b.NQ * b.NQ / (nn * nn * nn) - b.NQQ / (nn * nn)) / nm;
      cm.m1(m, j) = gq * b.dP;
      cm.m2(m, j) = gqq * b.dP * b.dP + gq * b.d2P;
    }
  }
  return cm;
}

inline CouplingMatrices coupling_matrices(const std::vector<RectangularChannel>& channels, cplx omega,
                                          double omega_guard = 1e-6) {
  std::vector<SturmianPoint> pts;
  for (const auto& c : channels) pts.push_back(c.at(omega));
  return coupling_matrices(pts, omega_guard);
}

/// Set of rectangular channels n = 0, 2, ..., 2(count-1).
inline std::vector<RectangularChannel> rectangular_channels(int count, double omega_lo = -400.0,
                                                            double omega_hi = 400.0) {
  std::vector<RectangularChannel> out;
  for (int i = 0; i < count; ++i) out.emplace_back(2 * i, omega_lo, omega_hi);
  return out;
}

/// ρ_n(ω) for a physical rectangular trap (n even).
inline cplx rho_rectangular(double omega, int n, const TrapSpec& spec) {
  if (spec.shape != Shape::Rectangular) throw DomainError("rho_rectangular: shape is not rectangular");
  const ScalingParams sc = scaling(spec);
  const double wb = omega * sc.energy_scale;
  const double span = std::max(10.0, 1.5 * std::abs(wb));
  const RectangularChannel ch(n, -span, span);
  return ch.rho(wb) / (2.0 * spec.mass * spec.half_width);
}

/// Dump of 𝒲_n(ω) = ρ_n*(ω) and the M matrices on an ω grid (internal units).
inline CsvTable dump_channels(const std::vector<RectangularChannel>& channels, const std::vector<double>& omegas,
                              bool with_matrices, double omega_guard = 1e-6) {
  std::vector<std::string> cols{"omega"};
  for (const auto& c : channels) {
    cols.push_back("re_W" + std::to_string(c.index()));
    cols.push_back("im_W" + std::to_string(c.index()));
  }
  const std::size_t n = channels.size();
  if (with_matrices) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (const char* m : {"M1", "M2"}) {
          const std::string tag = std::string(m) + "_" + std::to_string(channels[a].index()) +
                                  std::to_string(channels[b].index());
          cols.push_back("re_" + tag);
          cols.push_back("im_" + tag);
        }
    cols.push_back("threshold_flag");
  }
  CsvTable t(cols);
  t.meta("units", "internal (mu=1, unit-width well, W=1 inside)");
  t.meta("W", "conj(rho_n) on the upper lip of the cut");
  t.meta("omega_guard", omega_guard);
  for (double w : omegas) {
    std::vector<SturmianPoint> pts;
    for (const auto& c : channels) pts.push_back(c.at(w));
    std::vector<double> r{w};
    for (const auto& p : pts) {
      r.push_back(p.rho.real());
      r.push_back(-p.rho.imag());
    }
    if (with_matrices) {
      const auto cm = coupling_matrices(pts, omega_guard);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          r.push_back(cm.m1(a, b).real());
          r.push_back(cm.m1(a, b).imag());
          r.push_back(cm.m2(a, b).real());
          r.push_back(cm.m2(a, b).imag());
        }
      r.push_back(cm.threshold_singular ? 1.0 : 0.0);
    }
    t.row(r);
  }
  return t;
}

}  // namespace sturmtrap
