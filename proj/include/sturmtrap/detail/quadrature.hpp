// Fixed Gauss-Legendre rules on [-1, 1] built from Boost's tabulated
// half-rules.
#pragma once

#include <array>
#include <cstddef>

#include <boost/math/quadrature/gauss.hpp>

namespace sturmtrap::detail {

template <std::size_t N>
struct GaussLegendreRule {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};
};

template <std::size_t N>
const GaussLegendreRule<N>& gauss_legendre() {
  static const GaussLegendreRule<N> rule = [] {
    GaussLegendreRule<N> r;
    using Half = boost::math::quadrature::gauss<double, N>;
    const auto& x = Half::abscissa();
    const auto& w = Half::weights();
    std::size_t k = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) {
        r.nodes[k] = 0.0;
        r.weights[k++] = w[i];
      } else {
        r.nodes[k] = -x[i];
        r.weights[k++] = w[i];
        r.nodes[k] = x[i];
        r.weights[k++] = w[i];
      }
    }
    return r;
  }();
  return rule;
}

/// ∫_lo^hi f(x) dx with an N-point rule.
template <std::size_t N, class F>
auto integrate_gl(F&& f, double lo, double hi) {
  const auto& r = gauss_legendre<N>();
  const double c = 0.5 * (hi + lo), h = 0.5 * (hi - lo);
  decltype(f(c)) s{};
  for (std::size_t i = 0; i < N; ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

}  // namespace sturmtrap::detail
