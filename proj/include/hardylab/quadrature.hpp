#pragma once

// Gauss-Legendre rules and a small adaptive integrator used by the
// assembly routines and the verification checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace hardylab::quad {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// Builds the n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussRule make_gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("make_gauss_legendre: n must be >= 1");
  GaussRule rule;
  if (n == 1) return GaussRule{{0.0}, {2.0}};
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Cached rule of compile-time order.
template <int N>
const GaussRule& gauss_legendre() {
  static const GaussRule rule = make_gauss_legendre(N);
  return rule;
}

/// Fixed-order rule on [a, b].
template <int N, class F>
double integrate_fixed(F&& f, double a, double b) {
  const auto& rule = gauss_legendre<N>();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < N; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

/// Fixed-order rule on `panels` equal subintervals, summed with compensation.
template <int N, class F>
double integrate_composite(F&& f, double a, double b, int panels) {
  const double step = (b - a) / panels;
  double sum = 0.0, c = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * step, hi = (k + 1 == panels) ? b : lo + step;
    const double y = integrate_fixed<N>(f, lo, hi) - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  long panels = 0;
};

inline constexpr long kMaxAdaptivePanels = 1L << 20;

namespace detail {

template <class F>
void adaptive_step(F& f, double a, double b, double whole, double tol, int depth,
                   AdaptiveResult& out) {
  const double mid = 0.5 * (a + b);
  const double left = integrate_fixed<15>(f, a, mid);
  const double right = integrate_fixed<15>(f, mid, b);
  const double err = std::abs(left + right - whole);
  out.panels += 2;
  if (err <= tol || depth <= 0 || out.panels > kMaxAdaptivePanels ||
      !(std::isfinite(left) && std::isfinite(right))) {
    if (err > tol || !std::isfinite(left + right)) out.converged = false;
    out.value += left + right;
    out.error += err;
    return;
  }
  adaptive_step(f, a, mid, left, 0.5 * tol, depth - 1, out);
  adaptive_step(f, mid, b, right, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

/// Globally adaptive bisection with 15-point Gauss-Legendre panels.
/// Stops when the panel-halving difference drops under
/// max(abs_tol, rel_tol * |I|), using the first coarse estimate for |I|.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                                  double abs_tol = 0.0, int max_depth = 40) {
  AdaptiveResult out;
  if (a == b) return out;
  auto& fn = f;
  const double whole = integrate_fixed<15>(fn, a, b);
  // A coarse pre-pass gives a better magnitude estimate than a single panel.
  double scale = 0.0;
  constexpr int kPre = 8;
  for (int i = 0; i < kPre; ++i) {
    const double lo = a + (b - a) * i / kPre, hi = a + (b - a) * (i + 1) / kPre;
    scale += std::abs(integrate_fixed<15>(fn, lo, hi));
  }
  const double tol = std::max(abs_tol, rel_tol * std::max(scale, std::abs(whole)));
  if (tol == 0.0) {
    out.value = whole;
    return out;
  }
  detail::adaptive_step(fn, a, b, whole, tol, max_depth, out);
  return out;
}

}  // namespace hardylab::quad
