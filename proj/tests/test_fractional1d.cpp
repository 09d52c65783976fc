#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "hardylab/fractional1d.hpp"
#include "hardylab/quadrature.hpp"

using namespace hardylab;
using namespace hardylab::frac;

namespace {

constexpr double kS = 0.25;

// Whole-line form a int int (f(x) - f(y))^2 / |x-y|^{1+2s} for f supported in [-R, R],
// by nested adaptive quadrature over the square plus the elementary exterior y-integral.
double form_oracle(const std::function<double(double)>& f, double R, const std::vector<double>& kinks, double s) {
  const double q = 1.0 + 2.0 * s;
  auto split = [&](const std::function<double(double)>& g, double lo, double hi, std::vector<double> cuts) {
    cuts.push_back(lo);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i] < lo || cuts[i + 1] > hi || !(cuts[i + 1] > cuts[i])) continue;
      acc += quad::integrate_adaptive(g, cuts[i], cuts[i + 1], 1e-10, 1e-12).value;
    }
    return acc;
  };
  auto outer = [&](double x) {
    const double fx = f(x);
    auto inner = [&](double y) {
      const double d = f(x) - f(y);
      return y == x ? 0.0 : d * d * std::pow(std::abs(x - y), -q);
    };
    auto cuts = kinks;
    cuts.push_back(x);
    double v = split(inner, -R, R, cuts);
    const double ext = (std::pow(R - x, 1.0 - q) + std::pow(R + x, 1.0 - q)) / (q - 1.0);
    return v + 2.0 * fx * fx * ext;
  };
  return seminorm_constant(s, 1) * split(outer, -R, R, kinks);
}

double hat(const FracGrid& g, int j, double x) {
  const double t = std::abs(x - g.node(j)) / g.h();
  return t < 1.0 ? 1.0 - t : 0.0;
}

std::vector<double> sample(const FracGrid& g, const std::function<double(double)>& f) {
  std::vector<double> u;
  for (double x : g.nodes()) u.push_back(f(x));
  return u;
}

}  // namespace

TEST(FracConstants, AgainstLibraryGamma) {
  for (double s : {0.05, 0.25, 0.4}) {
    const auto p = frac_constants(s);
    const double a = std::pow(2.0, 2 * s - 1) * std::tgamma(0.5 + s) / (std::sqrt(std::numbers::pi) * std::abs(std::tgamma(-s)));
    const double r = std::tgamma((1 + 2 * s) / 4) / std::tgamma((1 - 2 * s) / 4);
    EXPECT_NEAR(p.a, a, 1e-12 * a);
    EXPECT_NEAR(p.hardy_c, std::pow(2.0, 2 * s) * r * r, 1e-12 * p.hardy_c);
    EXPECT_GT(p.a, 0.0);
    EXPECT_GT(p.hardy_c, 0.0);
  }
}

TEST(FracConstants, Limits) {
  EXPECT_LT(std::abs(hardy_constant(0.999, 3) - 0.25), 0.005);
  EXPECT_LT(seminorm_constant(0.01, 1), 0.01);
  EXPECT_THROW(frac_constants(0.5), precondition_error);
  EXPECT_THROW(frac_constants(0.0), precondition_error);
}

TEST(FracAssembly, TouchingMomentsAgainstQuadrature) {
  const double q = 1.0 + 2.0 * kS;
  const auto n = detail::touching_moments(q);
  for (int a = 0; a <= 2; ++a) {
    for (int b = 0; a + b <= 2; ++b) {
      // polar coordinates around the corner: x = r cos, y = r sin
      auto outer = [&](double th) {
        const double c = std::cos(th), s = std::sin(th);
        const double rmax = std::min(1.0 / c, 1.0 / s);
        const double e = a + b + 1.0 - q;  // r^{a+b} r^{-q} r dr
        return std::pow(c, a) * std::pow(s, b) * std::pow(c + s, -q) * std::pow(rmax, e + 1.0) / (e + 1.0);
      };
      const double oracle = quad::integrate_adaptive(outer, 0.0, std::numbers::pi / 4, 1e-13).value +
                            quad::integrate_adaptive(outer, std::numbers::pi / 4, std::numbers::pi / 2, 1e-13).value;
      EXPECT_NEAR(n[a][b], oracle, 1e-11 * oracle) << a << "," << b;
    }
  }
}

TEST(FracAssembly, SingleHatAgainstOracle) {
  const FracGrid g(1.0, 1);
  const auto m = assemble_frac_form(g, kS);
  const double oracle = form_oracle([&](double x) { return hat(g, 1, x); }, 1.0, {0.0}, kS);
  EXPECT_NEAR(m(0, 0), oracle, 1e-6 * oracle);
  EXPECT_GT(m(0, 0), 0.0);
}

TEST(FracAssembly, TwoHatsAgainstOracle) {
  const FracGrid g(1.5, 2);
  const auto m = assemble_frac_form(g, kS);
  const std::vector<double> kinks{-0.5, 0.5};
  const double h1 = form_oracle([&](double x) { return hat(g, 1, x); }, 1.5, kinks, kS);
  const double h2 = form_oracle([&](double x) { return hat(g, 2, x); }, 1.5, kinks, kS);
  const double hsum = form_oracle([&](double x) { return hat(g, 1, x) + hat(g, 2, x); }, 1.5, kinks, kS);
  EXPECT_NEAR(m(0, 0), h1, 1e-6 * h1);
  EXPECT_NEAR(m(1, 1), h2, 1e-6 * h2);
  const double off = 0.5 * (hsum - h1 - h2);
  EXPECT_NEAR(m(0, 1), off, 1e-6 * std::abs(off));
}

TEST(FracAssembly, ReflectionSymmetry) {
  for (int n : {20, 41}) {
    const FracGrid g(3.0, n);
    const auto a = assemble_frac_form(g, kS);
    const auto m = assemble_hardy_mass(g, kS);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        EXPECT_NEAR(a(i, j), a(n - 1 - i, n - 1 - j), 1e-12 * a.max_abs());
        EXPECT_NEAR(m(i, j), m(n - 1 - i, n - 1 - j), 1e-12 * m.max_abs());
      }
    }
  }
}

TEST(FracAssembly, PositiveDefinite) {
  for (int n : {10, 57, 200}) {
    const auto a = assemble_frac_form(FracGrid(4.0, n), kS);
    EXPECT_GT(spectra::dense_min_eigenvalue(a), 0.0) << n;
  }
}

TEST(FracAssembly, FormValueMatchesMatrix) {
  const FracGrid g(8.0, 120);
  const auto u = bump_samples(g, 3);
  const auto a = assemble_frac_form(g, kS);
  EXPECT_NEAR(frac_form_value(g, kS, u), a.quadratic_form(u), 1e-12 * a.quadratic_form(u));
  EXPECT_EQ(frac_form_value(g, kS, u, 1), frac_form_value(g, kS, u, 8));
}

TEST(FracAssembly, HardyMassAgainstQuadrature) {
  // odd and even n put x = 0 on a node and inside a cell respectively
  for (int n : {9, 10}) {
    const FracGrid g(2.0, n);
    const auto m = assemble_hardy_mass(g, kS);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j <= std::min(n - 1, i + 1); ++j) {
        auto f = [&](double x) { return hat(g, i + 1, x) * hat(g, j + 1, x) * std::pow(std::abs(x), -2.0 * kS); };
        const double lo = g.node(i), hi = g.node(j + 2);
        double v = 0.0;
        std::vector<double> cuts{lo, hi, g.node(i + 1), g.node(j + 1)};
        if (lo < 0.0 && hi > 0.0) cuts.push_back(0.0);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
          const double a = cuts[k], b = cuts[k + 1];
          if (!(b > a)) continue;
          if (a == 0.0 || b == 0.0) {
            // x = +-t^2 removes the |x|^{-1/2} endpoint singularity
            const double sign = (a == 0.0) ? 1.0 : -1.0, end = std::sqrt(std::abs(a == 0.0 ? b : a));
            auto sub = [&](double t) { return f(sign * t * t) * 2.0 * t; };
            v += quad::integrate_adaptive(sub, 0.0, end, 1e-13).value;
          } else {
            v += quad::integrate_adaptive(f, a, b, 1e-13).value;
          }
        }
        EXPECT_NEAR(m(i, j), v, 1e-10 * v) << n << " " << i << " " << j;
      }
    }
  }
}

TEST(FracAssembly, DilationScaling) {
  // x -> 2x: every matrix scales by 2^{1-2s} (kernel 2^{-1-2s}, measure 2^2 or 2)
  const FracGrid g(3.0, 30);
  const FracGrid g2 = g.dilated(2.0);
  const double f = std::pow(2.0, 1.0 - 2.0 * kS);
  const auto a = assemble_frac_form(g, kS), a2 = assemble_frac_form(g2, kS);
  const auto m = assemble_hardy_mass(g, kS), m2 = assemble_hardy_mass(g2, kS);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      EXPECT_NEAR(a2(i, j), f * a(i, j), 1e-10 * a.max_abs());
      EXPECT_NEAR(m2(i, j), f * m(i, j), 1e-10 * m.max_abs());
    }
  }
}

TEST(FracAssembly, DenseGuard) {
  EXPECT_THROW(assemble_frac_form(FracGrid(8.0, kDenseGuard + 1), kS), precondition_error);
}

TEST(FracHardy, PositivityAtSharpConstant) {
  for (int n : {50, 101, 400}) {
    for (double R : {4.0, 8.0}) {
      const auto c = hardy_check(kS, FracGrid(R, n));
      EXPECT_TRUE(c.holds()) << n << " " << R << " " << c.min_eigenvalue;
    }
  }
  EXPECT_TRUE(hardy_check(0.1, FracGrid(8.0, 200)).holds());
  EXPECT_TRUE(hardy_check(0.45, FracGrid(8.0, 200)).holds());
}

TEST(FracCount, ZeroPotential) {
  const auto c = frac_count(kS, radial::RadialPotential::zero(), 5.0, FracGrid(8.0, 200));
  EXPECT_EQ(c.count, 0);
  EXPECT_EQ(c.rhs, 0.0);
}

TEST(FracCount, MonotoneInCouplingAndRefinement) {
  const auto w = radial::RadialPotential::annulus(0.0, 1.0, 1.0);
  const FracGrid g(8.0, 150);
  int prev = 0;
  for (double lam : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const int n0 = frac_count(kS, w, lam, g).count;
    EXPECT_GE(n0, prev);
    prev = n0;
    EXPECT_LE(n0, frac_count(kS, w, lam, g.bisected()).count) << lam;
  }
}

TEST(FracCount, RhsExponents) {
  // W = 1 on [-1, 1], s = 1/4: int_{-1}^{1} lambda^2 (1 + |ln|x||)^3 dx = 2 lambda^2 * 16
  const auto c = frac_count(kS, radial::RadialPotential::annulus(0.0, 1.0, 1.0), 3.0, FracGrid(4.0, 20));
  EXPECT_NEAR(c.rhs, 2.0 * 9.0 * 16.0, 1e-8 * c.rhs);
}

TEST(FracCount, SweepSlope) {
  const auto sw = frac_sweep(kS, radial::RadialPotential::annulus(0.0, 1.0, 1.0), {1.0, 2.0, 4.0, 8.0}, FracGrid(8.0, 800), 4);
  EXPECT_GE(sw.slope, 1.5);
  EXPECT_LE(sw.slope, 2.5);
  for (std::size_t i = 1; i < sw.counts.size(); ++i) EXPECT_GE(sw.counts[i].count, sw.counts[i - 1].count);
}

TEST(FracPartition, UnitSumAndSupports) {
  const Partition p;
  const auto pp = sample_partition(FracGrid(8.0, 801), p);
  for (std::size_t i = 0; i < pp.x.size(); ++i) {
    EXPECT_NEAR(pp.chi[i] * pp.chi[i] + pp.eta[i] * pp.eta[i], 1.0, 1e-14);
    if (std::abs(pp.x[i]) > 2.0) {
      EXPECT_EQ(pp.chi[i], 0.0);
    }
    if (std::abs(pp.x[i]) < 1.0) {
      EXPECT_EQ(pp.eta[i], 0.0);
    }
  }
}

TEST(FracIms, DegeneratePartition) {
  const FracGrid g(8.0, 400);
  Partition p;
  p.degenerate = true;
  const auto r = ims_check(kS, bump_samples(g, 7), g, p);
  EXPECT_EQ(r.localization, 0.0);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(FracIms, InnerSupport) {
  const FracGrid g(8.0, 400);
  const auto u = sample(g, [](double x) {
    const double z = x / 0.9;
    return std::abs(z) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
  });
  EXPECT_LE(ims_check(kS, u, g).residual, 1e-4);
}

TEST(FracIms, ProlongationIsExact) {
  const FracGrid g(3.0, 5);
  const std::vector<double> u{1.0, -2.0, 0.5, 4.0, 3.0};
  const auto f = prolong(g, u);
  ASSERT_EQ(f.size(), 11u);
  const FracGrid b = g.bisected();
  for (int j = 1; j <= b.n; ++j) {
    const double x = b.node(j);
    double v = 0.0;
    for (int i = 1; i <= g.n; ++i) v += u[i - 1] * hat(g, i, x);
    EXPECT_NEAR(f[j - 1], v, 1e-14) << x;
  }
}

TEST(FracIms, RefinementStudy) {
  // nested grids carry the same piecewise-linear u; only chi u and eta u are re-interpolated
  const FracGrid g0(8.0, 400);
  const auto levels = ims_refinement(kS, bump_samples(g0, 7), g0, 3, {}, 4);
  ASSERT_EQ(levels.size(), 4u);
  std::vector<double> res;
  for (const auto& lv : levels) {
    EXPECT_NEAR(lv.result.form, levels[0].result.form, 1e-11 * levels[0].result.form);
    res.push_back(lv.result.residual);
  }
  EXPECT_EQ(levels.back().n, 3207);
  EXPECT_LE(res[0], 5e-4);
  EXPECT_LE(res.back(), 1e-4);
  for (std::size_t i = 1; i < res.size(); ++i) {
    EXPECT_LT(res[i], res[i - 1]);
    EXPECT_GE(std::log2(res[i - 1] / res[i]), 1.0);
  }
}

TEST(FracRemainder, PositiveAndNonincreasing) {
  const FracGrid g(8.0, 200);
  const double r0 = hardy_remainder_estimate(kS, g);
  const double r1 = hardy_remainder_estimate(kS, g.bisected());
  EXPECT_GT(r0, 0.0);
  EXPECT_GT(r1, 0.0);
  EXPECT_LE(r1, r0 * (1.0 + 1e-12));
}
