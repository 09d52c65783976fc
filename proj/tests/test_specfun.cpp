#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hardylab/quadrature.hpp"
#include "hardylab/specfun.hpp"

using namespace hardylab;
using specfun::BesselOrder;

namespace {

// Long-double ascending series, used only to bisect for z_{0,1}.
long double j0_series_ld(long double x) {
  long double term = 1.0L, sum = 1.0L;
  const long double q = -0.25L * x * x;
  for (int m = 1; m < 80; ++m) {
    term *= q / (static_cast<long double>(m) * m);
    sum += term;
  }
  return sum;
}

long double first_zero_oracle() {
  long double lo = 2.0L, hi = 3.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (j0_series_ld(mid) > 0) lo = mid; else hi = mid;
  }
  return 0.5L * (lo + hi);
}

struct JValue {
  double nu, x, value;
};

// 40-digit reference values, frozen.
constexpr JValue kReference[] = {
    {0, 0.5, 0.93846980724081290423},     {0, 7.3, 0.28821694763501439904},
    {0, 11.9, 0.02504944169958964508},    {0, 12.1, 0.069666773606807311849},
    {0, 18.7, 0.10855948389316121823},    {0, 24.9, 0.083245968353015490053},
    {0, 25.1, 0.10827567149994945198},    {0, 100.0, 0.019985850304223122424},
    {0, 499.5, -0.024901316934301134524}, {0.5, 3.0, 0.065008182877375778114},
    {1, 30.0, -0.11875106261662293652},   {2.5, 40.0, -0.08751431140932354553},
    {3, 13.0, 0.0033198169704070507954},  {5, 0.2, 8.3194543609469174954e-8},
    {7.25, 21.0, -0.1421376547454136749}, {10, 9.0, 0.12469409282831672203},
    {10, 15.5, -0.16069031573035774542},  {10, 26.0, 0.071159022626588004298},
    {10, 60.0, 0.097177143328071091839},  {10, 250.0, 0.016953778605482897536},
    {10, 500.0, 0.034982637503815106764}, {0.3, 77.7, 0.045499973324119728639},
};

}  // namespace

TEST(Gamma, SimpleValues) {
  EXPECT_NEAR(specfun::gamma(0.5), 1.7724538509055160, 1e-15);
  EXPECT_NEAR(specfun::gamma(5.0), 24.0, 24.0 * 1e-14);
  EXPECT_NEAR(specfun::gamma(0.125), 7.5339415987976119047, 7.6e-13);
}

TEST(Gamma, PolesThrow) {
  EXPECT_THROW(specfun::gamma(0.0), std::domain_error);
  EXPECT_THROW(specfun::gamma(-3.0), std::domain_error);
  EXPECT_NO_THROW(specfun::gamma(-2.5));
}

TEST(Gamma, Recursion) {
  for (int i = 0; i < 1000; ++i) {
    const double x = 0.05 * std::pow(600.0, i / 999.0);
    const double lhs = specfun::gamma(x + 1.0), rhs = x * specfun::gamma(x);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::abs(lhs)) << "x=" << x;
  }
}

TEST(Gamma, Reflection) {
  for (int i = 1; i < 100; ++i) {
    const double x = i / 100.0;
    const double v = specfun::gamma(x) * specfun::gamma(1.0 - x) * std::sin(std::numbers::pi * x) /
                     std::numbers::pi;
    EXPECT_NEAR(v, 1.0, 1e-10) << "x=" << x;
  }
}

TEST(Gamma, MatchesLibraryOnRange) {
  for (int i = 0; i < 200; ++i) {
    const double x = 0.05 + i * (50.0 - 0.05) / 199.0;
    EXPECT_LE(std::abs(specfun::gamma(x) / std::tgamma(x) - 1.0), 1e-12) << "x=" << x;
  }
}

TEST(Bessel, ReferenceValues) {
  for (const auto& r : kReference) {
    EXPECT_NEAR(specfun::bessel_j(r.nu, r.x), r.value, 1e-12) << "nu=" << r.nu << " x=" << r.x;
  }
}

TEST(Bessel, AgainstLibraryGrid) {
  for (double nu : {0.0, 0.5, 1.0, 1.5, 3.0, 6.5, 10.0}) {
    for (int i = 0; i <= 2000; ++i) {
      const double x = 0.25 * i;
      EXPECT_NEAR(specfun::bessel_j(nu, x), std::cyl_bessel_j(nu, x), 1e-12)
          << "nu=" << nu << " x=" << x;
    }
  }
}

TEST(Bessel, SpecialPoints) {
  EXPECT_EQ(specfun::bessel_j(0.0, 0.0), 1.0);
  EXPECT_EQ(specfun::bessel_j(2.0, 0.0), 0.0);
  EXPECT_NEAR(specfun::bessel_j(0.5, std::numbers::pi), 0.0, 1e-15);
  EXPECT_THROW(specfun::bessel_j(0.0, -1.0), std::domain_error);
  EXPECT_THROW(BesselOrder(-0.5), precondition_error);
  EXPECT_THROW(BesselOrder(NAN), precondition_error);
}

TEST(Bessel, BranchesAgreeNearSwitchovers) {
  for (double nu : {0.0, 0.5, 2.0, 7.5, 10.0}) {
    for (int i = -20; i <= 20; ++i) {
      const double x1 = specfun::kSeriesLimit + 0.05 * i;
      EXPECT_NEAR(specfun::detail::bessel_series(nu, x1), specfun::detail::bessel_miller(nu, x1),
                  1e-10);
      const double x2 = specfun::kAsymptoticLimit + 0.05 * i;
      EXPECT_NEAR(specfun::detail::bessel_miller(nu, x2), specfun::detail::bessel_hankel(nu, x2),
                  1e-10);
    }
  }
}

TEST(BesselZeros, FirstZeroMatchesBisectionOracle) {
  const double oracle = static_cast<double>(first_zero_oracle());
  EXPECT_NEAR(oracle, 2.4048255576957727686, 1e-15);
  EXPECT_NEAR(specfun::bessel_zero(BesselOrder(0.0), 1), oracle, 1e-11);
  EXPECT_NEAR(specfun::bessel_j(0.0, oracle), 0.0, 1e-11);
}

TEST(BesselZeros, ReferenceZeros) {
  EXPECT_NEAR(specfun::bessel_zero(BesselOrder(0.0), 200), 627.53333174690422546, 1e-10);
  EXPECT_NEAR(specfun::bessel_zero(BesselOrder(3.5), 7), 26.47676366453912815, 1e-11);
}

TEST(BesselZeros, ValuesAndSpacing) {
  const auto z = specfun::bessel_zeros(BesselOrder(0.0), 200);
  for (std::size_t k = 0; k < z.size(); ++k) {
    EXPECT_LT(std::abs(specfun::bessel_j(0.0, z[k])), 1e-10) << "k=" << k + 1;
    if (k > 0) {
      EXPECT_GT(z[k], z[k - 1]);
    }
  }
  EXPECT_NEAR(z[50] - z[49], std::numbers::pi, 1e-3);
}

TEST(BesselZeros, HalfOrderZerosAreMultiplesOfPi) {
  const auto z = specfun::bessel_zeros(BesselOrder(0.5), 30);
  for (int k = 1; k <= 30; ++k) EXPECT_NEAR(z[k - 1], k * std::numbers::pi, 1e-9);
}

TEST(BesselZeros, RejectsBadIndex) {
  EXPECT_THROW(specfun::bessel_zero(BesselOrder(0.0), 0), precondition_error);
}

TEST(DirichletNorm, MatchesQuadrature) {
  const BesselOrder nu(0.0);
  const double z = specfun::bessel_zero(nu, 1);
  double q = 0.0;
  for (int p = 0; p < 64; ++p) {
    q += quad::integrate_fixed<20>(
        [&](double r) {
          const double j = specfun::bessel_j(nu, z * r);
          return r * j * j;
        },
        p / 64.0, (p + 1) / 64.0);
  }
  EXPECT_NEAR(specfun::dirichlet_norm(nu, 1), q, 1e-10);
}

TEST(DirichletNorm, GrowthAndPositivity) {
  const BesselOrder nu(0.0);
  const auto z = specfun::bessel_zeros(nu, 200);
  for (double zk : z) EXPECT_GT(specfun::dirichlet_norm_at_zero(nu, zk), 0.0);
  const double a = z[99] * z[99] * specfun::dirichlet_norm_at_zero(nu, z[99]);
  const double b = z[199] * z[199] * specfun::dirichlet_norm_at_zero(nu, z[199]);
  EXPECT_NEAR(b / a, 2.0, 0.1);
}

TEST(SphereArea, KnownValues) {
  EXPECT_NEAR(specfun::sphere_area(3), 4.0 * std::numbers::pi, 1e-13);
  EXPECT_NEAR(specfun::sphere_area(2), 2.0 * std::numbers::pi, 1e-13);
  EXPECT_NEAR(specfun::sphere_area(4), 2.0 * std::numbers::pi * std::numbers::pi, 1e-12);
}
