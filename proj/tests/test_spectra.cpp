#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hardylab/spectra.hpp"

using namespace hardylab;
using namespace hardylab::spectra;

namespace {

Tridiagonal laplacian(std::size_t n, double h) {
  Tridiagonal t(n);
  for (auto& v : t.diag) v = 2.0 / h;
  for (auto& v : t.offdiag) v = -1.0 / h;
  return t;
}

Tridiagonal random_tridiagonal(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tridiagonal t(n);
  for (auto& v : t.diag) v = u(rng);
  for (auto& v : t.offdiag) v = u(rng);
  return t;
}

DenseSymmetric random_dense(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseSymmetric m(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) m.set(i, j, u(rng));
  }
  return m;
}

// Characteristic polynomial of an integer matrix by Faddeev-LeVerrier;
// every division is exact. Returns c_0..c_n of det(xI - A), c_n = 1.
std::vector<long long> char_poly(const std::vector<std::vector<long long>>& a) {
  const std::size_t n = a.size();
  std::vector<long long> c(n + 1, 0);
  c[n] = 1;
  std::vector<std::vector<long long>> m(n, std::vector<long long>(n, 0));
  for (std::size_t k = 1; k <= n; ++k) {
    // M_k = A M_{k-1} + c_{n-k+1} I
    std::vector<std::vector<long long>> next(n, std::vector<long long>(n, 0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        long long s = 0;
        for (std::size_t l = 0; l < n; ++l) s += a[i][l] * m[l][j];
        next[i][j] = s + (i == j ? c[n - k + 1] : 0);
      }
    }
    m = next;
    long long tr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n; ++l) tr += a[i][l] * m[l][i];
    }
    c[n - k] = -tr / static_cast<long long>(k);
  }
  return c;
}

// For a real-rooted polynomial, Descartes' rule on p(-x) is exact.
int negative_roots(std::vector<long long> c) {
  for (std::size_t i = 1; i < c.size(); i += 2) c[i] = -c[i];
  int changes = 0;
  long long last = 0;
  for (long long v : c) {
    if (v == 0) continue;
    if (last != 0 && ((v > 0) != (last > 0))) ++changes;
    last = v;
  }
  return changes;
}

}  // namespace

TEST(TridiagInertia, DiagonalExample) {
  const Tridiagonal t({1.0, -2.0, 3.0}, {0.0, 0.0});
  const auto in = tridiag_inertia(t, 0.0);
  EXPECT_EQ(in.n_neg, 1);
  EXPECT_EQ(in.n_pos, 2);
  EXPECT_EQ(in.n_zero, 0);
}

TEST(TridiagInertia, StiffnessIsPositive) {
  for (std::size_t n : {1u, 2u, 10u, 1000u}) {
    const auto in = tridiag_inertia(laplacian(n, 1.0 / (n + 1)), 0.0);
    EXPECT_EQ(in.n_neg, 0);
    EXPECT_EQ(in.n_zero, 0);
  }
}

TEST(TridiagInertia, ZeroPivotFlagged) {
  const Tridiagonal t({0.0, 1.0}, {0.0});
  const auto in = tridiag_inertia(t, 0.0);
  EXPECT_EQ(in.n_zero, 1);
  EXPECT_TRUE(in.flagged());
  EXPECT_EQ(in.size(), 2);
}

TEST(TridiagInertia, MidSpectrumMatchesDenseJacobi) {
  const std::size_t n = 50;
  const auto t = laplacian(n, 1.0);
  DenseSymmetric d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.set(i, i, t.diag[i]);
    if (i + 1 < n) d.set(i + 1, i, t.offdiag[i]);
  }
  const auto ev = dense_eigenvalues(d);
  for (double shift : {0.7, 1.9, 2.0 + 1e-3, 3.3}) {
    int brute = 0;
    for (double v : ev) brute += v < shift;
    EXPECT_EQ(tridiag_inertia(t, shift).n_neg, brute) << "shift=" << shift;
  }
  // exact spectrum 2 - 2 cos(k pi / (n+1))
  for (std::size_t k = 1; k <= n; ++k) {
    EXPECT_NEAR(ev[k - 1], 2.0 - 2.0 * std::cos(k * std::numbers::pi / (n + 1)), 1e-11);
  }
}

TEST(TridiagInertia, SylvesterInvariance) {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_int_distribution<int> size(1, 50);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = static_cast<std::size_t>(size(rng));
    const auto t = random_tridiagonal(rng, n);
    std::vector<double> dd(n);
    for (auto& v : dd) v = scale(rng) * (rng() % 2 ? 1.0 : -1.0);
    Tridiagonal c(n);
    for (std::size_t i = 0; i < n; ++i) c.diag[i] = dd[i] * t.diag[i] * dd[i];
    for (std::size_t i = 0; i + 1 < n; ++i) c.offdiag[i] = dd[i] * t.offdiag[i] * dd[i + 1];
    const auto a = tridiag_inertia(t), b = tridiag_inertia(c);
    EXPECT_EQ(a.n_neg, b.n_neg);
    EXPECT_EQ(a.n_pos, b.n_pos);
  }
}

TEST(TridiagInertia, MonotoneInShift) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_tridiagonal(rng, 40);
    int last = -1;
    for (int i = 0; i <= 100; ++i) {
      const int c = tridiag_inertia(t, -3.0 + 0.06 * i).n_neg;
      EXPECT_GE(c, last);
      last = c;
    }
    EXPECT_EQ(last, 40);
  }
}

TEST(GeneralizedCount, TrivialPencils) {
  const auto b = laplacian(30, 0.1);
  EXPECT_EQ(generalized_count(b, b, 2.0), 30);
  EXPECT_EQ(generalized_count(b, b, 0.5), 0);
}

TEST(GeneralizedCount, RejectsIndefiniteB) {
  const Tridiagonal a({1.0, 1.0}, {0.0});
  const Tridiagonal b({1.0, -1.0}, {0.0});
  EXPECT_THROW(generalized_count(a, b, 0.0), precondition_error);
}

TEST(GeneralizedEigenpairs, ResidualAndOrthogonality) {
  // P1 stiffness and mass on (0, 1): eigenvalues approximate (k pi)^2
  const std::size_t n = 400;
  const double h = 1.0 / (n + 1);
  const auto a = laplacian(n, h);
  Tridiagonal b(n);
  for (auto& v : b.diag) v = 2.0 * h / 3.0;
  for (auto& v : b.offdiag) v = h / 6.0;
  const auto pairs = generalized_eigenpairs(a, b, 6);
  ASSERT_EQ(pairs.size(), 6u);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    EXPECT_FALSE(p.degenerate);
    const double exact = std::pow((i + 1) * std::numbers::pi, 2);
    EXPECT_NEAR(p.value / exact, 1.0, 1e-3);
    const auto av = multiply(a, p.vector), bv = multiply(b, p.vector);
    double res = 0.0, nav = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      res += std::pow(av[k] - p.value * bv[k], 2);
      nav += av[k] * av[k];
    }
    EXPECT_LE(std::sqrt(res), 1e-8 * std::sqrt(nav));
    EXPECT_NEAR(quadratic_form(b, p.vector), 1.0, 1e-12);
    for (std::size_t j = 0; j < i; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < n; ++k) c += pairs[j].vector[k] * bv[k];
      EXPECT_LE(std::abs(c), 1e-8);
    }
    if (i > 0) {
      EXPECT_GE(p.value, pairs[i - 1].value);
    }
  }
  // bisection values agree with counts just below and above
  for (const auto& p : pairs) {
    EXPECT_LE(generalized_count(a, b, p.value * (1 - 1e-8)),
              generalized_count(a, b, p.value * (1 + 1e-8)) - 1);
  }
}

TEST(GeneralizedEigenpairs, DegenerateClusterFlagged) {
  const Tridiagonal a({1.0, 1.0, 3.0}, {0.0, 0.0});
  const Tridiagonal b({1.0, 1.0, 1.0}, {0.0, 0.0});
  std::vector<bool> flags;
  const auto v = generalized_eigenvalues(a, b, 3, &flags);
  EXPECT_NEAR(v[0], 1.0, 1e-9);
  EXPECT_NEAR(v[1], 1.0, 1e-9);
  EXPECT_NEAR(v[2], 3.0, 1e-9);
  EXPECT_TRUE(flags[0]);
  EXPECT_FALSE(flags[2]);
}

TEST(DenseEigenvalues, SmallCases) {
  DenseSymmetric m(2);
  m.set(0, 1, 1.0);
  const auto ev = dense_eigenvalues(m);
  EXPECT_NEAR(ev[0], -1.0, 1e-14);
  EXPECT_NEAR(ev[1], 1.0, 1e-14);
  DenseSymmetric id(10);
  for (std::size_t i = 0; i < 10; ++i) id.set(i, i, 1.0);
  for (double v : dense_eigenvalues(id)) EXPECT_EQ(v, 1.0);
}

TEST(DenseEigenvalues, TraceAndFrobeniusPreserved) {
  std::mt19937 rng(99);
  const auto m = random_dense(rng, 20);
  const auto ev = dense_eigenvalues(m);
  double tr = 0.0, fr = 0.0;
  for (double v : ev) {
    tr += v;
    fr += v * v;
  }
  EXPECT_NEAR(tr, m.trace(), 1e-10 * m.frobenius());
  EXPECT_NEAR(std::sqrt(fr), m.frobenius(), 1e-10 * m.frobenius());
  int neg = 0;
  for (double v : ev) neg += v < 0.0;
  EXPECT_EQ(dense_inertia(m).n_neg, neg);
}

TEST(DenseEigenvalues, IntegerCharacteristicPolynomialOracle) {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> u(-4, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<long long>> a(5, std::vector<long long>(5));
    DenseSymmetric m(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j <= i; ++j) {
        a[i][j] = a[j][i] = u(rng);
        m.set(i, j, static_cast<double>(a[i][j]));
      }
    }
    const auto c = char_poly(a);
    if (c[0] == 0) continue;  // zero eigenvalue; sign not robust in floating point
    int neg = 0;
    for (double v : dense_eigenvalues(m)) neg += v < 0.0;
    EXPECT_EQ(neg, negative_roots(c)) << "trial " << trial;
    EXPECT_EQ(dense_inertia(m).n_neg, neg);
  }
}

TEST(DenseEigenvalues, SizeGuard) {
  EXPECT_THROW(dense_eigenvalues(DenseSymmetric(kDenseLimit + 1)), precondition_error);
}

TEST(DenseSymmetric, RejectsAsymmetricInput) {
  EXPECT_THROW(DenseSymmetric::from_full(2, {1.0, 2.0, 3.0, 4.0}), precondition_error);
  EXPECT_NO_THROW(DenseSymmetric::from_full(2, {1.0, 2.0, 2.0, 4.0}));
}

TEST(Householder, PreservesSpectrum) {
  std::mt19937 rng(5);
  const auto m = random_dense(rng, 30);
  const auto t = householder_tridiagonalize(m);
  const auto ev = dense_eigenvalues(m);
  EXPECT_NEAR(tridiag_min_eigenvalue(t), ev.front(), 1e-9);
  EXPECT_NEAR(dense_min_eigenvalue(m), ev.front(), 1e-9);
  for (double shift : {-1.0, 0.0, 0.5, 2.0}) {
    int brute = 0;
    for (double v : ev) brute += v < shift;
    EXPECT_EQ(dense_inertia(m, shift).n_neg, brute);
  }
}

TEST(Cholesky, GeneralizedMinimum) {
  std::mt19937 rng(11);
  const auto a = random_dense(rng, 15);
  DenseSymmetric b(15);
  for (std::size_t i = 0; i < 15; ++i) b.set(i, i, 0.5 + 0.1 * i);
  // diagonal B: scale A by B^{-1/2} on both sides
  DenseSymmetric c(15);
  for (std::size_t i = 0; i < 15; ++i) {
    for (std::size_t j = 0; j <= i; ++j) c.set(i, j, a(i, j) / std::sqrt(b(i, i) * b(j, j)));
  }
  EXPECT_NEAR(generalized_min_eigenvalue(a, b), dense_eigenvalues(c).front(), 1e-9);
  DenseSymmetric bad(2);
  bad.set(0, 0, 1.0);
  bad.set(1, 1, -1.0);
  EXPECT_THROW(cholesky(bad), precondition_error);
}
