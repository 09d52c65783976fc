#pragma once

// Symmetric eigenvalue tools: Sylvester inertia of tridiagonal matrices,
// generalized eigenvalues by inertia bisection, inverse iteration, cyclic
// Jacobi and Householder reduction for dense symmetric matrices.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "hardylab/errors.hpp"

namespace hardylab::spectra {

/// Pivots with |d| < kZeroPivotTol * scale are reported as zero.
inline constexpr double kZeroPivotTol = 1e-13;
inline constexpr int kMaxBisection = 200;
inline constexpr int kInverseIterations = 3;
inline constexpr std::size_t kDenseLimit = 2000;

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> offdiag;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : diag(n, 0.0), offdiag(n > 0 ? n - 1 : 0, 0.0) {}
  Tridiagonal(std::vector<double> d, std::vector<double> e) : diag(std::move(d)), offdiag(std::move(e)) {
    if (diag.empty() || offdiag.size() + 1 != diag.size()) {
      throw precondition_error("Tridiagonal: need n >= 1 diagonal and n-1 off-diagonal entries");
    }
  }
  std::size_t size() const { return diag.size(); }
  double max_abs() const {
    double s = 0.0;
    for (double v : diag) s = std::max(s, std::abs(v));
    for (double v : offdiag) s = std::max(s, std::abs(v));
    return s;
  }
};

/// Returns a + c * b.
inline Tridiagonal axpy(const Tridiagonal& a, double c, const Tridiagonal& b) {
  if (a.size() != b.size()) throw precondition_error("axpy: size mismatch");
  Tridiagonal r = a;
  for (std::size_t i = 0; i < r.diag.size(); ++i) r.diag[i] += c * b.diag[i];
  for (std::size_t i = 0; i < r.offdiag.size(); ++i) r.offdiag[i] += c * b.offdiag[i];
  return r;
}

inline std::vector<double> multiply(const Tridiagonal& t, const std::vector<double>& x) {
  const std::size_t n = t.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = t.diag[i] * x[i];
    if (i > 0) s += t.offdiag[i - 1] * x[i - 1];
    if (i + 1 < n) s += t.offdiag[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

inline double quadratic_form(const Tridiagonal& t, const std::vector<double>& x) {
  const auto y = multiply(t, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Symmetric matrix with full row-major storage; writes keep both triangles equal.
class DenseSymmetric {
 public:
  DenseSymmetric() = default;
  explicit DenseSymmetric(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  /// From a full row-major array; rejects asymmetric input.
  static DenseSymmetric from_full(std::size_t n, const std::vector<double>& full) {
    if (full.size() != n * n) throw precondition_error("DenseSymmetric: wrong entry count");
    DenseSymmetric m(n);
    double scale = 0.0;
    for (double v : full) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const double aij = full[i * n + j], aji = full[j * n + i];
        if (std::abs(aij - aji) > 1e-12 * scale) {
          std::ostringstream msg;
          msg << "DenseSymmetric: entries (" << i << "," << j << ") and (" << j << "," << i
              << ") differ";
          throw precondition_error(msg.str());
        }
        m.set(i, j, 0.5 * (aij + aji));
      }
    }
    return m;
  }

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v) {
    a_[i * n_ + j] += v;
    if (i != j) a_[j * n_ + i] += v;
  }
  const double* row(std::size_t i) const { return a_.data() + i * n_; }
  const std::vector<double>& data() const { return a_; }

  double max_abs() const {
    double s = 0.0;
    for (double v : a_) s = std::max(s, std::abs(v));
    return s;
  }
  double frobenius() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }
  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += a_[i * n_ + i];
    return s;
  }
  /// this + c * other
  DenseSymmetric plus(double c, const DenseSymmetric& other) const {
    if (other.n_ != n_) throw precondition_error("DenseSymmetric: size mismatch");
    DenseSymmetric r = *this;
    for (std::size_t k = 0; k < a_.size(); ++k) r.a_[k] += c * other.a_[k];
    return r;
  }
  double quadratic_form(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double r = 0.0;
      const double* ai = row(i);
      for (std::size_t j = 0; j < n_; ++j) r += ai[j] * x[j];
      s += x[i] * r;
    }
    return s;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct Inertia {
  int n_neg = 0;
  int n_zero = 0;
  int n_pos = 0;
  int size() const { return n_neg + n_zero + n_pos; }
  bool flagged() const { return n_zero > 0; }
};

/// Inertia of T - shift*I by the LDL^T (Sturm) recurrence.
inline Inertia tridiag_inertia(const Tridiagonal& t, double shift = 0.0) {
  const std::size_t n = t.size();
  Inertia in;
  double scale = 0.0;
  for (double v : t.diag) scale = std::max(scale, std::abs(v - shift));
  for (double v : t.offdiag) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) {
    in.n_zero = static_cast<int>(n);
    return in;
  }
  const double tiny = kZeroPivotTol * scale;
  double prev = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    double d = t.diag[k] - shift;
    if (k > 0) d -= t.offdiag[k - 1] * t.offdiag[k - 1] / prev;
    if (std::abs(d) < tiny) {
      ++in.n_zero;
      d = (d < 0.0) ? -tiny : tiny;
    } else if (d < 0.0) {
      ++in.n_neg;
    } else {
      ++in.n_pos;
    }
    prev = d;
  }
  return in;
}

/// Checked on D^{-1/2} B D^{-1/2}, D = diag(B), so that entries spanning many
/// orders of magnitude (e^{2t} weights) do not trip the relative pivot tolerance.
inline bool is_positive_definite(const Tridiagonal& b) {
  Tridiagonal s = b;
  for (double v : b.diag) {
    if (!(v > 0.0) || !std::isfinite(v)) return false;
  }
  for (std::size_t i = 0; i < s.size(); ++i) s.diag[i] = 1.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    s.offdiag[i] = b.offdiag[i] / std::sqrt(b.diag[i] * b.diag[i + 1]);
  }
  const Inertia in = tridiag_inertia(s, 0.0);
  return in.n_neg == 0 && in.n_zero == 0;
}

/// Inertia of A - tau*B (no definiteness check on B).
inline Inertia pencil_inertia(const Tridiagonal& a, const Tridiagonal& b, double tau) {
  return tridiag_inertia(axpy(a, -tau, b), 0.0);
}

/// Number of generalized eigenvalues of A v = lambda B v below tau, B positive definite.
inline Inertia generalized_inertia(const Tridiagonal& a, const Tridiagonal& b, double tau) {
  if (a.size() != b.size()) throw precondition_error("generalized_count: size mismatch");
  if (!is_positive_definite(b)) {
    throw precondition_error("generalized_count: B is not positive definite");
  }
  return pencil_inertia(a, b, tau);
}

inline int generalized_count(const Tridiagonal& a, const Tridiagonal& b, double tau) {
  return generalized_inertia(a, b, tau).n_neg;
}

/// LU factorization with partial pivoting of a tridiagonal matrix.
class TridiagonalLU {
 public:
  explicit TridiagonalLU(const Tridiagonal& m)
      : n_(m.size()), dl_(m.offdiag), d_(m.diag), du_(m.offdiag), du2_(n_ > 2 ? n_ - 2 : 0, 0.0),
        swap_(n_ > 0 ? n_ - 1 : 0, false) {
    const double floor = 1e-20 * std::max(m.max_abs(), 1e-300);
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        if (d_[i] == 0.0) d_[i] = floor;
        const double f = dl_[i] / d_[i];
        dl_[i] = f;
        d_[i + 1] -= f * du_[i];
      } else {
        swap_[i] = true;
        const double f = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = f;
        const double tmp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = tmp - f * d_[i + 1];
        if (i + 2 < n_) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -f * du_[i + 1];
        }
      }
    }
    if (n_ > 0 && d_[n_ - 1] == 0.0) d_[n_ - 1] = floor;
  }

  std::vector<double> solve(std::vector<double> b) const {
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      if (!swap_[i]) {
        b[i + 1] -= dl_[i] * b[i];
      } else {
        const double tmp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = tmp - dl_[i] * b[i];
      }
    }
    for (std::size_t k = n_; k-- > 0;) {
      double s = b[k];
      if (k + 1 < n_) s -= du_[k] * b[k + 1];
      if (k + 2 < n_) s -= du2_[k] * b[k + 2];
      b[k] = s / d_[k];
    }
    return b;
  }

 private:
  std::size_t n_;
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<bool> swap_;
};

struct Eigenpair {
  double value = 0.0;
  std::vector<double> vector;  // B-normalized
  bool degenerate = false;     // bisection could not isolate this value
};

namespace detail {

struct Bracket {
  double lo, hi;
};

/// Interval [lo, hi] with count(lo) = 0 and count(hi) >= k.
inline Bracket pencil_bracket(const Tridiagonal& a, const Tridiagonal& b, int k) {
  double amax = a.max_abs(), bmin = b.diag[0];
  for (double v : b.diag) bmin = std::min(bmin, v);
  const double guess = std::max(1.0, bmin > 0.0 ? amax / bmin : amax);
  double lo = -guess, hi = guess;
  for (int i = 0; i < 2100 && pencil_inertia(a, b, lo).n_neg > 0; ++i) lo *= 2.0;
  for (int i = 0; i < 2100 && pencil_inertia(a, b, hi).n_neg < k; ++i) hi *= 2.0;
  if (pencil_inertia(a, b, lo).n_neg > 0 || pencil_inertia(a, b, hi).n_neg < k) {
    throw internal_error("generalized_eigenpairs: could not bracket the spectrum");
  }
  return {lo, hi};
}

}  // namespace detail

/// The k smallest generalized eigenvalues by inertia bisection (relative tolerance 1e-10).
/// `degenerate[j]` is set when the final bracket still holds more than one eigenvalue.
inline std::vector<double> generalized_eigenvalues(const Tridiagonal& a, const Tridiagonal& b,
                                                   int k, std::vector<bool>* degenerate = nullptr) {
  if (a.size() != b.size()) throw precondition_error("generalized_eigenvalues: size mismatch");
  if (k < 1 || static_cast<std::size_t>(k) > a.size()) {
    throw precondition_error("generalized_eigenvalues: need 1 <= k <= n");
  }
  if (!is_positive_definite(b)) {
    throw precondition_error("generalized_eigenvalues: B is not positive definite");
  }
  const auto outer = detail::pencil_bracket(a, b, k);
  const double abs_floor = std::numeric_limits<double>::min();
  std::vector<double> values(static_cast<std::size_t>(k));
  if (degenerate) degenerate->assign(static_cast<std::size_t>(k), false);
  double start_lo = outer.lo;
  for (int j = 0; j < k; ++j) {
    double lo = start_lo, hi = outer.hi;
    for (int it = 0; it < kMaxBisection; ++it) {
      if (hi - lo <= std::max(1e-10 * std::max(std::abs(lo), std::abs(hi)), abs_floor)) break;
      const double mid = 0.5 * (lo + hi);
      if (pencil_inertia(a, b, mid).n_neg >= j + 1) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    values[j] = 0.5 * (lo + hi);
    if (degenerate) {
      const int inside = pencil_inertia(a, b, hi).n_neg - pencil_inertia(a, b, lo).n_neg;
      if (inside > 1) (*degenerate)[j] = true;
    }
    start_lo = lo;
  }
  return values;
}

/// Smallest k generalized eigenpairs; vectors by inverse iteration with
/// B-orthogonalization against the earlier vectors.
inline std::vector<Eigenpair> generalized_eigenpairs(const Tridiagonal& a, const Tridiagonal& b,
                                                     int k) {
  std::vector<bool> degenerate;
  const auto values = generalized_eigenvalues(a, b, k, &degenerate);
  const std::size_t n = a.size();
  std::vector<Eigenpair> out;
  out.reserve(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    Eigenpair p;
    p.value = values[j];
    p.degenerate = degenerate[j];
    const TridiagonalLU lu(axpy(a, -values[j], b));
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 1.3 * static_cast<double>(j));
    }
    for (int it = 0; it < kInverseIterations; ++it) {
      x = lu.solve(multiply(b, x));
      for (const auto& prev : out) {
        const auto bx = multiply(b, x);
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) c += prev.vector[i] * bx[i];
        for (std::size_t i = 0; i < n; ++i) x[i] -= c * prev.vector[i];
      }
      const double norm = std::sqrt(quadratic_form(b, x));
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw internal_error("generalized_eigenpairs: inverse iteration broke down");
      }
      for (double& v : x) v /= norm;
    }
    p.vector = std::move(x);
    out.push_back(std::move(p));
  }
  return out;
}

/// All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations, sorted.
inline std::vector<double> dense_eigenvalues(const DenseSymmetric& m) {
  const std::size_t n = m.size();
  if (n > kDenseLimit) {
    std::ostringstream msg;
    msg << "dense_eigenvalues: n = " << n << " exceeds the limit " << kDenseLimit;
    throw precondition_error(msg.str());
  }
  std::vector<double> a = m.data();
  const double norm = m.frobenius();
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) off += at(i, j) * at(i, j);
      }
    }
    if (std::sqrt(off) <= 1e-12 * norm) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = at(r, p), arq = at(r, q);
          at(r, p) = c * arp - s * arq;
          at(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = at(p, r), aqr = at(q, r);
          at(p, r) = c * apr - s * aqr;
          at(q, r) = s * apr + c * aqr;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Householder reduction to a similar symmetric tridiagonal matrix.
inline Tridiagonal householder_tridiagonalize(const DenseSymmetric& m) {
  const std::size_t n = m.size();
  if (n == 0) throw precondition_error("householder_tridiagonalize: empty matrix");
  std::vector<double> a = m.data();
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  Tridiagonal t(n);
  std::vector<double> v(n), p(n), w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += at(i, k) * at(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) {
      t.offdiag[k] = 0.0;
      continue;
    }
    if (at(k + 1, k) > 0.0) alpha = -alpha;
    // v = x - alpha e1, H = I - 2 v v^T / (v^T v)
    for (std::size_t i = 0; i <= k; ++i) v[i] = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) v[i] = at(i, k);
    v[k + 1] -= alpha;
    double vv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vv += v[i] * v[i];
    if (vv == 0.0) {
      t.offdiag[k] = at(k + 1, k);
      continue;
    }
    const double beta = 2.0 / vv;
    // p = beta A v on the trailing block
    for (std::size_t i = k + 1; i < n; ++i) {
      double s = 0.0;
      const double* ai = a.data() + i * n;
      for (std::size_t j = k + 1; j < n; ++j) s += ai[j] * v[j];
      p[i] = beta * s;
    }
    double pv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) pv += p[i] * v[i];
    const double kappa = 0.5 * beta * pv;
    for (std::size_t i = k + 1; i < n; ++i) w[i] = p[i] - kappa * v[i];
    for (std::size_t i = k + 1; i < n; ++i) {
      double* ai = a.data() + i * n;
      for (std::size_t j = k + 1; j < n; ++j) ai[j] -= v[i] * w[j] + w[i] * v[j];
    }
    t.offdiag[k] = alpha;
    for (std::size_t i = k + 1; i < n; ++i) at(i, k) = at(k, i) = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) t.diag[i] = at(i, i);
  if (n >= 2) t.offdiag[n - 2] = at(n - 1, n - 2);
  return t;
}

/// Inertia of M - shift*I through orthogonal tridiagonal reduction.
inline Inertia dense_inertia(const DenseSymmetric& m, double shift = 0.0) {
  return tridiag_inertia(householder_tridiagonalize(m), shift);
}

inline double tridiag_min_eigenvalue(const Tridiagonal& t) {
  Tridiagonal identity(t.size());
  std::fill(identity.diag.begin(), identity.diag.end(), 1.0);
  return generalized_eigenvalues(t, identity, 1).front();
}

inline double dense_min_eigenvalue(const DenseSymmetric& m) {
  return tridiag_min_eigenvalue(householder_tridiagonalize(m));
}

/// Lower Cholesky factor (row-major, full storage) of a positive definite matrix.
inline std::vector<double> cholesky(const DenseSymmetric& b) {
  const std::size_t n = b.size();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double s = b(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= l[j * n + k] * l[j * n + k];
    if (!(s > 0.0)) {
      std::ostringstream msg;
      msg << "cholesky: matrix not positive definite at pivot " << j;
      throw precondition_error(msg.str());
    }
    const double ljj = std::sqrt(s);
    l[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double r = b(i, j);
      for (std::size_t k = 0; k < j; ++k) r -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = r / ljj;
    }
  }
  return l;
}

/// Smallest eigenvalue of A v = lambda B v with dense B positive definite.
inline double generalized_min_eigenvalue(const DenseSymmetric& a, const DenseSymmetric& b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw precondition_error("generalized_min_eigenvalue: size mismatch");
  const auto l = cholesky(b);
  // X = L^{-1} A, then C = X L^{-T} = L^{-1} (L^{-1} A)^T
  std::vector<double> x = a.data();
  auto forward = [&](std::vector<double>& mtx) {
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = mtx[i * n + c];
        for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * mtx[k * n + c];
        mtx[i * n + c] = s / l[i * n + i];
      }
    }
  };
  forward(x);
  std::vector<double> xt(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) xt[j * n + i] = x[i * n + j];
  }
  forward(xt);
  DenseSymmetric c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) c.set(i, j, 0.5 * (xt[i * n + j] + xt[j * n + i]));
  }
  return dense_min_eigenvalue(c);
}

}  // namespace hardylab::spectra
