#pragma once

// One-dimensional fractional Hardy-Schroedinger forms
//   h_s[u] = a_s int int |u(x) - u(y)|^2 / |x - y|^{1+2s} dx dy,  0 < s < 1/2,
// on hat functions over [-R, R] extended by zero to the whole line.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hardylab/counting.hpp"
#include "hardylab/errors.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/radial_model.hpp"
#include "hardylab/specfun.hpp"
#include "hardylab/spectra.hpp"

namespace hardylab::frac {

inline constexpr double kDefaultHalfWidth = 8.0;
inline constexpr int kDefaultNodes = 400;
inline constexpr int kDenseGuard = 2000;
inline constexpr double kPsdTolerance = 1e-8;

using spectra::DenseSymmetric;

/// a_{s,d} = 2^{2s-1} Gamma((d+2s)/2) / (pi^{d/2} |Gamma(-s)|).
inline double seminorm_constant(double s, int d) {
  return std::pow(2.0, 2.0 * s - 1.0) * specfun::gamma(0.5 * (d + 2.0 * s)) /
         (std::pow(std::numbers::pi, 0.5 * d) * std::abs(specfun::gamma(-s)));
}

/// Sharp fractional Hardy constant 2^{2s} Gamma^2((d+2s)/4) / Gamma^2((d-2s)/4).
inline double hardy_constant(double s, int d) {
  const double r = specfun::gamma(0.25 * (d + 2.0 * s)) / specfun::gamma(0.25 * (d - 2.0 * s));
  return std::pow(2.0, 2.0 * s) * r * r;
}

struct FracParams {
  double s = 0.25;
  int d = 1;
  double a = 0.0;
  double hardy_c = 0.0;
};

inline void check_order(double s) {
  if (!(s > 0.0 && s < 0.5)) {
    std::ostringstream msg;
    msg << "fractional order s must lie in (0, 1/2), got " << s;
    throw precondition_error(msg.str());
  }
}

inline FracParams frac_constants(double s) {
  check_order(s);
  return {s, 1, seminorm_constant(s, 1), hardy_constant(s, 1)};
}

/// Uniform nodes x_j = -R + j h, j = 0..n+1; the hats sit on j = 1..n.
struct FracGrid {
  double R = kDefaultHalfWidth;
  int n = kDefaultNodes;

  FracGrid() = default;
  FracGrid(double half_width, int nodes) : R(half_width), n(nodes) {
    if (!(R > 0.0 && std::isfinite(R))) throw precondition_error("FracGrid: R must be > 0");
    if (n < 1) throw precondition_error("FracGrid: n must be >= 1");
  }
  double h() const { return 2.0 * R / (n + 1); }
  double node(int j) const { return -R + j * h(); }
  int cells() const { return n + 1; }
  FracGrid bisected() const { return FracGrid(R, 2 * n + 1); }
  FracGrid dilated(double f) const { return FracGrid(f * R, n); }
  std::vector<double> nodes() const {
    std::vector<double> x(n);
    for (int j = 1; j <= n; ++j) x[j - 1] = node(j);
    return x;
  }
};

namespace detail {

using Local4 = std::array<double, 16>;

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// N_ab = int_0^1 int_0^1 x^a y^b (x + y)^{-q} dx dy for a + b <= 2, in closed form.
inline std::array<std::array<double, 3>, 3> touching_moments(double q) {
  std::array<std::array<double, 3>, 3> out{};
  for (int a = 0; a <= 2; ++a) {
    for (int b = 0; a + b <= 2; ++b) {
      // triangle x + y <= 1: B(a+1, b+1) / (a + b + 2 - q)
      const double beta = std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 2.0);
      double v = beta / (a + b + 2.0 - q);
      // 1 <= u = x + y <= 2: int_{u-1}^1 x^a (u - x)^b dx as a polynomial in u
      std::array<double, 5> p{};
      for (int j = 0; j <= b; ++j) {
        const double c = binom(b, j) * ((j % 2) ? -1.0 : 1.0) / (a + j + 1.0);
        const int k = a + j + 1;
        p[b - j] += c;
        for (int i = 0; i <= k; ++i) p[b - j + i] -= c * binom(k, i) * (((k - i) % 2) ? -1.0 : 1.0);
      }
      for (int k = 0; k < 5; ++k) {
        if (p[k] != 0.0) v += p[k] * (std::pow(2.0, k + 1.0 - q) - 1.0) / (k + 1.0 - q);
      }
      out[a][b] = v;
    }
  }
  return out;
}

/// Same moments with (c + x + y)^{-q}, c >= 1, by tensor Gauss-Legendre.
inline std::array<std::array<double, 3>, 3> separated_moments(double q, double c) {
  const auto& g = quad::gauss_legendre<16>();
  std::array<std::array<double, 3>, 3> out{};
  for (int i = 0; i < 16; ++i) {
    const double x = 0.5 * (1.0 + g.nodes[i]), wx = 0.5 * g.weights[i];
    for (int j = 0; j < 16; ++j) {
      const double y = 0.5 * (1.0 + g.nodes[j]), wy = 0.5 * g.weights[j];
      const double k = wx * wy * std::pow(c + x + y, -q);
      const double xp[3] = {1.0, x, x * x}, yp[3] = {1.0, y, y * y};
      for (int a = 0; a <= 2; ++a) {
        for (int b = 0; a + b <= 2; ++b) out[a][b] += k * xp[a] * yp[b];
      }
    }
  }
  return out;
}

/// Local matrix on (left, right of cell P; left, right of cell Q) from the moments,
/// in the variables x = 1 - xi_P, y = xi_Q.
inline Local4 pair_local(const std::array<std::array<double, 3>, 3>& n) {
  // u(x) - u(y) = sum_a U_a g_a with g_a affine: (constant, x, y) coefficients
  const double g[4][3] = {{0, 1, 0}, {1, -1, 0}, {-1, 0, 1}, {0, 0, -1}};
  Local4 m{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const double* p = g[a];
      const double* r = g[b];
      m[a * 4 + b] = p[0] * r[0] * n[0][0] + (p[0] * r[1] + p[1] * r[0]) * n[1][0] +
                     (p[0] * r[2] + p[2] * r[0]) * n[0][1] + p[1] * r[1] * n[2][0] +
                     (p[1] * r[2] + p[2] * r[1]) * n[1][1] + p[2] * r[2] * n[0][2];
    }
  }
  return m;
}

/// int_0^1 v^k v^{-2s} dv.
inline double power_moment(int k, double s) { return 1.0 / (k + 1.0 - 2.0 * s); }

/// Tabulated local matrices of a grid: pair[m] for cell offset m >= 1.
struct FormTables {
  double s, q, a, scale;  // scale = a h^{1-2s}
  double self;            // int int |xi - eta|^{1-2s}
  std::vector<Local4> pair;

  FormTables(const FracGrid& g, double order) : s(order), q(1.0 + 2.0 * order) {
    check_order(order);
    a = seminorm_constant(order, 1);
    scale = a * std::pow(g.h(), 1.0 - 2.0 * order);
    self = 2.0 / ((2.0 - 2.0 * order) * (3.0 - 2.0 * order));
    pair.resize(static_cast<std::size_t>(g.cells()));
    if (g.cells() > 1) pair[1] = pair_local(touching_moments(q));
    for (int m = 2; m < g.cells(); ++m) pair[m] = pair_local(separated_moments(q, m - 1.0));
  }
};

/// 2 a int_cell phi_a phi_b kappa(x) dx with kappa(x) = ((R-x)^{-2s} + (R+x)^{-2s}) / (2s),
/// the coupling to the exterior of [-R, R]. Local dofs: left and right node of the cell.
inline std::array<double, 4> tail_local(const FracGrid& g, double s, double a, int c) {
  const double h = g.h(), x0 = g.node(c);
  std::array<double, 4> m{};
  const double pref = 2.0 * a / (2.0 * s);
  auto add_gl = [&](auto&& dist) {
    const auto& rule = quad::gauss_legendre<16>();
    for (int i = 0; i < 16; ++i) {
      const double xi = 0.5 * (1.0 + rule.nodes[i]), w = 0.5 * rule.weights[i] * h;
      const double k = pref * std::pow(dist(x0 + xi * h), -2.0 * s) * w;
      const double f[2] = {1.0 - xi, xi};
      for (int p = 0; p < 2; ++p) {
        for (int r = 0; r < 2; ++r) m[p * 2 + r] += k * f[p] * f[r];
      }
    }
  };
  const double hs = pref * std::pow(h, 1.0 - 2.0 * s);
  // (R - x)^{-2s}: v = 1 - xi on the last cell
  if (c == g.n) {
    const double vv = power_moment(2, s), v1 = power_moment(1, s) - power_moment(2, s),
                 oo = power_moment(0, s) - 2.0 * power_moment(1, s) + power_moment(2, s);
    m[0] += hs * vv;
    m[1] += hs * v1;
    m[2] += hs * v1;
    m[3] += hs * oo;
  } else {
    add_gl([&](double x) { return g.R - x; });
  }
  // (R + x)^{-2s}: v = xi on the first cell
  if (c == 0) {
    const double vv = power_moment(2, s), v1 = power_moment(1, s) - power_moment(2, s),
                 oo = power_moment(0, s) - 2.0 * power_moment(1, s) + power_moment(2, s);
    m[3] += hs * vv;
    m[1] += hs * v1;
    m[2] += hs * v1;
    m[0] += hs * oo;
  } else {
    add_gl([&](double x) { return g.R + x; });
  }
  return m;
}

/// Interior index of node j, or -1 for the two boundary nodes.
inline int dof(const FracGrid& g, int j) { return (j >= 1 && j <= g.n) ? j - 1 : -1; }

inline DenseSymmetric from_accumulated(std::size_t n, const std::vector<double>& full) {
  return DenseSymmetric::from_full(n, full);
}

template <class F>
void for_cell_quadrature(const FracGrid& g, int c, const std::vector<double>& cuts, F&& f) {
  // f(x, weight, phi_left, phi_right)
  const double x0 = g.node(c), x1 = g.node(c + 1), h = g.h();
  std::vector<double> pts{x0};
  for (double t : cuts) {
    if (t > x0 && t < x1) pts.push_back(t);
  }
  pts.push_back(x1);
  std::sort(pts.begin(), pts.end());
  const auto& rule = quad::gauss_legendre<16>();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double mid = 0.5 * (pts[k] + pts[k + 1]), half = 0.5 * (pts[k + 1] - pts[k]);
    for (int i = 0; i < 16; ++i) {
      const double x = mid + half * rule.nodes[i];
      const double xi = (x - x0) / h;
      f(x, rule.weights[i] * half, 1.0 - xi, xi);
    }
  }
}

template <class F>
DenseSymmetric mass_matrix(const FracGrid& g, const std::vector<double>& cuts, F&& weight) {
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<double> full(n * n, 0.0);
  for (int c = 0; c < g.cells(); ++c) {
    double loc[4] = {0, 0, 0, 0};
    for_cell_quadrature(g, c, cuts, [&](double x, double w, double fl, double fr) {
      const double k = w * weight(x);
      loc[0] += k * fl * fl;
      loc[1] += k * fl * fr;
      loc[3] += k * fr * fr;
    });
    loc[2] = loc[1];
    const int ids[2] = {dof(g, c), dof(g, c + 1)};
    for (int p = 0; p < 2; ++p) {
      for (int r = 0; r < 2; ++r) {
        if (ids[p] >= 0 && ids[r] >= 0) full[ids[p] * n + ids[r]] += loc[p * 2 + r];
      }
    }
  }
  return from_accumulated(n, full);
}

}  // namespace detail

inline void check_dense(const FracGrid& g) {
  if (g.n > kDenseGuard) {
    std::ostringstream msg;
    msg << "fractional grid with n = " << g.n << " exceeds the dense limit " << kDenseGuard;
    throw precondition_error(msg.str());
  }
}

/// Galerkin matrix of h_s on the hats of the grid, zero extension included.
inline DenseSymmetric assemble_frac_form(const FracGrid& g, double s) {
  check_dense(g);
  const detail::FormTables t(g, s);
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<double> full(n * n, 0.0);
  auto put = [&](int i, int j, double v) {
    if (i >= 0 && j >= 0) full[static_cast<std::size_t>(i) * n + j] += v;
  };
  for (int p = 0; p < g.cells(); ++p) {
    const int l = detail::dof(g, p), r = detail::dof(g, p + 1);
    const double v = t.scale * t.self;
    put(l, l, v);
    put(r, r, v);
    put(l, r, -v);
    put(r, l, -v);
    const auto tail = detail::tail_local(g, s, t.a, p);
    put(l, l, tail[0]);
    put(l, r, tail[1]);
    put(r, l, tail[2]);
    put(r, r, tail[3]);
  }
  for (int p = 0; p < g.cells(); ++p) {
    for (int qc = p + 1; qc < g.cells(); ++qc) {
      const auto& loc = t.pair[qc - p];
      const int ids[4] = {detail::dof(g, p), detail::dof(g, p + 1), detail::dof(g, qc), detail::dof(g, qc + 1)};
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) put(ids[a], ids[b], 2.0 * t.scale * loc[a * 4 + b]);
      }
    }
  }
  return detail::from_accumulated(n, full);
}

/// h_s[u] for nodal values u (size n) without forming the matrix.
inline double frac_form_value(const FracGrid& g, double s, const std::vector<double>& u, int workers = 1) {
  if (u.size() != static_cast<std::size_t>(g.n)) throw precondition_error("frac_form_value: size mismatch");
  const detail::FormTables t(g, s);
  auto val = [&](int j) { return (j >= 1 && j <= g.n) ? u[j - 1] : 0.0; };
  const auto rows = parallel::map<double>(static_cast<std::size_t>(g.cells()), workers, [&](std::size_t pi) {
    const int p = static_cast<int>(pi);
    const double ul = val(p), ur = val(p + 1);
    double acc = t.scale * t.self * (ur - ul) * (ur - ul);
    const auto tail = detail::tail_local(g, s, t.a, p);
    acc += tail[0] * ul * ul + 2.0 * tail[1] * ul * ur + tail[3] * ur * ur;
    double pairs = 0.0;
    for (int qc = p + 1; qc < g.cells(); ++qc) {
      const double v[4] = {ul, ur, val(qc), val(qc + 1)};
      if (v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0 && v[3] == 0.0) continue;
      const auto& loc = t.pair[qc - p];
      double e = 0.0;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) e += v[a] * loc[a * 4 + b] * v[b];
      }
      pairs += e;
    }
    return acc + 2.0 * t.scale * pairs;
  });
  double sum = 0.0;
  for (double r : rows) sum += r;
  return sum;
}

/// int phi_i phi_j |x|^{-2s}; cells containing 0 in closed form.
inline DenseSymmetric assemble_hardy_mass(const FracGrid& g, double s) {
  check_order(s);
  check_dense(g);
  const std::size_t n = static_cast<std::size_t>(g.n);
  std::vector<double> full(n * n, 0.0);
  const double h = g.h();
  // F_k(x) = int_0^x t^k |t|^{-2s} dt
  auto prim = [&](int k, double x) {
    return x == 0.0 ? 0.0 : std::pow(x, k + 1) * std::pow(std::abs(x), -2.0 * s) / (k + 1.0 - 2.0 * s);
  };
  for (int c = 0; c < g.cells(); ++c) {
    const double x0 = g.node(c), x1 = g.node(c + 1);
    double loc[4] = {0, 0, 0, 0};
    if (x0 <= 0.0 && x1 >= 0.0) {
      // phi_left = (x1 - x)/h, phi_right = (x - x0)/h as polynomials in x
      const double pl[2] = {x1 / h, -1.0 / h}, pr[2] = {-x0 / h, 1.0 / h};
      const double mom[3] = {prim(0, x1) - prim(0, x0), prim(1, x1) - prim(1, x0), prim(2, x1) - prim(2, x0)};
      auto inner = [&](const double* f, const double* gg) {
        return f[0] * gg[0] * mom[0] + (f[0] * gg[1] + f[1] * gg[0]) * mom[1] + f[1] * gg[1] * mom[2];
      };
      loc[0] = inner(pl, pl);
      loc[1] = loc[2] = inner(pl, pr);
      loc[3] = inner(pr, pr);
    } else {
      detail::for_cell_quadrature(g, c, {}, [&](double x, double w, double fl, double fr) {
        const double k = w * std::pow(std::abs(x), -2.0 * s);
        loc[0] += k * fl * fl;
        loc[1] += k * fl * fr;
        loc[3] += k * fr * fr;
      });
      loc[2] = loc[1];
    }
    const int ids[2] = {detail::dof(g, c), detail::dof(g, c + 1)};
    for (int p = 0; p < 2; ++p) {
      for (int r = 0; r < 2; ++r) {
        if (ids[p] >= 0 && ids[r] >= 0) full[ids[p] * n + ids[r]] += loc[p * 2 + r];
      }
    }
  }
  return detail::from_accumulated(n, full);
}

/// int phi_i phi_j W(|x|), split at the breakpoints of W.
inline DenseSymmetric assemble_potential_mass(const FracGrid& g, const radial::RadialPotential& w) {
  check_dense(g);
  if (!std::isfinite(w.sup_scaled()) || !w.singular_points().empty()) {
    throw precondition_error("fractional potential must be bounded: " + w.describe());
  }
  std::vector<double> cuts{0.0};
  for (double t : w.breakpoints()) {
    if (std::isfinite(t)) {
      cuts.push_back(std::exp(t));
      cuts.push_back(-std::exp(t));
    }
  }
  return detail::mass_matrix(g, cuts, [&](double x) { return x == 0.0 ? w.value(0.0) : w.value(std::abs(x)); });
}

/// Rows/columns of the hats supported in |x| >= 1.
inline std::vector<int> exterior_dofs(const FracGrid& g) {
  std::vector<int> out;
  for (int j = 1; j <= g.n; ++j) {
    if (g.node(j - 1) >= 1.0 - 1e-12 || g.node(j + 1) <= -1.0 + 1e-12) out.push_back(j - 1);
  }
  return out;
}

inline DenseSymmetric submatrix(const DenseSymmetric& m, const std::vector<int>& idx) {
  DenseSymmetric out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) out.set(i, j, m(idx[i], idx[j]));
  }
  return out;
}

/// int phi_i phi_j / ((ln^2|x| + 1) |x|^{2s}) over |x| >= 1.
inline DenseSymmetric assemble_log_weight_mass(const FracGrid& g, double s) {
  check_order(s);
  check_dense(g);
  return detail::mass_matrix(g, {-1.0, 1.0}, [&](double x) {
    const double ax = std::abs(x);
    if (ax < 1.0) return 0.0;
    const double l = std::log(ax);
    return 1.0 / ((l * l + 1.0) * std::pow(ax, 2.0 * s));
  });
}

// ---------------------------------------------------------------------------
// Hardy positivity, counts and the remainder

struct HardyCheck {
  double min_eigenvalue = 0.0;
  double scale = 0.0;  // largest |entry| of h_s
  bool holds() const { return min_eigenvalue >= -kPsdTolerance * scale; }
};

/// Smallest eigenvalue of h_s - C M_{|x|^{-2s}}.
inline HardyCheck hardy_check(double s, const FracGrid& g) {
  const auto p = frac_constants(s);
  const auto a = assemble_frac_form(g, s);
  const auto m = assemble_hardy_mass(g, s);
  return {spectra::dense_min_eigenvalue(a.plus(-p.hardy_c, m)), a.max_abs()};
}

struct FracCount {
  int count = 0;
  int zero_pivots = 0;
  double rhs = 0.0;  // int (lambda W)^{1/(2s)} (1 + |ln|x||)^{(1-s)/s} dx
  bool rhs_diverged = false;
};

inline FracCount frac_count(double s, const radial::RadialPotential& w, double lambda, const FracGrid& g) {
  const auto p = frac_constants(s);
  if (!(lambda >= 0.0 && std::isfinite(lambda))) throw precondition_error("lambda must be finite and >= 0");
  const auto a = assemble_frac_form(g, s);
  auto op = a.plus(-p.hardy_c, assemble_hardy_mass(g, s));
  if (lambda > 0.0) op = op.plus(-lambda, assemble_potential_mass(g, w));
  const auto in = spectra::dense_inertia(op, 0.0);
  FracCount out;
  out.count = in.n_neg;
  out.zero_pivots = in.n_zero;
  const auto rhs = counting::weighted_rhs(w, 1, lambda, (1.0 - s) / s, radial::Domain::FullSpace, 1.0 / (2.0 * s));
  out.rhs = rhs.value;
  out.rhs_diverged = rhs.diverged;
  return out;
}

struct FracSweep {
  std::vector<double> lambdas;
  std::vector<FracCount> counts;
  double slope = std::nan("");
};

/// Counts for increasing couplings, matrices assembled once; slope of ln N vs ln lambda.
inline FracSweep frac_sweep(double s, const radial::RadialPotential& w, const std::vector<double>& lambdas,
                            const FracGrid& g, int workers = 1) {
  const auto p = frac_constants(s);
  if (lambdas.empty()) throw precondition_error("fractional sweep: no couplings");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0 && std::isfinite(lambdas[i]))) throw precondition_error("lambda must be finite and >= 0");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw precondition_error("fractional sweep: couplings must be strictly increasing");
    }
  }
  const auto base = assemble_frac_form(g, s).plus(-p.hardy_c, assemble_hardy_mass(g, s));
  const auto mw = assemble_potential_mass(g, w);
  FracSweep out;
  out.lambdas = lambdas;
  out.counts = parallel::map<FracCount>(lambdas.size(), workers, [&](std::size_t i) {
    const auto in = spectra::dense_inertia(base.plus(-lambdas[i], mw), 0.0);
    FracCount c;
    c.count = in.n_neg;
    c.zero_pivots = in.n_zero;
    const auto rhs =
        counting::weighted_rhs(w, 1, lambdas[i], (1.0 - s) / s, radial::Domain::FullSpace, 1.0 / (2.0 * s));
    c.rhs = rhs.value;
    c.rhs_diverged = rhs.diverged;
    return c;
  });
  std::vector<counting::SweepRow> rows;
  for (std::size_t i = 0; i < lambdas.size(); ++i) rows.push_back({lambdas[i], out.counts[i].count, 0, 0.0});
  out.slope = counting::fit_loglog_slope(rows, lambdas.front(), lambdas.back());
  return out;
}

/// Smallest generalized eigenvalue of h_s - C M against the log-weighted mass,
/// on the hats supported in |x| >= 1.
inline double hardy_remainder_estimate(double s, const FracGrid& g, double hardy_scale = 1.0) {
  const auto p = frac_constants(s);
  const auto idx = exterior_dofs(g);
  if (idx.empty()) throw precondition_error("hardy_remainder_estimate: no hats in |x| >= 1");
  const auto op = assemble_frac_form(g, s).plus(-hardy_scale * p.hardy_c, assemble_hardy_mass(g, s));
  const auto b = assemble_log_weight_mass(g, s);
  return spectra::generalized_min_eigenvalue(submatrix(op, idx), submatrix(b, idx));
}

// ---------------------------------------------------------------------------
// IMS localization

namespace detail {

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

}  // namespace detail

/// chi = cos(pi/2 S(|x| - 1)), eta = sin(pi/2 S(|x| - 1)): chi = 1 on |x| <= 1, eta = 1 on |x| >= 2.
struct Partition {
  bool degenerate = false;  // chi = 1, eta = 0 everywhere
  double chi(double x) const {
    if (degenerate) return 1.0;
    const double t = detail::smooth_step(std::abs(x) - 1.0);
    return t == 1.0 ? 0.0 : std::cos(0.5 * std::numbers::pi * t);
  }
  double eta(double x) const {
    if (degenerate) return 0.0;
    const double t = detail::smooth_step(std::abs(x) - 1.0);
    return t == 1.0 ? 1.0 : std::sin(0.5 * std::numbers::pi * t);
  }
};

struct PartitionPair {
  std::vector<double> x, chi, eta;
};

inline PartitionPair sample_partition(const FracGrid& g, const Partition& p = {}) {
  PartitionPair out;
  out.x = g.nodes();
  for (double x : out.x) {
    out.chi.push_back(p.chi(x));
    out.eta.push_back(p.eta(x));
  }
  return out;
}

/// a int int u(x) u(y) [(chi(x)-chi(y))^2 + (eta(x)-eta(y))^2] / |x-y|^{1+2s} dx dy
/// for the piecewise-linear u with nodal values `u`.
inline double localization_error(const FracGrid& g, double s, const std::vector<double>& u, const Partition& part,
                                 int workers = 1) {
  check_order(s);
  if (part.degenerate) return 0.0;
  const double a = seminorm_constant(s, 1), q = 1.0 + 2.0 * s, h = g.h();
  constexpr int kFar = 6, kNear = 16;
  const auto& far = quad::gauss_legendre<kFar>();
  const auto& near = quad::gauss_legendre<kNear>();
  const int cells = g.cells();
  auto val = [&](int j) { return (j >= 1 && j <= g.n) ? u[j - 1] : 0.0; };
  // per-cell samples at the far rule: x, chi, eta, u, weight
  struct Sample {
    double x, chi, eta, u, w;
  };
  std::vector<Sample> fs(static_cast<std::size_t>(cells) * kFar);
  for (int c = 0; c < cells; ++c) {
    for (int i = 0; i < kFar; ++i) {
      const double xi = 0.5 * (1.0 + far.nodes[i]);
      const double x = g.node(c) + xi * h;
      fs[c * kFar + i] = {x, part.chi(x), part.eta(x), (1.0 - xi) * val(c) + xi * val(c + 1), 0.5 * far.weights[i] * h};
    }
  }
  auto kernel = [&](double x, double y, double cx, double ex, double cy, double ey) {
    const double dc = cx - cy, de = ex - ey;
    const double s2 = dc * dc + de * de;
    return s2 == 0.0 ? 0.0 : s2 * std::pow(std::abs(x - y), -q);
  };
  // near pairs (same or touching cells): 16-point rules; the same cell is split
  // along the diagonal and mapped so that the kink sits on an edge
  auto near_pair = [&](int p, int qc) {
    double acc = 0.0;
    const double xp = g.node(p), xq = g.node(qc);
    auto up = [&](double xi) { return (1.0 - xi) * val(p) + xi * val(p + 1); };
    auto uq = [&](double xi) { return (1.0 - xi) * val(qc) + xi * val(qc + 1); };
    for (int i = 0; i < kNear; ++i) {
      const double t1 = 0.5 * (1.0 + near.nodes[i]), w1 = 0.5 * near.weights[i];
      for (int j = 0; j < kNear; ++j) {
        const double t2 = 0.5 * (1.0 + near.nodes[j]), w2 = 0.5 * near.weights[j];
        if (p == qc) {
          // triangle eta < xi: xi = t1, eta = t1 (1 - t2); jacobian t1; doubled by symmetry
          const double xi = t1, et = t1 * (1.0 - t2);
          const double x = xp + xi * h, y = xp + et * h;
          acc += 2.0 * w1 * w2 * t1 * up(xi) * up(et) * kernel(x, y, part.chi(x), part.eta(x), part.chi(y), part.eta(y));
        } else {
          const double x = xp + t1 * h, y = xq + t2 * h;
          acc += w1 * w2 * up(t1) * uq(t2) * kernel(x, y, part.chi(x), part.eta(x), part.chi(y), part.eta(y));
        }
      }
    }
    return acc * h * h;
  };
  const auto rows = parallel::map<double>(static_cast<std::size_t>(cells), workers, [&](std::size_t pi) {
    const int p = static_cast<int>(pi);
    double acc = near_pair(p, p);
    if (p + 1 < cells) acc += 2.0 * near_pair(p, p + 1);
    double far_sum = 0.0;
    for (int qc = p + 2; qc < cells; ++qc) {
      for (int i = 0; i < kFar; ++i) {
        const auto& sx = fs[p * kFar + i];
        if (sx.u == 0.0) continue;
        for (int j = 0; j < kFar; ++j) {
          const auto& sy = fs[qc * kFar + j];
          if (sy.u == 0.0) continue;
          far_sum += sx.w * sy.w * sx.u * sy.u * kernel(sx.x, sy.x, sx.chi, sx.eta, sy.chi, sy.eta);
        }
      }
    }
    return acc + 2.0 * far_sum;
  });
  double sum = 0.0;
  for (double r : rows) sum += r;
  return a * sum;
}

struct ImsResult {
  double form = 0.0;       // h_s[u]
  double chi_part = 0.0;   // h_s[I(chi u)]
  double eta_part = 0.0;   // h_s[I(eta u)]
  double localization = 0.0;
  double residual = 0.0;   // |form - (chi_part + eta_part - localization)| / |form|
};

/// Both sides of h[u] = h[chi u] + h[eta u] - <u, H u>, with chi u and eta u
/// interpolated at the nodes.
inline ImsResult ims_check(double s, const std::vector<double>& u, const FracGrid& g, const Partition& part = {},
                           int workers = 1) {
  check_order(s);
  if (u.size() != static_cast<std::size_t>(g.n)) throw precondition_error("ims_check: size mismatch");
  const auto pp = sample_partition(g, part);
  std::vector<double> cu(u.size()), eu(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    cu[i] = pp.chi[i] * u[i];
    eu[i] = pp.eta[i] * u[i];
  }
  ImsResult r;
  r.form = frac_form_value(g, s, u, workers);
  r.chi_part = frac_form_value(g, s, cu, workers);
  r.eta_part = frac_form_value(g, s, eu, workers);
  r.localization = localization_error(g, s, u, part, workers);
  r.residual = std::abs(r.form - (r.chi_part + r.eta_part - r.localization)) / std::abs(r.form);
  return r;
}

/// Nodal values of the same piecewise-linear function on the bisected grid.
inline std::vector<double> prolong(const FracGrid& g, const std::vector<double>& u) {
  if (u.size() != static_cast<std::size_t>(g.n)) throw precondition_error("prolong: size mismatch");
  auto at = [&](int j) { return (j >= 1 && j <= g.n) ? u[j - 1] : 0.0; };
  const int m = 2 * g.n + 1;
  std::vector<double> f(m);
  for (int j = 1; j <= m; ++j) f[j - 1] = j % 2 == 0 ? at(j / 2) : 0.5 * (at((j - 1) / 2) + at((j + 1) / 2));
  return f;
}

struct ImsLevel {
  int n = 0;
  double h = 0.0;
  ImsResult result;
};

/// IMS check on g and `levels` successive bisections, with u carried over exactly.
inline std::vector<ImsLevel> ims_refinement(double s, std::vector<double> u, FracGrid g, int levels,
                                            const Partition& part = {}, int workers = 1) {
  if (levels < 0) throw precondition_error("ims_refinement: levels must be >= 0");
  std::vector<ImsLevel> out;
  for (int k = 0; k <= levels; ++k) {
    if (k > 0) {
      u = prolong(g, u);
      g = g.bisected();
    }
    out.push_back({g.n, g.h(), ims_check(s, u, g, part, workers)});
  }
  return out;
}

/// Deterministic smooth test function on [-4, 4]: a sum of bumps drawn from `seed`.
inline std::vector<double> bump_samples(const FracGrid& g, unsigned seed) {
  std::vector<double> c(4), w(4), amp(4);
  std::mt19937 rng(seed);
  auto next = [&] { return rng() / 4294967296.0; };
  for (int k = 0; k < 4; ++k) {
    w[k] = 0.8 + 1.2 * next();
    c[k] = (4.0 - w[k]) * (2.0 * next() - 1.0);
    amp[k] = 0.5 + next();
  }
  std::vector<double> u;
  for (double x : g.nodes()) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double z = (x - c[k]) / w[k];
      if (std::abs(z) < 1.0) v += amp[k] * std::exp(1.0 - 1.0 / (1.0 - z * z));
    }
    u.push_back(v);
  }
  return u;
}

}  // namespace hardylab::frac
