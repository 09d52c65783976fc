#pragma once

// Negative-eigenvalue counts N(0, L - lambda W) by exact sector
// decomposition, weighted right-hand sides, coupling sweeps and the
// splitting and inversion checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hardylab/errors.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/radial_model.hpp"
#include "hardylab/specfun.hpp"
#include "hardylab/spectra.hpp"

namespace hardylab::counting {

using radial::Domain;
using radial::LogGrid;
using radial::LowerEnd;
using radial::RadialPotential;
using spectra::Inertia;
using spectra::Tridiagonal;

struct GridOptions {
  double spacing = radial::kDefaultSpacing;
  std::optional<double> truncation;  // T; default from the potential's support
  int workers = 1;
};

/// Grid for a domain: default truncation unless T is given.
inline LogGrid make_grid(Domain domain, const RadialPotential& w, const GridOptions& opt,
                         LowerEnd lower = LowerEnd::Extended) {
  if (!(opt.spacing > 0.0)) throw precondition_error("grid spacing must be > 0");
  if (!opt.truncation) return radial::default_grid(domain, w, opt.spacing, lower);
  const double t = *opt.truncation;
  if (!(t > 0.0 && std::isfinite(t))) throw precondition_error("truncation T must be > 0");
  switch (domain) {
    case Domain::Ball: return LogGrid::with_spacing(-t, 0.0, opt.spacing, lower);
    case Domain::Complement: return LogGrid::with_spacing(0.0, t, opt.spacing, LowerEnd::Dirichlet);
    case Domain::FullSpace: return LogGrid::with_spacing(-t, t, opt.spacing, lower);
  }
  throw internal_error("make_grid: unknown domain");
}

/// l-independent matrices of one grid, shared by all sectors and couplings.
/// For an extended lower end, sectors l >= 1 use the Dirichlet submatrix.
struct SectorBase {
  Domain domain;
  LogGrid grid;
  Tridiagonal K, M0, MV1;  // MV1: unit coupling

  SectorBase(Domain dom, const LogGrid& g, const RadialPotential& w) : domain(dom), grid(g) {
    radial::SectorProblem probe;
    probe.domain = dom;
    probe.grid = g;
    probe.validate();
    radial::assemble_stiffness_mass(g, K, M0);
    MV1 = radial::assemble_potential(g, w);
  }

  Tridiagonal form(int d, int ell, double lambda) const {
    const double c = radial::sector_constant(d, ell);
    if (ell == 0) return spectra::axpy(K, -lambda, MV1);
    if (grid.lower == LowerEnd::Extended) {
      return spectra::axpy(spectra::axpy(radial::drop_first(K), c, radial::drop_first(M0)), -lambda,
                           radial::drop_first(MV1));
    }
    return spectra::axpy(spectra::axpy(K, c, M0), -lambda, MV1);
  }

  Inertia count(int d, int ell, double lambda) const {
    return spectra::tridiag_inertia(form(d, ell, lambda), 0.0);
  }
};

/// n_neg of K + C - MV; a nonzero n_zero makes the count an interval.
inline Inertia sector_count(const radial::SectorProblem& p) {
  return spectra::tridiag_inertia(radial::assemble_sector(p).form(), 0.0);
}

/// Smallest l with l(l+d-2) >= lambda * sup r^2 W; sectors from here on have count 0.
inline int ell_cutoff(int d, double lambda, const RadialPotential& w) {
  const double bound = lambda * w.sup_scaled();
  if (!std::isfinite(bound)) {
    throw precondition_error("unsupported potential: r^2 W(r) is unbounded (" + w.describe() + ")");
  }
  int ell = 0;
  while (radial::sector_constant(d, ell) < bound) ++ell;
  return ell;
}

// ---------------------------------------------------------------------------
// Weighted right-hand side

struct RhsValue {
  double value = 0.0;
  bool diverged = false;
};

/// |S^{d-1}| int (lambda W)^q (1 + |ln r|)^p r^{d-1} dr over the domain, in t = ln r:
/// |S^{d-1}| int e^{(d-2q)t} (lambda e^{2t} W(e^t))^q (1+|t|)^p dt. q defaults to d/2.
inline RhsValue weighted_rhs(const RadialPotential& w, int d, double lambda, double p, Domain domain,
                             std::optional<double> q_opt = std::nullopt) {
  if (d < 1) throw precondition_error("weighted_rhs: d must be >= 1");
  if (!(lambda >= 0.0)) throw precondition_error("weighted_rhs: lambda must be >= 0");
  const double q = q_opt.value_or(0.5 * d);
  RhsValue out;
  if (lambda == 0.0) return out;
  auto sup = w.support_t();
  double lo = sup.first, hi = sup.second;
  if (domain == Domain::Ball) hi = std::min(hi, 0.0);
  if (domain == Domain::Complement) lo = std::max(lo, 0.0);
  if (!(lo < hi)) return out;
  auto f = [&](double t) {
    const double s = w.scaled(t);
    if (s == 0.0) return 0.0;
    return std::exp((d - 2.0 * q) * t) * std::pow(lambda * s, q) * std::pow(1.0 + std::abs(t), p);
  };
  for (double s : w.singular_points()) {
    if (s >= lo && s <= hi) {
      // (lambda W)^q with q >= 1 is not integrable at a 1/t^2 singularity
      out.diverged = true;
    }
  }
  std::vector<double> cuts;
  auto add_cut = [&](double c) {
    if (c > lo && c < hi) cuts.push_back(c);
  };
  for (double b : w.breakpoints()) add_cut(b);
  add_cut(0.0);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  auto piece = [&](double a, double b) {
    const auto r = quad::integrate_adaptive(f, a, b, 1e-12);
    if (!r.converged || !std::isfinite(r.value)) out.diverged = true;
    if (std::isfinite(r.value)) total += r.value;
  };
  // Infinite ends: extend in doubling steps until the increments vanish.
  auto tail = [&](double start, double dir) {
    double len = 1.0, prev_inc = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 60; ++k) {
      const double a = start + dir * (len - 1.0), b = start + dir * (2.0 * len - 1.0);
      const auto r = quad::integrate_adaptive(f, std::min(a, b), std::max(a, b), 1e-12);
      const double inc = std::isfinite(r.value) ? r.value : 0.0;
      if (!r.converged || !std::isfinite(r.value)) out.diverged = true;
      total += inc;
      if (std::abs(inc) <= 1e-15 * std::abs(total)) return;
      if (k > 8 && std::abs(inc) >= 0.5 * prev_inc) {
        out.diverged = true;
        return;
      }
      prev_inc = std::abs(inc);
      len *= 2.0;
    }
    out.diverged = true;
  };
  const double a0 = std::isfinite(lo) ? lo : (cuts.empty() ? std::min(hi, 0.0) - 1.0 : cuts.front() - 1.0);
  const double b0 = std::isfinite(hi) ? hi : (cuts.empty() ? std::max(lo, 0.0) + 1.0 : cuts.back() + 1.0);
  std::vector<double> pts{a0};
  for (double c : cuts) {
    if (c > a0 && c < b0) pts.push_back(c);
  }
  pts.push_back(b0);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] > pts[i]) piece(pts[i], pts[i + 1]);
  }
  if (!std::isfinite(lo)) tail(a0, -1.0);
  if (!std::isfinite(hi)) tail(b0, +1.0);
  out.value = specfun::sphere_area(d) * total;
  return out;
}

// ---------------------------------------------------------------------------
// Total counts

struct SectorEntry {
  int ell = 0;
  unsigned long long multiplicity = 0;
  int count = 0;       // n_neg
  int zero_pivots = 0;  // count lies in [count, count + zero_pivots]
};

struct CountReport {
  int d = 3;
  double lambda = 0.0;
  Domain domain = Domain::FullSpace;
  std::vector<SectorEntry> sectors;
  int ell_max = 0;  // first omitted sector
  double t_min = 0.0, t_max = 0.0, spacing = 0.0;
  int grid_n = 0;
  long long total = 0;        // sum multiplicity * count
  long long total_upper = 0;  // including zero pivots
  double rhs_weighted = 0.0;
  bool rhs_diverged = false;
  bool flagged() const { return total_upper != total; }
};

namespace detail {

inline CountReport make_report(int d, double lambda, const SectorBase& base, int ell_max,
                               const std::vector<Inertia>& per_ell) {
  CountReport rep;
  rep.d = d;
  rep.lambda = lambda;
  rep.domain = base.domain;
  rep.ell_max = ell_max;
  rep.t_min = base.grid.t_min;
  rep.t_max = base.grid.t_max;
  rep.spacing = base.grid.h();
  rep.grid_n = base.grid.n;
  for (std::size_t ell = 0; ell < per_ell.size(); ++ell) {
    SectorEntry e;
    e.ell = static_cast<int>(ell);
    e.multiplicity = radial::multiplicity(d, e.ell);
    e.count = per_ell[ell].n_neg;
    e.zero_pivots = per_ell[ell].n_zero;
    rep.total += static_cast<long long>(e.multiplicity) * e.count;
    rep.total_upper += static_cast<long long>(e.multiplicity) * (e.count + e.zero_pivots);
    rep.sectors.push_back(e);
  }
  return rep;
}

inline void check_inputs(int d, double lambda) {
  if (d < 3) throw precondition_error("d must be >= 3");
  if (!(lambda >= 0.0 && std::isfinite(lambda))) throw precondition_error("lambda must be finite and >= 0");
}

}  // namespace detail

/// N(0, L - lambda W) on the domain, summed over sectors 0..ell_max-1.
inline CountReport total_count(int d, const RadialPotential& w, double lambda, Domain domain,
                               const GridOptions& opt = {}, std::optional<double> weight_exponent = {}) {
  detail::check_inputs(d, lambda);
  const int ell_max = ell_cutoff(d, lambda, w);
  const SectorBase base(domain, make_grid(domain, w, opt), w);
  const int sectors = std::max(ell_max, 1);
  const auto per_ell = parallel::map<Inertia>(
      static_cast<std::size_t>(sectors), opt.workers,
      [&](std::size_t ell) { return base.count(d, static_cast<int>(ell), lambda); });
  auto rep = detail::make_report(d, lambda, base, ell_max, per_ell);
  const auto rhs = weighted_rhs(w, d, lambda, weight_exponent.value_or(d - 1.0), domain);
  rep.rhs_weighted = rhs.value;
  rep.rhs_diverged = rhs.diverged;
  return rep;
}

// ---------------------------------------------------------------------------
// Coupling sweeps

struct SweepRow {
  double lambda = 0.0;
  long long n = 0;
  long long n_upper = 0;
  double rhs = 0.0;
};

struct SweepTable {
  int d = 3;
  std::vector<SweepRow> rows;
  double slope = std::nan("");  // least squares of ln N vs ln lambda
  double fit_lo = 0.0, fit_hi = 0.0;
  std::vector<CountReport> reports;
};

/// Least-squares slope of ln N against ln lambda over lambda in [lo, hi], N > 0.
inline double fit_loglog_slope(const std::vector<SweepRow>& rows, double lo, double hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& r : rows) {
    if (r.lambda < lo || r.lambda > hi || r.n <= 0) continue;
    const double x = std::log(r.lambda), y = std::log(static_cast<double>(r.n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) return std::nan("");
  const double den = m * sxx - sx * sx;
  return den > 0.0 ? (m * sxy - sx * sy) / den : std::nan("");
}

/// Counts for increasing couplings; the slope is fitted over the top decade.
inline SweepTable coupling_sweep(int d, const RadialPotential& w, const std::vector<double>& lambdas,
                                 Domain domain = Domain::FullSpace, const GridOptions& opt = {},
                                 std::optional<double> weight_exponent = {}) {
  if (lambdas.empty()) throw precondition_error("coupling_sweep: no couplings");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    detail::check_inputs(d, lambdas[i]);
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw precondition_error("coupling_sweep: couplings must be strictly increasing");
    }
  }
  const SectorBase base(domain, make_grid(domain, w, opt), w);
  std::vector<int> cut(lambdas.size());
  struct Job {
    std::size_t li;
    int ell;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    cut[i] = ell_cutoff(d, lambdas[i], w);
    for (int ell = 0; ell < std::max(cut[i], 1); ++ell) jobs.push_back({i, ell});
  }
  const auto inertia = parallel::map<Inertia>(jobs.size(), opt.workers, [&](std::size_t j) {
    return base.count(d, jobs[j].ell, lambdas[jobs[j].li]);
  });
  SweepTable table;
  table.d = d;
  std::size_t j = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<Inertia> per_ell;
    while (j < jobs.size() && jobs[j].li == i) per_ell.push_back(inertia[j++]);
    auto rep = detail::make_report(d, lambdas[i], base, cut[i], per_ell);
    const auto rhs = weighted_rhs(w, d, lambdas[i], weight_exponent.value_or(d - 1.0), domain);
    rep.rhs_weighted = rhs.value;
    rep.rhs_diverged = rhs.diverged;
    table.rows.push_back({lambdas[i], rep.total, rep.total_upper, rep.rhs_weighted});
    table.reports.push_back(std::move(rep));
  }
  table.fit_hi = lambdas.back();
  table.fit_lo = lambdas.back() / 10.0;
  table.slope = fit_loglog_slope(table.rows, table.fit_lo, table.fit_hi);
  return table;
}

// ---------------------------------------------------------------------------
// Splitting and inversion checks

struct KvwResult {
  int n_full = 0, n_ball = 0, n_complement = 0;
  bool upper_holds = false;     // N_full <= 1 + N_ball + N_comp
  bool bracketing_holds = false;  // N_ball + N_comp <= N_full
  bool flagged = false;          // some pivot was within tolerance of zero
  LogGrid full_grid;
};

/// l = 0 counts on a FullSpace grid and on its two halves split at t = 0.
inline KvwResult kvw_check(int d, const RadialPotential& w, double lambda, const GridOptions& opt = {},
                           std::optional<LogGrid> full_grid = {}) {
  detail::check_inputs(d, lambda);
  const LogGrid full = full_grid ? *full_grid : make_grid(Domain::FullSpace, w, opt);
  const double h = full.h();
  const double j0 = -full.t_min / h;
  if (!(full.t_min < 0.0 && full.t_max > 0.0) || std::abs(j0 - std::round(j0)) > 1e-9 * std::max(1.0, j0)) {
    throw precondition_error("kvw_check: the full grid must contain t = 0 as a node");
  }
  const int k0 = static_cast<int>(std::lround(j0));
  const LogGrid ball(full.t_min, 0.0, k0 - 1, full.lower);
  const LogGrid comp(0.0, full.t_max, full.n - k0, LowerEnd::Dirichlet);
  KvwResult r;
  r.full_grid = full;
  const auto f = SectorBase(Domain::FullSpace, full, w).count(d, 0, lambda);
  const auto b = SectorBase(Domain::Ball, ball, w).count(d, 0, lambda);
  const auto c = SectorBase(Domain::Complement, comp, w).count(d, 0, lambda);
  r.n_full = f.n_neg;
  r.n_ball = b.n_neg;
  r.n_complement = c.n_neg;
  r.flagged = f.flagged() || b.flagged() || c.flagged();
  r.upper_holds = r.n_full <= 1 + r.n_ball + r.n_complement;
  r.bracketing_holds = r.n_ball + r.n_complement <= r.n_full;
  return r;
}

struct InversionResult {
  double form_residual = 0.0;       // max relative mismatch of the two kinetic forms
  double potential_residual = 0.0;  // max relative mismatch of the two potential integrals
  int n_ball = 0, n_complement = 0;
  bool flagged = false;
  double rhs_ball = 0.0, rhs_complement = 0.0;
  double rhs_residual = 0.0;
};

namespace detail {

/// Smooth test function on (a, b) inside (0, 1), shaped by a polynomial factor.
struct Bump {
  double a, b, tilt;
  double value(double s) const {
    if (s <= a || s >= b) return 0.0;
    const double x = (s - a) * (b - s);
    return (1.0 + tilt * s) * std::exp(-1.0 / x);
  }
  double derivative(double s) const {
    if (s <= a || s >= b) return 0.0;
    const double x = (s - a) * (b - s);
    const double dx = (b - s) - (s - a);
    const double e = std::exp(-1.0 / x);
    return tilt * e + (1.0 + tilt * s) * e * dx / (x * x);
  }
};

inline std::vector<Bump> inversion_bumps() {
  std::vector<Bump> out;
  for (int k = 0; k < 10; ++k) {
    const double a = 0.02 + 0.06 * k;
    const double b = std::min(0.98, a + 0.15 + 0.05 * (k % 4));
    out.push_back({a, b, 0.5 * (k % 3) - 0.5});
  }
  return out;
}

}  // namespace detail

/// Ball problem with potential W~ against the Complement problem with its
/// Kelvin image, l = 0, on mirrored grids.
inline InversionResult inversion_check(int d, const RadialPotential& w_ball, double lambda,
                                       const GridOptions& opt = {}) {
  detail::check_inputs(d, lambda);
  const RadialPotential w_out = radial::kelvin_potential(w_ball);
  InversionResult res;
  const double hardy = 0.25 * (d - 2) * (d - 2);
  for (const auto& bump : detail::inversion_bumps()) {
    // u(r) = r^{2-d} u~(1/r) on r > 1
    auto u = [&](double r) { return std::pow(r, 2.0 - d) * bump.value(1.0 / r); };
    auto du = [&](double r) {
      return (2.0 - d) * std::pow(r, 1.0 - d) * bump.value(1.0 / r) -
             std::pow(r, -d) * bump.derivative(1.0 / r);
    };
    auto outer = [&](double r) {
      const double v = u(r), dv = du(r);
      return (dv * dv - hardy * v * v / (r * r)) * std::pow(r, d - 1.0);
    };
    auto inner = [&](double s) {
      const double v = bump.value(s), dv = bump.derivative(s);
      return (dv * dv - hardy * v * v / (s * s)) * std::pow(s, d - 1.0);
    };
    const double lhs = quad::integrate_composite<15>([&](double s) { return outer(1.0 / s) / (s * s); }, bump.a, bump.b, 512);
    const double rhs = quad::integrate_composite<15>(inner, bump.a, bump.b, 512);
    auto kinetic = [&](double s) {
      const double dv = bump.derivative(s);
      return dv * dv * std::pow(s, d - 1.0);
    };
    const double energy = quad::integrate_composite<15>(kinetic, bump.a, bump.b, 512);
    res.form_residual = std::max(res.form_residual, std::abs(lhs - rhs) / energy);
    auto pot_outer = [&](double r) {
      const double v = u(r);
      return w_out.value(r) * v * v * std::pow(r, d - 1.0);
    };
    auto pot_inner = [&](double s) {
      const double v = bump.value(s);
      return w_ball.value(s) * v * v * std::pow(s, d - 1.0);
    };
    // split at potential breakpoints (mapped to each variable)
    std::vector<double> sc{bump.a}, rc{1.0 / bump.b};
    for (double t : w_ball.breakpoints()) {
      const double s = std::exp(t);
      if (s > bump.a && s < bump.b) sc.push_back(s);
    }
    for (double t : w_out.breakpoints()) {
      const double r = std::exp(t);
      if (r > 1.0 / bump.b && r < 1.0 / bump.a) rc.push_back(r);
    }
    sc.push_back(bump.b);
    rc.push_back(1.0 / bump.a);
    std::sort(sc.begin(), sc.end());
    std::sort(rc.begin(), rc.end());
    double p_in = 0.0, p_out = 0.0;
    for (std::size_t i = 0; i + 1 < sc.size(); ++i) {
      p_in += quad::integrate_composite<15>(pot_inner, sc[i], sc[i + 1], 128);
    }
    for (std::size_t i = 0; i + 1 < rc.size(); ++i) {
      p_out += quad::integrate_composite<15>(pot_outer, rc[i], rc[i + 1], 128);
    }
    const double scale = std::max(std::abs(p_in), std::abs(p_out));
    if (scale > 0.0) res.potential_residual = std::max(res.potential_residual, std::abs(p_in - p_out) / scale);
  }
  // mirrored grids: Ball [-T, 0] and Complement [0, T], Dirichlet at both ends
  const LogGrid ball = make_grid(Domain::Ball, w_ball, opt, LowerEnd::Dirichlet);
  const LogGrid comp(0.0, -ball.t_min, ball.n, LowerEnd::Dirichlet);
  const auto b = SectorBase(Domain::Ball, ball, w_ball).count(d, 0, lambda);
  const auto c = SectorBase(Domain::Complement, comp, w_out).count(d, 0, lambda);
  res.n_ball = b.n_neg;
  res.n_complement = c.n_neg;
  res.flagged = b.flagged() || c.flagged();
  const auto rb = weighted_rhs(w_ball, d, lambda, d - 1.0, Domain::Ball);
  const auto rc = weighted_rhs(w_out, d, lambda, d - 1.0, Domain::Complement);
  res.rhs_ball = rb.value;
  res.rhs_complement = rc.value;
  const double s = std::max(std::abs(rb.value), std::abs(rc.value));
  res.rhs_residual = s > 0.0 ? std::abs(rb.value - rc.value) / s : 0.0;
  return res;
}

}  // namespace hardylab::counting
