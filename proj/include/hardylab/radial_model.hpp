#pragma once

// Radial potentials, the log-radial grid and Galerkin assembly of one
// angular sector of the Hardy-Schroedinger form.
//
// In t = ln r, with u(r) = r^{-(d-2)/2} w(ln r), the sector-l form becomes
//   |S^{d-1}| * int ( w'(t)^2 + c_l w(t)^2 - lambda e^{2t} W(e^t) w(t)^2 ) dt,
//   ||u||^2 = |S^{d-1}| * int e^{2t} w(t)^2 dt,
// where c_l = l(l+d-2). The matrices below drop the common |S^{d-1}| factor.
//
// Basis: P1 hats on a uniform grid. For l = 0 on Ball or FullSpace the lower
// end may be "extended": the first basis function equals 1 on (-inf, t_min]
// and falls linearly to 0 at t_min + h. Such w have finite form energy, so
// the subspace is still conforming, and it removes the artificial Dirichlet
// wall at small r.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "hardylab/errors.hpp"
#include "hardylab/quadrature.hpp"
#include "hardylab/spectra.hpp"

namespace hardylab::radial {

using spectra::Tridiagonal;

inline constexpr double kDefaultSpacing = 1.0 / 256.0;
inline constexpr double kMinTruncation = 14.0;
inline constexpr double kTruncationMargin = 10.0;
inline constexpr double kGaussianWidths = 12.0;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// c_l = l(l+d-2).
inline double sector_constant(int d, int ell) {
  if (d < 3 || ell < 0) throw precondition_error("sector_constant: need d >= 3 and l >= 0");
  return static_cast<double>(ell) * (ell + d - 2);
}

namespace detail {
inline unsigned long long binom(long long a, long long b) {
  if (b < 0 || a < b) return 0;
  b = std::min(b, a - b);
  unsigned __int128 r = 1;
  for (long long i = 1; i <= b; ++i) r = r * static_cast<unsigned __int128>(a - b + i) / i;
  return static_cast<unsigned long long>(r);
}
}  // namespace detail

/// Dimension of degree-l spherical harmonics on S^{d-1}.
inline unsigned long long multiplicity(int d, int ell) {
  if (d < 3 || ell < 0) throw precondition_error("multiplicity: need d >= 3 and l >= 0");
  return detail::binom(ell + d - 1, d - 1) - detail::binom(ell + d - 3, d - 1);
}

// ---------------------------------------------------------------------------
// Potentials

class RadialPotential;

struct Annulus {
  double r1, r2, height;  // W = height on [r1, r2]
};
struct GaussianBump {
  double center, width, height;  // W = height * exp(-(r - center)^2 / (2 width^2))
};
struct CriticalLog {
  double beta;  // W = beta / (4 r^2 ln^2 r) on r < 1
};
struct Tabulated {
  std::vector<double> r, value, log_r;  // linear in ln r between knots, 0 outside
  std::string source;
};
struct KelvinOf {
  std::shared_ptr<const RadialPotential> inner;  // W(r) = r^{-4} inner(1/r)
};

namespace detail {
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace detail

class RadialPotential {
 public:
  using Variant = std::variant<Annulus, GaussianBump, CriticalLog, Tabulated, KelvinOf>;

  static RadialPotential annulus(double r1, double r2, double height) {
    if (!(r1 >= 0.0 && r2 > r1 && std::isfinite(r2) && height >= 0.0 && std::isfinite(height))) {
      throw precondition_error("annulus: need 0 <= r1 < r2 < inf and finite height >= 0");
    }
    return RadialPotential(Annulus{r1, r2, height});
  }
  static RadialPotential zero() { return annulus(0.0, 1.0, 0.0); }
  static RadialPotential gaussian(double center, double width, double height) {
    if (!(center > 0.0 && width > 0.0 && height >= 0.0 && std::isfinite(center) &&
          std::isfinite(width) && std::isfinite(height))) {
      throw precondition_error("gaussian: need center > 0, width > 0, height >= 0");
    }
    return RadialPotential(GaussianBump{center, width, height});
  }
  static RadialPotential critical_log(double beta) {
    if (!(beta >= 0.0 && std::isfinite(beta))) {
      throw precondition_error("critlog: need finite beta >= 0");
    }
    return RadialPotential(CriticalLog{beta});
  }
  static RadialPotential tabulated(std::vector<double> r, std::vector<double> value,
                                   std::string source = "inline") {
    if (r.size() != value.size() || r.size() < 2) {
      throw precondition_error("table: need at least two (r, W) pairs");
    }
    Tabulated t;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0.0 && std::isfinite(r[i]))) throw precondition_error("table: radii must be > 0");
      if (i > 0 && !(r[i] > r[i - 1])) {
        throw precondition_error("table: radii must be strictly increasing");
      }
      if (!(value[i] >= 0.0 && std::isfinite(value[i]))) {
        throw precondition_error("table: values must be finite and >= 0");
      }
      t.log_r.push_back(std::log(r[i]));
    }
    t.r = std::move(r);
    t.value = std::move(value);
    t.source = std::move(source);
    return RadialPotential(std::move(t));
  }
  static RadialPotential kelvin_of(const RadialPotential& inner) {
    return RadialPotential(KelvinOf{std::make_shared<const RadialPotential>(inner)});
  }

  const Variant& variant() const { return v_; }

  /// W(r), r > 0.
  double value(double r) const {
    if (const auto* a = std::get_if<Annulus>(&v_)) {
      return (r >= a->r1 && r <= a->r2) ? a->height : 0.0;
    }
    if (const auto* g = std::get_if<GaussianBump>(&v_)) {
      const double z = (r - g->center) / g->width;
      return g->height * std::exp(-0.5 * z * z);
    }
    if (const auto* c = std::get_if<CriticalLog>(&v_)) {
      if (r >= 1.0 || r <= 0.0) return 0.0;
      const double l = std::log(r);
      return c->beta / (4.0 * r * r * l * l);
    }
    if (const auto* t = std::get_if<Tabulated>(&v_)) return table_at(*t, std::log(r));
    const auto& k = std::get<KelvinOf>(v_);
    return std::pow(r, -4.0) * k.inner->value(1.0 / r);
  }

  /// e^{2t} W(e^t), the potential seen by the log-variable form.
  double scaled(double t) const {
    if (const auto* c = std::get_if<CriticalLog>(&v_)) {
      return t < 0.0 ? c->beta / (4.0 * t * t) : 0.0;
    }
    if (const auto* k = std::get_if<KelvinOf>(&v_)) return k->inner->scaled(-t);
    if (const auto* t2 = std::get_if<Tabulated>(&v_)) return std::exp(2.0 * t) * table_at(*t2, t);
    return std::exp(2.0 * t) * value(std::exp(t));
  }

  /// Points in t where the scaled potential has a jump or a kink.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    if (const auto* a = std::get_if<Annulus>(&v_)) {
      if (a->r1 > 0.0) out.push_back(std::log(a->r1));
      out.push_back(std::log(a->r2));
    } else if (std::holds_alternative<CriticalLog>(v_)) {
      out.push_back(0.0);
    } else if (const auto* t = std::get_if<Tabulated>(&v_)) {
      out = t->log_r;
    } else if (const auto* k = std::get_if<KelvinOf>(&v_)) {
      for (double b : k->inner->breakpoints()) out.push_back(-b);
      std::sort(out.begin(), out.end());
    }
    return out;
  }

  /// Points in t where the scaled potential is not locally integrable.
  std::vector<double> singular_points() const {
    if (std::holds_alternative<CriticalLog>(v_)) return {0.0};
    if (const auto* k = std::get_if<KelvinOf>(&v_)) {
      auto s = k->inner->singular_points();
      for (double& v : s) v = -v;
      return s;
    }
    return {};
  }

  /// Closed interval in t outside which the scaled potential vanishes (or is
  /// below e^{-72} of its peak for the Gaussian).
  std::pair<double, double> support_t() const {
    if (const auto* a = std::get_if<Annulus>(&v_)) {
      if (a->height == 0.0) return {0.0, 0.0};
      return {a->r1 > 0.0 ? std::log(a->r1) : -kInf, std::log(a->r2)};
    }
    if (const auto* g = std::get_if<GaussianBump>(&v_)) {
      const double lo = g->center - kGaussianWidths * g->width;
      return {lo > 0.0 ? std::log(lo) : -kInf, std::log(g->center + kGaussianWidths * g->width)};
    }
    if (std::holds_alternative<CriticalLog>(v_)) return {-kInf, 0.0};
    if (const auto* t = std::get_if<Tabulated>(&v_)) return {t->log_r.front(), t->log_r.back()};
    const auto inner = std::get<KelvinOf>(v_).inner->support_t();
    return {-inner.second, -inner.first};
  }

  /// sup over t of e^{2t} W(e^t), i.e. sup of r^2 W(r). Infinite for CriticalLog.
  double sup_scaled() const {
    if (const auto* a = std::get_if<Annulus>(&v_)) return a->height * a->r2 * a->r2;
    if (const auto* g = std::get_if<GaussianBump>(&v_)) {
      const double c = g->center, w = g->width;
      const double r = 0.5 * (c + std::sqrt(c * c + 8.0 * w * w));
      return r * r * value(r);
    }
    if (const auto* c = std::get_if<CriticalLog>(&v_)) return c->beta > 0.0 ? kInf : 0.0;
    if (const auto* t = std::get_if<Tabulated>(&v_)) {
      double best = 0.0;
      for (std::size_t i = 0; i < t->r.size(); ++i) {
        best = std::max(best, t->r[i] * t->r[i] * t->value[i]);
      }
      for (std::size_t i = 0; i + 1 < t->r.size(); ++i) {
        // e^{2s}(a + b s) on [s0, s1] is stationary at s = -(2a + b) / (2b)
        const double s0 = t->log_r[i], s1 = t->log_r[i + 1];
        const double b = (t->value[i + 1] - t->value[i]) / (s1 - s0);
        if (b == 0.0) continue;
        const double a = t->value[i] - b * s0;
        const double s = -(2.0 * a + b) / (2.0 * b);
        if (s > s0 && s < s1) best = std::max(best, std::exp(2.0 * s) * (a + b * s));
      }
      return best;
    }
    return std::get<KelvinOf>(v_).inner->sup_scaled();
  }

  /// int_{-inf}^{t0} e^{2t} W(e^t) dt.
  double scaled_integral_below(double t0) const {
    if (const auto* c = std::get_if<CriticalLog>(&v_)) {
      if (c->beta == 0.0) return 0.0;
      return t0 < 0.0 ? c->beta / (4.0 * std::abs(t0)) : kInf;
    }
    if (const auto* a = std::get_if<Annulus>(&v_)) {
      const double lo = a->r1 > 0.0 ? std::log(a->r1) : -kInf, hi = std::log(a->r2);
      const double top = std::min(t0, hi);
      if (top <= lo) return 0.0;
      const double e_lo = std::isfinite(lo) ? std::exp(2.0 * lo) : 0.0;
      return 0.5 * a->height * (std::exp(2.0 * top) - e_lo);
    }
    for (double s : singular_points()) {
      if (s <= t0) return kInf;
    }
    const auto sup = support_t();
    const double lo = std::max(sup.first, t0 - 80.0);
    const double hi = std::min(t0, sup.second);
    if (hi <= lo) return 0.0;
    std::vector<double> cuts{lo};
    for (double b : breakpoints()) {
      if (b > lo && b < hi) cuts.push_back(b);
    }
    cuts.push_back(hi);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      total += quad::integrate_adaptive([&](double t) { return scaled(t); }, cuts[i], cuts[i + 1],
                                        1e-13)
                   .value;
    }
    return total;
  }

  /// Descriptor string accepted by parse_potential.
  std::string describe() const {
    using detail::fmt;
    if (const auto* a = std::get_if<Annulus>(&v_)) {
      return "annulus:" + fmt(a->r1) + "," + fmt(a->r2) + "," + fmt(a->height);
    }
    if (const auto* g = std::get_if<GaussianBump>(&v_)) {
      return "gaussian:" + fmt(g->center) + "," + fmt(g->width) + "," + fmt(g->height);
    }
    if (const auto* c = std::get_if<CriticalLog>(&v_)) return "critlog:" + fmt(c->beta);
    if (const auto* t = std::get_if<Tabulated>(&v_)) return "table:" + t->source;
    return "kelvin:" + std::get<KelvinOf>(v_).inner->describe();
  }

 private:
  explicit RadialPotential(Variant v) : v_(std::move(v)) {}

  static double table_at(const Tabulated& t, double s) {
    if (s < t.log_r.front() || s > t.log_r.back()) return 0.0;
    const auto it = std::upper_bound(t.log_r.begin(), t.log_r.end(), s);
    std::size_t i = static_cast<std::size_t>(it - t.log_r.begin());
    if (i == 0) return t.value.front();
    if (i >= t.log_r.size()) return t.value.back();
    const double s0 = t.log_r[i - 1], s1 = t.log_r[i];
    const double f = (s - s0) / (s1 - s0);
    return t.value[i - 1] + f * (t.value[i] - t.value[i - 1]);
  }

  Variant v_;
};

/// r -> r^{-4} W(1/r).
inline RadialPotential kelvin_potential(const RadialPotential& w) {
  return RadialPotential::kelvin_of(w);
}

/// Two-column text table: "r W" per line, whitespace or comma separated,
/// '#' starts a comment. Errors name the offending line.
inline RadialPotential parse_table(std::istream& in, const std::string& source) {
  std::vector<double> r, w;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw parse_error(source + " line " + std::to_string(lineno) + ": expected two numbers");
    }
    std::string rest;
    if (!(ls >> b) || (ls >> rest)) {
      throw parse_error(source + " line " + std::to_string(lineno) + ": expected two numbers");
    }
    if (!(a > 0.0 && std::isfinite(a))) {
      throw parse_error(source + " line " + std::to_string(lineno) + ": radius must be > 0");
    }
    if (!r.empty() && !(a > r.back())) {
      throw parse_error(source + " line " + std::to_string(lineno) +
                        ": radii must be strictly increasing");
    }
    if (!(b >= 0.0 && std::isfinite(b))) {
      throw parse_error(source + " line " + std::to_string(lineno) + ": value must be >= 0");
    }
    r.push_back(a);
    w.push_back(b);
  }
  if (r.size() < 2) throw parse_error(source + ": need at least two data lines");
  return RadialPotential::tabulated(std::move(r), std::move(w), source);
}

inline RadialPotential load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("table: cannot open " + path);
  return parse_table(in, path);
}

namespace detail {
inline std::vector<double> parse_numbers(const std::string& body, std::size_t expected,
                                         const std::string& spec) {
  std::vector<double> v;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw parse_error("potential '" + spec + "': bad number '" + item + "'");
    }
  }
  if (v.size() != expected) {
    throw parse_error("potential '" + spec + "': expected " + std::to_string(expected) +
                      " comma-separated numbers");
  }
  return v;
}
}  // namespace detail

/// "annulus:r1,r2,h", "gaussian:c,w,h", "critlog:beta", "table:path", "kelvin:<potential>", "zero".
inline RadialPotential parse_potential(const std::string& spec) {
  if (spec == "zero") return RadialPotential::zero();
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw parse_error("potential '" + spec + "': missing ':'");
  const std::string kind = spec.substr(0, colon), body = spec.substr(colon + 1);
  try {
    if (kind == "annulus") {
      const auto v = detail::parse_numbers(body, 3, spec);
      return RadialPotential::annulus(v[0], v[1], v[2]);
    }
    if (kind == "gaussian") {
      const auto v = detail::parse_numbers(body, 3, spec);
      return RadialPotential::gaussian(v[0], v[1], v[2]);
    }
    if (kind == "critlog") return RadialPotential::critical_log(detail::parse_numbers(body, 1, spec)[0]);
    if (kind == "table") return load_table(body);
    if (kind == "kelvin") return kelvin_potential(parse_potential(body));
  } catch (const parse_error&) {
    throw;
  } catch (const precondition_error& e) {
    throw parse_error("potential '" + spec + "': " + e.what());
  }
  throw parse_error("potential '" + spec + "': unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Grid and sector problem

enum class Domain { Ball, Complement, FullSpace };
enum class LowerEnd { Dirichlet, Extended };

inline const char* domain_name(Domain d) {
  switch (d) {
    case Domain::Ball: return "ball";
    case Domain::Complement: return "complement";
    case Domain::FullSpace: return "full";
  }
  return "?";
}

inline Domain parse_domain(const std::string& s) {
  if (s == "ball") return Domain::Ball;
  if (s == "complement") return Domain::Complement;
  if (s == "full") return Domain::FullSpace;
  throw parse_error("unknown domain '" + s + "' (expected ball, complement or full)");
}

struct LogGrid {
  double t_min = -1.0;
  double t_max = 0.0;
  int n = 1;  // interior nodes
  LowerEnd lower = LowerEnd::Dirichlet;

  LogGrid() = default;
  LogGrid(double lo, double hi, int interior, LowerEnd end = LowerEnd::Dirichlet)
      : t_min(lo), t_max(hi), n(interior), lower(end) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi) || interior < 1) {
      throw precondition_error("LogGrid: need finite t_min < t_max and n >= 1");
    }
  }
  /// Grid on [lo, hi] with spacing as close as possible to h (exact when it divides).
  static LogGrid with_spacing(double lo, double hi, double h, LowerEnd end = LowerEnd::Dirichlet) {
    const long cells = std::lround((hi - lo) / h);
    if (cells < 2) throw precondition_error("LogGrid: spacing too coarse for the interval");
    return LogGrid(lo, hi, static_cast<int>(cells - 1), end);
  }

  double h() const { return (t_max - t_min) / (n + 1); }
  double node(int j) const { return t_min + j * h(); }  // j = 0..n+1
  int basis_size() const { return n + (lower == LowerEnd::Extended ? 1 : 0); }
  /// Node index carrying basis function k.
  int basis_node(int k) const { return lower == LowerEnd::Extended ? k : k + 1; }

  LogGrid bisected() const { return LogGrid(t_min, t_max, 2 * n + 1, lower); }
  LogGrid with_lower(LowerEnd end) const { return LogGrid(t_min, t_max, n, end); }

  /// True when every function of `coarse`'s trial space lies in this one.
  bool contains_space_of(const LogGrid& coarse) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(t_max - t_min));
    if (coarse.t_min < t_min - tol || coarse.t_max > t_max + tol) return false;
    const double ratio = coarse.h() / h();
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) return false;
    const double offset = (coarse.t_min - t_min) / h();
    if (std::abs(offset - std::round(offset)) > 1e-7) return false;
    if (coarse.lower == LowerEnd::Extended) {
      // the plateau needs a plateau here as well
      return lower == LowerEnd::Extended;
    }
    return true;
  }
};

/// Default truncation: T = max(14, ceil(|t_edge| + 10)) at each open end.
inline LogGrid default_grid(Domain domain, const RadialPotential& w, double spacing = kDefaultSpacing,
                            LowerEnd lower = LowerEnd::Extended) {
  const auto sup = w.support_t();
  auto margin = [](double t) {
    return std::isfinite(t) ? std::max(kMinTruncation, std::ceil(std::abs(t) + kTruncationMargin))
                            : kMinTruncation;
  };
  switch (domain) {
    case Domain::Ball:
      return LogGrid::with_spacing(-margin(std::min(sup.first, 0.0)), 0.0, spacing, lower);
    case Domain::Complement:
      return LogGrid::with_spacing(0.0, margin(std::max(sup.second, 0.0)), spacing,
                                   LowerEnd::Dirichlet);
    case Domain::FullSpace: {
      const double t = std::max(margin(sup.first), margin(sup.second));
      return LogGrid::with_spacing(-t, t, spacing, lower);
    }
  }
  throw internal_error("default_grid: unknown domain");
}

struct SectorProblem {
  int d = 3;
  int ell = 0;
  Domain domain = Domain::Ball;
  LogGrid grid;
  RadialPotential potential = RadialPotential::zero();
  double lambda = 0.0;

  void validate() const {
    if (d < 3) throw precondition_error("SectorProblem: d must be >= 3");
    if (ell < 0) throw precondition_error("SectorProblem: l must be >= 0");
    if (!(lambda >= 0.0 && std::isfinite(lambda))) {
      throw precondition_error("SectorProblem: lambda must be finite and >= 0");
    }
    const double tol = 1e-12 * std::max(1.0, grid.t_max - grid.t_min);
    switch (domain) {
      case Domain::Ball:
        if (std::abs(grid.t_max) > tol) throw precondition_error("SectorProblem: Ball needs t_max = 0");
        break;
      case Domain::Complement:
        if (std::abs(grid.t_min) > tol) {
          throw precondition_error("SectorProblem: Complement needs t_min = 0");
        }
        if (grid.lower == LowerEnd::Extended) {
          throw precondition_error("SectorProblem: Complement cannot have an extended lower end");
        }
        break;
      case Domain::FullSpace: {
        if (!(grid.t_min < 0.0 && grid.t_max > 0.0)) {
          throw precondition_error("SectorProblem: FullSpace needs t_min < 0 < t_max");
        }
        const double j = -grid.t_min / grid.h();
        if (std::abs(j - std::round(j)) > 1e-9 * std::max(1.0, j)) {
          throw precondition_error("SectorProblem: FullSpace grid must have t = 0 as a node");
        }
        break;
      }
    }
    if (grid.lower == LowerEnd::Extended && ell != 0) {
      throw precondition_error("SectorProblem: extended lower end requires l = 0");
    }
  }
};

struct SectorMatrices {
  Tridiagonal K;   // int w' phi_i' phi_j'
  Tridiagonal C;   // c_l int phi_i phi_j
  Tridiagonal MV;  // int e^{2t} lambda W(e^t) phi_i phi_j
  Tridiagonal Mw;  // int e^{2t} phi_i phi_j

  Tridiagonal form() const { return spectra::axpy(spectra::axpy(K, 1.0, C), -1.0, MV); }
};

namespace detail {

/// Per-cell integrals of f * (phi_L^2, phi_L phi_R, phi_R^2) on [a, b],
/// split at the given sorted breakpoints, 8-point Gauss-Legendre per piece.
template <class F>
void cell_moments(F&& f, double a, double b, const std::vector<double>& breaks, double out[3]) {
  const double h = b - a;
  out[0] = out[1] = out[2] = 0.0;
  double lo = a;
  auto piece = [&](double p, double q) {
    const auto& rule = quad::gauss_legendre<8>();
    const double mid = 0.5 * (p + q), half = 0.5 * (q - p);
    for (int i = 0; i < 8; ++i) {
      const double t = mid + half * rule.nodes[i];
      const double wt = rule.weights[i] * half * f(t);
      const double pl = (b - t) / h, pr = (t - a) / h;
      out[0] += wt * pl * pl;
      out[1] += wt * pl * pr;
      out[2] += wt * pr * pr;
    }
  };
  auto it = std::upper_bound(breaks.begin(), breaks.end(), a);
  for (; it != breaks.end() && *it < b; ++it) {
    piece(lo, *it);
    lo = *it;
  }
  piece(lo, b);
}

inline void add_cell(Tridiagonal& m, int left, int right, const double mom[3]) {
  // left/right are basis indices or -1 when the node carries no basis function
  if (left >= 0) m.diag[left] += mom[0];
  if (right >= 0) m.diag[right] += mom[2];
  if (left >= 0 && right >= 0) m.offdiag[left] += mom[1];
}

}  // namespace detail

/// Stiffness and unit-mass matrices of the basis (independent of l and W).
inline void assemble_stiffness_mass(const LogGrid& g, Tridiagonal& K, Tridiagonal& M0) {
  const int nb = g.basis_size();
  const double h = g.h();
  K = Tridiagonal(static_cast<std::size_t>(nb));
  M0 = Tridiagonal(static_cast<std::size_t>(nb));
  for (int k = 0; k < nb; ++k) {
    K.diag[k] = 2.0 / h;
    M0.diag[k] = 2.0 * h / 3.0;
    if (k + 1 < nb) {
      K.offdiag[k] = -1.0 / h;
      M0.offdiag[k] = h / 6.0;
    }
  }
  if (g.lower == LowerEnd::Extended) {
    K.diag[0] = 1.0 / h;  // plateau: only the ramp on [t_min, t_min + h] has a slope
    M0.diag[0] = kInf;    // int w^2 diverges on the plateau
    M0.offdiag[0] = h / 6.0;
  }
}

/// Matrix of int e^{2t} f(t) phi_i phi_j for a weight f given in t, with the
/// plateau tail `tail_integral` = int_{-inf}^{t_min} e^{2t} f added to entry (0,0).
template <class F>
Tridiagonal assemble_weighted(const LogGrid& g, F&& scaled_weight, const std::vector<double>& breaks,
                              const std::vector<double>& singular, double tail_integral,
                              const char* what) {
  const int nb = g.basis_size();
  Tridiagonal m(static_cast<std::size_t>(nb));
  const bool ext = g.lower == LowerEnd::Extended;
  for (int c = 0; c <= g.n; ++c) {
    const double a = g.node(c), b = (c == g.n) ? g.t_max : g.node(c + 1);
    const int left = ext ? c : c - 1;                  // node c
    const int right = (c + 1 <= g.n) ? (ext ? c + 1 : c) : -1;  // node c + 1
    const int left_basis = (left >= 0 && left < nb) ? left : -1;
    for (double s : singular) {
      if (s < a || s > b) continue;
      const bool bad = (left_basis >= 0 && s < b) || (right >= 0 && s > a);
      if (bad) {
        std::ostringstream msg;
        msg << "assemble_sector: " << what << " has a non-integrable singularity at t = " << s
            << " in cell " << c << " [" << a << ", " << b << "]";
        throw precondition_error(msg.str());
      }
    }
    double mom[3];
    detail::cell_moments(scaled_weight, a, b, breaks, mom);
    for (double v : mom) {
      if (!std::isfinite(v)) {
        std::ostringstream msg;
        msg << "assemble_sector: " << what << " is not finite in cell " << c << " [" << a << ", "
            << b << "]";
        throw precondition_error(msg.str());
      }
    }
    detail::add_cell(m, left_basis, right, mom);
  }
  if (ext) {
    if (!std::isfinite(tail_integral)) {
      std::ostringstream msg;
      msg << "assemble_sector: " << what << " is not integrable below t_min = " << g.t_min;
      throw precondition_error(msg.str());
    }
    m.diag[0] += tail_integral;
  }
  return m;
}

/// int e^{2t} W(e^t) phi_i phi_j (unit coupling).
inline Tridiagonal assemble_potential(const LogGrid& g, const RadialPotential& w) {
  const auto sup = w.support_t();
  auto f = [&](double t) { return (t < sup.first || t > sup.second) ? 0.0 : w.scaled(t); };
  const double tail = g.lower == LowerEnd::Extended ? w.scaled_integral_below(g.t_min) : 0.0;
  return assemble_weighted(g, f, w.breakpoints(), w.singular_points(), tail, "potential");
}

/// int e^{2t} phi_i phi_j.
inline Tridiagonal assemble_weight(const LogGrid& g) {
  const double tail = 0.5 * std::exp(2.0 * g.t_min);
  return assemble_weighted(g, [](double t) { return std::exp(2.0 * t); }, {}, {}, tail, "weight");
}

inline Tridiagonal scaled(Tridiagonal m, double c) {
  for (double& v : m.diag) v *= c;
  for (double& v : m.offdiag) v *= c;
  return m;
}

inline SectorMatrices assemble_sector(const SectorProblem& p) {
  p.validate();
  SectorMatrices s;
  Tridiagonal m0;
  assemble_stiffness_mass(p.grid, s.K, m0);
  const double c = sector_constant(p.d, p.ell);
  s.C = Tridiagonal(m0.size());
  if (c != 0.0) s.C = scaled(m0, c);
  s.MV = (p.lambda == 0.0) ? Tridiagonal(m0.size()) : scaled(assemble_potential(p.grid, p.potential), p.lambda);
  s.Mw = assemble_weight(p.grid);
  return s;
}

/// Reverses the basis order (the t -> -t reflection on mirrored grids).
inline Tridiagonal reversed(const Tridiagonal& m) {
  Tridiagonal r = m;
  std::reverse(r.diag.begin(), r.diag.end());
  std::reverse(r.offdiag.begin(), r.offdiag.end());
  return r;
}

/// Removes the first basis function (extended plateau -> Dirichlet lower end).
inline Tridiagonal drop_first(const Tridiagonal& m) {
  if (m.size() < 2) throw precondition_error("drop_first: matrix too small");
  return Tridiagonal(std::vector<double>(m.diag.begin() + 1, m.diag.end()),
                     std::vector<double>(m.offdiag.begin() + 1, m.offdiag.end()));
}

}  // namespace hardylab::radial
