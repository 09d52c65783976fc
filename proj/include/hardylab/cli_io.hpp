#pragma once

// Batch CLI: configuration (flags plus an optional key=value file), module
// pipelines and report emission as JSON and CSV.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hardylab/counting.hpp"
#include "hardylab/errors.hpp"
#include "hardylab/fractional1d.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/radial_model.hpp"
#include "hardylab/specfun.hpp"
#include "hardylab/strauss.hpp"

namespace hardylab::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kModules[] = {"specfun", "spectra", "radial_model", "counting",
                                           "strauss", "fractional1d", "cli_io"};

struct KeySpec {
  std::string name;
  std::string fallback;
  std::string help;
};

/// Keys accepted by a subcommand, in echo order. `out` and `workers` are common to all.
inline std::vector<KeySpec> command_keys(const std::string& cmd) {
  const KeySpec d{"d", "3", "dimension"};
  const KeySpec potential{"potential", "annulus:1,2,1", "annulus:r1,r2,h | gaussian:c,w,h | critlog:beta | table:path | kelvin:<potential> | zero"};
  const KeySpec spacing{"spacing", "0.00390625", "log-grid spacing h"};
  const KeySpec truncation{"truncation", "auto", "log-grid truncation T, or auto"};
  const KeySpec domain{"domain", "full", "ball | complement | full"};
  if (cmd == "bessel") {
    return {{"nu", "0", "Bessel order"}, {"x", "", "comma-separated arguments"}, {"zeros", "10", "number of zeros"}};
  }
  if (cmd == "count") return {d, potential, {"lambda", "100", "coupling"}, domain, spacing, truncation};
  if (cmd == "sweep") return {d, potential, {"lambdas", "100:1600:x2", "couplings: a:b:xF, a:b:+S or a,b,c"}, domain, spacing, truncation};
  if (cmd == "kvw") return {d, potential, {"lambda", "50", "coupling"}, spacing, truncation};
  if (cmd == "invert") {
    return {d, {"potential", "annulus:0.3,0.7,1", "potential on the unit ball"}, {"lambda", "200", "coupling"}, spacing, truncation};
  }
  if (cmd == "strauss") {
    return {d,
            {"variant", "hardy", "hardy | laplacian"},
            {"modes", "2000", "modes in the profile"},
            {"r_min", "1e-5", "smallest radius"},
            {"r_max", "0.99", "largest radius"},
            {"per_decade", "40", "radii per decade"},
            {"fit_modes", "5000", "modes in the log-divergence fit"},
            {"fit_min", "1e-4", "smallest fit radius"},
            {"fit_max", "0.1", "largest fit radius"}};
  }
  if (cmd == "fractional") {
    return {{"s", "0.25", "fractional order in (0, 1/2)"},
            {"potential", "annulus:0,1,1", "potential"},
            {"lambdas", "1:8:x2", "couplings"},
            {"half_width", "8", "half width R"},
            {"nodes", "400", "interior nodes n"},
            {"seed", "7", "seed of the IMS test function"},
            {"refinements", "3", "IMS bisection refinements"}};
  }
  throw precondition_error("unknown subcommand '" + cmd + "'");
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"bessel", "count", "sweep", "kvw", "invert", "strauss", "fractional"};
  return c;
}

struct ExperimentConfig {
  std::string command;
  std::vector<std::pair<std::string, std::string>> values;  // resolved, in key order
  std::string out;
  int workers = 1;

  const std::string& raw(const std::string& key) const {
    for (const auto& [k, v] : values) {
      if (k == key) return v;
    }
    throw internal_error("config: no key '" + key + "'");
  }
  double number(const std::string& key) const {
    const std::string& v = raw(key);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || !std::isfinite(x)) {
      throw parse_error("key '" + key + "': expected a number, got '" + v + "'");
    }
    return x;
  }
  int integer(const std::string& key) const {
    const std::string& v = raw(key);
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || x < -1000000000L || x > 1000000000L) {
      throw parse_error("key '" + key + "': expected an integer, got '" + v + "'");
    }
    return static_cast<int>(x);
  }
  radial::RadialPotential potential() const {
    try {
      return radial::parse_potential(raw("potential"));
    } catch (const precondition_error& e) {
      throw parse_error(std::string("key 'potential': ") + e.what());
    }
  }
  std::optional<double> truncation() const {
    if (raw("truncation") == "auto") return std::nullopt;
    return number("truncation");
  }
  counting::GridOptions grid_options() const {
    counting::GridOptions g;
    g.spacing = number("spacing");
    g.truncation = truncation();
    g.workers = workers;
    return g;
  }
};

/// "a:b:xF" (geometric), "a:b:+S" (arithmetic), or a comma list.
inline std::vector<double> parse_lambdas(const std::string& text) {
  auto num = [&](const std::string& s) {
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || !std::isfinite(x)) {
      throw parse_error("lambdas '" + text + "': bad number '" + s + "'");
    }
    return x;
  };
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  if (text.find(':') != std::string::npos) {
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3 || parts[2].size() < 2 || (parts[2][0] != 'x' && parts[2][0] != '+')) {
      throw parse_error("lambdas '" + text + "': expected a:b:xF or a:b:+S");
    }
    const double a = num(parts[0]), b = num(parts[1]), step = num(parts[2].substr(1));
    const bool geometric = parts[2][0] == 'x';
    if (!(b >= a) || (geometric ? !(step > 1.0 && a > 0.0) : !(step > 0.0))) {
      throw parse_error("lambdas '" + text + "': empty or non-increasing range");
    }
    std::vector<double> v;
    for (int i = 0; i < 100000; ++i) {
      const double x = geometric ? a * std::pow(step, i) : a + i * step;
      if (x > b * (1.0 + 1e-12)) break;
      v.push_back(x);
    }
    return v;
  }
  std::vector<double> v;
  while (std::getline(ss, item, ',')) v.push_back(num(item));
  if (v.empty()) throw parse_error("lambdas: empty list");
  return v;
}

/// key=value lines; '#' starts a comment. Keys must belong to `allowed`.
inline std::map<std::string, std::string> read_config_file(const std::string& path,
                                                            const std::vector<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw parse_error("config " + path + ": cannot open");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::string where = "config " + path + ":" + std::to_string(lineno) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw parse_error(where + "expected key=value, got '" + body + "'");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    if (key.empty()) throw parse_error(where + "missing key");
    bool known = false;
    for (const auto& a : allowed) known = known || a == key;
    if (!known) throw parse_error(where + "unknown key '" + key + "'");
    if (kv.count(key)) throw parse_error(where + "duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Output {
  std::string path;
  std::string content;
};

struct Outcome {
  std::vector<Output> files;
  std::string summary;
};

namespace detail {

inline Json header(const ExperimentConfig& cfg) {
  Json j;
  Json mods;
  for (const char* m : kModules) mods[m] = kVersion;
  j["hardylab"] = {{"version", kVersion}, {"modules", mods}};
  j["command"] = cfg.command;
  Json c;
  for (const auto& [k, v] : cfg.values) c[k] = v;
  j["config"] = c;
  return j;
}

inline std::string csv_preamble(const ExperimentConfig& cfg, const std::string& grid, const std::string& pivots) {
  std::string s = "# hardylab " + std::string(kVersion) + " modules:";
  for (const char* m : kModules) s += std::string(" ") + m + "=" + kVersion;
  s += "\n# command: " + cfg.command + "\n# config:";
  for (const auto& [k, v] : cfg.values) s += " " + k + "=" + v;
  s += "\n# grid: " + grid + "\n# zero_pivots: " + pivots + "\n";
  return s;
}

inline Json log_grid_json(const radial::LogGrid& g) {
  return {{"t_min", g.t_min}, {"t_max", g.t_max}, {"spacing", g.h()}, {"n", g.n},
          {"lower_end", g.lower == radial::LowerEnd::Extended ? "extended" : "dirichlet"}};
}

inline std::string log_grid_text(const radial::LogGrid& g) {
  return "t_min=" + fmt(g.t_min) + " t_max=" + fmt(g.t_max) + " spacing=" + fmt(g.h()) + " n=" + std::to_string(g.n);
}

inline Json report_json(const counting::CountReport& r) {
  Json sectors = Json::array();
  for (const auto& e : r.sectors) {
    sectors.push_back({{"ell", e.ell}, {"multiplicity", e.multiplicity}, {"count", e.count}, {"zero_pivots", e.zero_pivots}});
  }
  return {{"d", r.d},
          {"lambda", r.lambda},
          {"domain", radial::domain_name(r.domain)},
          {"total", r.total},
          {"total_upper", r.total_upper},
          {"flagged", r.flagged()},
          {"rhs_weighted", r.rhs_weighted},
          {"rhs_diverged", r.rhs_diverged},
          {"ell_max", r.ell_max},
          {"sectors", sectors}};
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline Outcome run_bessel(const ExperimentConfig& cfg) {
  const double nu = cfg.number("nu");
  const int nz = cfg.integer("zeros");
  if (nz < 0) throw parse_error("key 'zeros': must be >= 0");
  const specfun::BesselOrder order(nu);
  Json j = header(cfg);
  Json values = Json::array();
  if (!cfg.raw("x").empty()) {
    for (double x : parse_lambdas(cfg.raw("x"))) values.push_back({{"x", x}, {"J", specfun::bessel_j(order, x)}});
  }
  const auto z = nz > 0 ? specfun::bessel_zeros(order, nz) : std::vector<double>{};
  j["grid"] = nullptr;
  j["zero_pivots"] = nullptr;
  j["result"] = {{"nu", nu}, {"values", values}, {"zeros", z}};
  std::string csv = csv_preamble(cfg, "none", "none") + "k,zero\n";
  for (std::size_t k = 0; k < z.size(); ++k) csv += std::to_string(k + 1) + "," + fmt(z[k]) + "\n";
  std::string summary = "bessel: nu=" + fmt(nu) + " zeros=" + std::to_string(z.size());
  if (!z.empty()) summary += " z1=" + fmt(z[0]);
  return {{{cfg.out + ".json", dump(j)}, {cfg.out + ".csv", csv}}, summary};
}

inline Outcome run_count(const ExperimentConfig& cfg) {
  const auto w = cfg.potential();
  const auto dom = radial::parse_domain(cfg.raw("domain"));
  const auto opt = cfg.grid_options();
  const auto rep = counting::total_count(cfg.integer("d"), w, cfg.number("lambda"), dom, opt);
  const auto grid = counting::make_grid(dom, w, opt);
  Json j = header(cfg);
  j["grid"] = log_grid_json(grid);
  j["zero_pivots"] = {{"flagged", rep.flagged()}, {"total", rep.total_upper - rep.total}};
  j["result"] = report_json(rep);
  const std::string csv = csv_preamble(cfg, log_grid_text(grid), std::to_string(rep.total_upper - rep.total)) +
                          "lambda,N,rhs\n" + fmt(rep.lambda) + "," + std::to_string(rep.total) + "," +
                          fmt(rep.rhs_weighted) + "\n";
  std::string summary = "count: N=" + std::to_string(rep.total);
  if (rep.flagged()) summary += ".." + std::to_string(rep.total_upper);
  summary += " rhs=" + fmt(rep.rhs_weighted);
  return {{{cfg.out + ".json", dump(j)}, {cfg.out + ".csv", csv}}, summary};
}

inline Outcome run_sweep(const ExperimentConfig& cfg) {
  const auto w = cfg.potential();
  const auto dom = radial::parse_domain(cfg.raw("domain"));
  const auto opt = cfg.grid_options();
  const auto lambdas = parse_lambdas(cfg.raw("lambdas"));
  const auto t = counting::coupling_sweep(cfg.integer("d"), w, lambdas, dom, opt);
  const auto grid = counting::make_grid(dom, w, opt);
  Json rows = Json::array(), reports = Json::array(), flagged = Json::array();
  std::string pivots;
  std::string body = "lambda,N,rhs\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    rows.push_back({{"lambda", r.lambda}, {"N", r.n}, {"N_upper", r.n_upper}, {"rhs", r.rhs}});
    reports.push_back(report_json(t.reports[i]));
    body += fmt(r.lambda) + "," + std::to_string(r.n) + "," + fmt(r.rhs) + "\n";
    if (r.n_upper != r.n) {
      flagged.push_back(r.lambda);
      pivots += (pivots.empty() ? "" : " ") + fmt(r.lambda) + ":" + std::to_string(r.n) + ".." + std::to_string(r.n_upper);
    }
  }
  Json j = header(cfg);
  j["grid"] = log_grid_json(grid);
  j["zero_pivots"] = {{"flagged_lambdas", flagged}};
  j["result"] = {{"d", t.d}, {"slope", t.slope}, {"fit_lo", t.fit_lo}, {"fit_hi", t.fit_hi}, {"rows", rows}, {"reports", reports}};
  const std::string csv = csv_preamble(cfg, log_grid_text(grid), pivots.empty() ? "none" : pivots) + body;
  return {{{cfg.out + ".csv", csv}, {cfg.out + ".json", dump(j)}},
          "sweep: " + std::to_string(t.rows.size()) + " couplings, slope=" + fmt(t.slope)};
}

inline Outcome run_kvw(const ExperimentConfig& cfg) {
  const auto r = counting::kvw_check(cfg.integer("d"), cfg.potential(), cfg.number("lambda"), cfg.grid_options());
  Json j = header(cfg);
  j["grid"] = log_grid_json(r.full_grid);
  j["zero_pivots"] = {{"flagged", r.flagged}};
  j["result"] = {{"n_full", r.n_full},           {"n_ball", r.n_ball},
                 {"n_complement", r.n_complement}, {"upper_holds", r.upper_holds},
                 {"bracketing_holds", r.bracketing_holds}};
  return {{{cfg.out + ".json", dump(j)}},
          "kvw: full=" + std::to_string(r.n_full) + " ball=" + std::to_string(r.n_ball) +
              " complement=" + std::to_string(r.n_complement) +
              ((r.upper_holds && r.bracketing_holds) ? " holds" : " violated")};
}

inline Outcome run_invert(const ExperimentConfig& cfg) {
  const auto w = cfg.potential();
  const auto opt = cfg.grid_options();
  const auto r = counting::inversion_check(cfg.integer("d"), w, cfg.number("lambda"), opt);
  Json j = header(cfg);
  j["grid"] = log_grid_json(counting::make_grid(radial::Domain::Ball, w, opt, radial::LowerEnd::Dirichlet));
  j["zero_pivots"] = {{"flagged", r.flagged}};
  j["result"] = {{"form_residual", r.form_residual},   {"potential_residual", r.potential_residual},
                 {"n_ball", r.n_ball},                 {"n_complement", r.n_complement},
                 {"rhs_ball", r.rhs_ball},             {"rhs_complement", r.rhs_complement},
                 {"rhs_residual", r.rhs_residual}};
  return {{{cfg.out + ".json", dump(j)}},
          "invert: ball=" + std::to_string(r.n_ball) + " complement=" + std::to_string(r.n_complement) +
              " form_residual=" + fmt(r.form_residual)};
}

inline Outcome run_strauss(const ExperimentConfig& cfg) {
  const std::string vname = cfg.raw("variant");
  if (vname != "hardy" && vname != "laplacian") {
    throw parse_error("key 'variant': expected hardy or laplacian, got '" + vname + "'");
  }
  const auto variant = vname == "hardy" ? strauss::Variant::HardyBall : strauss::Variant::DirichletLaplacianBall;
  const int d = cfg.integer("d");
  const auto radii = strauss::log_radii(cfg.number("r_min"), cfg.number("r_max"), cfg.integer("per_decade"));
  const auto p = strauss::density_profile(strauss::ModeSet(variant, d, cfg.integer("modes")), radii, cfg.workers);
  const auto fit_radii = strauss::log_radii(cfg.number("fit_min"), cfg.number("fit_max"), cfg.integer("per_decade"));
  const double slope = strauss::log_divergence_fit(
      strauss::density_profile(strauss::ModeSet(variant, d, cfg.integer("fit_modes")), fit_radii, cfg.workers));
  std::string body = "r,rho,ratio\n";
  Json prof = Json::array();
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    body += fmt(p.radii[i]) + "," + fmt(p.rho[i]) + "," + fmt(p.ratio[i]) + "\n";
    prof.push_back({{"r", p.radii[i]}, {"rho", p.rho[i]}, {"ratio", p.ratio[i]}});
  }
  const std::string grid = "radii=" + std::to_string(radii.size()) + " r_min=" + fmt(radii.front()) +
                           " r_max=" + fmt(radii.back()) + " modes=" + std::to_string(p.modes);
  Json j = header(cfg);
  j["grid"] = {{"radii", radii.size()}, {"r_min", radii.front()}, {"r_max", radii.back()}, {"modes", p.modes}};
  j["zero_pivots"] = nullptr;
  j["result"] = {{"variant", strauss::variant_name(variant)},
                 {"max_ratio", strauss::max_ratio(p)},
                 {"median_ratio", strauss::median_ratio(p)},
                 {"log_divergence_slope", slope},
                 {"profile", prof}};
  return {{{cfg.out + ".csv", csv_preamble(cfg, grid, "none") + body}, {cfg.out + ".json", dump(j)}},
          std::string("strauss: ") + strauss::variant_name(variant) + " max_ratio=" + fmt(strauss::max_ratio(p)) +
              " slope=" + fmt(slope)};
}

inline Outcome run_fractional(const ExperimentConfig& cfg) {
  const double s = cfg.number("s");
  const auto par = frac::frac_constants(s);
  const auto w = cfg.potential();
  const frac::FracGrid g(cfg.number("half_width"), cfg.integer("nodes"));
  const int refinements = cfg.integer("refinements");
  if (refinements < 0) throw parse_error("key 'refinements': must be >= 0");
  const long seed = cfg.integer("seed");
  if (seed < 0) throw parse_error("key 'seed': must be >= 0");
  const auto lambdas = parse_lambdas(cfg.raw("lambdas"));

  const auto hardy = frac::hardy_check(s, g);
  const double remainder = frac::hardy_remainder_estimate(s, g);
  const auto sweep = frac::frac_sweep(s, w, lambdas, g, cfg.workers);
  Json study = Json::array();
  std::vector<double> residuals;
  for (const auto& lv : frac::ims_refinement(s, frac::bump_samples(g, static_cast<unsigned>(seed)), g, refinements, {},
                                             cfg.workers)) {
    residuals.push_back(lv.result.residual);
    study.push_back({{"n", lv.n}, {"h", lv.h}, {"residual", lv.result.residual}, {"form", lv.result.form},
                     {"localization", lv.result.localization}});
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < residuals.size(); ++k) decreasing = decreasing && residuals[k] < residuals[k - 1];

  Json rows = Json::array();
  std::string body = "s,lambda,N,rhs,ims_residual\n", pivots;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto& c = sweep.counts[i];
    rows.push_back({{"lambda", lambdas[i]}, {"N", c.count}, {"zero_pivots", c.zero_pivots}, {"rhs", c.rhs}, {"rhs_diverged", c.rhs_diverged}});
    body += fmt(s) + "," + fmt(lambdas[i]) + "," + std::to_string(c.count) + "," + fmt(c.rhs) + "," + fmt(residuals[0]) + "\n";
    if (c.zero_pivots) pivots += (pivots.empty() ? "" : " ") + fmt(lambdas[i]) + ":" + std::to_string(c.zero_pivots);
  }
  const std::string grid = "R=" + fmt(g.R) + " n=" + std::to_string(g.n) + " h=" + fmt(g.h());
  Json j = header(cfg);
  j["grid"] = {{"R", g.R}, {"n", g.n}, {"h", g.h()}};
  j["zero_pivots"] = {{"total", [&] {
                         int z = 0;
                         for (const auto& c : sweep.counts) z += c.zero_pivots;
                         return z;
                       }()}};
  j["result"] = {{"constants", {{"s", par.s}, {"a", par.a}, {"hardy_constant", par.hardy_c}}},
                 {"hardy", {{"min_eigenvalue", hardy.min_eigenvalue}, {"scale", hardy.scale}, {"holds", hardy.holds()}}},
                 {"remainder_estimate", remainder},
                 {"sweep", {{"slope", sweep.slope}, {"rows", rows}}},
                 {"ims", {{"residual", residuals[0]}, {"decreasing", decreasing}, {"refinements", study}}}};
  return {{{cfg.out + ".csv", csv_preamble(cfg, grid, pivots.empty() ? "none" : pivots) + body}, {cfg.out + ".json", dump(j)}},
          "fractional: s=" + fmt(s) + " min_eig=" + fmt(hardy.min_eigenvalue) + " slope=" + fmt(sweep.slope) +
              " ims=" + fmt(residuals[0])};
}

}  // namespace detail

inline Outcome execute(const ExperimentConfig& cfg) {
  if (cfg.command == "bessel") return detail::run_bessel(cfg);
  if (cfg.command == "count") return detail::run_count(cfg);
  if (cfg.command == "sweep") return detail::run_sweep(cfg);
  if (cfg.command == "kvw") return detail::run_kvw(cfg);
  if (cfg.command == "invert") return detail::run_invert(cfg);
  if (cfg.command == "strauss") return detail::run_strauss(cfg);
  if (cfg.command == "fractional") return detail::run_fractional(cfg);
  throw precondition_error("unknown subcommand '" + cfg.command + "'");
}

/// 1 for precondition and parse errors, 2 for everything else.
inline int exit_code_for(std::exception_ptr e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const precondition_error& x) {
    err << "error: " << x.what() << "\n";
    return 1;
  } catch (const internal_error& x) {
    err << "internal error: " << x.what() << "\n";
    return 2;
  } catch (const std::exception& x) {
    err << "internal error: " << x.what() << "\n";
    return 2;
  } catch (...) {
    err << "internal error: unknown exception\n";
    return 2;
  }
}

inline void write_outputs(const std::vector<Output>& files) {
  for (const auto& f : files) {
    std::ofstream o(f.path, std::ios::binary);
    if (!o) throw precondition_error("cannot open output file '" + f.path + "'");
    o << f.content;
    if (!o) throw internal_error("write failed for '" + f.path + "'");
  }
}

/// Parses argv, runs the subcommand, writes its files. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hardylab: Hardy-type operators, eigenvalue counts and densities"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);
  struct Sub {
    CLI::App* app;
    std::vector<KeySpec> keys;
    std::map<std::string, std::string> raw;
    std::string config;
    std::string out;
    int workers = 0;
  };
  std::vector<Sub> subs(commands().size());
  for (std::size_t i = 0; i < commands().size(); ++i) {
    const auto& name = commands()[i];
    auto& s = subs[i];
    s.app = app.add_subcommand(name);
    s.keys = command_keys(name);
    for (const auto& k : s.keys) s.app->add_option("--" + k.name, s.raw[k.name], k.help);
    s.app->add_option("--config", s.config, "key=value file; flags take precedence");
    s.app->add_option("--out", s.out, "output path prefix (default hardylab_" + name + ")");
    s.app->add_option("--workers", s.workers, "worker threads (default $HARDYLAB_WORKERS or 1)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  try {
    const Sub* chosen = nullptr;
    for (const auto& s : subs) {
      if (s.app->parsed()) chosen = &s;
    }
    if (!chosen) throw precondition_error("no subcommand given");
    std::vector<std::string> allowed{"out", "workers"};
    for (const auto& k : chosen->keys) allowed.push_back(k.name);
    std::map<std::string, std::string> file;
    if (!chosen->config.empty()) file = read_config_file(chosen->config, allowed);
    auto given = [&](const std::string& key) { return chosen->app->get_option("--" + key)->count() > 0; };
    ExperimentConfig cfg;
    cfg.command = chosen->app->get_name();
    for (const auto& k : chosen->keys) {
      std::string v = k.fallback;
      if (given(k.name)) {
        v = chosen->raw.at(k.name);
      } else if (file.count(k.name)) {
        v = file.at(k.name);
      }
      cfg.values.emplace_back(k.name, v);
    }
    cfg.out = given("out") ? chosen->out : file.count("out") ? file.at("out") : "hardylab_" + cfg.command;
    cfg.workers = parallel::default_workers();
    if (given("workers")) {
      cfg.workers = chosen->workers;
    } else if (file.count("workers")) {
      ExperimentConfig tmp;
      tmp.values.emplace_back("workers", file.at("workers"));
      cfg.workers = tmp.integer("workers");
    }
    if (cfg.workers < 1) throw parse_error("key 'workers': must be >= 1");
    const Outcome res = execute(cfg);
    write_outputs(res.files);
    out << res.summary;
    for (const auto& f : res.files) out << (&f == &res.files.front() ? " -> " : ", ") << f.path;
    out << "\n";
    return 0;
  } catch (...) {
    return exit_code_for(std::current_exception(), err);
  }
}

}  // namespace hardylab::cli
