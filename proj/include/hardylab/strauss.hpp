#pragma once

// Strauss-type densities rho(x) = sum_k |phi_{0,k}(x)|^2 / lambda_{0,k} on the
// unit ball, from the explicit Bessel eigenfunctions.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hardylab/errors.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/specfun.hpp"

namespace hardylab::strauss {

inline constexpr int kProfileModes = 2000;
inline constexpr int kFitModes = 5000;
inline constexpr int kPerDecade = 40;

enum class Variant { HardyBall, DirichletLaplacianBall };

inline const char* variant_name(Variant v) {
  return v == Variant::HardyBall ? "hardy" : "laplacian";
}

/// Radial modes J_nu(z_k r) r^{-(d-2)/2}, normalized in L^2(B).
/// Hardy: nu = 0. Laplacian: nu = (d-2)/2.
struct ModeSet {
  Variant variant = Variant::HardyBall;
  int d = 3;
  double nu = 0.0;
  std::vector<double> zeros;
  std::vector<double> weight;  // 1 / (|S^{d-1}| * norm_k * z_k^2)

  ModeSet(Variant v, int dim, int count) : variant(v), d(dim) {
    if (dim < 3) throw precondition_error("strauss: d must be >= 3");
    if (count < 1) throw precondition_error("strauss: K must be >= 1");
    nu = v == Variant::HardyBall ? 0.0 : 0.5 * (dim - 2);
    const specfun::BesselOrder order(nu);
    zeros = specfun::bessel_zeros(order, count);
    const double area = specfun::sphere_area(dim);
    weight.resize(zeros.size());
    for (std::size_t k = 0; k < zeros.size(); ++k) {
      const double z = zeros[k];
      weight[k] = 1.0 / (area * specfun::dirichlet_norm_at_zero(order, z) * z * z);
    }
  }

  int size() const { return static_cast<int>(zeros.size()); }

  /// |phi_k(r)|^2 for mode k (0-based).
  double mode_square(int k, double r) const {
    const double j = specfun::bessel_j(specfun::BesselOrder(nu), zeros[k] * r);
    return j * j * std::pow(r, 2.0 - d) * weight[k] * zeros[k] * zeros[k];
  }

  /// Truncated sum over the first `count` modes, in increasing k.
  double density(double r, int count) const {
    if (!(r > 0.0 && r < 1.0)) throw precondition_error("strauss: radius must lie in (0, 1)");
    const specfun::BesselOrder order(nu);
    double s = 0.0;
    for (int k = 0; k < std::min(count, size()); ++k) {
      const double j = specfun::bessel_j(order, zeros[k] * r);
      s += j * j * weight[k];
    }
    return s * std::pow(r, 2.0 - d);
  }
  double density(double r) const { return density(r, size()); }
};

/// Hardy: rho |x|^{d-2} / (1 + |ln|x||). Laplacian: rho |x|^{d-2}.
inline double normalized_ratio(Variant v, int d, double r, double rho) {
  const double base = rho * std::pow(r, d - 2.0);
  return v == Variant::HardyBall ? base / (1.0 + std::abs(std::log(r))) : base;
}

struct DensityProfile {
  Variant variant = Variant::HardyBall;
  int d = 3;
  int modes = 0;
  std::vector<double> radii, rho, ratio;
};

/// Log-spaced radii from lo to hi, `per_decade` points per decade, both ends included.
inline std::vector<double> log_radii(double lo, double hi, int per_decade = kPerDecade) {
  if (!(lo > 0.0 && hi < 1.0 && lo < hi)) throw precondition_error("log_radii: need 0 < lo < hi < 1");
  if (per_decade < 1) throw precondition_error("log_radii: per_decade must be >= 1");
  const double span = std::log10(hi / lo);
  const int m = std::max(1, static_cast<int>(std::ceil(span * per_decade - 1e-9)));
  std::vector<double> r(m + 1);
  for (int i = 0; i <= m; ++i) r[i] = lo * std::pow(10.0, span * i / m);
  r.back() = hi;
  return r;
}

inline DensityProfile density_profile(const ModeSet& modes, const std::vector<double>& radii, int workers = 1) {
  for (double r : radii) {
    if (!(r > 0.0 && r < 1.0)) throw precondition_error("strauss: radii must lie in (0, 1)");
  }
  DensityProfile p;
  p.variant = modes.variant;
  p.d = modes.d;
  p.modes = modes.size();
  p.radii = radii;
  p.rho = parallel::map<double>(radii.size(), workers, [&](std::size_t i) { return modes.density(radii[i]); });
  p.ratio.resize(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) p.ratio[i] = normalized_ratio(p.variant, p.d, radii[i], p.rho[i]);
  return p;
}

inline DensityProfile hardy_density(int d, int k, const std::vector<double>& radii, int workers = 1) {
  return density_profile(ModeSet(Variant::HardyBall, d, k), radii, workers);
}

inline DensityProfile laplacian_density(int d, int k, const std::vector<double>& radii, int workers = 1) {
  return density_profile(ModeSet(Variant::DirichletLaplacianBall, d, k), radii, workers);
}

/// Least-squares slope of |S^{d-1}| rho |x|^{d-2} against |ln|x||.
/// The sphere factor makes the Hardy slope the coefficient of ln(1/r) in the mode sum.
inline double log_divergence_fit(const DensityProfile& p) {
  if (p.radii.size() < 2) throw precondition_error("log_divergence_fit: need at least two radii");
  const auto [lo, hi] = std::minmax_element(p.radii.begin(), p.radii.end());
  if (std::log10(*hi / *lo) < 3.0 - 1e-9) {
    throw precondition_error("log_divergence_fit: radii must span at least 3 decades");
  }
  const double area = specfun::sphere_area(p.d);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(p.radii.size());
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    const double x = std::abs(std::log(p.radii[i]));
    const double y = area * p.rho[i] * std::pow(p.radii[i], p.d - 2.0);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// Largest normalized ratio over the profile.
inline double max_ratio(const DensityProfile& p) {
  return p.ratio.empty() ? 0.0 : *std::max_element(p.ratio.begin(), p.ratio.end());
}

/// Median of the normalized ratios.
inline double median_ratio(const DensityProfile& p) {
  if (p.ratio.empty()) return 0.0;
  auto v = p.ratio;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double upper = v[mid];
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + mid));
}

}  // namespace hardylab::strauss
