#pragma once

// Gamma and Bessel J_nu (real order nu >= 0), zeros of J_nu and the
// Dirichlet normalization integrals of the Fourier-Bessel eigenbasis.
//
// J_nu uses three branches:
//   x <= kSeriesLimit                  ascending power series
//   x >= kAsymptoticLimit, nu <= x/2   Hankel expansion for orders nu0, nu0+1
//                                      (nu0 = frac(nu)) + upward recurrence
//   otherwise                          Miller backward recurrence normalized
//                                      with the Neumann sum for (x/2)^nu0

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardylab/errors.hpp"

namespace hardylab::specfun {

inline constexpr double kSeriesLimit = 12.0;
inline constexpr double kAsymptoticLimit = 25.0;
inline constexpr int kMaxSeriesTerms = 60;
inline constexpr int kMaxHankelTerms = 60;
inline constexpr int kMaxNewtonIterations = 50;

/// Order of a Bessel function of the first kind; finite and nonnegative.
class BesselOrder {
 public:
  explicit BesselOrder(double nu) : nu_(nu) {
    if (!std::isfinite(nu) || nu < 0.0) {
      std::ostringstream msg;
      msg << "BesselOrder: order must be finite and >= 0, got " << nu;
      throw precondition_error(msg.str());
    }
  }
  double value() const { return nu_; }

 private:
  double nu_;
};

/// Gamma function. Lanczos approximation (g = 7, 9 terms, relative error
/// around 1e-15 for x >= 1/2) with reflection below 1/2.
inline double gamma(double x) {
  using std::numbers::pi;
  if (std::isnan(x)) return x;
  if (x <= 0.0 && x == std::floor(x)) {
    std::ostringstream msg;
    msg << "gamma: pole at x = " << x;
    throw std::domain_error(msg.str());
  }
  if (x < 0.5) return pi / (std::sin(pi * x) * gamma(1.0 - x));
  static constexpr double kG = 7.0;
  static constexpr double kCoef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = x - 1.0;
  double a = kCoef[0];
  for (int i = 1; i < 9; ++i) a += kCoef[i] / (z + i);
  const double t = z + kG + 0.5;
  return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * a;
}

/// Surface area of the unit sphere S^{d-1} in R^d (d = 1 gives 2).
inline double sphere_area(int d) {
  using std::numbers::pi;
  return 2.0 * std::pow(pi, 0.5 * d) / gamma(0.5 * d);
}

namespace detail {

inline double bessel_series(double nu, double x) {
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double half = 0.5 * x;
  double term = std::pow(half, nu) / gamma(nu + 1.0);
  double sum = term;
  const double q = -half * half;
  for (int m = 1; m < kMaxSeriesTerms; ++m) {
    term *= q / (m * (m + nu));
    sum += term;
    if (m > half && std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

/// Hankel's asymptotic expansion of J_nu(x) for large x.
inline double bessel_hankel_direct(double nu, double x) {
  using std::numbers::pi;
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0, term = 1.0, prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < kMaxHankelTerms; ++k) {
    const double next = term * (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
    if (std::abs(next) > prev && k > 2) break;  // asymptotic series started to diverge
    prev = std::abs(next);
    term = next;
    const int j = k / 2;
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 1) {
      q += sign * term;
    } else {
      p += sign * term;
    }
    if (std::abs(term) < 1e-17) break;
  }
  const double phase = (0.5 * nu + 0.25) * pi;
  const double cx = std::cos(x), sx = std::sin(x);
  const double cp = std::cos(phase), sp = std::sin(phase);
  const double cos_chi = cx * cp + sx * sp;
  const double sin_chi = sx * cp - cx * sp;
  return std::sqrt(2.0 / (pi * x)) * (p * cos_chi - q * sin_chi);
}

/// Hankel expansion for the fractional part of the order, then upward
/// recurrence (stable while the order stays below x).
inline double bessel_hankel(double nu, double x) {
  const double whole = std::floor(nu);
  const double nu0 = nu - whole;
  const int m = static_cast<int>(whole);
  double j0 = bessel_hankel_direct(nu0, x);
  if (m == 0) return j0;
  double j1 = bessel_hankel_direct(nu0 + 1.0, x);
  for (int k = 1; k < m; ++k) {
    const double j2 = 2.0 * (nu0 + k) / x * j1 - j0;
    j0 = j1;
    j1 = j2;
  }
  return j1;
}

/// Miller's backward recurrence, normalized with
/// (x/2)^nu0 = sum_k (nu0 + 2k) Gamma(nu0 + k) / k! * J_{nu0+2k}(x).
inline double bessel_miller(double nu, double x) {
  const double whole = std::floor(nu);
  const double nu0 = nu - whole;
  const int m = static_cast<int>(whole);
  int top = static_cast<int>(std::max<double>(m, x)) + 40 +
            static_cast<int>(12.0 * std::cbrt(x));
  std::vector<double> f(static_cast<std::size_t>(top) + 2, 0.0);
  f[top + 1] = 0.0;
  f[top] = 1e-30;
  for (int k = top; k >= 1; --k) {
    f[k - 1] = 2.0 * (nu0 + k) / x * f[k] - f[k + 1];
    if (std::abs(f[k - 1]) > 1e250) {
      for (int i = k - 1; i <= top; ++i) f[i] *= 1e-250;
    }
  }
  double g = gamma(nu0 + 1.0);  // Gamma(nu0 + j) / j! at j = 1
  double norm = gamma(nu0 + 1.0) * f[0];
  for (int j = 1; 2 * j <= top; ++j) {
    norm += (nu0 + 2.0 * j) * g * f[2 * j];
    g *= (nu0 + j) / (j + 1.0);
  }
  return f[m] * std::pow(0.5 * x, nu0) / norm;
}

inline double mcmahon_guess(double nu, int k) {
  using std::numbers::pi;
  const double beta = (k + 0.5 * nu - 0.25) * pi;
  const double mu = 4.0 * nu * nu;
  const double b8 = 8.0 * beta;
  return beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8 * b8 * b8) -
         32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) /
             (15.0 * std::pow(b8, 5));
}

}  // namespace detail

/// Bessel function of the first kind J_nu(x), x >= 0.
inline double bessel_j(BesselOrder order, double x) {
  if (!(x >= 0.0)) {
    std::ostringstream msg;
    msg << "bessel_j: argument must be >= 0, got " << x;
    throw std::domain_error(msg.str());
  }
  const double nu = order.value();
  if (x <= kSeriesLimit) return detail::bessel_series(nu, x);
  if (x >= kAsymptoticLimit && nu <= 0.5 * x) return detail::bessel_hankel(nu, x);
  return detail::bessel_miller(nu, x);
}

inline double bessel_j(double nu, double x) { return bessel_j(BesselOrder(nu), x); }

/// First `count` positive zeros of J_nu in increasing order.
///
/// Consecutive zeros of J_nu (nu >= 0) are more than 3.11 apart, so scanning
/// forward from z_{k-1} + kGapFloor in steps of kScanStep < 3.11 meets the
/// sign change of z_k first. Each bracket is refined by Newton steps, with
/// bisection whenever a step leaves the bracket.
inline std::vector<double> bessel_zeros(BesselOrder order, int count) {
  constexpr double kGapFloor = 2.9;
  constexpr double kScanStep = 1.5;
  if (count < 1) throw precondition_error("bessel_zeros: count must be >= 1");
  const double nu = order.value();
  const BesselOrder next_order(nu + 1.0);
  std::vector<double> zeros;
  zeros.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) {
    double lo = (k == 1) ? std::min(nu, 1.0) : zeros.back() + kGapFloor;
    double f_lo = bessel_j(order, lo);
    if (k == 1 && f_lo <= 0.0) {
      throw internal_error("bessel_zeros: J_nu not positive at the start of the first scan");
    }
    double hi = lo + kScanStep;
    double f_hi = bessel_j(order, hi);
    int scans = 0;
    while ((f_lo > 0.0) == (f_hi > 0.0) && f_hi != 0.0) {
      lo = hi;
      f_lo = f_hi;
      hi += kScanStep;
      f_hi = bessel_j(order, hi);
      if (++scans > 100000) {
        std::ostringstream msg;
        msg << "bessel_zeros: failed to bracket zero k=" << k << " of J_" << nu;
        throw internal_error(msg.str());
      }
    }
    if (f_hi == 0.0) {
      zeros.push_back(hi);
      continue;
    }
    const bool lo_positive = f_lo > 0.0;
    double x = detail::mcmahon_guess(nu, k);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    bool converged = false;
    for (int it = 0; it < kMaxNewtonIterations; ++it) {
      const double f = bessel_j(order, x);
      if (f == 0.0) {
        converged = true;
        break;
      }
      if ((f > 0.0) == lo_positive) {
        lo = x;
      } else {
        hi = x;
      }
      const double fp = (nu / x) * f - bessel_j(next_order, x);
      double xn = x - f / fp;
      if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
      const double step = std::abs(xn - x);
      x = xn;
      if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
           ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((bessel_j(order, mid) > 0.0) == lo_positive) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      x = 0.5 * (lo + hi);
    }
    // Certify: the zero must sit between two points of opposite sign.
    const double probe = 1e-9 * std::max(1.0, x);
    const double fl = bessel_j(order, x - probe), fr = bessel_j(order, x + probe);
    if ((fl > 0.0) == (fr > 0.0) && fl != 0.0 && fr != 0.0) {
      std::ostringstream msg;
      msg << "bessel_zeros: refined zero k=" << k << " of J_" << nu << " at " << x
          << " lacks a sign change";
      throw internal_error(msg.str());
    }
    if (!zeros.empty() && x <= zeros.back() + kGapFloor) {
      std::ostringstream msg;
      msg << "bessel_zeros: zero k=" << k << " of J_" << nu << " violates the gap bound";
      throw internal_error(msg.str());
    }
    zeros.push_back(x);
  }
  return zeros;
}

/// k-th positive zero z_{nu,k} of J_nu (k >= 1).
inline double bessel_zero(BesselOrder order, int k) {
  if (k < 1) throw precondition_error("bessel_zero: k must be >= 1");
  return bessel_zeros(order, k).back();
}

/// Integral over [0,1] of r J_nu(z r)^2 dr at z = z_{nu,k}; equals J_{nu+1}(z)^2 / 2
/// since J_nu(z) = 0.
inline double dirichlet_norm_at_zero(BesselOrder order, double zero) {
  const double j = bessel_j(BesselOrder(order.value() + 1.0), zero);
  return 0.5 * j * j;
}

inline double dirichlet_norm(BesselOrder order, int k) {
  return dirichlet_norm_at_zero(order, bessel_zero(order, k));
}

}  // namespace hardylab::specfun
