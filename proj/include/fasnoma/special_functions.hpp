#pragma once

// Scalar special functions used by the channel-gain distributions: modified
// Bessel functions of the second kind (orders 0 and 1), the zero-order
// spherical and cylindrical Bessel functions of the first kind, the inverse
// error function, and the standard normal CDF and quantile.
//
// Everything here is pure and reentrant.

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "fasnoma/errors.hpp"

namespace fasnoma {

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;

struct BesselK01 {
  double k0;
  double k1;
};

// Ascending series, valid (and used) for 0 < x < 2.
//   K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} t^k H_k / (k!)^2
//   x K1 = 1 + 2t ln(x/2) A(t) - t B(t)
// with t = x^2/4, A = sum t^k/(k!(k+1)!), B = sum (psi(k+1)+psi(k+2)) t^k/(k!(k+1)!).
inline BesselK01 bessel_k01_series(double x) {
  const double t = 0.25 * x * x;
  const double log_half_x = std::log(0.5 * x);

  double i0 = 1.0;
  double s0 = 0.0;
  double a = 0.0;
  double b = 0.0;

  double term0 = 1.0;  // t^k / (k!)^2
  double term1 = 1.0;  // t^k / (k! (k+1)!)
  double harmonic = 0.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      term0 *= t / (static_cast<double>(k) * k);
      term1 *= t / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
      i0 += term0;
      s0 += term0 * harmonic;
    }
    const double psi_sum = -2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (k + 1);
    a += term1;
    b += psi_sum * term1;
    if (term1 < 1e-18 * a && k > 2) break;
  }
  const double k0 = -(log_half_x + kEulerGamma) * i0 + s0;
  const double x_k1 = 1.0 + 2.0 * t * log_half_x * a - t * b;
  return {k0, x_k1 / x};
}

// Steed's continued fraction (Temme's CF2 form) for x >= 2.
inline BesselK01 bessel_k01_continued_fraction(double x) {
  constexpr double kEps = 1e-17;
  constexpr int kMaxIterations = 10000;

  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  const double a1 = 0.25;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= kMaxIterations; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  h *= a1;
  const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
  const double k1 = k0 * (x + 0.5 - h) / x;
  return {k0, k1};
}

}  // namespace detail

/// K0 and K1 evaluated together (they share all the work). Requires x > 0.
inline detail::BesselK01 bessel_k01(double x) {
  if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
  if (std::isinf(x)) return {0.0, 0.0};
  return x < 2.0 ? detail::bessel_k01_series(x) : detail::bessel_k01_continued_fraction(x);
}

/// Zero-order modified Bessel function of the second kind.
inline double bessel_k0(double x) { return bessel_k01(x).k0; }

/// First-order modified Bessel function of the second kind.
inline double bessel_k1(double x) { return bessel_k01(x).k1; }

/// x * K1(x), continuous at the origin where it equals 1.
inline double x_bessel_k1(double x) {
  if (x < 0.0 || std::isnan(x)) throw DomainError("x_bessel_k1: argument must be nonnegative");
  if (x == 0.0) return 1.0;
  return x * bessel_k1(x);
}

/// Spherical Bessel function j0(x) = sin(x)/x.
inline double sph_bessel_j0(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// Cylindrical Bessel function J0(x).
inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation for 0 < u <= 0.5 (relative error ~1e-9).
inline double acklam_lower_quantile(double u) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  if (u < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(u));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = u - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lower-tail quantile for 0 < u <= 0.5: Acklam start plus Halley refinement
// against erfc, which keeps full relative accuracy deep into the tail.
inline double lower_normal_quantile(double u) {
  double x = acklam_lower_quantile(u);
  if (u < std::numeric_limits<double>::min()) return x;
  for (int iter = 0; iter < 2; ++iter) {
    const double e = std_normal_cdf(x) - u;
    const double step = e / std_normal_pdf(x);
    x -= step / (1.0 + 0.5 * x * step);
  }
  return x;
}

// Unrefined quantile for integrands that tolerate ~1e-9 relative error.
// Requires 0 < u < 1.
inline double fast_normal_quantile(double u) {
  return u <= 0.5 ? acklam_lower_quantile(u) : -acklam_lower_quantile(1.0 - u);
}

}  // namespace detail

/// Standard normal quantile. The endpoints map to -inf / +inf.
inline double std_normal_quantile(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("std_normal_quantile: u must lie in [0, 1]");
  if (u == 0.0) return -std::numeric_limits<double>::infinity();
  if (u == 1.0) return std::numeric_limits<double>::infinity();
  if (u == 0.5) return 0.0;
  return u < 0.5 ? detail::lower_normal_quantile(u) : -detail::lower_normal_quantile(1.0 - u);
}

/// Inverse complementary error function for q in (0, 2).
inline double erfc_inv(double q) {
  if (!(q > 0.0 && q < 2.0)) throw DomainError("erfc_inv: q must lie in (0, 2)");
  if (q <= 1.0) return -detail::lower_normal_quantile(0.5 * q) / std::numbers::sqrt2;
  return detail::lower_normal_quantile(0.5 * (2.0 - q)) / std::numbers::sqrt2;
}

/// Inverse error function on (-1, 1).
inline double erf_inv(double p) {
  if (!(std::abs(p) < 1.0)) throw DomainError("erf_inv: |p| must be < 1");
  if (p == 0.0) return p;
  const double ap = std::abs(p);
  double y;
  if (ap > 0.5) {
    y = erfc_inv(1.0 - ap);
  } else {
    // Newton/Halley on erf itself so tiny |p| keeps its relative precision.
    y = -detail::lower_normal_quantile(0.5 * (1.0 - ap)) / std::numbers::sqrt2;
    const double two_over_sqrt_pi = 2.0 / std::sqrt(std::numbers::pi);
    for (int iter = 0; iter < 2; ++iter) {
      const double f = std::erf(y) - ap;
      const double delta = f / (two_over_sqrt_pi * std::exp(-y * y));
      y -= delta / (1.0 + y * delta);
    }
  }
  return p < 0.0 ? -y : y;
}

}  // namespace fasnoma
