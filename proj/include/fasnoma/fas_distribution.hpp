#pragma once

// Distribution of the equivalent channel gain: the single-port marginal
// (product of two unit exponentials' amplitudes, i.e. F(g) = 1 - 2 sqrt(g)
// K1(2 sqrt(g))) and the best-port gain of a FAS node whose ports are coupled
// by a Gaussian copula with the spatial correlation matrix.
//
// The best-port CDF is Phi_R(x, ..., x) with x the normal score of g. It is
// tabulated once per node on a uniform grid of normal scores, storing
// log Phi_R and the log of its conditional slope. Both are interpolated by
// C2 cubic B-splines (the log CDF clamped to its exact end slopes), so every
// metric sees one twice-differentiable function whatever the quadrature order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <thread>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "fasnoma/channel_model.hpp"
#include "fasnoma/errors.hpp"
#include "fasnoma/gaussian_copula.hpp"
#include "fasnoma/special_functions.hpp"

namespace fasnoma {

namespace detail {

// F(g) = g sum_k g^k/(k!(k+1)!) [psi(k+1) + psi(k+2) - ln g], free of the
// cancellation in 1 - xK1(x) for small g.
inline double single_port_cdf_series(double g) {
  const double log_g = std::log(g);
  double term = 1.0;  // g^k / (k! (k+1)!)
  double harmonic = 0.0;
  double sum = 0.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      term *= g / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
    }
    const double psi_sum = -2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (k + 1);
    const double piece = term * (psi_sum - log_g);
    sum += piece;
    if (k > 2 && std::abs(piece) < 1e-18 * std::abs(sum)) break;
  }
  return g * sum;
}

}  // namespace detail

/// Single-port CDF. Exact 0 at g = 0.
inline double cdf_single_port(double g) {
  if (std::isnan(g)) throw DomainError("cdf_single_port: NaN argument");
  if (g <= 0.0) return 0.0;
  if (g < 0.5) return detail::single_port_cdf_series(g);
  return 1.0 - x_bessel_k1(2.0 * std::sqrt(g));
}

/// Single-port survival function 1 - F(g), accurate in the upper tail.
inline double ccdf_single_port(double g) {
  if (std::isnan(g)) throw DomainError("ccdf_single_port: NaN argument");
  if (g <= 0.0) return 1.0;
  if (g < 0.5) return 1.0 - detail::single_port_cdf_series(g);
  return x_bessel_k1(2.0 * std::sqrt(g));
}

/// Single-port density 2 K0(2 sqrt(g)).
inline double pdf_single_port(double g) {
  if (!(g > 0.0)) throw DomainError("pdf_single_port: g must be positive");
  return 2.0 * bessel_k0(2.0 * std::sqrt(g));
}

/// The same density with the argument sqrt(2g); integrates to 2, kept only
/// for side-by-side comparison.
inline double pdf_single_port_sqrt2g(double g) {
  if (!(g > 0.0)) throw DomainError("pdf_single_port_sqrt2g: g must be positive");
  return 2.0 * bessel_k0(std::sqrt(2.0 * g));
}

/// Phi^{-1}(F(g)), taking the quantile of the smaller tail so neither end
/// loses precision. Maps 0 to -inf and +inf (or an underflowed tail) to +inf.
inline double single_port_normal_score(double g) {
  if (std::isnan(g)) throw DomainError("single_port_normal_score: NaN argument");
  if (g <= 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(g)) return std::numeric_limits<double>::infinity();
  const double f = cdf_single_port(g);
  if (f <= 0.5) return std_normal_quantile(f);
  const double s = ccdf_single_port(g);
  return -std_normal_quantile(s);
}

/// Which expression is used for the best-port density.
enum class FasDensityForm {
  /// d/dg of the copula CDF: f(g) * sum_i P(Z_j <= x, j != i | Z_i = x).
  exact,
  /// f(g)^N times the Gaussian copula density at the diagonal point.
  copula_diagonal,
};

struct FasGainOptions {
  CorrelationKernel kernel = CorrelationKernel::spherical;
  FasDensityForm density = FasDensityForm::exact;
  /// Use 2 K0(sqrt(2g)) as the marginal density wherever a density appears.
  bool sqrt2g_marginal_pdf = false;
  MvnOptions mvn{};
  /// Normal-score grid of the tabulated CDF.
  double table_lo = -10.0;
  double table_hi = 8.5;
  double table_step = 0.125;
  /// Lattice points per shift at every table node. A fixed count keeps the
  /// QMC error a smooth function of the score; adaptive stopping would make
  /// it jump between nodes and quadrature would see those jumps as noise.
  int table_points = 1024;
  int threads = 1;
};

class FasGainDistribution {
 public:
  explicit FasGainDistribution(const FasGeometry& geometry, FasGainOptions options = {})
      : geometry_(geometry),
        options_(options),
        correlation_(repair_and_factor(correlation_matrix(geometry, options.kernel))),
        orbits_(port_orbits(geometry)) {
    if (!(options_.table_step > 0.0) || !(options_.table_hi > options_.table_lo)) {
      throw ConfigError("invalid tabulation grid");
    }
    if (options_.threads < 1) throw ConfigError("thread count must be positive");
    if (ports() > 1) build_table();
  }

  const FasGeometry& geometry() const noexcept { return geometry_; }
  const FasGainOptions& options() const noexcept { return options_; }
  const CorrelationMatrix& correlation() const noexcept { return correlation_; }
  const std::vector<CoordinateOrbit>& orbits() const noexcept { return orbits_; }
  int ports() const noexcept { return geometry_.ports(); }

  /// Largest QMC error estimate (99%) across the tabulated CDF values.
  double worst_cdf_error() const noexcept { return worst_error_; }
  /// True if every tabulated QMC evaluation met its accuracy target.
  bool converged() const noexcept { return converged_; }

  /// Best-port CDF evaluated directly by QMC (no table).
  MvnResult cdf_direct(double g) const {
    if (std::isnan(g) || g < 0.0) throw DomainError("cdf: g must be nonnegative");
    if (ports() == 1) return {cdf_single_port(g), 0.0, true};
    return mvn_cdf_equicoordinate(single_port_normal_score(g), correlation_, options_.mvn);
  }

  /// Best-port CDF from the table; exact at g = 0 and for a single port.
  double cdf(double g) const {
    if (std::isnan(g) || g < 0.0) throw DomainError("cdf: g must be nonnegative");
    if (g == 0.0) return 0.0;
    if (ports() == 1) return cdf_single_port(g);
    return std::exp(log_cdf_at_score(single_port_normal_score(g)));
  }

  /// 1 - cdf(g).
  double ccdf(double g) const {
    if (ports() == 1) return ccdf_single_port(g);
    return -std::expm1(g == 0.0 ? -std::numeric_limits<double>::infinity()
                                : log_cdf_at_score(single_port_normal_score(g)));
  }

  /// Best-port density in the configured form.
  double pdf(double g) const {
    if (!(g > 0.0)) throw DomainError("pdf: g must be positive");
    if (options_.density == FasDensityForm::copula_diagonal) return pdf_copula_diagonal(g);
    const double marginal = marginal_pdf(g);
    if (ports() == 1) return marginal;
    return marginal * slope_at_score(single_port_normal_score(g));
  }

  /// f(g)^N exp(-phi^T (R^{-1} - I) phi / 2) / sqrt(det R), phi = (x, ..., x),
  /// combined in the log domain.
  double pdf_copula_diagonal(double g) const {
    if (!(g > 0.0)) throw DomainError("pdf: g must be positive");
    const double x = single_port_normal_score(g);
    if (!std::isfinite(x)) return 0.0;
    const double log_value =
        ports() * std::log(marginal_pdf(g)) + log_copula_density_factor(x, correlation_);
    const double value = std::exp(log_value);
    if (!std::isfinite(value)) throw NumericalError("best-port density overflow");
    return value;
  }

  /// Central difference of the direct CDF, for cross-checks.
  double pdf_numeric(double g, double relative_step = 1e-3) const {
    if (!(g > 0.0)) throw DomainError("pdf: g must be positive");
    const double h = relative_step * g;
    return (cdf_direct(g + h).probability - cdf_direct(g - h).probability) / (2.0 * h);
  }

  /// Marginal density actually used (honours sqrt2g_marginal_pdf).
  double marginal_pdf(double g) const {
    return options_.sqrt2g_marginal_pdf ? pdf_single_port_sqrt2g(g) : pdf_single_port(g);
  }

  /// log Phi_R(x, ..., x) from the table. Below the table the log CDF is
  /// continued as a quadratic matching value, slope and curvature at the
  /// first node; those probabilities are far below anything that can affect
  /// a metric.
  double log_cdf_at_score(double x) const {
    if (x == -std::numeric_limits<double>::infinity()) return x;
    if (ports() == 1) return std::log(std_normal_cdf(x));
    if (x >= options_.table_hi) return 0.0;
    if (x < options_.table_lo) {
      const double dx = x - options_.table_lo;
      return log_cdf_[0] + dlog_cdf_[0] * dx + 0.5 * tail_curvature_ * dx * dx;
    }
    return std::min(0.0, log_cdf_spline_(x));
  }

  /// sum_i P(Z_j <= x, j != i | Z_i = x), i.e. d Phi_R(x 1)/dx / phi(x).
  double slope_at_score(double x) const {
    if (ports() == 1) return 1.0;
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    if (x >= options_.table_hi) return ports();
    if (x < options_.table_lo) {
      const double rate = log_slope_spline_.prime(options_.table_lo);
      return std::exp(log_slope_[0] + rate * (x - options_.table_lo));
    }
    return std::exp(log_slope_spline_(x));
  }

 private:
  double node(std::size_t i) const { return options_.table_lo + static_cast<double>(i) * options_.table_step; }

  void build_table() {
    const auto count =
        static_cast<std::size_t>(std::ceil((options_.table_hi - options_.table_lo) / options_.table_step)) + 1;
    log_cdf_.assign(count, 0.0);
    dlog_cdf_.assign(count, 0.0);
    log_slope_.assign(count, 0.0);
    std::vector<MvnResult> cdf_results(count);
    std::vector<MvnResult> slope_results(count);
    MvnOptions mvn = options_.mvn;
    mvn.min_points = options_.table_points;
    mvn.max_points = options_.table_points;

    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t i = begin; i < count; i += stride) {
        const double x = node(i);
        // One seed for every node: the lattice shifts are shared, so the QMC
        // error varies smoothly along the table instead of jittering.
        cdf_results[i] = mvn_cdf_equicoordinate(x, correlation_, mvn);
        slope_results[i] = mvn_equicoordinate_slope(x, correlation_, mvn, &orbits_);
      }
    };
    const auto threads = static_cast<std::size_t>(options_.threads);
    if (threads == 1) {
      work(0, 1);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
      for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < count; ++i) {
      const double x = node(i);
      const double p = cdf_results[i].probability;
      const double s = slope_results[i].probability;
      if (!(p > 0.0) || !(s > 0.0)) throw NumericalError("best-port CDF table has a nonpositive entry");
      log_cdf_[i] = std::log(p);
      dlog_cdf_[i] = std_normal_pdf(x) * s / p;
      log_slope_[i] = std::log(s);
      worst_error_ = std::max(worst_error_, cdf_results[i].error);
      converged_ = converged_ && cdf_results[i].converged && slope_results[i].converged;
    }
    // Curvature of the log CDF at the lower edge; it is negative there and at
    // least as steep as the single-coordinate bound log Phi(x) allows.
    tail_curvature_ = std::min((dlog_cdf_[1] - dlog_cdf_[0]) / options_.table_step, -1.0);
    log_cdf_spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(
        log_cdf_.data(), count, options_.table_lo, options_.table_step, dlog_cdf_.front(), dlog_cdf_.back());
    log_slope_spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(
        log_slope_.data(), count, options_.table_lo, options_.table_step);
  }

  FasGeometry geometry_;
  FasGainOptions options_;
  CorrelationMatrix correlation_;
  std::vector<CoordinateOrbit> orbits_;
  std::vector<double> log_cdf_;
  std::vector<double> dlog_cdf_;
  std::vector<double> log_slope_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> log_cdf_spline_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> log_slope_spline_;
  double tail_curvature_ = -1.0;
  double worst_error_ = 0.0;
  bool converged_ = true;
};

/// Best-port CDF with its QMC error estimate (direct evaluation).
inline MvnResult cdf_fas(double g, const FasGainDistribution& d) { return d.cdf_direct(g); }

/// Best-port density in the distribution's configured form.
inline double pdf_fas(double g, const FasGainDistribution& d) { return d.pdf(g); }

}  // namespace fasnoma
