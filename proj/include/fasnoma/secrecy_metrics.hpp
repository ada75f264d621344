#pragma once

// Instantaneous SINRs of the two-user downlink, their CDFs in terms of the
// best-port gain distributions, and the secrecy outage probability (SOP) and
// average secrecy capacity (ASC) integrals.
//
// Two quadrature schemes are available for the semi-infinite integrals:
//   laguerre: sum_m e^{x_m} w_m f(x_m) with Gauss-Laguerre nodes, applied to
//             the undamped integrand as is;
//   mapped:   Gauss-Legendre after a change of variables that absorbs the
//             logarithmic density singularity at the origin (x = Q t^3) and,
//             for capacities, the 1/(1+x) factor (y = ln(1+x), y = Y t^3).
//             Q and Y are cut where the relevant gain tail drops below 1e-17.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "fasnoma/channel_model.hpp"
#include "fasnoma/errors.hpp"
#include "fasnoma/fas_distribution.hpp"
#include "fasnoma/quadrature.hpp"

namespace fasnoma {

enum class QuadratureScheme { laguerre, mapped };

enum class Scenario { external_eavesdropper, internal_eavesdropper };

/// How the bounded far-user capacity integral is weighted.
enum class FarCapacityForm {
  /// Plain Gauss-Legendre on (0, p_uf/p_un).
  legendre,
  /// The same sum with every term multiplied by e^{node}.
  legendre_times_exp_node,
};

struct SecrecyConfig {
  double rate_un = 0.5;  // bits per channel use
  double rate_uf = 0.5;
  Scenario scenario = Scenario::external_eavesdropper;
  int laguerre_order = 40;  // nodes for semi-infinite integrals
  int legendre_order = 40;  // nodes for the bounded far-user capacity
  QuadratureScheme scheme = QuadratureScheme::mapped;
  FarCapacityForm far_capacity_form = FarCapacityForm::legendre;

  double rbar_n() const { return std::exp2(rate_un); }
  double rbar_f() const { return std::exp2(rate_uf); }
};

inline void validate(const SecrecyConfig& c) {
  if (!(c.rate_un >= 0.0) || !(c.rate_uf >= 0.0) || !std::isfinite(c.rate_un) || !std::isfinite(c.rate_uf)) {
    throw ConfigError("target secrecy rates must be finite and nonnegative");
  }
  detail::check_order(c.laguerre_order);
  detail::check_order(c.legendre_order);
}

struct ScenarioParams {
  double snr_un = 125.0;
  double snr_uf = 4.6296296296;
  double snr_e = 0.1;
  PowerAllocation alloc{};
  std::shared_ptr<const FasGainDistribution> dist_un;
  std::shared_ptr<const FasGainDistribution> dist_uf;
  std::shared_ptr<const FasGainDistribution> dist_e;
};

inline void validate(const ScenarioParams& p) {
  for (double s : {p.snr_un, p.snr_uf, p.snr_e}) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("average SNRs must be positive and finite");
  }
  validate(p.alloc);
}

struct MetricResult {
  double value = 0.0;      // clamped to the metric's natural range
  double raw_value = 0.0;  // quadrature sum before clamping
  int quadrature_order_used = 0;
  double embedded_cdf_error = 0.0;
  bool clamped = false;
};

enum class SinrRole { sic, near, far, eve_near, eve_far, internal_eve };

inline double instantaneous_sinr(SinrRole role, double g, const ScenarioParams& p) {
  if (std::isnan(g) || g < 0.0) throw DomainError("instantaneous_sinr: gain must be nonnegative");
  const double pn = p.alloc.p_un;
  const double pf = p.alloc.p_uf;
  switch (role) {
    case SinrRole::sic:
      return p.snr_un * pf * g / (p.snr_un * pn * g + 1.0);
    case SinrRole::near:
      return p.snr_un * pn * g;
    case SinrRole::far:
      if (std::isinf(g)) return pf / pn;
      return p.snr_uf * pf * g / (p.snr_uf * pn * g + 1.0);
    case SinrRole::eve_near:
      return p.snr_e * pn * g;
    case SinrRole::eve_far:
      return p.snr_e * pf * g;
    case SinrRole::internal_eve:
      return p.snr_uf * pn * g;
  }
  return 0.0;
}

namespace detail {

inline const FasGainDistribution& require(const std::shared_ptr<const FasGainDistribution>& d, const char* who) {
  if (!d) throw ConfigError(std::string("missing gain distribution for ") + who);
  return *d;
}

}  // namespace detail

/// P(SINR_role <= gamma).
inline double sinr_cdf(SinrRole role, double gamma, const ScenarioParams& p) {
  if (std::isnan(gamma) || gamma < 0.0) throw DomainError("sinr_cdf: gamma must be nonnegative");
  if (gamma == 0.0) return 0.0;
  const double pn = p.alloc.p_un;
  const double pf = p.alloc.p_uf;
  switch (role) {
    case SinrRole::near:
      return detail::require(p.dist_un, "near user").cdf(gamma / (p.snr_un * pn));
    case SinrRole::sic: {
      if (gamma >= pf / pn) return 1.0;
      return detail::require(p.dist_un, "near user").cdf(gamma / (p.snr_un * (pf - gamma * pn)));
    }
    case SinrRole::far:
      if (gamma >= pf / pn) return 1.0;
      return detail::require(p.dist_uf, "far user").cdf(gamma / (p.snr_uf * (pf - gamma * pn)));
    case SinrRole::eve_near:
      return detail::require(p.dist_e, "eavesdropper").cdf(gamma / (p.snr_e * pn));
    case SinrRole::eve_far:
      return detail::require(p.dist_e, "eavesdropper").cdf(gamma / (p.snr_e * pf));
    case SinrRole::internal_eve:
      return detail::require(p.dist_uf, "far user").cdf(gamma / (p.snr_uf * pn));
  }
  return 0.0;
}

/// Gain beyond which ports * (single-port survival) < tail.
inline double ccdf_tail_cutoff(const FasGainDistribution& d, double tail = 1e-17) {
  const double target = tail / d.ports();
  double lo = 1.0;
  double hi = 2.0;
  while (ccdf_single_port(hi) > target) hi *= 2.0;
  for (int i = 0; i < 100 && hi - lo > 1e-9 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ccdf_single_port(mid) > target ? lo : hi) = mid;
  }
  return hi;
}

/// Upper end for integrals against the density in use.
inline double gain_tail_cutoff(const FasGainDistribution& d, double tail = 1e-17) {
  // The sqrt(2g) density decays as exp(-sqrt(2g)) instead of exp(-2 sqrt(g)).
  const double hi = ccdf_tail_cutoff(d, tail);
  return d.options().sqrt2g_marginal_pdf ? 2.0 * hi : hi;
}

namespace detail {

// Exponent of the t -> x = X t^k map; k = 3 makes t^2 ln t the leading
// behaviour at the origin, smooth enough for Gauss-Legendre.
inline constexpr double kMapPower = 3.0;

inline MetricResult finish_probability(double raw, int order, double cdf_error) {
  MetricResult r;
  r.raw_value = raw;
  r.value = std::clamp(raw, 0.0, 1.0);
  r.clamped = r.value != raw;
  r.quadrature_order_used = order;
  r.embedded_cdf_error = cdf_error;
  return r;
}

inline MetricResult finish_capacity(double raw, int order, double cdf_error, double ceiling) {
  MetricResult r;
  r.raw_value = raw;
  r.value = std::clamp(raw, 0.0, ceiling);
  r.clamped = r.value != raw;
  r.quadrature_order_used = order;
  r.embedded_cdf_error = cdf_error;
  return r;
}

// int_lo^inf pdf_d(e) h(e) de / int_lo^inf pdf_d(e) de. The mapped scheme
// divides by the same rule applied to the density alone, so h == 1 returns
// exactly 1 and the table's small mass error (~1e-6) cancels to first order.
// The Laguerre scheme is the literal weighted sum with no normalization.
template <typename H>
double average_against_density(const FasGainDistribution& d, H&& h, const SecrecyConfig& cfg, double lo = 0.0) {
  if (cfg.scheme == QuadratureScheme::laguerre) {
    const QuadratureRule rule = gauss_laguerre_rule(cfg.laguerre_order);
    return integrate_semi_infinite([&](double e) { return d.pdf(lo + e) * h(lo + e); }, rule);
  }
  const double span = gain_tail_cutoff(d) - lo;
  if (!(span > 0.0)) return 0.0;
  const QuadratureRule rule = gauss_legendre_rule(cfg.laguerre_order);
  long double weighted = 0.0L;
  long double mass = 0.0L;
  for (int i = 0; i < cfg.laguerre_order; ++i) {
    // Nodes on (-1, 1) mapped to t in (0, 1), then e = lo + span t^k.
    const double t = 0.5 * (rule.nodes[static_cast<std::size_t>(i)] + 1.0);
    const double e = lo + span * std::pow(t, kMapPower);
    if (!(e > 0.0)) continue;
    const double w = 0.5 * rule.weights[static_cast<std::size_t>(i)] * kMapPower * span * std::pow(t, kMapPower - 1.0) *
                     d.pdf(e);
    const double v = h(e);
    if (!std::isfinite(v) || !std::isfinite(w)) throw EvaluationError("non-finite integrand", e);
    weighted += static_cast<long double>(w) * v;
    mass += w;
  }
  return mass > 0.0L ? static_cast<double>(weighted / mass) : 0.0;
}

// (1/ln 2) int_0^inf c(x)/(1+x) dx where c vanishes beyond x_cut.
template <typename C>
double integrate_capacity(C&& c, double x_cut, const SecrecyConfig& cfg) {
  double sum;
  if (cfg.scheme == QuadratureScheme::laguerre) {
    const QuadratureRule rule = gauss_laguerre_rule(cfg.laguerre_order);
    sum = integrate_semi_infinite([&](double x) { return c(x) / (1.0 + x); }, rule);
  } else {
    const double y_max = std::log1p(x_cut);
    const QuadratureRule rule = gauss_legendre_rule(cfg.laguerre_order);
    sum = integrate_interval(
        [&](double t) {
          const double x = std::expm1(y_max * std::pow(t, kMapPower));
          return kMapPower * y_max * std::pow(t, kMapPower - 1.0) * c(x);
        },
        0.0, 1.0, rule);
  }
  return sum / std::numbers::ln2;
}

inline double worst_error(std::initializer_list<const FasGainDistribution*> ds) {
  double e = 0.0;
  for (const auto* d : ds) e = std::max(e, d->worst_cdf_error());
  return e;
}

}  // namespace detail

/// SOP of the near user against the external eavesdropper.
inline MetricResult sop_external_near(const ScenarioParams& p, const SecrecyConfig& cfg) {
  validate(p);
  validate(cfg);
  const auto& un = detail::require(p.dist_un, "near user");
  const auto& e = detail::require(p.dist_e, "eavesdropper");
  const double rbar = cfg.rbar_n();
  const double pn = p.alloc.p_un;
  const double raw = detail::average_against_density(
      e,
      [&](double x) { return un.cdf((rbar * (p.snr_e * pn * x + 1.0) - 1.0) / (p.snr_un * pn)); },
      cfg);
  return detail::finish_probability(raw, cfg.laguerre_order, detail::worst_error({&un, &e}));
}

/// SOP of the far user against the external eavesdropper. Nodes where the
/// required SINR exceeds the far user's ceiling p_uf/p_un count as outage.
inline MetricResult sop_external_far(const ScenarioParams& p, const SecrecyConfig& cfg) {
  validate(p);
  validate(cfg);
  const auto& uf = detail::require(p.dist_uf, "far user");
  const auto& e = detail::require(p.dist_e, "eavesdropper");
  const double rbar = cfg.rbar_f();
  const double pn = p.alloc.p_un;
  const double pf = p.alloc.p_uf;
  // Target beyond the SINR ceiling pf/pn: outage for every eavesdropper gain.
  if (pf - pn * (rbar - 1.0) <= 0.0) return detail::finish_probability(1.0, cfg.laguerre_order, 0.0);
  if (cfg.scheme == QuadratureScheme::laguerre) {
    const double raw = detail::average_against_density(
        e,
        [&](double x) {
          const double need = rbar * (1.0 + p.snr_e * pf * x) - 1.0;
          const double denom = pf - pn * need;
          if (denom <= 0.0) return 1.0;
          return uf.cdf(need / (p.snr_uf * denom));
        },
        cfg);
    return detail::finish_probability(raw, cfg.laguerre_order, detail::worst_error({&uf, &e}));
  }
  // Outage means g_e exceeds the eavesdropper gain that the far user's gain can
  // still beat. That threshold is smooth and saturates in g_uf, whereas the
  // forward integrand jumps to 1 at the eavesdropper gain where the required
  // SINR hits the pf/pn ceiling.
  const double floor_gain = (rbar - 1.0) / (p.snr_uf * (pf - pn * (rbar - 1.0)));
  const double beaten_mean = detail::average_against_density(
      uf,
      [&](double g) {
        const double sinr = p.snr_uf * pf * g / (1.0 + p.snr_uf * pn * g);
        const double beaten = ((1.0 + sinr) / rbar - 1.0) / (p.snr_e * pf);
        return beaten > 0.0 ? e.ccdf(beaten) : 1.0;
      },
      cfg, floor_gain);
  const double raw = uf.cdf(floor_gain) + uf.ccdf(floor_gain) * beaten_mean;
  return detail::finish_probability(raw, cfg.laguerre_order, detail::worst_error({&uf, &e}));
}

/// SOP of the near user when the far user eavesdrops on it.
inline MetricResult sop_internal_near(const ScenarioParams& p, const SecrecyConfig& cfg) {
  validate(p);
  validate(cfg);
  const auto& un = detail::require(p.dist_un, "near user");
  const auto& uf = detail::require(p.dist_uf, "far user");
  const double rbar = cfg.rbar_n();
  const double pn = p.alloc.p_un;
  const double raw = detail::average_against_density(
      uf,
      [&](double x) { return un.cdf((rbar * (p.snr_uf * pn * x + 1.0) - 1.0) / (p.snr_un * pn)); },
      cfg);
  return detail::finish_probability(raw, cfg.laguerre_order, detail::worst_error({&un, &uf}));
}

/// ASC of the near user against the external eavesdropper.
inline MetricResult asc_external_near(const ScenarioParams& p, const SecrecyConfig& cfg) {
  validate(p);
  validate(cfg);
  const auto& un = detail::require(p.dist_un, "near user");
  const auto& e = detail::require(p.dist_e, "eavesdropper");
  const double pn = p.alloc.p_un;
  const double x_cut = p.snr_un * pn * ccdf_tail_cutoff(un);
  const double raw = detail::integrate_capacity(
      [&](double x) { return un.ccdf(x / (p.snr_un * pn)) * e.cdf(x / (p.snr_e * pn)); }, x_cut, cfg);
  return detail::finish_capacity(raw, cfg.laguerre_order, detail::worst_error({&un, &e}),
                                 std::numeric_limits<double>::infinity());
}

/// ASC of the far user against the external eavesdropper: a bounded
/// integral over the far user's SINR range (0, p_uf/p_un).
inline MetricResult asc_external_far(const ScenarioParams& p, const SecrecyConfig& cfg) {
  validate(p);
  validate(cfg);
  const auto& uf = detail::require(p.dist_uf, "far user");
  const auto& e = detail::require(p.dist_e, "eavesdropper");
  const double pn = p.alloc.p_un;
  const double pf = p.alloc.p_uf;
  const double ceiling = pf / pn;
  const QuadratureRule rule = gauss_legendre_rule(cfg.legendre_order);
  double sum = 0.0;
  for (int m = 0; m < rule.order(); ++m) {
    const double psi = 0.5 * ceiling * (rule.nodes[static_cast<std::size_t>(m)] + 1.0);
    const double denom = pf - psi * pn;
    if (!(denom > 0.0)) throw NumericalError("far-user capacity node outside the SINR range");
    double term = rule.weights[static_cast<std::size_t>(m)] / (1.0 + psi) * uf.ccdf(psi / (p.snr_uf * denom)) *
                  e.cdf(psi / (p.snr_e * pf));
    if (cfg.far_capacity_form == FarCapacityForm::legendre_times_exp_node) term *= std::exp(psi);
    if (!std::isfinite(term)) throw EvaluationError("non-finite far-user capacity term", psi);
    sum += term;
  }
  const double raw = 0.5 * ceiling * sum / std::numbers::ln2;
  return detail::finish_capacity(raw, cfg.legendre_order, detail::worst_error({&uf, &e}), std::log2(1.0 + ceiling));
}

/// ASC of the near user when the far user eavesdrops on it.
inline MetricResult asc_internal_near(const ScenarioParams& p, const SecrecyConfig& cfg) {
  validate(p);
  validate(cfg);
  const auto& un = detail::require(p.dist_un, "near user");
  const auto& uf = detail::require(p.dist_uf, "far user");
  const double pn = p.alloc.p_un;
  const double x_cut = p.snr_un * pn * ccdf_tail_cutoff(un);
  const double raw = detail::integrate_capacity(
      [&](double x) { return un.ccdf(x / (p.snr_un * pn)) * uf.cdf(x / (p.snr_uf * pn)); }, x_cut, cfg);
  return detail::finish_capacity(raw, cfg.laguerre_order, detail::worst_error({&un, &uf}),
                                 std::numeric_limits<double>::infinity());
}

enum class Metric { sop_ext_near, sop_ext_far, sop_int_near, asc_ext_near, asc_ext_far, asc_int_near };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::sop_ext_near: return "sop_ext_near";
    case Metric::sop_ext_far: return "sop_ext_far";
    case Metric::sop_int_near: return "sop_int_near";
    case Metric::asc_ext_near: return "asc_ext_near";
    case Metric::asc_ext_far: return "asc_ext_far";
    case Metric::asc_int_near: return "asc_int_near";
  }
  return "unknown";
}

inline bool is_capacity(Metric m) {
  return m == Metric::asc_ext_near || m == Metric::asc_ext_far || m == Metric::asc_int_near;
}

inline MetricResult evaluate_metric(Metric m, const ScenarioParams& p, const SecrecyConfig& cfg) {
  switch (m) {
    case Metric::sop_ext_near: return sop_external_near(p, cfg);
    case Metric::sop_ext_far: return sop_external_far(p, cfg);
    case Metric::sop_int_near: return sop_internal_near(p, cfg);
    case Metric::asc_ext_near: return asc_external_near(p, cfg);
    case Metric::asc_ext_far: return asc_external_far(p, cfg);
    case Metric::asc_int_near: return asc_internal_near(p, cfg);
  }
  throw ConfigError("unknown metric");
}

}  // namespace fasnoma
