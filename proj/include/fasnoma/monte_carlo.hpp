#pragma once

// Simulation oracle for the secrecy metrics. Every realization i draws from
// its own counter-based stream (seed, i), and per-chunk partial sums are merged
// in chunk order, so results do not depend on the thread count.

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <thread>
#include <vector>

#include "fasnoma/errors.hpp"
#include "fasnoma/fas_distribution.hpp"
#include "fasnoma/rng.hpp"
#include "fasnoma/secrecy_metrics.hpp"
#include "fasnoma/special_functions.hpp"

namespace fasnoma {

enum class EnergyLinkMode {
  /// Each node's best-port gain is drawn from the copula model of the
  /// equivalent gains, independently across nodes.
  independent_energy_link,
  /// One energy-link gain shared by all nodes multiplies each node's best
  /// local (access-link) port gain.
  shared_energy_link,
};

enum class McTarget { ext_near, ext_far, int_near };

struct MonteCarloOptions {
  std::int64_t n_samples = 10'000'000;
  std::uint64_t seed = 1;
  EnergyLinkMode mode = EnergyLinkMode::independent_energy_link;
  int threads = 1;
};

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  EnergyLinkMode mode = EnergyLinkMode::independent_energy_link;
};

/// Outage and capacity estimates from the same realizations.
struct McPointEstimate {
  MonteCarloEstimate sop;
  MonteCarloEstimate asc;
};

/// One sweep point: scenario and rates evaluated on shared realizations.
struct McPoint {
  ScenarioParams params;
  SecrecyConfig config;
};

/// Local gain -ln(1 - Phi(z)) of the best port given the largest normal score.
inline double best_port_local_gain(double max_score) {
  return -std::log(std_normal_cdf(-max_score));
}

/// Largest coordinate of z = L e, e standard normal.
inline double sample_max_score(const CorrelationMatrix& r, Stream& rng) {
  const Eigen::Index n = r.lower.rows();
  double scratch[64];
  std::vector<double> heap;
  double* e = scratch;
  if (n > 64) {
    heap.resize(static_cast<std::size_t>(n));
    e = heap.data();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = rng.normal();
    double z = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) z += r.lower(i, j) * e[j];
    best = std::max(best, z);
  }
  return best;
}

/// Local port gains -ln(1 - Phi(z_n)) for one draw z = L e; each is
/// exponential(1) and they are coupled by the Gaussian copula of r.
inline std::vector<double> sample_port_gains(const CorrelationMatrix& r, Stream& rng) {
  const Eigen::Index n = r.lower.rows();
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) e[i] = rng.normal();
  const Eigen::VectorXd z = r.lower.triangularView<Eigen::Lower>() * e;
  std::vector<double> g(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = best_port_local_gain(z[i]);
  return g;
}

/// energy_gain * max_n g_n with exponential(1) local port gains coupled by the
/// Gaussian copula of d.
inline double sample_fas_gain(const FasGainDistribution& d, double energy_gain, Stream& rng) {
  if (!(energy_gain > 0.0)) throw DomainError("sample_fas_gain: energy gain must be positive");
  return energy_gain * best_port_local_gain(sample_max_score(d.correlation(), rng));
}

/// Inverse of the single-port equivalent-gain CDF as a function of the normal
/// score: g with single_port_normal_score(g) = x. Tabulated log g with exact
/// slopes and cubic Hermite interpolation; bisection outside the table.
class SinglePortScoreInverse {
 public:
  SinglePortScoreInverse() {
    const std::size_t n = static_cast<std::size_t>(std::lround((kHi - kLo) / kStep)) + 1;
    log_g_.resize(n);
    dlog_g_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = kLo + static_cast<double>(i) * kStep;
      const double g = solve(x);
      log_g_[i] = std::log(g);
      dlog_g_[i] = std_normal_pdf(x) / (pdf_single_port(g) * g);
    }
  }

  static const SinglePortScoreInverse& instance() {
    static const SinglePortScoreInverse inverse;
    return inverse;
  }

  double operator()(double x) const {
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    if (!(x >= kLo && x < kHi)) return solve(x);
    const double pos = (x - kLo) / kStep;
    const std::size_t i = std::min(static_cast<std::size_t>(pos), log_g_.size() - 2);
    const double t = pos - static_cast<double>(i);
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return std::exp(h00 * log_g_[i] + h10 * kStep * dlog_g_[i] + h01 * log_g_[i + 1] +
                    h11 * kStep * dlog_g_[i + 1]);
  }

  /// Bisection on log g; the score is increasing in g.
  static double solve(double x) {
    double lo = -400.0;
    double hi = 8.0;
    while (single_port_normal_score(std::exp(hi)) < x) hi += 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (single_port_normal_score(std::exp(mid)) < x ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
  }

 private:
  static constexpr double kLo = -9.0;
  static constexpr double kHi = 9.0;
  static constexpr double kStep = 1.0 / 32.0;
  std::vector<double> log_g_;
  std::vector<double> dlog_g_;
};

/// Best-port equivalent gain under the copula model of equivalent gains.
inline double sample_equivalent_gain(const FasGainDistribution& d, Stream& rng) {
  return SinglePortScoreInverse::instance()(sample_max_score(d.correlation(), rng));
}

namespace detail {

struct NodePair {
  const FasGainDistribution* legit;
  const FasGainDistribution* eve;
};

inline NodePair nodes_for(McTarget t, const ScenarioParams& p) {
  switch (t) {
    case McTarget::ext_near: return {&require(p.dist_un, "near user"), &require(p.dist_e, "eavesdropper")};
    case McTarget::ext_far: return {&require(p.dist_uf, "far user"), &require(p.dist_e, "eavesdropper")};
    case McTarget::int_near: return {&require(p.dist_un, "near user"), &require(p.dist_uf, "far user")};
  }
  throw ConfigError("unknown Monte Carlo target");
}

// Legitimate and eavesdropper SINRs for one realization of the two gains.
inline std::pair<double, double> sinr_pair(McTarget t, double g_legit, double g_eve, const ScenarioParams& p) {
  switch (t) {
    case McTarget::ext_near:
      return {instantaneous_sinr(SinrRole::near, g_legit, p), instantaneous_sinr(SinrRole::eve_near, g_eve, p)};
    case McTarget::ext_far:
      return {instantaneous_sinr(SinrRole::far, g_legit, p), instantaneous_sinr(SinrRole::eve_far, g_eve, p)};
    case McTarget::int_near:
      return {instantaneous_sinr(SinrRole::near, g_legit, p), instantaneous_sinr(SinrRole::internal_eve, g_eve, p)};
  }
  return {0.0, 0.0};
}

inline double target_rate(McTarget t, const SecrecyConfig& c) {
  return t == McTarget::ext_far ? c.rate_uf : c.rate_un;
}

struct Partial {
  long double outages = 0.0L;
  long double capacity = 0.0L;
  long double capacity_sq = 0.0L;
};

inline MonteCarloEstimate summarize(long double sum, long double sum_sq, const MonteCarloOptions& opt) {
  const long double n = static_cast<long double>(opt.n_samples);
  const long double mean = sum / n;
  const long double var = std::max(0.0L, (sum_sq - n * mean * mean) / (n - 1.0L));
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(var / n)), opt.n_samples, opt.seed, opt.mode};
}

inline constexpr std::int64_t kChunk = 1 << 16;

// Runs realizations in fixed chunks; per-point partials merged in chunk order.
inline std::vector<McPointEstimate> run_batch(McTarget target, const std::vector<McPoint>& points,
                                                 const MonteCarloOptions& opt) {
  if (points.empty()) throw ConfigError("Monte Carlo batch needs at least one point");
  if (opt.n_samples < 10'000) throw ConfigError("Monte Carlo needs at least 10^4 samples");
  if (opt.threads < 1) throw ConfigError("thread count must be positive");
  for (const McPoint& pt : points) {
    validate(pt.params);
    validate(pt.config);
  }
  const NodePair nodes = nodes_for(target, points.front().params);
  for (const McPoint& pt : points) {
    const NodePair other = nodes_for(target, pt.params);
    if (other.legit != nodes.legit || other.eve != nodes.eve) {
      throw ConfigError("batched points must share their gain distributions");
    }
  }
  // Outage thresholds 2^rate, hoisted out of the loop.
  std::vector<double> rbar(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) rbar[k] = std::exp2(target_rate(target, points[k].config));

  const std::int64_t chunks = (opt.n_samples + kChunk - 1) / kChunk;
  std::vector<std::vector<Partial>> partials(static_cast<std::size_t>(chunks), std::vector<Partial>(points.size()));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (std::int64_t c = next++; c < chunks; c = next++) {
      auto& out = partials[static_cast<std::size_t>(c)];
      const std::int64_t end = std::min(opt.n_samples, (c + 1) * kChunk);
      for (std::int64_t i = c * kChunk; i < end; ++i) {
        Stream rng(opt.seed, static_cast<std::uint64_t>(i));
        double g_legit = 0.0;
        double g_eve = 0.0;
        if (opt.mode == EnergyLinkMode::independent_energy_link) {
          g_legit = sample_equivalent_gain(*nodes.legit, rng);
          g_eve = sample_equivalent_gain(*nodes.eve, rng);
        } else {
          const double energy = rng.exponential();
          g_legit = sample_fas_gain(*nodes.legit, energy, rng);
          g_eve = sample_fas_gain(*nodes.eve, energy, rng);
        }
        for (std::size_t k = 0; k < points.size(); ++k) {
          const auto [legit, eve] = sinr_pair(target, g_legit, g_eve, points[k].params);
          if ((1.0 + legit) <= rbar[k] * (1.0 + eve)) out[k].outages += 1.0L;
          const double c = std::max(0.0, std::log2((1.0 + legit) / (1.0 + eve)));
          out[k].capacity += c;
          out[k].capacity_sq += static_cast<long double>(c) * c;
        }
      }
    }
  };
  const int pool = static_cast<int>(std::min<std::int64_t>(opt.threads, chunks));
  std::vector<std::thread> threads;
  for (int t = 1; t < pool; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::vector<McPointEstimate> result(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    Partial total;
    for (const auto& chunk : partials) {
      total.outages += chunk[k].outages;
      total.capacity += chunk[k].capacity;
      total.capacity_sq += chunk[k].capacity_sq;
    }
    // Outage indicators are 0/1, so their sum of squares is their sum.
    result[k] = {summarize(total.outages, total.outages, opt), summarize(total.capacity, total.capacity_sq, opt)};
  }
  return result;
}

}  // namespace detail

/// Outage frequency of {C_s <= R_s}.
inline MonteCarloEstimate estimate_sop(McTarget target, const ScenarioParams& p, const SecrecyConfig& cfg,
                                       const MonteCarloOptions& opt) {
  return detail::run_batch(target, {{p, cfg}}, opt).front().sop;
}

/// Sample mean of the positive-part secrecy capacity in bits.
inline MonteCarloEstimate estimate_asc(McTarget target, const ScenarioParams& p, const SecrecyConfig& cfg,
                                       const MonteCarloOptions& opt) {
  return detail::run_batch(target, {{p, cfg}}, opt).front().asc;
}

/// Several points on one set of realizations (common random numbers). All
/// points must reference the same gain distributions.
inline std::vector<McPointEstimate> estimate_batch(McTarget target, const std::vector<McPoint>& points,
                                                   const MonteCarloOptions& opt) {
  return detail::run_batch(target, points, opt);
}

inline std::vector<MonteCarloEstimate> estimate_sop_batch(McTarget target, const std::vector<McPoint>& points,
                                                          const MonteCarloOptions& opt) {
  std::vector<MonteCarloEstimate> out;
  for (const McPointEstimate& e : detail::run_batch(target, points, opt)) out.push_back(e.sop);
  return out;
}

inline std::vector<MonteCarloEstimate> estimate_asc_batch(McTarget target, const std::vector<McPoint>& points,
                                                          const MonteCarloOptions& opt) {
  std::vector<MonteCarloEstimate> out;
  for (const McPointEstimate& e : detail::run_batch(target, points, opt)) out.push_back(e.asc);
  return out;
}

/// Monte Carlo counterpart of an analytic metric.
inline McTarget mc_target(Metric m) {
  switch (m) {
    case Metric::sop_ext_near:
    case Metric::asc_ext_near: return McTarget::ext_near;
    case Metric::sop_ext_far:
    case Metric::asc_ext_far: return McTarget::ext_far;
    case Metric::sop_int_near:
    case Metric::asc_int_near: return McTarget::int_near;
  }
  throw ConfigError("unknown metric");
}

}  // namespace fasnoma
