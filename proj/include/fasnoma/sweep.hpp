#pragma once

// Parameter sweeps: figure presets, evaluation of every point in a worker
// pool, optional simulation columns on common realizations, and CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fasnoma/config.hpp"
#include "fasnoma/errors.hpp"
#include "fasnoma/fas_distribution.hpp"
#include "fasnoma/monte_carlo.hpp"
#include "fasnoma/secrecy_metrics.hpp"

namespace fasnoma {

/// One curve family: a configuration whose sweep and metric list are set.
struct SweepJob {
  std::string name;
  RunConfig config;
};

struct MetricCell {
  double analytic = std::numeric_limits<double>::quiet_NaN();
  bool clamped = false;
  std::optional<MonteCarloEstimate> mc;
};

struct SweepRow {
  double swept = 0.0;
  std::vector<MetricCell> cells;  // in the job's metric order
  int quad_order = 0;
  double mvn_worst_error = 0.0;
  std::string status = "ok";
};

struct SweepResult {
  std::string name;
  SweepSpec sweep;
  std::vector<Metric> metrics;
  bool has_mc = false;
  std::vector<SweepRow> rows;
};

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Shares tabulated distributions between points and jobs.
class DistributionCache {
 public:
  explicit DistributionCache(int build_threads = 1) : build_threads_(std::max(1, build_threads)) {}

  std::shared_ptr<const FasGainDistribution> get(const FasGeometry& g, const FasGainOptions& base) {
    using Key = std::tuple<int, int, double, double, int, int, bool, double>;
    const Key key{g.n1, g.n2, g.w1, g.w2, static_cast<int>(base.kernel), static_cast<int>(base.density),
                  base.sqrt2g_marginal_pdf, base.table_step};
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    FasGainOptions opt = base;
    opt.threads = build_threads_;
    auto d = std::make_shared<const FasGainDistribution>(g, opt);
    cache_.emplace(key, d);
    return d;
  }

 private:
  int build_threads_;
  std::mutex mutex_;
  std::map<std::tuple<int, int, double, double, int, int, bool, double>, std::shared_ptr<const FasGainDistribution>>
      cache_;
};

/// Configuration of sweep point i: the swept variable written into a copy.
inline RunConfig config_at(const RunConfig& cfg, int i) {
  RunConfig c = cfg;
  const double v = cfg.sweep.value(i);
  const std::string& var = cfg.sweep.variable;
  auto as_db = [&](double x) {
    if (cfg.sweep.scale == SweepScale::db) return x;
    if (!(x > 0.0)) throw ConfigError("sweep: linear SNR values must be positive");
    return linear_to_db(x);
  };
  if (var == "snr_un") {
    c.snr.un_db = as_db(v);
  } else if (var == "snr_uf") {
    c.snr.uf_db = as_db(v);
  } else if (var == "snr_e") {
    c.snr.e_db = as_db(v);
  } else if (var == "rate_un") {
    c.secrecy.rate_un = v;
  } else if (var == "rate_uf") {
    c.secrecy.rate_uf = v;
  } else if (var == "beacon_dbm") {
    c.radio.p_beacon_dbm = v;
  } else {
    throw ConfigError("sweep.variable: unknown sweep variable '" + var + "'");
  }
  validate(c.secrecy);
  return c;
}

/// Scenario of a configuration with its three distributions attached.
inline ScenarioParams attach(const RunConfig& c, DistributionCache& cache) {
  ScenarioParams p = scenario_for(c);
  p.dist_un = cache.get(c.geom_un, c.fas);
  p.dist_uf = cache.get(c.geom_uf, c.fas);
  p.dist_e = cache.get(c.geom_e, c.fas);
  return p;
}

/// Evaluates every metric at every point. Points run in a pool of `threads`
/// workers and land in sweep order; a numerical failure at one point is
/// recorded in that row's status instead of aborting the sweep.
inline SweepResult run_sweep(const SweepJob& job, DistributionCache& cache, int threads) {
  const RunConfig& cfg = job.config;
  validate(cfg.sweep);
  if (cfg.metrics.empty()) throw ConfigError("metrics: at least one metric is required");
  const int workers = resolve_threads(threads);

  SweepResult out;
  out.name = job.name;
  out.sweep = cfg.sweep;
  out.metrics = cfg.metrics;
  out.has_mc = cfg.mc.enabled;
  out.rows.resize(static_cast<std::size_t>(cfg.sweep.points));

  std::vector<RunConfig> configs;
  std::vector<ScenarioParams> params;
  for (int i = 0; i < cfg.sweep.points; ++i) {
    configs.push_back(config_at(cfg, i));
    params.push_back(attach(configs.back(), cache));
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < cfg.sweep.points; i = next++) {
      SweepRow& row = out.rows[static_cast<std::size_t>(i)];
      row.swept = cfg.sweep.value(i);
      row.cells.resize(cfg.metrics.size());
      try {
        for (std::size_t k = 0; k < cfg.metrics.size(); ++k) {
          try {
            const MetricResult r = evaluate_metric(cfg.metrics[k], params[static_cast<std::size_t>(i)],
                                                   configs[static_cast<std::size_t>(i)].secrecy);
            row.cells[k].analytic = r.value;
            row.cells[k].clamped = r.clamped;
            row.quad_order = r.quadrature_order_used;
            row.mvn_worst_error = std::max(row.mvn_worst_error, r.embedded_cdf_error);
          } catch (const NumericalError& e) {
            row.status = std::string(metric_name(cfg.metrics[k])) + ": " + e.what();
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(workers, cfg.sweep.points); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  if (cfg.mc.enabled) {
    MonteCarloOptions opt;
    opt.n_samples = cfg.mc.n_samples;
    opt.seed = cfg.mc.seed;
    opt.mode = cfg.mc.mode;
    opt.threads = workers;
    // One batch per simulated link pair; every point reuses its realizations.
    for (McTarget target : {McTarget::ext_near, McTarget::ext_far, McTarget::int_near}) {
      std::vector<std::size_t> wanted;
      for (std::size_t k = 0; k < cfg.metrics.size(); ++k) {
        if (mc_target(cfg.metrics[k]) == target) wanted.push_back(k);
      }
      if (wanted.empty()) continue;
      std::vector<McPoint> points;
      for (std::size_t i = 0; i < params.size(); ++i) points.push_back({params[i], configs[i].secrecy});
      const std::vector<McPointEstimate> est = estimate_batch(target, points, opt);
      for (std::size_t i = 0; i < est.size(); ++i) {
        for (std::size_t k : wanted) out.rows[i].cells[k].mc = is_capacity(cfg.metrics[k]) ? est[i].asc : est[i].sop;
      }
    }
  }
  return out;
}

/// Name of the first CSV column for a sweep.
inline std::string sweep_column(const SweepSpec& s) {
  if (is_snr_variable(s.variable)) return s.scale == SweepScale::db ? "sweep_value_db" : "sweep_value";
  if (s.variable == "beacon_dbm") return "sweep_value_dbm";
  return "sweep_value_bits";
}

/// CSV text: header plus one line per row, LF line endings, numbers at
/// `precision` significant digits.
inline std::string format_csv(const SweepResult& r, int precision = 10) {
  if (r.rows.empty()) throw ConfigError("emit_csv: no rows to write");
  if (precision < 1 || precision > 17) throw ConfigError("emit_csv: precision must lie in [1, 17]");
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(precision);
  os << sweep_column(r.sweep);
  for (Metric m : r.metrics) {
    os << ',' << metric_name(m) << "_analytic";
    if (r.has_mc) os << ',' << metric_name(m) << "_mc," << metric_name(m) << "_mc_stderr";
  }
  os << ",quad_order,mvn_worst_error,clamped,status\n";
  for (const SweepRow& row : r.rows) {
    os << row.swept;
    std::string clamped;
    for (std::size_t k = 0; k < r.metrics.size(); ++k) {
      const MetricCell& c = row.cells[k];
      os << ',' << c.analytic;
      if (r.has_mc) {
        if (c.mc) {
          os << ',' << c.mc->value << ',' << c.mc->std_error;
        } else {
          os << ",,";
        }
      }
      if (c.clamped) clamped += (clamped.empty() ? "" : ";") + std::string(metric_name(r.metrics[k]));
    }
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    os << ',' << row.quad_order << ',' << row.mvn_worst_error << ',' << (clamped.empty() ? "none" : clamped) << ','
       << status << '\n';
  }
  return os.str();
}

inline void emit_csv(const SweepResult& r, const std::string& path, int precision = 10) {
  const std::string text = format_csv(r, precision);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  if (!f.flush()) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Figure presets. Users carry the curve's antenna; the eavesdropper keeps the
// configured geometry (four ports on one square wavelength by default).

struct CurveAntenna {
  const char* label;
  FasGeometry geometry;
};

inline std::vector<CurveAntenna> preset_antennas() {
  return {{"tas", single_antenna()}, {"fas4", square_grid(2, 1.0)}, {"fas9", square_grid(3, 2.0)}};
}

/// Fixed far-user SNRs (dB) for the internal-eavesdropper figures.
inline std::vector<double> preset_far_snrs_db() { return {-5.0, 0.0, 5.0}; }

inline std::string db_label(double db) {
  std::ostringstream os;
  if (db < 0) os << 'm';
  os << std::abs(db) << "db";
  return os.str();
}

namespace detail {

inline SweepSpec snr_axis(const char* variable, double stop_db, int points) {
  SweepSpec s;
  s.variable = variable;
  s.start = 0.0;
  s.stop = stop_db;
  s.points = points;
  s.scale = SweepScale::db;
  return s;
}

// Per-user curves against the external eavesdropper at 0 dB.
inline void external_jobs(const std::string& fig, const RunConfig& base, Metric near, Metric far, double stop_db,
                          int points, std::vector<SweepJob>& jobs) {
  for (const auto& [user, variable, metric] :
       {std::tuple{"near", "snr_un", near}, std::tuple{"far", "snr_uf", far}}) {
    for (const CurveAntenna& a : preset_antennas()) {
      RunConfig c = base;
      c.geom_un = a.geometry;
      c.geom_uf = a.geometry;
      c.snr.e_db = 0.0;
      c.sweep = snr_axis(variable, stop_db, points);
      c.metrics = {metric};
      jobs.push_back({fig + "_" + user + "_" + a.label, c});
    }
  }
}

// Near user against the far user, far user fixed on four ports.
inline void internal_jobs(const std::string& fig, const RunConfig& base, Metric metric, double stop_db, int points,
                          std::vector<SweepJob>& jobs) {
  for (double uf_db : preset_far_snrs_db()) {
    for (const CurveAntenna& a : preset_antennas()) {
      RunConfig c = base;
      c.geom_un = a.geometry;
      c.geom_uf = square_grid(2, 1.0);
      c.snr.uf_db = uf_db;
      c.snr.e_db = 0.0;
      c.sweep = snr_axis("snr_un", stop_db, points);
      c.metrics = {metric};
      jobs.push_back({fig + "_uf" + db_label(uf_db) + "_" + a.label, c});
    }
  }
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5", "fig6"};
  return names;
}

/// Curve families of a figure preset built on top of `base`.
inline std::vector<SweepJob> preset_jobs(const std::string& preset, const RunConfig& base) {
  std::vector<SweepJob> jobs;
  if (preset == "fig2") {
    detail::external_jobs("fig2", base, Metric::sop_ext_near, Metric::sop_ext_far, 20.0, 11, jobs);
  } else if (preset == "fig3") {
    detail::internal_jobs("fig3", base, Metric::sop_int_near, 20.0, 11, jobs);
  } else if (preset == "fig4") {
    RunConfig c = base;
    c.geom_un = square_grid(2, 1.0);
    c.geom_uf = square_grid(2, 1.0);
    c.sweep.variable = "rate_un";
    c.sweep.start = 0.0;
    c.sweep.stop = 3.0;
    c.sweep.points = 13;
    c.sweep.scale = SweepScale::linear;
    c.metrics = {Metric::sop_ext_near, Metric::sop_int_near};
    jobs.push_back({"fig4_near", c});
    c.sweep.variable = "rate_uf";
    c.metrics = {Metric::sop_ext_far};
    jobs.push_back({"fig4_far", c});
  } else if (preset == "fig5") {
    detail::external_jobs("fig5", base, Metric::asc_ext_near, Metric::asc_ext_far, 40.0, 9, jobs);
  } else if (preset == "fig6") {
    detail::internal_jobs("fig6", base, Metric::asc_int_near, 40.0, 9, jobs);
  } else {
    throw ConfigError("unknown preset '" + preset + "' (expected fig2..fig6)");
  }
  return jobs;
}

}  // namespace fasnoma
