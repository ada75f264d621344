// Command-line front end. Results go to stdout (key=value lines or CSV);
// diagnostics go to stderr as key=value records.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 I/O.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fasnoma/fasnoma.hpp"

namespace {

using namespace fasnoma;

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 1;

struct Overrides {
  std::string config_path;
  std::optional<int> threads;
  std::optional<std::string> kernel;
  std::optional<std::string> quad_scheme;
  std::optional<std::string> quad_order;
  bool literal_pdf = false;
  bool literal_fas_pdf = false;
  bool literal_asc_far = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> rate_un, rate_uf;
  std::optional<double> snr_un_db, snr_uf_db, snr_e_db;
  std::optional<std::string> geom_un, geom_uf, geom_e;
};

// "N1xN2:W1xW2" in ports and wavelengths, e.g. 3x3:2x2; "1x1" is one port.
FasGeometry parse_geometry(const std::string& text) {
  FasGeometry g{1, 1, 0.0, 0.0};
  char sep1 = 0, colon = 0, sep2 = 0;
  std::istringstream is(text);
  is >> g.n1 >> sep1 >> g.n2;
  if (!is || sep1 != 'x') throw ConfigError("geometry '" + text + "': expected N1xN2[:W1xW2]");
  if (is >> colon) {
    is >> g.w1 >> sep2 >> g.w2;
    if (!is || colon != ':' || sep2 != 'x') throw ConfigError("geometry '" + text + "': expected N1xN2[:W1xW2]");
  }
  std::string rest;
  if (is >> rest) throw ConfigError("geometry '" + text + "': trailing characters");
  validate(g);
  return g;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Orders to run: one, or both readings of the two-point rule for "two-point".
std::vector<int> quad_orders(const Overrides& o, const RunConfig& cfg) {
  if (!o.quad_order) return {cfg.secrecy.laguerre_order};
  if (*o.quad_order == "two-point") return {2, 3};
  std::size_t used = 0;
  int order = 0;
  try {
    order = std::stoi(*o.quad_order, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != o.quad_order->size()) throw ConfigError("--quad-order: expected an integer or 'two-point'");
  return {order};
}

RunConfig load_config(const Overrides& o) {
  RunConfig cfg = parse_config(o.config_path.empty() ? std::string() : read_file(o.config_path));
  if (o.threads) {
    if (*o.threads < 0) throw ConfigError("--threads: must be nonnegative");
    cfg.threads = *o.threads;
  }
  if (o.kernel) {
    if (*o.kernel == "spherical") {
      cfg.fas.kernel = CorrelationKernel::spherical;
    } else if (*o.kernel == "cylindrical") {
      cfg.fas.kernel = CorrelationKernel::cylindrical;
    } else {
      throw ConfigError("--kernel: expected spherical|cylindrical");
    }
  }
  if (o.quad_scheme) {
    if (*o.quad_scheme == "mapped") {
      cfg.secrecy.scheme = QuadratureScheme::mapped;
    } else if (*o.quad_scheme == "laguerre") {
      cfg.secrecy.scheme = QuadratureScheme::laguerre;
    } else {
      throw ConfigError("--quad-scheme: expected mapped|laguerre");
    }
  }
  const std::vector<int> orders = quad_orders(o, cfg);
  cfg.secrecy.laguerre_order = orders.front();
  cfg.secrecy.legendre_order = orders.front();
  if (o.literal_pdf) cfg.fas.sqrt2g_marginal_pdf = true;
  if (o.literal_fas_pdf) cfg.fas.density = FasDensityForm::copula_diagonal;
  if (o.literal_asc_far) cfg.secrecy.far_capacity_form = FarCapacityForm::legendre_times_exp_node;
  if (o.seed) cfg.mc.seed = *o.seed;
  if (o.rate_un) cfg.secrecy.rate_un = *o.rate_un;
  if (o.rate_uf) cfg.secrecy.rate_uf = *o.rate_uf;
  if (o.snr_un_db) cfg.snr.un_db = *o.snr_un_db;
  if (o.snr_uf_db) cfg.snr.uf_db = *o.snr_uf_db;
  if (o.snr_e_db) cfg.snr.e_db = *o.snr_e_db;
  if (o.geom_un) cfg.geom_un = parse_geometry(*o.geom_un);
  if (o.geom_uf) cfg.geom_uf = parse_geometry(*o.geom_uf);
  if (o.geom_e) cfg.geom_e = parse_geometry(*o.geom_e);
  validate(cfg.secrecy);
  return cfg;
}

void print_metric(Metric m, const MetricResult& r) {
  std::printf("metric=%s value=%.10g raw=%.10g quad_order=%d mvn_worst_error=%.3g clamped=%d\n", metric_name(m),
              r.value, r.raw_value, r.quadrature_order_used, r.embedded_cdf_error, r.clamped ? 1 : 0);
}

int run_point(const Overrides& o, std::vector<Metric> metrics) {
  const RunConfig cfg = load_config(o);
  DistributionCache cache(resolve_threads(cfg.threads));
  const ScenarioParams p = attach(cfg, cache);
  std::fprintf(stderr, "snr_un_db=%.6g snr_uf_db=%.6g snr_e_db=%.6g\n", linear_to_db(p.snr_un),
               linear_to_db(p.snr_uf), linear_to_db(p.snr_e));
  for (Metric m : metrics) print_metric(m, evaluate_metric(m, p, cfg.secrecy));
  return 0;
}

Metric user_metric(const std::string& user, Metric near, Metric far) {
  if (user == "near") return near;
  if (user == "far") return far;
  if (user == "both") return near;
  throw ConfigError("--user: expected near|far|both");
}

std::vector<Metric> user_metrics(const std::string& user, Metric near, Metric far) {
  if (user == "both") return {near, far};
  return {user_metric(user, near, far)};
}

int run_sweeps(const Overrides& o, const std::string& preset, const std::string& out_dir, bool mc,
               std::optional<std::int64_t> samples) {
  RunConfig base = load_config(o);
  if (mc) base.mc.enabled = true;
  if (samples) base.mc.n_samples = *samples;
  std::vector<SweepJob> jobs;
  if (preset.empty()) {
    jobs.push_back({"sweep", base});
  } else {
    jobs = preset_jobs(preset, base);
  }
  // Both readings of the two-point rule, as separate curve families.
  if (o.quad_order && *o.quad_order == "two-point") {
    std::vector<SweepJob> both;
    for (const SweepJob& j : jobs) {
      for (int order : {2, 3}) {
        SweepJob copy = j;
        copy.name += "_m" + std::to_string(order);
        copy.config.secrecy.laguerre_order = order;
        copy.config.secrecy.legendre_order = order;
        both.push_back(copy);
      }
    }
    jobs = both;
  }
  const int threads = resolve_threads(base.threads);
  DistributionCache cache(threads);
  bool failed_points = false;
  for (const SweepJob& job : jobs) {
    const SweepResult r = run_sweep(job, cache, threads);
    for (const SweepRow& row : r.rows) failed_points = failed_points || row.status != "ok";
    if (preset.empty() && out_dir.empty()) {
      if (base.csv_path.empty()) {
        std::cout << format_csv(r, base.precision);
      } else {
        emit_csv(r, base.csv_path, base.precision);
      }
    } else {
      const std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
      std::filesystem::create_directories(dir);
      const std::string path = (dir / (job.name + ".csv")).string();
      emit_csv(r, path, base.precision);
      std::fprintf(stderr, "wrote=%s rows=%zu\n", path.c_str(), r.rows.size());
    }
  }
  return failed_points ? kExitNumerical : 0;
}

int run_mc_validate(const Overrides& o, const std::string& metric_text, std::int64_t samples,
                    const std::string& mode) {
  RunConfig cfg = load_config(o);
  const Metric m = parse_metric(metric_text);
  DistributionCache cache(resolve_threads(cfg.threads));
  const ScenarioParams p = attach(cfg, cache);
  const MetricResult analytic = evaluate_metric(m, p, cfg.secrecy);
  MonteCarloOptions opt;
  opt.n_samples = samples;
  opt.seed = cfg.mc.seed;
  opt.threads = resolve_threads(cfg.threads);
  if (mode == "independent") {
    opt.mode = EnergyLinkMode::independent_energy_link;
  } else if (mode == "shared") {
    opt.mode = EnergyLinkMode::shared_energy_link;
  } else {
    throw ConfigError("--mode: expected independent|shared");
  }
  const McPointEstimate est = estimate_batch(mc_target(m), {{p, cfg.secrecy}}, opt).front();
  const MonteCarloEstimate& e = is_capacity(m) ? est.asc : est.sop;
  const double tolerance = std::max(3.0 * e.std_error, 0.02 * std::abs(e.value));
  const bool agree = std::abs(analytic.value - e.value) <= tolerance;
  std::printf("metric=%s analytic=%.10g mc=%.10g mc_stderr=%.3g n=%lld seed=%llu mode=%s tolerance=%.3g agree=%d\n",
              metric_name(m), analytic.value, e.value, e.std_error, static_cast<long long>(e.n_samples),
              static_cast<unsigned long long>(e.seed), mode.c_str(), tolerance, agree ? 1 : 0);
  return 0;
}

int run_quad_table(const std::string& kind, int order) {
  QuadratureRule rule;
  if (kind == "laguerre") {
    rule = gauss_laguerre_rule(order);
  } else if (kind == "legendre") {
    rule = gauss_legendre_rule(order);
  } else {
    throw ConfigError("--kind: expected laguerre|legendre");
  }
  std::printf("index,node,weight\n");
  for (int i = 0; i < rule.order(); ++i) {
    std::printf("%d,%.17g,%.17g\n", i + 1, rule.nodes[static_cast<std::size_t>(i)],
                rule.weights[static_cast<std::size_t>(i)]);
  }
  return 0;
}

int run_dist_table(const Overrides& o, const std::string& geometry, double g_min, double g_max, int points) {
  const RunConfig cfg = load_config(o);
  if (!(g_min > 0.0) || !(g_max > g_min) || points < 2) {
    throw ConfigError("dist-table: need 0 < --from < --to and at least 2 points");
  }
  FasGainOptions opt = cfg.fas;
  opt.threads = resolve_threads(cfg.threads);
  const FasGainDistribution d(parse_geometry(geometry), opt);
  std::fprintf(stderr, "ports=%d mvn_worst_error=%.3g jitter=%.3g\n", d.ports(), d.worst_cdf_error(),
               d.correlation().jitter);
  std::printf("g,cdf,ccdf,pdf,cdf_single_port\n");
  for (int i = 0; i < points; ++i) {
    // Log-spaced gains.
    const double g = g_min * std::pow(g_max / g_min, static_cast<double>(i) / (points - 1));
    std::printf("%.10g,%.10g,%.10g,%.10g,%.10g\n", g, d.cdf(g), d.ccdf(g), d.pdf(g), cdf_single_port(g));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secrecy outage probability and average secrecy capacity calculator"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app.add_option("--kernel", o.kernel, "spatial correlation kernel: spherical|cylindrical");
  app.add_option("--quad-scheme", o.quad_scheme, "quadrature scheme: mapped|laguerre");
  app.add_option("--quad-order", o.quad_order, "quadrature order, or 'two-point' to run the two-point rule read as order 2 and order 3");
  app.add_flag("--paper-literal-pdf", o.literal_pdf, "use 2 K0(sqrt(2g)) as the single-port density");
  app.add_flag("--paper-literal-fas-pdf", o.literal_fas_pdf, "use the diagonal copula-density form for FAS densities");
  app.add_flag("--paper-literal-asc-far", o.literal_asc_far, "keep the e^node factor in the far-user capacity sum");
  app.add_option("--seed", o.seed, "simulation seed (overrides FASNOMA_SEED and the config)");
  app.add_option("--rate-un", o.rate_un, "near-user target secrecy rate (bits)");
  app.add_option("--rate-uf", o.rate_uf, "far-user target secrecy rate (bits)");
  app.add_option("--snr-un-db", o.snr_un_db, "near-user average SNR (dB)");
  app.add_option("--snr-uf-db", o.snr_uf_db, "far-user average SNR (dB)");
  app.add_option("--snr-e-db", o.snr_e_db, "eavesdropper average SNR (dB)");
  app.add_option("--geom-un", o.geom_un, "near-user antenna N1xN2:W1xW2");
  app.add_option("--geom-uf", o.geom_uf, "far-user antenna N1xN2:W1xW2");
  app.add_option("--geom-e", o.geom_e, "eavesdropper antenna N1xN2:W1xW2");

  std::string user = "near";
  auto* sop_ext = app.add_subcommand("sop-ext", "secrecy outage probability, external eavesdropper");
  sop_ext->add_option("--user", user, "near|far|both")->capture_default_str();
  auto* sop_int = app.add_subcommand("sop-int", "near-user secrecy outage probability, far user eavesdropping");
  auto* asc_ext = app.add_subcommand("asc-ext", "average secrecy capacity, external eavesdropper");
  asc_ext->add_option("--user", user, "near|far|both")->capture_default_str();
  auto* asc_int = app.add_subcommand("asc-int", "near-user average secrecy capacity, far user eavesdropping");

  std::string preset;
  std::string out_dir;
  bool with_mc = false;
  std::optional<std::int64_t> sweep_samples;
  auto* sweep = app.add_subcommand("sweep", "parameter sweep from the config, or a figure preset");
  sweep->add_option("--preset", preset, "fig2|fig3|fig4|fig5|fig6");
  sweep->add_option("--out-dir", out_dir, "directory for one CSV per curve family");
  sweep->add_flag("--mc", with_mc, "add simulation columns");
  sweep->add_option("--mc-samples", sweep_samples, "simulation realizations per curve family");

  std::string metric = "sop_ext_near";
  std::int64_t samples = 1'000'000;
  std::string mode = "independent";
  auto* mc = app.add_subcommand("mc-validate", "compare one analytic metric with simulation");
  mc->add_option("--metric", metric, "metric name, e.g. sop_ext_near")->capture_default_str();
  mc->add_option("--samples", samples, "realizations")->capture_default_str();
  mc->add_option("--mode", mode, "energy-link mode: independent|shared")->capture_default_str();

  std::string kind = "legendre";
  int order = 40;
  auto* quad = app.add_subcommand("quad-table", "nodes and weights of a Gauss rule");
  quad->add_option("--kind", kind, "laguerre|legendre")->capture_default_str();
  quad->add_option("--order", order, "number of nodes")->capture_default_str();

  std::string geometry = "2x2:1x1";
  double g_min = 1e-3, g_max = 20.0;
  int points = 25;
  auto* dist = app.add_subcommand("dist-table", "best-port gain distribution on log-spaced gains");
  dist->add_option("--geometry", geometry, "N1xN2:W1xW2")->capture_default_str();
  dist->add_option("--from", g_min, "smallest gain")->capture_default_str();
  dist->add_option("--to", g_max, "largest gain")->capture_default_str();
  dist->add_option("--points", points, "number of gains")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (sop_ext->parsed()) return run_point(o, user_metrics(user, Metric::sop_ext_near, Metric::sop_ext_far));
    if (sop_int->parsed()) return run_point(o, {Metric::sop_int_near});
    if (asc_ext->parsed()) return run_point(o, user_metrics(user, Metric::asc_ext_near, Metric::asc_ext_far));
    if (asc_int->parsed()) return run_point(o, {Metric::asc_int_near});
    if (sweep->parsed()) return run_sweeps(o, preset, out_dir, with_mc, sweep_samples);
    if (mc->parsed()) return run_mc_validate(o, metric, samples, mode);
    if (quad->parsed()) return run_quad_table(kind, order);
    if (dist->parsed()) return run_dist_table(o, geometry, g_min, g_max, points);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error=invalid_input message=\"%s\"\n", e.what());
    return kExitInvalid;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error=invalid_input message=\"%s\"\n", e.what());
    return kExitInvalid;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error=numerical message=\"%s\"\n", e.what());
    return kExitNumerical;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error=io message=\"%s\"\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error=io message=\"%s\"\n", e.what());
    return kExitIo;
  }
  return 0;
}
