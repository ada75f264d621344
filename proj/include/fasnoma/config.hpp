#pragma once

// Run configuration: a JSON document with every field optional. Omitted
// fields take the reference-scenario defaults; unknown keys are rejected so a
// misspelt key can never silently fall back to a default.

#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fasnoma/channel_model.hpp"
#include "fasnoma/errors.hpp"
#include "fasnoma/fas_distribution.hpp"
#include "fasnoma/monte_carlo.hpp"
#include "fasnoma/secrecy_metrics.hpp"

namespace fasnoma {

enum class SweepScale { db, linear };

struct SweepSpec {
  /// One of snr_un, snr_uf, snr_e, rate_un, rate_uf, beacon_dbm.
  std::string variable = "snr_un";
  double start = 0.0;
  double stop = 20.0;
  int points = 11;
  /// Unit of start/stop for SNR variables; rates and beacon power are always
  /// taken in their own units (bits, dBm) and need linear.
  SweepScale scale = SweepScale::db;

  double value(int i) const { return start + (stop - start) * i / (points - 1); }
};

struct McSpec {
  bool enabled = false;
  std::int64_t n_samples = 10'000'000;
  std::uint64_t seed = 1;
  EnergyLinkMode mode = EnergyLinkMode::independent_energy_link;
};

/// Fixed average SNRs in dB; a node without one uses the link budget.
struct SnrOverrides {
  std::optional<double> un_db;
  std::optional<double> uf_db;
  std::optional<double> e_db;
};

struct RunConfig {
  Topology topology;
  RadioParams radio;
  PowerAllocation alloc;
  SnrOverrides snr;
  FasGeometry geom_un = square_grid(2, 1.0);
  FasGeometry geom_uf = square_grid(2, 1.0);
  FasGeometry geom_e = square_grid(2, 1.0);
  FasGainOptions fas;
  SecrecyConfig secrecy;
  SweepSpec sweep;
  McSpec mc;
  std::vector<Metric> metrics{Metric::sop_ext_near};
  std::string csv_path;
  int precision = 10;
  /// Worker threads for sweep points and simulation; 0 means all cores.
  int threads = 0;
};

inline constexpr const char* kSeedVariable = "FASNOMA_SEED";

inline Metric parse_metric(const std::string& name) {
  for (Metric m : {Metric::sop_ext_near, Metric::sop_ext_far, Metric::sop_int_near, Metric::asc_ext_near,
                   Metric::asc_ext_far, Metric::asc_int_near}) {
    if (name == metric_name(m)) return m;
  }
  throw ConfigError("unknown metric '" + name + "'");
}

inline bool is_snr_variable(const std::string& v) { return v == "snr_un" || v == "snr_uf" || v == "snr_e"; }

inline void validate(const SweepSpec& s) {
  static const std::set<std::string> names{"snr_un", "snr_uf", "snr_e", "rate_un", "rate_uf", "beacon_dbm"};
  if (!names.count(s.variable)) throw ConfigError("sweep.variable: unknown sweep variable '" + s.variable + "'");
  if (s.points < 2) throw ConfigError("sweep.points: at least 2 points are required");
  if (!std::isfinite(s.start) || !std::isfinite(s.stop)) throw ConfigError("sweep.start/stop: must be finite");
  if (!is_snr_variable(s.variable) && s.scale != SweepScale::linear) {
    throw ConfigError("sweep.scale: only SNR variables can be given in dB");
  }
}

/// Seed used when neither the document nor the command line sets one.
inline std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedVariable);
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == nullptr || *end != '\0') throw ConfigError(std::string(kSeedVariable) + ": not an unsigned integer");
  return v;
}

namespace detail {

using Json = nlohmann::json;

inline void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw ConfigError((where.empty() ? "" : where + ".") + item.key() + ": unknown key");
  }
}

inline std::string key_path(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

inline void read_number(const Json& obj, const std::string& where, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(key_path(where, key) + ": must be a number");
  out = v.get<double>();
  if (!std::isfinite(out)) throw ConfigError(key_path(where, key) + ": must be finite");
}

inline void read_int(const Json& obj, const std::string& where, const char* key, std::int64_t lo, std::int64_t& out) {
  if (!obj.contains(key)) return;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(key_path(where, key) + ": must be an integer");
  out = v.get<std::int64_t>();
  if (out < lo) throw ConfigError(key_path(where, key) + ": must be at least " + std::to_string(lo));
}

inline void read_int(const Json& obj, const std::string& where, const char* key, int lo, int& out) {
  std::int64_t wide = out;
  read_int(obj, where, key, static_cast<std::int64_t>(lo), wide);
  out = static_cast<int>(wide);
}

inline void read_bool(const Json& obj, const std::string& where, const char* key, bool& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_boolean()) throw ConfigError(key_path(where, key) + ": must be true or false");
  out = obj.at(key).get<bool>();
}

inline std::optional<std::string> read_string(const Json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  if (!obj.at(key).is_string()) throw ConfigError(key_path(where, key) + ": must be a string");
  return obj.at(key).get<std::string>();
}

template <typename E>
E read_choice(const std::string& text, const std::string& path,
              std::initializer_list<std::pair<const char*, E>> choices) {
  std::string names;
  for (const auto& [name, value] : choices) {
    if (text == name) return value;
    names += (names.empty() ? "" : "|") + std::string(name);
  }
  throw ConfigError(path + ": expected one of " + names);
}

inline FasGeometry read_geometry(const Json& obj, const std::string& where) {
  check_keys(obj, where, {"n1", "n2", "w1", "w2"});
  FasGeometry g{1, 1, 0.0, 0.0};
  read_int(obj, where, "n1", 1, g.n1);
  read_int(obj, where, "n2", 1, g.n2);
  read_number(obj, where, "w1", g.w1);
  read_number(obj, where, "w2", g.w2);
  try {
    validate(g);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return g;
}

// Re-throws a validation failure with the section it came from.
template <typename T>
void validate_section(const T& value, const char* section) {
  try {
    validate(value);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(section) + ": " + e.what());
  }
}

}  // namespace detail

/// Parses and validates a configuration document. An empty (or all-blank)
/// document yields the reference scenario.
inline RunConfig parse_config(const std::string& text) {
  using detail::Json;
  RunConfig cfg;
  cfg.mc.seed = default_seed();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return cfg;

  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  detail::check_keys(doc, "",
                     {"topology", "radio", "allocation", "snr_db", "geometry", "distribution", "secrecy", "sweep",
                      "metrics", "monte_carlo", "output", "threads"});

  if (doc.contains("topology")) {
    const Json& t = doc["topology"];
    detail::check_keys(t, "topology", {"d_t", "d_un", "d_uf", "d_e", "alpha", "path_loss"});
    detail::read_number(t, "topology", "d_t", cfg.topology.d_t);
    detail::read_number(t, "topology", "d_un", cfg.topology.d_un);
    detail::read_number(t, "topology", "d_uf", cfg.topology.d_uf);
    detail::read_number(t, "topology", "d_e", cfg.topology.d_e);
    detail::read_number(t, "topology", "alpha", cfg.topology.alpha);
    detail::read_number(t, "topology", "path_loss", cfg.topology.path_loss);
  }
  if (doc.contains("radio")) {
    const Json& r = doc["radio"];
    detail::check_keys(r, "radio", {"beacon_dbm", "noise_un_dbm", "noise_uf_dbm", "noise_e_dbm"});
    detail::read_number(r, "radio", "beacon_dbm", cfg.radio.p_beacon_dbm);
    detail::read_number(r, "radio", "noise_un_dbm", cfg.radio.noise_un_dbm);
    detail::read_number(r, "radio", "noise_uf_dbm", cfg.radio.noise_uf_dbm);
    detail::read_number(r, "radio", "noise_e_dbm", cfg.radio.noise_e_dbm);
  }
  if (doc.contains("allocation")) {
    const Json& a = doc["allocation"];
    detail::check_keys(a, "allocation", {"p_un", "p_uf"});
    detail::read_number(a, "allocation", "p_un", cfg.alloc.p_un);
    detail::read_number(a, "allocation", "p_uf", cfg.alloc.p_uf);
  }
  if (doc.contains("snr_db")) {
    const Json& s = doc["snr_db"];
    detail::check_keys(s, "snr_db", {"un", "uf", "e"});
    auto read = [&](const char* key, std::optional<double>& out) {
      if (!s.contains(key)) return;
      double v = 0.0;
      detail::read_number(s, "snr_db", key, v);
      out = v;
    };
    read("un", cfg.snr.un_db);
    read("uf", cfg.snr.uf_db);
    read("e", cfg.snr.e_db);
  }
  if (doc.contains("geometry")) {
    const Json& g = doc["geometry"];
    detail::check_keys(g, "geometry", {"near_user", "far_user", "eavesdropper"});
    if (g.contains("near_user")) cfg.geom_un = detail::read_geometry(g["near_user"], "geometry.near_user");
    if (g.contains("far_user")) cfg.geom_uf = detail::read_geometry(g["far_user"], "geometry.far_user");
    if (g.contains("eavesdropper")) cfg.geom_e = detail::read_geometry(g["eavesdropper"], "geometry.eavesdropper");
  }
  if (doc.contains("distribution")) {
    const Json& d = doc["distribution"];
    detail::check_keys(d, "distribution", {"kernel", "density", "sqrt2g_marginal_pdf", "table_step"});
    if (auto k = detail::read_string(d, "distribution", "kernel")) {
      cfg.fas.kernel = detail::read_choice<CorrelationKernel>(
          *k, "distribution.kernel",
          {{"spherical", CorrelationKernel::spherical}, {"cylindrical", CorrelationKernel::cylindrical}});
    }
    if (auto f = detail::read_string(d, "distribution", "density")) {
      cfg.fas.density = detail::read_choice<FasDensityForm>(
          *f, "distribution.density",
          {{"exact", FasDensityForm::exact}, {"copula_diagonal", FasDensityForm::copula_diagonal}});
    }
    detail::read_bool(d, "distribution", "sqrt2g_marginal_pdf", cfg.fas.sqrt2g_marginal_pdf);
    detail::read_number(d, "distribution", "table_step", cfg.fas.table_step);
    if (!(cfg.fas.table_step > 0.0 && cfg.fas.table_step <= 1.0)) {
      throw ConfigError("distribution.table_step: must lie in (0, 1]");
    }
  }
  if (doc.contains("secrecy")) {
    const Json& s = doc["secrecy"];
    detail::check_keys(s, "secrecy",
                       {"rate_un", "rate_uf", "laguerre_order", "legendre_order", "scheme", "far_capacity_form"});
    detail::read_number(s, "secrecy", "rate_un", cfg.secrecy.rate_un);
    detail::read_number(s, "secrecy", "rate_uf", cfg.secrecy.rate_uf);
    detail::read_int(s, "secrecy", "laguerre_order", 1, cfg.secrecy.laguerre_order);
    detail::read_int(s, "secrecy", "legendre_order", 1, cfg.secrecy.legendre_order);
    if (auto v = detail::read_string(s, "secrecy", "scheme")) {
      cfg.secrecy.scheme = detail::read_choice<QuadratureScheme>(
          *v, "secrecy.scheme", {{"mapped", QuadratureScheme::mapped}, {"laguerre", QuadratureScheme::laguerre}});
    }
    if (auto v = detail::read_string(s, "secrecy", "far_capacity_form")) {
      cfg.secrecy.far_capacity_form = detail::read_choice<FarCapacityForm>(
          *v, "secrecy.far_capacity_form",
          {{"legendre", FarCapacityForm::legendre},
           {"legendre_times_exp_node", FarCapacityForm::legendre_times_exp_node}});
    }
  }
  if (doc.contains("sweep")) {
    const Json& s = doc["sweep"];
    detail::check_keys(s, "sweep", {"variable", "start", "stop", "points", "scale"});
    if (auto v = detail::read_string(s, "sweep", "variable")) cfg.sweep.variable = *v;
    detail::read_number(s, "sweep", "start", cfg.sweep.start);
    detail::read_number(s, "sweep", "stop", cfg.sweep.stop);
    detail::read_int(s, "sweep", "points", 2, cfg.sweep.points);
    cfg.sweep.scale = is_snr_variable(cfg.sweep.variable) ? SweepScale::db : SweepScale::linear;
    if (auto v = detail::read_string(s, "sweep", "scale")) {
      cfg.sweep.scale = detail::read_choice<SweepScale>(*v, "sweep.scale",
                                                        {{"db", SweepScale::db}, {"linear", SweepScale::linear}});
    }
  }
  if (doc.contains("metrics")) {
    const Json& m = doc["metrics"];
    if (!m.is_array() || m.empty()) throw ConfigError("metrics: must be a nonempty array of metric names");
    cfg.metrics.clear();
    for (const Json& name : m) {
      if (!name.is_string()) throw ConfigError("metrics: entries must be strings");
      try {
        cfg.metrics.push_back(parse_metric(name.get<std::string>()));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("metrics: ") + e.what());
      }
    }
  }
  if (doc.contains("monte_carlo")) {
    const Json& m = doc["monte_carlo"];
    detail::check_keys(m, "monte_carlo", {"enabled", "n_samples", "seed", "mode"});
    detail::read_bool(m, "monte_carlo", "enabled", cfg.mc.enabled);
    detail::read_int(m, "monte_carlo", "n_samples", std::int64_t{10'000}, cfg.mc.n_samples);
    std::int64_t seed = static_cast<std::int64_t>(cfg.mc.seed);
    detail::read_int(m, "monte_carlo", "seed", std::int64_t{0}, seed);
    cfg.mc.seed = static_cast<std::uint64_t>(seed);
    if (auto v = detail::read_string(m, "monte_carlo", "mode")) {
      cfg.mc.mode = detail::read_choice<EnergyLinkMode>(
          *v, "monte_carlo.mode",
          {{"independent", EnergyLinkMode::independent_energy_link}, {"shared", EnergyLinkMode::shared_energy_link}});
    }
  }
  if (doc.contains("output")) {
    const Json& o = doc["output"];
    detail::check_keys(o, "output", {"csv", "precision"});
    if (auto v = detail::read_string(o, "output", "csv")) cfg.csv_path = *v;
    detail::read_int(o, "output", "precision", 1, cfg.precision);
    if (cfg.precision > 17) throw ConfigError("output.precision: at most 17 significant digits");
  }
  if (doc.contains("threads")) detail::read_int(doc, "", "threads", 0, cfg.threads);

  detail::validate_section(cfg.topology, "topology");
  detail::validate_section(cfg.radio, "radio");
  detail::validate_section(cfg.alloc, "allocation");
  detail::validate_section(cfg.secrecy, "secrecy");
  detail::validate_section(cfg.sweep, "sweep");
  return cfg;
}

/// Linear average SNRs of the three receivers: the fixed value when one is
/// configured, the link budget otherwise.
inline ScenarioParams scenario_for(const RunConfig& cfg) {
  ScenarioParams p;
  p.alloc = cfg.alloc;
  p.snr_un = cfg.snr.un_db ? db_to_linear(*cfg.snr.un_db) : average_snr(NodeId::near_user, cfg.topology, cfg.radio);
  p.snr_uf = cfg.snr.uf_db ? db_to_linear(*cfg.snr.uf_db) : average_snr(NodeId::far_user, cfg.topology, cfg.radio);
  p.snr_e = cfg.snr.e_db ? db_to_linear(*cfg.snr.e_db) : average_snr(NodeId::eavesdropper, cfg.topology, cfg.radio);
  return p;
}

}  // namespace fasnoma
