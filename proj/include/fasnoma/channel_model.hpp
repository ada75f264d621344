#pragma once

// Port grids, spatial correlation, and average SNRs of the wireless-powered
// downlink. All internal quantities are linear scale.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fasnoma/errors.hpp"
#include "fasnoma/gaussian_copula.hpp"
#include "fasnoma/special_functions.hpp"

namespace fasnoma {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

/// Ports laid out as an n1 x n2 grid spanning w1 x w2 wavelengths.
struct FasGeometry {
  int n1 = 1;
  int n2 = 1;
  double w1 = 0.0;
  double w2 = 0.0;

  int ports() const noexcept { return n1 * n2; }
  bool operator==(const FasGeometry&) const = default;
};

inline void validate(const FasGeometry& g) {
  if (g.n1 < 1 || g.n2 < 1) throw ConfigError("port grid dimensions must be positive");
  if (!(g.w1 >= 0.0) || !(g.w2 >= 0.0) || !std::isfinite(g.w1) || !std::isfinite(g.w2)) {
    throw ConfigError("aperture sizes must be finite and nonnegative");
  }
}

/// Single fixed antenna.
inline FasGeometry single_antenna() { return {1, 1, 0.0, 0.0}; }

/// k x k grid over a side x side wavelength square.
inline FasGeometry square_grid(int k, double side) { return {k, k, side, side}; }

enum class CorrelationKernel { spherical, cylindrical };

struct Topology {
  double d_t = 100.0;
  double d_un = 20.0;
  double d_uf = 60.0;
  double d_e = 100.0;
  double alpha = 3.0;
  double path_loss = 1.0;
};

inline void validate(const Topology& t) {
  for (double d : {t.d_t, t.d_un, t.d_uf, t.d_e}) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("distances must be positive and finite");
  }
  if (!(t.alpha > 2.0) || !std::isfinite(t.alpha)) throw ConfigError("path-loss exponent must exceed 2");
  if (!(t.path_loss > 0.0) || !std::isfinite(t.path_loss)) throw ConfigError("propagation loss must be positive");
}

struct RadioParams {
  double p_beacon_dbm = 30.0;
  double noise_un_dbm = -90.0;
  double noise_uf_dbm = -90.0;
  double noise_e_dbm = -80.0;
};

inline void validate(const RadioParams& r) {
  for (double v : {r.p_beacon_dbm, r.noise_un_dbm, r.noise_uf_dbm, r.noise_e_dbm}) {
    if (!std::isfinite(v)) throw ConfigError("power levels must be finite");
  }
}

struct PowerAllocation {
  double p_un = 0.4;
  double p_uf = 0.6;
};

inline void validate(const PowerAllocation& p) {
  if (!(p.p_un > 0.0 && p.p_un < 1.0 && p.p_uf > 0.0 && p.p_uf < 1.0)) {
    throw ConfigError("power allocation factors must lie in (0, 1)");
  }
  if (std::abs(p.p_un + p.p_uf - 1.0) > 1e-12) throw ConfigError("power allocation factors must sum to 1");
  if (!(p.p_uf > p.p_un)) throw ConfigError("the far user must receive the larger power share");
}

enum class NodeId { near_user, far_user, eavesdropper };

/// 1-based port index to 1-based (row, column), row-major.
inline std::pair<int, int> port_map(int n, const FasGeometry& g) {
  if (n < 1 || n > g.ports()) throw DomainError("port index out of range");
  return {(n - 1) / g.n2 + 1, (n - 1) % g.n2 + 1};
}

inline int port_unmap(int row, int col, const FasGeometry& g) {
  if (row < 1 || row > g.n1 || col < 1 || col > g.n2) throw DomainError("grid position out of range");
  return (row - 1) * g.n2 + col;
}

/// Correlation between ports n and m (1-based).
inline double spatial_correlation(int n, int m, const FasGeometry& g,
                                  CorrelationKernel kernel = CorrelationKernel::spherical) {
  const auto [n_row, n_col] = port_map(n, g);
  const auto [m_row, m_col] = port_map(m, g);
  // A dimension holding a single port contributes no offset.
  const double dx = g.n1 > 1 ? static_cast<double>(n_row - m_row) / (g.n1 - 1) * g.w1 : 0.0;
  const double dy = g.n2 > 1 ? static_cast<double>(n_col - m_col) / (g.n2 - 1) * g.w2 : 0.0;
  const double arg = 2.0 * std::numbers::pi * std::sqrt(dx * dx + dy * dy);
  return kernel == CorrelationKernel::spherical ? sph_bessel_j0(arg) : bessel_j0(arg);
}

inline Eigen::MatrixXd correlation_matrix(const FasGeometry& g,
                                          CorrelationKernel kernel = CorrelationKernel::spherical) {
  validate(g);
  const int n = g.ports();
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (int j = 0; j < i; ++j) r(i, j) = r(j, i) = spatial_correlation(i + 1, j + 1, g, kernel);
  }
  return r;
}

/// Groups ports (0-based) that map onto each other under the reflections of
/// the grid, plus the transpose when the grid is square with equal sides.
inline std::vector<CoordinateOrbit> port_orbits(const FasGeometry& g) {
  validate(g);
  const bool square = g.n1 == g.n2 && g.w1 == g.w2;
  std::vector<int> owner(static_cast<std::size_t>(g.ports()), -1);
  std::vector<CoordinateOrbit> orbits;
  for (int p = 0; p < g.ports(); ++p) {
    if (owner[static_cast<std::size_t>(p)] >= 0) continue;
    const int r = p / g.n2;
    const int c = p % g.n2;
    std::set<int> images;
    for (int flip_r = 0; flip_r < 2; ++flip_r) {
      for (int flip_c = 0; flip_c < 2; ++flip_c) {
        const int rr = flip_r ? g.n1 - 1 - r : r;
        const int cc = flip_c ? g.n2 - 1 - c : c;
        images.insert(rr * g.n2 + cc);
        if (square) images.insert(cc * g.n2 + rr);
      }
    }
    for (int q : images) owner[static_cast<std::size_t>(q)] = p;
    orbits.push_back({p, static_cast<int>(images.size())});
  }
  return orbits;
}

/// Linear average SNR: P_p L_p / (sigma_j^2 d_t^alpha d_j^alpha).
inline double average_snr(NodeId node, const Topology& t, const RadioParams& r) {
  validate(t);
  validate(r);
  double d = t.d_un;
  double noise_dbm = r.noise_un_dbm;
  switch (node) {
    case NodeId::near_user:
      break;
    case NodeId::far_user:
      d = t.d_uf;
      noise_dbm = r.noise_uf_dbm;
      break;
    case NodeId::eavesdropper:
      d = t.d_e;
      noise_dbm = r.noise_e_dbm;
      break;
  }
  return dbm_to_watts(r.p_beacon_dbm) * t.path_loss /
         (dbm_to_watts(noise_dbm) * std::pow(t.d_t, t.alpha) * std::pow(d, t.alpha));
}

}  // namespace fasnoma
