#pragma once

// Multivariate-normal machinery behind the Gaussian copula: factorization
// with diagonal-loading repair, orthant-type CDFs by randomized lattice QMC
// (separation of variables with variable reordering), and the copula density
// correction at a diagonal point.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fasnoma/errors.hpp"
#include "fasnoma/rng.hpp"
#include "fasnoma/special_functions.hpp"

namespace fasnoma {

/// Smallest Cholesky pivot accepted before diagonal loading kicks in.
inline constexpr double kPivotFloor = 1e-12;

struct CorrelationMatrix {
  Eigen::MatrixXd entries;  // unit diagonal, after any repair
  Eigen::MatrixXd lower;    // entries = lower * lower^T
  double log_det = 0.0;
  double jitter = 0.0;      // diagonal loading that was applied (0 if none)

  int dim() const noexcept { return static_cast<int>(entries.rows()); }
};

namespace detail {

// Plain Cholesky that refuses pivots below kPivotFloor.
inline bool try_cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& lower) {
  const Eigen::Index n = a.rows();
  lower.setZero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot >= kPivotFloor)) return false;
    const double root = std::sqrt(pivot);
    lower(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / root;
    }
  }
  return true;
}

}  // namespace detail

/// Validates a correlation matrix and factors it, loading the diagonal by
/// lambda = 1e-10, 1e-9, ..., 1e-4 (then rescaling to unit diagonal) when the
/// plain factorization hits a pivot below the floor.
inline CorrelationMatrix repair_and_factor(const Eigen::MatrixXd& raw) {
  const Eigen::Index n = raw.rows();
  if (n < 1 || raw.cols() != n) throw DomainError("correlation matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(raw(i, i) - 1.0) > 1e-12) throw DomainError("correlation matrix must have unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (!std::isfinite(raw(i, j)) || std::abs(raw(i, j) - raw(j, i)) > 1e-12) {
        throw DomainError("correlation matrix must be finite and symmetric");
      }
      if (std::abs(raw(i, j)) > 1.0 + 1e-12) throw DomainError("correlation entries must lie in [-1, 1]");
    }
  }

  CorrelationMatrix out;
  Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
  sym.diagonal().setOnes();
  for (double lambda = 0.0; lambda <= 1e-4 * 1.0000001; lambda = lambda == 0.0 ? 1e-10 : lambda * 10.0) {
    Eigen::MatrixXd candidate = sym;
    if (lambda > 0.0) {
      candidate.diagonal().array() += lambda;
      candidate /= 1.0 + lambda;
      candidate.diagonal().setOnes();
    }
    if (detail::try_cholesky(candidate, out.lower)) {
      out.entries = candidate;
      out.jitter = lambda;
      out.log_det = 2.0 * out.lower.diagonal().array().log().sum();
      return out;
    }
  }
  throw NumericalError("correlation matrix not factorizable even with diagonal loading 1e-4");
}

struct MvnOptions {
  double abs_accuracy = 1e-6;
  double rel_accuracy = 1e-4;
  std::uint64_t seed = 0;
  int shifts = 8;
  int min_points = 256;    // per shift, antithetic pairs
  int max_points = 16384;  // per shift
};

struct MvnResult {
  double probability = 0.0;
  double error = 0.0;
  /// False when the sampling budget ran out before the target accuracy.
  bool converged = true;
};

namespace detail {

inline std::vector<double> lattice_generator(int dims) {
  std::vector<double> alpha;
  for (int candidate = 2; static_cast<int>(alpha.size()) < dims; ++candidate) {
    bool prime = true;
    for (int d = 2; d * d <= candidate; ++d) {
      if (candidate % d == 0) {
        prime = false;
        break;
      }
    }
    if (prime) {
      const double r = std::sqrt(static_cast<double>(candidate));
      alpha.push_back(r - std::floor(r));
    }
  }
  return alpha;
}

// Two-sided Student t quantile at 99% with 7 degrees of freedom.
inline double confidence_multiplier(int shifts) {
  static constexpr double table[] = {0.0,   63.657, 9.925, 5.841, 4.604, 4.032, 3.707, 3.499,
                                     3.355, 3.250,  3.169, 3.106, 3.055, 3.012, 2.977, 2.947};
  const int dof = shifts - 1;
  if (dof >= 1 && dof < 16) return table[dof];
  return 2.576;
}

}  // namespace detail

/// P(Z_i <= upper_i for all i), Z ~ N(0, corr). `corr` must be a
/// positive-definite correlation matrix; infinite limits are allowed.
inline MvnResult mvn_cdf(const Eigen::VectorXd& upper, const Eigen::MatrixXd& corr, const MvnOptions& opt) {
  const Eigen::Index n_all = upper.size();
  if (corr.rows() != n_all || corr.cols() != n_all) throw DomainError("mvn_cdf: dimension mismatch");
  if (!(opt.abs_accuracy > 0.0) || opt.shifts < 2 || opt.min_points < 1 || opt.max_points < opt.min_points) {
    throw ConfigError("mvn_cdf: invalid options");
  }

  // Coordinates with an infinite upper limit integrate out.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n_all; ++i) {
    if (std::isnan(upper(i))) throw DomainError("mvn_cdf: NaN limit");
    if (upper(i) == -std::numeric_limits<double>::infinity()) return {0.0, 0.0, true};
    if (upper(i) != std::numeric_limits<double>::infinity()) keep.push_back(i);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  if (n == 0) return {1.0, 0.0, true};
  if (n == 1) return {std_normal_cdf(upper(keep[0])), 0.0, true};

  Eigen::MatrixXd c(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i) = upper(keep[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = corr(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
  }

  // Cholesky with greedy reordering: at each step pick the coordinate with the
  // smallest conditional probability given the expected values so far.
  constexpr double kVarianceFloor = 1e-15;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = i;
    double best_prob = 2.0;
    for (Eigen::Index j = i; j < n; ++j) {
      double var = c(j, j);
      double shift = 0.0;
      for (Eigen::Index k = 0; k < i; ++k) {
        var -= l(j, k) * l(j, k);
        shift += l(j, k) * y(k);
      }
      const double prob = std_normal_cdf((b(j) - shift) / std::sqrt(std::max(var, kVarianceFloor)));
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      c.row(i).swap(c.row(best));
      c.col(i).swap(c.col(best));
      l.row(i).swap(l.row(best));
      std::swap(b(i), b(best));
    }
    double var = c(i, i);
    double shift = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) {
      var -= l(i, k) * l(i, k);
      shift += l(i, k) * y(k);
    }
    const double root = std::sqrt(std::max(var, kVarianceFloor));
    l(i, i) = root;
    for (Eigen::Index m = i + 1; m < n; ++m) {
      double s = c(m, i);
      for (Eigen::Index k = 0; k < i; ++k) s -= l(m, k) * l(i, k);
      l(m, i) = s / root;
    }
    // Mean of the standard normal truncated to (-inf, b'].
    const double bp = (b(i) - shift) / root;
    const double mass = std_normal_cdf(bp);
    y(i) = mass > 1e-300 ? -std_normal_pdf(bp) / mass : bp;
  }

  const int dims = static_cast<int>(n) - 1;
  const std::vector<double> alpha = detail::lattice_generator(dims);
  std::vector<std::vector<double>> shift_vectors(static_cast<std::size_t>(opt.shifts),
                                                 std::vector<double>(static_cast<std::size_t>(dims)));
  for (int s = 0; s < opt.shifts; ++s) {
    Stream stream(opt.seed, static_cast<std::uint64_t>(s));
    for (double& v : shift_vectors[static_cast<std::size_t>(s)]) v = stream.uniform();
  }

  const double e0 = std_normal_cdf(b(0) / l(0, 0));
  std::vector<double> ys(static_cast<std::size_t>(n));
  auto integrand = [&](const std::vector<double>& w) {
    double e = e0;
    double f = e0;
    for (Eigen::Index i = 1; i < n && f > 0.0; ++i) {
      const double u = std::max(w[static_cast<std::size_t>(i - 1)] * e, std::numeric_limits<double>::min());
      ys[static_cast<std::size_t>(i - 1)] = detail::fast_normal_quantile(std::min(u, 1.0 - 1e-16));
      double s = 0.0;
      for (Eigen::Index k = 0; k < i; ++k) s += l(i, k) * ys[static_cast<std::size_t>(k)];
      e = std_normal_cdf((b(i) - s) / l(i, i));
      f *= e;
    }
    return f;
  };

  std::vector<double> sums(static_cast<std::size_t>(opt.shifts), 0.0);
  std::vector<double> w(static_cast<std::size_t>(dims));
  std::vector<double> w_anti(static_cast<std::size_t>(dims));
  long long done = 0;
  long long target = opt.min_points;
  MvnResult result;
  while (true) {
    for (int s = 0; s < opt.shifts; ++s) {
      const auto& delta = shift_vectors[static_cast<std::size_t>(s)];
      double acc = 0.0;
      for (long long k = done + 1; k <= target; ++k) {
        for (int j = 0; j < dims; ++j) {
          double t = static_cast<double>(k) * alpha[static_cast<std::size_t>(j)] + delta[static_cast<std::size_t>(j)];
          t -= std::floor(t);
          t = 1.0 - std::abs(2.0 * t - 1.0);  // baker's transform
          w[static_cast<std::size_t>(j)] = t;
          w_anti[static_cast<std::size_t>(j)] = 1.0 - t;
        }
        acc += 0.5 * (integrand(w) + integrand(w_anti));
      }
      sums[static_cast<std::size_t>(s)] += acc;
    }
    done = target;

    double mean = 0.0;
    for (double v : sums) mean += v / static_cast<double>(done);
    mean /= opt.shifts;
    double var = 0.0;
    for (double v : sums) {
      const double d = v / static_cast<double>(done) - mean;
      var += d * d;
    }
    var /= (opt.shifts - 1.0);
    const double err = detail::confidence_multiplier(opt.shifts) * std::sqrt(var / opt.shifts) + 1e-12 * mean;
    result.probability = std::clamp(mean, 0.0, 1.0);
    result.error = err;
    // Relative to the smaller tail so survival probabilities near p = 1 are
    // resolved as well as small probabilities.
    if (err <= std::max(opt.abs_accuracy, opt.rel_accuracy * std::min(mean, 1.0 - mean))) {
      result.converged = true;
      break;
    }
    if (target >= opt.max_points) {
      result.converged = false;
      break;
    }
    target = std::min<long long>(2 * target, opt.max_points);
  }
  return result;
}

/// Phi_R(x, ..., x). Exact 0 / 1 at x = -inf / +inf.
inline MvnResult mvn_cdf_equicoordinate(double x, const CorrelationMatrix& r, const MvnOptions& opt) {
  if (std::isnan(x)) throw DomainError("mvn_cdf_equicoordinate: NaN argument");
  if (x == -std::numeric_limits<double>::infinity()) return {0.0, 0.0, true};
  if (x == std::numeric_limits<double>::infinity()) return {1.0, 0.0, true};
  if (r.dim() == 1) return {std_normal_cdf(x), 0.0, true};
  return mvn_cdf(Eigen::VectorXd::Constant(r.dim(), x), r.entries, opt);
}

/// Convenience overload with an absolute accuracy target in [1e-8, 1e-2].
inline MvnResult mvn_cdf_equicoordinate(double x, const CorrelationMatrix& r, double accuracy,
                                        std::uint64_t seed) {
  if (!(accuracy >= 1e-8 && accuracy <= 1e-2)) {
    throw ConfigError("MVN accuracy must lie in [1e-8, 1e-2], got " + std::to_string(accuracy));
  }
  MvnOptions opt;
  opt.abs_accuracy = accuracy;
  opt.rel_accuracy = 0.0;
  opt.seed = seed;
  return mvn_cdf_equicoordinate(x, r, opt);
}

/// Coordinates whose conditional problems coincide up to a permutation of
/// the remaining coordinates (e.g. grid positions related by a reflection).
struct CoordinateOrbit {
  int representative;
  int multiplicity;
};

/// Derivative of Phi_R(x, ..., x) with respect to x, divided by phi(x):
/// sum over i of P(Z_j <= x for j != i | Z_i = x). When `orbits` is given,
/// one term per orbit is evaluated and weighted by its multiplicity.
inline MvnResult mvn_equicoordinate_slope(double x, const CorrelationMatrix& r, const MvnOptions& opt,
                                          const std::vector<CoordinateOrbit>* orbits = nullptr) {
  const int n = r.dim();
  if (std::isnan(x)) throw DomainError("mvn_equicoordinate_slope: NaN argument");
  if (n == 1) return {1.0, 0.0, true};
  if (x == -std::numeric_limits<double>::infinity()) return {0.0, 0.0, true};
  if (x == std::numeric_limits<double>::infinity()) return {static_cast<double>(n), 0.0, true};

  std::vector<CoordinateOrbit> all;
  if (orbits == nullptr) {
    for (int i = 0; i < n; ++i) all.push_back({i, 1});
    orbits = &all;
  }
  MvnResult total{0.0, 0.0, true};
  for (const CoordinateOrbit& orbit : *orbits) {
    const int i = orbit.representative;
    if (i < 0 || i >= n) throw DomainError("mvn_equicoordinate_slope: orbit representative out of range");
    Eigen::VectorXd limits(n - 1);
    Eigen::MatrixXd cond(n - 1, n - 1);
    std::vector<double> rho(static_cast<std::size_t>(n - 1));
    std::vector<double> sd(static_cast<std::size_t>(n - 1));
    for (int a = 0, ia = 0; a < n; ++a) {
      if (a == i) continue;
      rho[static_cast<std::size_t>(ia)] = r.entries(a, i);
      sd[static_cast<std::size_t>(ia)] = std::sqrt(std::max(1.0 - rho[static_cast<std::size_t>(ia)] * rho[static_cast<std::size_t>(ia)], 1e-300));
      ++ia;
    }
    for (int a = 0, ia = 0; a < n; ++a) {
      if (a == i) continue;
      const auto sa = static_cast<std::size_t>(ia);
      limits(ia) = x * (1.0 - rho[sa]) / sd[sa];
      for (int bb = 0, ib = 0; bb < n; ++bb) {
        if (bb == i) continue;
        const auto sb = static_cast<std::size_t>(ib);
        cond(ia, ib) = ia == ib ? 1.0 : (r.entries(a, bb) - rho[sa] * rho[sb]) / (sd[sa] * sd[sb]);
        ++ib;
      }
      ++ia;
    }
    MvnOptions sub = opt;
    sub.seed = splitmix64(opt.seed ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(i + 1)));
    const MvnResult part = n - 1 == 1 ? MvnResult{std_normal_cdf(limits(0)), 0.0, true} : mvn_cdf(limits, cond, sub);
    total.probability += orbit.multiplicity * part.probability;
    total.error += orbit.multiplicity * part.error;
    total.converged = total.converged && part.converged;
  }
  return total;
}

/// log of exp(-phi^T (R^{-1} - I) phi / 2) / sqrt(det R) with phi = (x, ..., x).
inline double log_copula_density_factor(double x, const CorrelationMatrix& r) {
  if (!std::isfinite(x)) throw DomainError("copula density factor requires a finite argument");
  const Eigen::VectorXd phi = Eigen::VectorXd::Constant(r.dim(), x);
  const Eigen::VectorXd v = r.lower.triangularView<Eigen::Lower>().solve(phi);
  return -0.5 * (v.squaredNorm() - phi.squaredNorm()) - 0.5 * r.log_det;
}

inline double copula_density_factor(double x, const CorrelationMatrix& r) {
  const double value = std::exp(log_copula_density_factor(x, r));
  if (!std::isfinite(value)) throw NumericalError("copula density factor overflow");
  return value;
}

}  // namespace fasnoma
