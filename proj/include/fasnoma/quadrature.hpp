#pragma once

// Gauss-Laguerre and Gauss-Legendre rules.
//
// Nodes start from the eigenvalues of the Jacobi (three-term recurrence)
// matrix and are polished by Newton iteration on the orthogonal polynomial
// itself. Laguerre polynomials are evaluated with a running power-of-ten
// rescale so that orders up to 200 (largest node ~ 770) never overflow; the
// weights are formed in the log domain for the same reason.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fasnoma/errors.hpp"

namespace fasnoma {

enum class QuadratureKind { laguerre, legendre };

inline constexpr int kMaxQuadratureOrder = 200;

struct QuadratureRule {
  QuadratureKind kind = QuadratureKind::legendre;
  std::vector<double> nodes;
  /// Classical weights (for Laguerre these include the e^{-x} factor and
  /// may underflow to zero for the outermost nodes of very high orders).
  std::vector<double> weights;
  /// Natural log of each classical weight; always finite.
  std::vector<double> log_weights;
  /// Weights to apply to an undamped integrand: e^{x} w for Laguerre, w for
  /// Legendre.
  std::vector<double> integration_weights;

  int order() const noexcept { return static_cast<int>(nodes.size()); }
};

namespace detail {

struct ScaledPair {
  long double current;   // P_n(x) with a power of ten removed
  long double previous;  // P_{n-1}(x), same scaling
  long double log_scale; // natural log of the factor removed
};

// Extended precision keeps the Newton polish and the weights accurate to
// ~1e-15 relative even at order 200.
inline ScaledPair laguerre_pair(int n, long double x) {
  long double prev = 1.0L;     // L_0
  long double cur = 1.0L - x;  // L_1
  long double log_scale = 0.0L;
  if (n == 0) return {1.0L, 0.0L, 0.0L};
  for (int k = 1; k < n; ++k) {
    const long double next = ((2.0L * k + 1.0L - x) * cur - k * prev) / (k + 1.0L);
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e150L) {
      cur *= 1e-150L;
      prev *= 1e-150L;
      log_scale += 150.0L * std::log(10.0L);
    }
  }
  return {cur, prev, log_scale};
}

inline ScaledPair legendre_pair(int n, long double x) {
  long double prev = 1.0L;
  long double cur = x;
  if (n == 0) return {1.0L, 0.0L, 0.0L};
  for (int k = 1; k < n; ++k) {
    const long double next = ((2.0L * k + 1.0L) * x * cur - k * prev) / (k + 1.0L);
    prev = cur;
    cur = next;
  }
  return {cur, prev, 0.0L};
}

inline std::vector<double> jacobi_eigenvalues(const Eigen::VectorXd& diag,
                                              const Eigen::VectorXd& subdiag) {
  std::vector<double> out(static_cast<std::size_t>(diag.size()));
  if (diag.size() == 1) {
    out[0] = diag(0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Jacobi matrix eigen-solve failed");
  for (Eigen::Index i = 0; i < diag.size(); ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
  std::sort(out.begin(), out.end());
  return out;
}

inline void check_order(int order) {
  if (order < 1 || order > kMaxQuadratureOrder) {
    throw ConfigError("quadrature order must lie in [1, " + std::to_string(kMaxQuadratureOrder) +
                      "], got " + std::to_string(order));
  }
}

}  // namespace detail

/// Gauss-Laguerre rule with `order` nodes: int_0^inf e^{-x} p(x) dx exact
/// for polynomials p of degree <= 2*order - 1.
inline QuadratureRule gauss_laguerre_rule(int order) {
  detail::check_order(order);
  const int n = order;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag(k) = 2.0 * k + 1.0;
  for (int k = 1; k < n; ++k) sub(k - 1) = k;
  std::vector<double> nodes = detail::jacobi_eigenvalues(diag, sub);

  QuadratureRule rule;
  rule.kind = QuadratureKind::laguerre;
  for (double guess : nodes) {
    long double x = guess;
    for (int iter = 0; iter < 20; ++iter) {
      const auto p = detail::laguerre_pair(n, x);
      // L_n' = n (L_n - L_{n-1}) / x
      const long double dx = p.current / (n * (p.current - p.previous) / x);
      x -= dx;
      if (std::abs(dx) <= 1e-19L * x) break;
    }
    // w = x / ((n+1)^2 L_{n+1}(x)^2)
    const auto p = detail::laguerre_pair(n + 1, x);
    const long double log_w = std::log(x) - 2.0L * std::log(n + 1.0L) -
                              2.0L * (std::log(std::abs(p.current)) + p.log_scale);
    rule.nodes.push_back(static_cast<double>(x));
    rule.log_weights.push_back(static_cast<double>(log_w));
    rule.weights.push_back(static_cast<double>(std::exp(log_w)));
    rule.integration_weights.push_back(static_cast<double>(std::exp(log_w + x)));
  }
  return rule;
}

/// Gauss-Legendre rule on (-1, 1) with `order` nodes.
inline QuadratureRule gauss_legendre_rule(int order) {
  detail::check_order(order);
  const int n = order;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  std::vector<double> nodes = detail::jacobi_eigenvalues(diag, sub);

  auto derivative = [n](long double x, const detail::ScaledPair& p) {
    return n * (x * p.current - p.previous) / (x * x - 1.0L);
  };
  for (double& node : nodes) {
    long double x = node;
    for (int iter = 0; iter < 20; ++iter) {
      const auto p = detail::legendre_pair(n, x);
      const long double dx = p.current / derivative(x, p);
      x -= dx;
      if (std::abs(dx) <= 1e-19L) break;
    }
    node = static_cast<double>(x);
  }
  // Exact symmetry about the origin.
  for (int i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (nodes[static_cast<std::size_t>(n - 1 - i)] - nodes[static_cast<std::size_t>(i)]);
    nodes[static_cast<std::size_t>(i)] = -m;
    nodes[static_cast<std::size_t>(n - 1 - i)] = m;
  }
  if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;

  QuadratureRule rule;
  rule.kind = QuadratureKind::legendre;
  rule.nodes = nodes;
  for (double x : nodes) {
    const auto p = detail::legendre_pair(n, x);
    const long double d = derivative(x, p);
    const double w = static_cast<double>(2.0L / ((1.0L - static_cast<long double>(x) * x) * d * d));
    rule.weights.push_back(w);
    rule.log_weights.push_back(std::log(w));
    rule.integration_weights.push_back(w);
  }
  return rule;
}

/// int_0^inf f(x) dx ~ sum e^{x_m} w_m f(x_m) over a Laguerre rule.
template <typename F>
double integrate_semi_infinite(F&& f, const QuadratureRule& rule) {
  if (rule.kind != QuadratureKind::laguerre) {
    throw ConfigError("integrate_semi_infinite requires a Gauss-Laguerre rule");
  }
  double sum = 0.0;
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const double value = f(rule.nodes[m]);
    if (!std::isfinite(value)) throw EvaluationError("non-finite integrand", rule.nodes[m]);
    sum += rule.integration_weights[m] * value;
  }
  return sum;
}

/// int_a^b f(x) dx via the affine image of a Legendre rule.
template <typename F>
double integrate_interval(F&& f, double a, double b, const QuadratureRule& rule) {
  if (rule.kind != QuadratureKind::legendre) {
    throw ConfigError("integrate_interval requires a Gauss-Legendre rule");
  }
  if (!(a < b)) throw DomainError("integrate_interval: require a < b");
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  double sum = 0.0;
  for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
    const double x = half * rule.nodes[m] + mid;
    const double value = f(x);
    if (!std::isfinite(value)) throw EvaluationError("non-finite integrand", x);
    sum += rule.weights[m] * value;
  }
  return half * sum;
}

}  // namespace fasnoma
