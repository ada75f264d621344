#include "fasnoma/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fasnoma/special_functions.hpp"
#include "support/oracles.hpp"

namespace fasnoma {
namespace {

long double laguerre_ld(int n, long double x, long double* derivative) {
  long double prev = 1.0L, cur = 1.0L - x;
  for (int k = 1; k < n; ++k) {
    const long double next = ((2 * k + 1 - x) * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  *derivative = n * (cur - prev) / x;
  return cur;
}

long double legendre_ld(int n, long double x, long double* derivative) {
  long double prev = 1.0L, cur = x;
  for (int k = 1; k < n; ++k) {
    const long double next = ((2 * k + 1) * x * cur - k * prev) / (k + 1);
    prev = cur;
    cur = next;
  }
  *derivative = n * (x * cur - prev) / (x * x - 1);
  return cur;
}

TEST(GaussLaguerre, LowOrders) {
  const auto r1 = gauss_laguerre_rule(1);
  ASSERT_EQ(r1.order(), 1);
  EXPECT_NEAR(r1.nodes[0], 1.0, 1e-15);
  EXPECT_NEAR(r1.weights[0], 1.0, 1e-15);

  // L2 = (x^2 - 4x + 2)/2 has roots 2 -+ sqrt(2).
  const auto r2 = gauss_laguerre_rule(2);
  EXPECT_NEAR(r2.nodes[0], 0.5857864376, 1e-10);
  EXPECT_NEAR(r2.nodes[1], 3.4142135624, 1e-10);
  EXPECT_NEAR(r2.weights[0], 0.8535533906, 1e-10);
  EXPECT_NEAR(r2.weights[1], 0.1464466094, 1e-10);
}

TEST(GaussLegendre, LowOrders) {
  const auto r1 = gauss_legendre_rule(1);
  EXPECT_EQ(r1.nodes[0], 0.0);
  EXPECT_NEAR(r1.weights[0], 2.0, 1e-15);

  const auto r2 = gauss_legendre_rule(2);
  EXPECT_NEAR(r2.nodes[0], -0.5773502692, 1e-10);
  EXPECT_NEAR(r2.nodes[1], 0.5773502692, 1e-10);
  EXPECT_NEAR(r2.weights[0], 1.0, 1e-14);
  EXPECT_NEAR(r2.weights[1], 1.0, 1e-14);
  EXPECT_NEAR(integrate_interval([](double x) { return x * x; }, -1.0, 1.0, r2), 2.0 / 3.0, 1e-15);
}

TEST(Quadrature, OrderValidation) {
  EXPECT_THROW(gauss_laguerre_rule(0), ConfigError);
  EXPECT_THROW(gauss_laguerre_rule(201), ConfigError);
  EXPECT_THROW(gauss_legendre_rule(0), ConfigError);
  EXPECT_THROW(gauss_legendre_rule(201), ConfigError);
  EXPECT_NO_THROW(gauss_laguerre_rule(200));
  EXPECT_NO_THROW(gauss_legendre_rule(200));
}

TEST(Quadrature, RuleInvariantsAcrossOrders) {
  for (int order : {1, 2, 3, 5, 10, 20, 40, 80, 120, 200}) {
    for (const auto& rule : {gauss_laguerre_rule(order), gauss_legendre_rule(order)}) {
      ASSERT_EQ(rule.order(), order);
      ASSERT_EQ(rule.weights.size(), rule.nodes.size());
      for (int i = 1; i < order; ++i) EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
      for (int i = 0; i < order; ++i) {
        EXPECT_TRUE(std::isfinite(rule.log_weights[i]));
        EXPECT_TRUE(std::isfinite(rule.integration_weights[i]));
        EXPECT_GT(rule.integration_weights[i], 0.0);
      }
      // Zeroth moments, summed in the log domain so underflowed tail weights
      // still count.
      const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
      const double expected = rule.kind == QuadratureKind::laguerre ? 1.0 : 2.0;
      EXPECT_NEAR(total, expected, 1e-12) << order;
    }
  }
}

TEST(Quadrature, WeightsPositiveWhereRepresentable) {
  for (int order : {1, 2, 10, 40, 100, 150}) {
    const auto rule = gauss_laguerre_rule(order);
    for (double w : rule.weights) EXPECT_GT(w, 0.0) << order;
  }
}

TEST(Quadrature, NodesAreRootsToWorkingPrecision) {
  for (int order : {2, 7, 20, 40, 100, 200}) {
    for (double x : gauss_laguerre_rule(order).nodes) {
      long double d;
      const long double value = laguerre_ld(order, x, &d);
      EXPECT_LE(std::abs(static_cast<double>(value / d)), 1e-12 * std::max(1.0, x)) << order;
    }
    for (double x : gauss_legendre_rule(order).nodes) {
      long double d;
      const long double value = legendre_ld(order, x, &d);
      EXPECT_LE(std::abs(static_cast<double>(value / d)), 1e-12) << order;
    }
  }
}

TEST(Quadrature, LaguerreWeightMatchesClosedForm) {
  const int order = 12;
  const auto rule = gauss_laguerre_rule(order);
  for (int m = 0; m < order; ++m) {
    long double d;
    const long double next = laguerre_ld(order + 1, rule.nodes[m], &d);
    const long double w = rule.nodes[m] / ((order + 1.0L) * (order + 1.0L) * next * next);
    EXPECT_NEAR(rule.weights[m] / static_cast<double>(w), 1.0, 1e-12);
  }
}

TEST(Quadrature, PolynomialExactness) {
  for (int order = 1; order <= 20; ++order) {
    const auto lag = gauss_laguerre_rule(order);
    const auto leg = gauss_legendre_rule(order);
    double factorial = 1.0;
    for (int degree = 0; degree <= 2 * order - 1; ++degree) {
      if (degree > 0) factorial *= degree;
      long double sum = 0.0L;
      for (int m = 0; m < order; ++m) sum += lag.weights[m] * std::pow(static_cast<long double>(lag.nodes[m]), degree);
      EXPECT_NEAR(static_cast<double>(sum) / factorial, 1.0, 1e-10) << order << ' ' << degree;

      const double exact = degree % 2 == 1 ? 0.0 : 2.0 / (degree + 1);
      const double approx = integrate_interval([degree](double x) { return std::pow(x, degree); }, -1.0,
                                               1.0, leg);
      EXPECT_NEAR(approx, exact, 1e-10) << order << ' ' << degree;
    }
  }
}

TEST(Quadrature, NodesInterlace) {
  for (int order = 1; order < 40; ++order) {
    for (auto kind : {QuadratureKind::laguerre, QuadratureKind::legendre}) {
      const auto a = kind == QuadratureKind::laguerre ? gauss_laguerre_rule(order) : gauss_legendre_rule(order);
      const auto b = kind == QuadratureKind::laguerre ? gauss_laguerre_rule(order + 1)
                                                      : gauss_legendre_rule(order + 1);
      for (int i = 0; i < order; ++i) {
        EXPECT_LT(b.nodes[i], a.nodes[i]);
        EXPECT_GT(b.nodes[i + 1], a.nodes[i]);
      }
    }
  }
}

TEST(IntegrateSemiInfinite, RecoversWeightFunction) {
  for (int order : {1, 2, 5, 40}) {
    const auto rule = gauss_laguerre_rule(order);
    EXPECT_NEAR(integrate_semi_infinite([](double x) { return std::exp(-x); }, rule), 1.0, 1e-12);
    if (order >= 2) {
      EXPECT_NEAR(integrate_semi_infinite([](double x) { return x * std::exp(-x); }, rule), 1.0, 1e-12);
    }
  }
}

TEST(IntegrateSemiInfinite, NormalizationOfSinglePortDensity) {
  const auto rule = gauss_laguerre_rule(40);
  const double value =
      integrate_semi_infinite([](double x) { return 2.0 * bessel_k0(2.0 * std::sqrt(x)); }, rule);
  const double oracle = testing::adaptive_integral(
      [](double x) { return x > 0 ? 2.0 * std::cyl_bessel_k(0.0, 2.0 * std::sqrt(x)) : 0.0; }, 0.0,
      std::numeric_limits<double>::infinity(), 1e-12);
  EXPECT_NEAR(oracle, 1.0, 1e-8);
  // The logarithmic singularity at the origin limits the undamped rule to
  // roughly 1/order convergence.
  EXPECT_NEAR(value, 0.9845631719, 1e-9);
  const double at80 =
      integrate_semi_infinite([](double x) { return 2.0 * bessel_k0(2.0 * std::sqrt(x)); }, gauss_laguerre_rule(80));
  EXPECT_LT(std::abs(at80 - 1.0), 0.6 * std::abs(value - 1.0));
}

TEST(IntegrateSemiInfinite, UndampedAlgebraicIntegrandConverges) {
  // No e^{-x} damping is needed from the caller, but an algebraic tail
  // past the last node converges only slowly with the order.
  const auto f = [](double x) { return 1.0 / ((1.0 + x) * (1.0 + x)); };
  const double oracle =
      testing::adaptive_integral(f, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
  EXPECT_NEAR(oracle, 1.0, 1e-10);
  const double e20 = std::abs(integrate_semi_infinite(f, gauss_laguerre_rule(20)) - oracle);
  const double e60 = std::abs(integrate_semi_infinite(f, gauss_laguerre_rule(60)) - oracle);
  const double e180 = std::abs(integrate_semi_infinite(f, gauss_laguerre_rule(180)) - oracle);
  EXPECT_LT(e60, e20);
  EXPECT_LT(e180, e60);
  EXPECT_NEAR(e60, 4.33122e-3, 1e-7);
}

TEST(IntegrateSemiInfinite, RejectsNonFiniteIntegrand) {
  const auto rule = gauss_laguerre_rule(4);
  try {
    integrate_semi_infinite([](double x) { return x > 1.0 ? std::nan("") : 1.0; }, rule);
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_GT(e.node(), 1.0);
  }
  EXPECT_THROW(integrate_semi_infinite([](double) { return 1.0; }, gauss_legendre_rule(3)), ConfigError);
}

TEST(IntegrateInterval, Values) {
  EXPECT_NEAR(integrate_interval([](double) { return 1.0; }, 0.0, 1.0, gauss_legendre_rule(1)), 1.0, 1e-15);
  EXPECT_NEAR(integrate_interval([](double x) { return x; }, 0.0, 1.5, gauss_legendre_rule(2)), 1.125, 1e-15);
  EXPECT_NEAR(integrate_interval([](double x) { return std::sin(x); }, 0.0, std::numbers::pi,
                                 gauss_legendre_rule(10)),
              2.0, 1e-10);
  EXPECT_THROW(integrate_interval([](double x) { return x; }, 1.0, 1.0, gauss_legendre_rule(2)), DomainError);
  EXPECT_THROW(integrate_interval([](double) { return std::numeric_limits<double>::infinity(); }, 0.0, 1.0,
                                  gauss_legendre_rule(2)),
               EvaluationError);
}

}  // namespace
}  // namespace fasnoma
