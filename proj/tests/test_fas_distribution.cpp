#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "fasnoma/fas_distribution.hpp"
#include "support/oracles.hpp"

namespace fasnoma {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const FasGainDistribution& grid4() {
  static const FasGainDistribution d(square_grid(2, 1.0));
  return d;
}

const FasGainDistribution& grid9() {
  static const FasGainDistribution d(square_grid(3, 2.0));
  return d;
}

double integrate_density(const std::function<double(double)>& pdf) {
  return testing::adaptive_integral([&](double g) { return g > 0.0 ? pdf(g) : 0.0; }, 0.0, kInf, 1e-10);
}

TEST(SinglePort, CdfExamples) {
  EXPECT_EQ(cdf_single_port(0.0), 0.0);
  EXPECT_NEAR(cdf_single_port(1.0), 0.7202682364, 1e-10);
  EXPECT_GE(cdf_single_port(100.0), 1.0 - 1e-6);
  EXPECT_LE(cdf_single_port(100.0), 1.0);
}

TEST(SinglePort, CdfMatchesIntegralRepresentation) {
  for (double g : {1e-8, 1e-4, 0.01, 0.3, 0.49, 0.51, 1.0, 4.0, 20.0, 60.0}) {
    const double oracle = testing::single_port_cdf_by_integration(g);
    EXPECT_NEAR(cdf_single_port(g), oracle, 1e-12 + 1e-11 * oracle) << g;
  }
}

TEST(SinglePort, SurvivalKeepsRelativeAccuracyInTail) {
  for (double g : {10.0, 50.0, 200.0}) {
    const double x = 2.0 * std::sqrt(g);
    const double oracle = x * testing::bessel_k_integral(1.0, x);
    EXPECT_NEAR(ccdf_single_port(g) / oracle, 1.0, 1e-10) << g;
    EXPECT_NEAR(cdf_single_port(g) + ccdf_single_port(g), 1.0, 1e-15);
  }
}

TEST(SinglePort, PdfExamples) {
  EXPECT_NEAR(pdf_single_port(1.0), 0.2277877454, 1e-10);
  EXPECT_THROW(pdf_single_port(0.0), DomainError);
  EXPECT_THROW(pdf_single_port(-1.0), DomainError);
  EXPECT_NEAR(integrate_density(pdf_single_port), 1.0, 1e-6);
  const double h = 1e-4;
  EXPECT_NEAR((cdf_single_port(1.0 + h) - cdf_single_port(1.0 - h)) / (2.0 * h), pdf_single_port(1.0), 1e-6);
}

TEST(SinglePort, Sqrt2gDensityHasMassTwo) {
  EXPECT_NEAR(integrate_density(pdf_single_port_sqrt2g), 2.0, 1e-6);
}

TEST(SinglePort, NormalScoreMatchesQuantileOfCdf) {
  const boost::math::normal normal;
  EXPECT_EQ(single_port_normal_score(0.0), -kInf);
  for (double g : {1e-12, 1e-6, 0.01, 0.5, 1.0, 3.0, 10.0}) {
    const double f = cdf_single_port(g);
    EXPECT_NEAR(single_port_normal_score(g), boost::math::quantile(normal, f), 1e-9) << g;
  }
  // Upper tail through the survival function.
  for (double g : {30.0, 100.0, 300.0}) {
    const double s = ccdf_single_port(g);
    EXPECT_NEAR(single_port_normal_score(g), -boost::math::quantile(normal, s), 1e-9) << g;
  }
}

TEST(FasGain, SinglePortCollapse) {
  const FasGainDistribution d(single_antenna());
  for (double g : {1e-6, 0.1, 1.0, 5.0, 40.0}) {
    EXPECT_NEAR(d.cdf(g), cdf_single_port(g), 1e-12);
    EXPECT_NEAR(cdf_fas(g, d).probability, cdf_single_port(g), 1e-12);
    EXPECT_NEAR(d.pdf(g), pdf_single_port(g), 1e-12 * pdf_single_port(g));
    EXPECT_NEAR(pdf_fas(g, d), pdf_single_port(g), 1e-12 * pdf_single_port(g));
  }
  EXPECT_EQ(d.cdf(0.0), 0.0);
}

TEST(FasGain, IndependentPortsFollowProductLaw) {
  const FasGainDistribution d(FasGeometry{2, 1, 1.0, 0.0});
  for (int i = 0; i < 20; ++i) {
    const double g = 0.02 * std::pow(1.4, i);
    const double f = cdf_single_port(g);
    const MvnResult direct = d.cdf_direct(g);
    EXPECT_NEAR(direct.probability, f * f, 2.0 * direct.error + 1e-14) << g;
    // The tabulated forms carry cubic interpolation error of order 1e-7.
    EXPECT_NEAR(d.cdf(g), f * f, 1e-6 * f * f) << g;
    const double marginal = pdf_single_port(g);
    EXPECT_NEAR(d.pdf(g), 2.0 * marginal * f, 2e-6 * marginal * f) << g;
    // The diagonal copula-density form reduces to the product of marginals.
    EXPECT_NEAR(d.pdf_copula_diagonal(g), marginal * marginal, 1e-12 * marginal * marginal) << g;
  }
}

TEST(FasGain, FourPortValueAgainstSamplingOracle) {
  // 10^7 copula samples (independent generator and factorization): 0.276096, se 1.41e-4.
  const double value = grid4().cdf(1.0);
  EXPECT_GT(value, std::pow(cdf_single_port(1.0), 4));
  EXPECT_LT(value, cdf_single_port(1.0));
  EXPECT_NEAR(value, 0.276096, 3.0 * 1.41e-4);
  const MvnResult direct = cdf_fas(1.0, grid4());
  EXPECT_NEAR(direct.probability, value, 3.0 * (direct.error + grid4().worst_cdf_error()));
}

TEST(FasGain, NinePortValueAgainstSamplingOracle) {
  // Same oracle: 0.063201, se 7.69e-5.
  EXPECT_NEAR(grid9().cdf(1.0), 0.063201, 3.0 * 7.69e-5);
}

TEST(FasGain, TableAgreesWithDirectEvaluation) {
  for (const FasGainDistribution* d : {&grid4(), &grid9()}) {
    for (double g : {1e-3, 0.05, 0.4, 1.0, 2.5, 7.0, 15.0}) {
      const MvnResult direct = d->cdf_direct(g);
      EXPECT_NEAR(d->cdf(g), direct.probability, 3.0 * direct.error + 1e-7) << g;
    }
  }
}

TEST(FasGain, MonotoneAndWithinFrechetBounds) {
  for (const FasGainDistribution* d : {&grid4(), &grid9()}) {
    double previous = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double g = 1e-4 * std::pow(10.0, 6.0 * i / 200.0);
      const double c = d->cdf(g);
      const double f = cdf_single_port(g);
      EXPECT_GE(c, previous);
      EXPECT_LE(c, f + 1e-7);
      EXPECT_GE(c, std::max(0.0, 1.0 - d->ports() * (1.0 - f)) - 1e-7);
      EXPECT_NEAR(c + d->ccdf(g), 1.0, 1e-15);
      previous = c;
    }
  }
}

TEST(FasGain, ExactDensityIsNormalized) {
  EXPECT_NEAR(integrate_density([](double g) { return grid4().pdf(g); }), 1.0, 1e-5);
  EXPECT_NEAR(integrate_density([](double g) { return grid9().pdf(g); }), 1.0, 1e-5);
}

TEST(FasGain, ExactDensityMatchesDerivativeOfCdf) {
  for (double g : {0.05, 0.3, 1.0, 3.0, 8.0}) {
    const double numeric = grid4().pdf_numeric(g);
    EXPECT_NEAR(grid4().pdf(g), numeric, 1e-4 * numeric) << g;
  }
}

// The diagonal copula-density form is not a density of the best-port gain:
// its mass on the four-port grid is about 15.46.
TEST(FasGain, CopulaDiagonalFormIsNotNormalized) {
  const double mass = integrate_density([](double g) { return grid4().pdf_copula_diagonal(g); });
  EXPECT_NEAR(mass, 15.4636, 1e-3);
  FasGainOptions opt;
  opt.density = FasDensityForm::copula_diagonal;
  const FasGainDistribution literal(square_grid(2, 1.0), opt);
  EXPECT_EQ(literal.pdf(0.7), grid4().pdf_copula_diagonal(0.7));
}

TEST(FasGain, WiderApertureDominatesOnPresetChain) {
  const FasGainDistribution narrow(square_grid(2, 0.25));
  const FasGainDistribution wide(square_grid(2, 2.0));
  for (double g : {0.01, 0.1, 0.5, 1.0, 3.0, 10.0}) {
    EXPECT_LE(grid4().cdf(g), narrow.cdf(g) + 1e-6) << g;
    EXPECT_LE(wide.cdf(g), grid4().cdf(g) + 1e-6) << g;
  }
}

// KS distance in normal-score space equals the distance in gain space since
// the score is a monotone transform of the gain.
double ks_against_sampling(const FasGainDistribution& d, int samples, std::uint64_t seed) {
  const Eigen::MatrixXd l = correlation_matrix(d.geometry()).llt().matrixL();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<double> maxima(static_cast<std::size_t>(samples));
  Eigen::VectorXd e(l.rows());
  for (double& m : maxima) {
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = normal(gen);
    m = (l * e).maxCoeff();
  }
  std::sort(maxima.begin(), maxima.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    const double f = std::exp(d.log_cdf_at_score(maxima[i]));
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / samples),
                   std::abs(f - static_cast<double>(i + 1) / samples)});
  }
  return ks;
}

TEST(FasGain, KolmogorovSmirnovAgainstCopulaSampling) {
  EXPECT_LE(ks_against_sampling(grid4(), 200000, 99), 0.005);
  EXPECT_LE(ks_against_sampling(grid9(), 200000, 100), 0.005);
}

TEST(FasGain, TailExtrapolationIsContinuous) {
  const double lo = grid9().options().table_lo;
  const double eps = 1e-9;
  EXPECT_NEAR(grid9().log_cdf_at_score(lo - eps), grid9().log_cdf_at_score(lo + eps), 1e-6);
  EXPECT_NEAR(grid9().slope_at_score(lo - eps), grid9().slope_at_score(lo + eps),
              1e-6 * grid9().slope_at_score(lo));
  // Deep below the table the log CDF keeps falling.
  EXPECT_LT(grid9().log_cdf_at_score(-20.0), grid9().log_cdf_at_score(lo) - 100.0);
  EXPECT_EQ(grid9().log_cdf_at_score(-kInf), -kInf);
  EXPECT_EQ(grid9().slope_at_score(20.0), 9.0);
}

TEST(FasGain, SlopeStaysWithinPortCount) {
  for (double x = -9.5; x < 8.5; x += 0.37) {
    const double s = grid9().slope_at_score(x);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 9.0 + 1e-9);
  }
}

TEST(FasGain, TableDoesNotDependOnThreadCount) {
  FasGainOptions opt;
  opt.threads = 3;
  const FasGainDistribution threaded(square_grid(2, 1.0), opt);
  for (double g : {0.01, 0.5, 2.0, 9.0}) {
    EXPECT_EQ(threaded.cdf(g), grid4().cdf(g));
    EXPECT_EQ(threaded.pdf(g), grid4().pdf(g));
  }
}

TEST(FasGain, Sqrt2gOptionSwapsMarginalDensityOnly) {
  FasGainOptions opt;
  opt.sqrt2g_marginal_pdf = true;
  const FasGainDistribution d(square_grid(2, 1.0), opt);
  EXPECT_EQ(d.marginal_pdf(0.8), pdf_single_port_sqrt2g(0.8));
  EXPECT_EQ(d.cdf(0.8), grid4().cdf(0.8));
}

TEST(FasGain, RejectsInvalidInput) {
  FasGainOptions opt;
  opt.table_step = 0.0;
  EXPECT_THROW(FasGainDistribution(square_grid(2, 1.0), opt), ConfigError);
  opt = {};
  opt.threads = 0;
  EXPECT_THROW(FasGainDistribution(square_grid(2, 1.0), opt), ConfigError);
  EXPECT_THROW(grid4().cdf(-1.0), DomainError);
  EXPECT_THROW(grid4().pdf(0.0), DomainError);
}

}  // namespace
}  // namespace fasnoma
