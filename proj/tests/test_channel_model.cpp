#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fasnoma/channel_model.hpp"

namespace fasnoma {
namespace {

TEST(PortMap, Examples) {
  const FasGeometry g3 = square_grid(3, 1.0);
  EXPECT_EQ(port_map(1, g3), std::make_pair(1, 1));
  EXPECT_EQ(port_map(5, g3), std::make_pair(2, 2));
  EXPECT_EQ(port_map(9, g3), std::make_pair(3, 3));
}

TEST(PortMap, RoundTripIsIdentity) {
  const FasGeometry g{4, 2, 1.0, 0.5};
  for (int n = 1; n <= g.ports(); ++n) {
    const auto [r, c] = port_map(n, g);
    EXPECT_EQ(port_unmap(r, c, g), n);
  }
}

TEST(PortMap, RejectsOutOfRange) {
  const FasGeometry g = square_grid(2, 1.0);
  EXPECT_THROW(port_map(0, g), DomainError);
  EXPECT_THROW(port_map(5, g), DomainError);
  EXPECT_THROW(port_unmap(3, 1, g), DomainError);
}

TEST(SpatialCorrelation, Examples) {
  const FasGeometry g3 = square_grid(3, 1.0);
  EXPECT_EQ(spatial_correlation(4, 4, g3), 1.0);
  EXPECT_NEAR(spatial_correlation(1, 2, FasGeometry{2, 1, 1.0, 0.0}), 0.0, 1e-15);
  EXPECT_NEAR(spatial_correlation(1, 2, FasGeometry{2, 1, 0.25, 0.0}), 2.0 / std::numbers::pi, 1e-15);
}

TEST(SpatialCorrelation, SingletonDimensionHasNoOffset) {
  // The width of a one-port dimension must not matter.
  const FasGeometry a{3, 1, 1.0, 0.0};
  const FasGeometry b{3, 1, 1.0, 7.0};
  for (int n = 1; n <= 3; ++n) {
    for (int m = 1; m <= 3; ++m) EXPECT_EQ(spatial_correlation(n, m, a), spatial_correlation(n, m, b));
  }
}

TEST(SpatialCorrelation, CylindricalKernelUsesOrdinaryBessel) {
  const FasGeometry g{2, 1, 0.25, 0.0};
  EXPECT_NEAR(spatial_correlation(1, 2, g, CorrelationKernel::cylindrical), std::cyl_bessel_j(0.0, std::numbers::pi / 2),
              1e-14);
}

TEST(CorrelationMatrix, Examples) {
  EXPECT_EQ(correlation_matrix(single_antenna()), Eigen::MatrixXd::Identity(1, 1));
  EXPECT_TRUE(correlation_matrix(FasGeometry{2, 1, 1.0, 0.0}).isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-15));
  const Eigen::MatrixXd r3 = correlation_matrix(FasGeometry{3, 1, 1.0, 0.0});
  EXPECT_LT((r3 - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CorrelationMatrix, RandomGeometriesAreSymmetricUnitDiagonalBounded) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> dim(1, 5);
  std::uniform_real_distribution<double> width(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const FasGeometry g{dim(gen), dim(gen), width(gen), width(gen)};
    const Eigen::MatrixXd r = correlation_matrix(g);
    ASSERT_EQ(r.rows(), g.ports());
    EXPECT_LE((r - r.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE((r.diagonal().array() == 1.0).all());
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(CorrelationMatrix, VanishingApertureGivesFullCorrelation) {
  const Eigen::MatrixXd r = correlation_matrix(square_grid(3, 1e-6));
  EXPECT_GT(r.minCoeff(), 1.0 - 1e-10);
}

TEST(PortOrbits, SquareGridsCollapseBySymmetry) {
  const auto o4 = port_orbits(square_grid(2, 1.0));
  ASSERT_EQ(o4.size(), 1u);
  EXPECT_EQ(o4[0].multiplicity, 4);
  const auto o9 = port_orbits(square_grid(3, 2.0));
  ASSERT_EQ(o9.size(), 3u);
  int total = 0;
  for (const auto& o : o9) total += o.multiplicity;
  EXPECT_EQ(total, 9);
  // A rectangle loses the transpose.
  const auto r = port_orbits(FasGeometry{3, 2, 1.0, 0.5});
  total = 0;
  for (const auto& o : r) total += o.multiplicity;
  EXPECT_EQ(total, 6);
  EXPECT_EQ(r.size(), 2u);
}

TEST(PortOrbits, OrbitMembersShareCorrelationProfiles) {
  const FasGeometry g = square_grid(3, 2.0);
  const Eigen::MatrixXd r = correlation_matrix(g);
  // The sorted correlation column is invariant under the grid symmetries.
  auto profile = [&](int p) {
    std::vector<double> row(r.col(p).data(), r.col(p).data() + r.rows());
    std::sort(row.begin(), row.end());
    return row;
  };
  EXPECT_EQ(profile(0), profile(2));
  EXPECT_EQ(profile(0), profile(8));
  EXPECT_EQ(profile(1), profile(3));
  EXPECT_NE(profile(0), profile(1));
}

TEST(AverageSnr, DefaultsGiveKnownValues) {
  EXPECT_NEAR(average_snr(NodeId::near_user, {}, {}), 125.0, 1e-9);
  EXPECT_NEAR(average_snr(NodeId::eavesdropper, {}, {}), 0.1, 1e-13);
  EXPECT_NEAR(average_snr(NodeId::far_user, {}, {}), 1e3 / 216.0, 1e-11);
  EXPECT_NEAR(linear_to_db(average_snr(NodeId::near_user, {}, {})), 20.9691, 1e-4);
}

TEST(AverageSnr, DoublingDistanceScalesByPowerLaw) {
  Topology t;
  const double base = average_snr(NodeId::far_user, t, {});
  t.d_uf *= 2.0;
  EXPECT_NEAR(average_snr(NodeId::far_user, t, {}) / base, std::pow(2.0, -t.alpha), 1e-14);
}

TEST(AverageSnr, MonotoneInDistanceAndBeaconPower) {
  Topology t;
  RadioParams r;
  double previous = average_snr(NodeId::near_user, t, r);
  for (int i = 0; i < 10; ++i) {
    t.d_t += 5.0;
    const double now = average_snr(NodeId::near_user, t, r);
    EXPECT_LT(now, previous);
    previous = now;
  }
  previous = average_snr(NodeId::near_user, t, r);
  for (int i = 0; i < 10; ++i) {
    r.p_beacon_dbm += 1.0;
    const double now = average_snr(NodeId::near_user, t, r);
    EXPECT_GT(now, previous);
    previous = now;
  }
}

TEST(Validation, RejectsBadParameters) {
  EXPECT_THROW(validate(FasGeometry{0, 1, 0.0, 0.0}), ConfigError);
  EXPECT_THROW(validate(FasGeometry{1, 1, -1.0, 0.0}), ConfigError);
  Topology t;
  t.alpha = 1.5;
  EXPECT_THROW(validate(t), ConfigError);
  EXPECT_THROW(validate(PowerAllocation{0.7, 0.3}), ConfigError);
  EXPECT_THROW(validate(PowerAllocation{0.4, 0.5}), ConfigError);
  RadioParams r;
  r.noise_e_dbm = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate(r), ConfigError);
}

TEST(Units, Conversions) {
  EXPECT_DOUBLE_EQ(db_to_linear(20.0), 100.0);
  EXPECT_DOUBLE_EQ(linear_to_db(1000.0), 30.0);
  EXPECT_DOUBLE_EQ(dbm_to_watts(30.0), 1.0);
  EXPECT_NEAR(dbm_to_watts(-90.0), 1e-12, 1e-27);
}

}  // namespace
}  // namespace fasnoma
