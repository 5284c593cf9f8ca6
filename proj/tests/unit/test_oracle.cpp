#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "ampsi/gaussian.hpp"
#include "ampsi/oracle.hpp"

using namespace ampsi;

namespace {

// E[X_c | a, b] for the pure drift model, from the 2x2 joint Gaussian of
// a = X_c + lambda U, b = X_p + sigma_hat V with X_c = rho X_p + W.
double drift_posterior_mean(double rho, double s, double sigma_sq, double l, double sh, double a, double b) {
  Eigen::Matrix2d cov;
  cov << rho * rho * s + sigma_sq + l, rho * s, rho * s, s + sh;
  const Eigen::Vector2d cross(rho * rho * s + sigma_sq, rho * s);
  return cov.ldlt().solve(cross).dot(Eigen::Vector2d(a, b));
}

}  // namespace

TEST(QuadratureOracle, OddIntegrandAtOrigin) {
  EXPECT_NEAR(oracle_posterior_mean_quadrature(PriorModel{BgPrior(0.3)}, 0.5, 0.1, 0.0, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(oracle_posterior_mean_quadrature_no_si(PriorModel{BgPrior(0.3)}, 0.5, 0.0), 0.0, 1e-12);
}

TEST(QuadratureOracle, FullBgEqualsGaussian) {
  for (double a : {-3.0, 0.2, 2.5})
    for (double b : {-1.0, 1.7})
      EXPECT_NEAR(oracle_posterior_mean_quadrature(PriorModel{BgPrior(1.0)}, 0.3, 0.6, a, b),
                  oracle_posterior_mean_quadrature(PriorModel{GgPrior(1.0)}, 0.3, 0.6, a, b), 1e-10);
}

TEST(QuadratureOracle, GaussianMatchesConjugateFormula) {
  const double sx = 2.0, l = 0.3, sh = 0.7, a = 1.3, b = -0.4;
  const double expect = (a / l + b / sh) / (1.0 / sx + 1.0 / l + 1.0 / sh);
  EXPECT_NEAR(oracle_posterior_mean_quadrature(PriorModel{GgPrior(sx)}, l, sh, a, b), expect, 1e-10);
}

TEST(QuadratureOracle, RejectsBddAndZeroVariance) {
  const PriorModel bdd{BddPrior({0.8, 0.01, 0.18, 0.01}, 1.0, 0.95)};
  EXPECT_THROW(oracle_posterior_mean_quadrature(bdd, 0.5, 0.5, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(oracle_posterior_mean_quadrature(PriorModel{BgPrior(0.3)}, 0.0, 0.5, 0.0, 0.0), std::invalid_argument);
}

TEST(McOracle, AgreesWithQuadratureOnBg) {
  const PriorModel prior{BgPrior(0.3)};
  for (double a : {-1.5, 0.4, 2.0})
    for (double b : {-1.0, 0.5, 1.8}) {
      const McEstimate mc = oracle_posterior_mean_mc(prior, 0.5, 0.5, a, b, 1'000'000, 7);
      const double q = oracle_posterior_mean_quadrature(prior, 0.5, 0.5, a, b);
      EXPECT_NEAR(mc.mean, q, 3.5 * mc.stderr) << a << " " << b;
      EXPECT_EQ(mc.samples, 1'000'000u);
      EXPECT_GT(mc.ess, 100.0);
    }
}

TEST(McOracle, BddOriginIsZero) {
  const PriorModel prior{BddPrior({0.8, 0.01, 0.18, 0.01}, 1.0, 0.95)};
  const McEstimate mc = oracle_posterior_mean_mc(prior, 0.5, 0.5, 0.0, 0.0, 1'000'000, 8);
  EXPECT_NEAR(mc.mean, 0.0, 3 * mc.stderr);
}

TEST(McOracle, PureDriftMatchesLinearSolve) {
  const double s = 1.0, rho = 0.9, l = 0.4, sh = 0.3;
  const PriorModel prior{BddPrior({0.0, 0.0, 1.0, 0.0}, s, rho)};
  for (auto [a, b] : {std::pair{1.2, 0.8}, std::pair{-0.5, 1.5}}) {
    const McEstimate mc = oracle_posterior_mean_mc(prior, l, sh, a, b, 1'000'000, 9);
    EXPECT_NEAR(mc.mean, drift_posterior_mean(rho, s, (1 - rho * rho) * s, l, sh, a, b), 3 * mc.stderr);
  }
}

TEST(McOracle, NoDriftNoiseLimitIsScaledJointMean) {
  // sigma -> 0: X_c = rho X_p, so E[X_c | a, b] = rho E[X_p | a, b].
  const double s = 1.0, rho = 0.99999, l = 0.4, sh = 0.3, a = 1.2, b = 0.8;
  const PriorModel prior{BddPrior({0.0, 0.0, 1.0, 0.0}, s, rho)};
  const McEstimate mc = oracle_posterior_mean_mc(prior, l, sh, a, b, 1'000'000, 10);
  EXPECT_NEAR(mc.mean, rho * joint_cond_mean(a, b, rho, s, l, sh), 3 * mc.stderr + 1e-4);
}

TEST(McOracle, Deterministic) {
  const PriorModel prior{BgPrior(0.3)};
  EXPECT_EQ(oracle_posterior_mean_mc(prior, 0.5, 0.5, 1.0, 1.0, 10000, 11).mean,
            oracle_posterior_mean_mc(prior, 0.5, 0.5, 1.0, 1.0, 10000, 11).mean);
}

TEST(McOracle, LowEffectiveSampleSizeIsAnError) {
  // A needle likelihood far in the tail leaves almost no weight.
  EXPECT_THROW(oracle_posterior_mean_mc(PriorModel{BgPrior(0.3)}, 1e-8, 1e-8, 4.0, 4.0, 100000, 12),
               std::runtime_error);
}

TEST(Golden, CheckedInFileReproduces) {
  const auto rows = read_golden(AMPSI_GOLDEN_FILE);
  const auto cases = golden_cases();
  ASSERT_EQ(rows.size(), cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (cases[i].samples > 2'000'000) continue;  // the 1e7 row runs in the acceptance suite
    const GoldenRow fresh = evaluate_golden(cases[i]);
    EXPECT_EQ(rows[i].model, fresh.model);
    EXPECT_EQ(rows[i].params_hash, fresh.params_hash);
    EXPECT_NEAR(rows[i].oracle_value, fresh.oracle_value, 1e-12);
  }
}

TEST(Golden, FormatRoundTrips) {
  const auto rows = read_golden(AMPSI_GOLDEN_FILE);
  const auto tmp = std::filesystem::temp_directory_path() / "ampsi_golden_roundtrip.csv";
  {
    std::ofstream out(tmp);
    out << format_golden(rows);
  }
  const auto again = read_golden(tmp);
  std::filesystem::remove(tmp);
  ASSERT_EQ(again.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(again[i].oracle_value, rows[i].oracle_value);
    EXPECT_EQ(again[i].stderr, rows[i].stderr);
    EXPECT_EQ(again[i].method, rows[i].method);
  }
}

TEST(Golden, HashDependsOnParameters) {
  const PriorModel p{BgPrior(0.3)};
  EXPECT_NE(fnv1a64(params_key(p, 0.25, 0.01)), fnv1a64(params_key(p, 0.25, 0.02)));
  EXPECT_NE(fnv1a64(params_key_no_si(p, 1.0)), fnv1a64(params_key(p, 1.0, 1.0)));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
}
