#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "ampsi/gaussian.hpp"
#include "ampsi/oracle.hpp"
#include "test_util.hpp"

using namespace ampsi;

TEST(LogGaussPdf, StandardNormalAtMode) {
  EXPECT_NEAR(log_gauss_pdf(0.0, {0.0, 1.0}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
}

TEST(LogGaussPdf, AtTheMean) {
  for (double v : {0.01, 1.0, 42.0})
    EXPECT_NEAR(log_gauss_pdf(3.5, {3.5, v}), -0.5 * std::log(2.0 * std::numbers::pi * v), 1e-14);
}

TEST(LogGaussPdf, FarTailAgainstExtendedPrecision) {
  using big = boost::multiprecision::cpp_bin_float_50;
  const big ref = big(-1250) - big(0.5) * log(big(2) * boost::math::constants::pi<big>());
  EXPECT_NEAR(log_gauss_pdf(50.0, {0.0, 1.0}), ref.convert_to<double>(), 1e-12);
}

TEST(LogGaussPdf, RejectsNonPositiveVariance) {
  EXPECT_THROW(log_gauss_pdf(0.0, {0.0, 0.0}), std::domain_error);
  EXPECT_THROW(log_gauss_pdf(0.0, {0.0, -1.0}), std::domain_error);
}

TEST(GaussProduct, SymmetricCase) {
  const auto p = gauss_product({0.0, 1.0}, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(p.combined.mean, 0.0);
  EXPECT_DOUBLE_EQ(p.combined.variance, 0.5);
  EXPECT_NEAR(p.log_scale, log_gauss_pdf(0.0, {0.0, 2.0}), 1e-15);
}

TEST(GaussProduct, HandExample) {
  const auto p = gauss_product({1.0, 1.0}, {-1.0, 3.0});
  EXPECT_NEAR(p.combined.mean, 0.5, 1e-15);
  EXPECT_NEAR(p.combined.variance, 0.75, 1e-15);
}

TEST(GaussProduct, RejectsNonPositiveVariance) {
  EXPECT_THROW(gauss_product({0.0, 0.0}, {0.0, 1.0}), std::domain_error);
}

TEST(GaussProduct, PointwiseIdentityOnGrid) {
  for (double m1 : {-2.0, 0.0, 3.0})
    for (double m2 : {-2.0, 0.0, 3.0})
      for (double v1 : {0.1, 1.0, 10.0})
        for (double v2 : {0.1, 1.0, 10.0}) {
          const auto p = gauss_product({m1, v1}, {m2, v2});
          for (double x : test::grid(-10.0, 10.0, 41)) {
            const double lhs = log_gauss_pdf(x, {m1, v1}) + log_gauss_pdf(x, {m2, v2});
            const double rhs = log_gauss_pdf(x, p.combined) + p.log_scale;
            // Relative error of the products, not of their logs.
            EXPECT_NEAR(std::expm1(rhs - lhs), 0.0, 1e-12) << m1 << " " << m2 << " " << v1 << " " << v2 << " " << x;
          }
        }
}

TEST(JointDensity, HandExample) {
  const double expect = log_gauss_pdf(0.0, {0.0, 2.0}) + log_gauss_pdf(0.0, {0.0, 1.5});
  EXPECT_NEAR(joint_density_log(0.0, 0.0, 1.0, 1.0, 1.0, 1.0), expect, 1e-14);
  EXPECT_NEAR(std::exp(expect), oracle_joint_density(0.0, 0.0, 1.0, 1.0, 1.0, 1.0), 1e-13);
}

TEST(JointDensity, SymmetricWhenExchangeable) {
  for (double a : {-2.0, 0.3, 1.7})
    for (double b : {-1.0, 0.0, 2.5})
      EXPECT_NEAR(joint_density_log(a, b, 1.0, 0.7, 0.4, 0.4), joint_density_log(b, a, 1.0, 0.7, 0.4, 0.4), 1e-13);
}

TEST(JointDensity, RejectsZeroRho) { EXPECT_THROW(joint_density_log(0, 0, 0.0, 1, 1, 1), std::domain_error); }

TEST(JointDensity, QuadratureOracleOnGrid) {
  struct P { double rho, sx, sa, sb; };
  for (const P p : {P{1.0, 1.0, 1.0, 1.0}, P{0.95, 1.0, 0.5, 0.2}, P{-0.6, 2.0, 0.3, 1.5}})
    for (double a : test::grid(-3, 3, 5))
      for (double b : test::grid(-3, 3, 5)) {
        const double closed = std::exp(joint_density_log(a, b, p.rho, p.sx, p.sa, p.sb));
        const double oracle = oracle_joint_density(a, b, p.rho, p.sx, p.sa, p.sb);
        EXPECT_NEAR(closed / oracle, 1.0, 1e-8) << a << " " << b;
      }
}

TEST(JointDensity, CollapsedSignalFactorizes) {
  const double sx = 1e-10;
  EXPECT_NEAR(oracle_joint_density(0.7, -0.4, 1.0, sx, 0.5, 2.0),
              std::exp(log_gauss_pdf(0.7, {0.0, 0.5}) + log_gauss_pdf(-0.4, {0.0, 2.0})), 1e-8);
}

TEST(JointDensity, IntegratesToOne) {
  using boost::math::quadrature::gauss_kronrod;
  struct P { double rho, sx, sa, sb; };
  for (const P p : {P{1.0, 1.0, 1.0, 1.0}, P{0.95, 1.0, 0.5, 0.2}, P{-0.6, 2.0, 0.3, 1.5}}) {
    const auto inner = [&](double a) {
      return gauss_kronrod<double, 31>::integrate(
          [&](double b) { return std::exp(joint_density_log(a, b, p.rho, p.sx, p.sa, p.sb)); },
          -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 10, 1e-12);
    };
    const double mass = gauss_kronrod<double, 31>::integrate(
        inner, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 10, 1e-10);
    EXPECT_NEAR(mass, 1.0, 1e-6);
  }
}

namespace {

// E[X | A, B] by solving the 2x2 normal equations of the joint Gaussian.
double linear_system_mean(double a, double b, double rho, double sx, double sa, double sb) {
  Eigen::Matrix2d cov;
  cov << rho * rho * sx + sa, rho * sx, rho * sx, sx + sb;
  const Eigen::Vector2d cross(rho * sx, sx);
  const Eigen::Vector2d w = cov.ldlt().solve(cross);
  return w.dot(Eigen::Vector2d(a, b));
}

}  // namespace

TEST(JointCondMean, HandExamples) {
  EXPECT_EQ(joint_cond_mean(0, 0, 0.9, 1, 1, 1), 0.0);
  EXPECT_NEAR(joint_cond_mean(1, 1, 1.0, 1, 1, 1), 2.0 / 3.0, 1e-15);
}

TEST(JointCondMean, MatchesLinearSystem) {
  struct P { double rho, sx, sa, sb; };
  for (const P p : {P{1.0, 1.0, 1.0, 1.0}, P{0.95, 1.0, 0.5, 0.2}, P{-0.6, 2.0, 0.3, 1.5}, P{0.3, 0.1, 4.0, 0.01}})
    for (double a : test::grid(-4, 4, 7))
      for (double b : test::grid(-4, 4, 7))
        EXPECT_NEAR(joint_cond_mean(a, b, p.rho, p.sx, p.sa, p.sb), linear_system_mean(a, b, p.rho, p.sx, p.sa, p.sb),
                    1e-12);
}

TEST(JointCondMean, UninformativeObservationLimit) {
  EXPECT_NEAR(joint_cond_mean(3.0, 1.2, 0.9, 1.0, 1e12, 0.5), 1.0 * 1.2 / 1.5, 1e-10);
}

TEST(JointCondMean, Linear) {
  const double a1 = 0.4, b1 = -1.1, a2 = 2.0, b2 = 0.3, al = 1.7, be = -0.6;
  const auto f = [](double a, double b) { return joint_cond_mean(a, b, 0.8, 1.3, 0.4, 0.9); };
  EXPECT_NEAR(f(al * a1 + be * a2, al * b1 + be * b2), al * f(a1, b1) + be * f(a2, b2), 1e-14);
}

TEST(MatchedFilter, Examples) {
  EXPECT_DOUBLE_EQ(matched_filter_mu(1.0, 3.0, 2.0, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(matched_filter_mu(1.0, 3.0, 2.0, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(matched_filter_mu(2.0, 0.0, 1.0, 3.0), 1.5);
  EXPECT_DOUBLE_EQ(matched_filter_var(1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(matched_filter_var(1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(matched_filter_var(4.0, 1.0), 0.8);
  EXPECT_THROW(matched_filter_var(0.0, 0.0), std::domain_error);
  EXPECT_THROW(matched_filter_mu(1.0, 1.0, 0.0, 0.0), std::domain_error);
}

TEST(MatchedFilter, NeverWorseThanEitherView) {
  for (double l : {1e-4, 0.1, 1.0, 7.0})
    for (double s : {0.0, 1e-3, 0.5, 3.0, 1e6}) EXPECT_LE(matched_filter_var(l, s), std::min(l, s) + 1e-15);
}

TEST(LogSumExp, Stable) {
  const double v[] = {-1000.0, -1000.0};
  EXPECT_NEAR(log_sum_exp(v), -1000.0 + std::log(2.0), 1e-12);
  const double w[] = {800.0, 0.0};
  EXPECT_NEAR(log_sum_exp(w), 800.0, 1e-12);
}
