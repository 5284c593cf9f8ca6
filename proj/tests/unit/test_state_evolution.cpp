#include <cmath>

#include <gtest/gtest.h>

#include "ampsi/state_evolution.hpp"

using namespace ampsi;

namespace {

SeSettings settings(std::size_t mc, std::uint64_t seed, int t_max = 200) {
  SeSettings s;
  s.mc = mc;
  s.seed = seed;
  s.t_max = t_max;
  return s;
}

struct Replicated {
  double mean;
  double stderr;
};

// Mean and standard error of f over independent replications.
template <typename F>
Replicated replicate(int n, F&& f) {
  std::vector<double> v;
  for (int r = 0; r < n; ++r) v.push_back(f(static_cast<std::uint64_t>(r)));
  double m = 0.0, ss = 0.0;
  for (double x : v) m += x;
  m /= n;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1) / n)};
}

const PriorModel kFig5Bdd{BddPrior({0.80, 0.01, 0.18, 0.01}, 1.0, 0.95)};

}  // namespace

TEST(InitialLambda, Examples) {
  EXPECT_NEAR(initial_lambda_sq(PriorModel{BgPrior(0.3)}, 0.3, 0.01), 1.01, 1e-15);
  EXPECT_NEAR(initial_lambda_sq(kFig5Bdd, 0.3, 0.077 * 0.077), 0.077 * 0.077 + 0.19 / 0.3, 1e-15);
  EXPECT_NEAR(initial_lambda_sq(kFig5Bdd, 0.3, 0.077 * 0.077), 0.6393, 1e-4);
}

TEST(SeStep, GaussianPriorMatchesLinearEstimatorMse) {
  const double sx = 1.5, l = 0.7, sh = 0.4, delta = 0.5, sz2 = 0.01;
  // For the linear estimate ca * a + cb * b the error is
  // (ca + cb - 1) X + ca lambda Z1 + cb sigma_hat Z2.
  const double ca = sx * sh / (sx * (sh + l) + l * sh), cb = sx * l / (sx * (sh + l) + l * sh);
  const double mse = (ca + cb - 1.0) * (ca + cb - 1.0) * sx + ca * ca * l + cb * cb * sh;
  const SeStep s = se_step(PriorModel{GgPrior(sx)}, SiChannel(sh), l, delta, sz2, 200000, 1);
  EXPECT_NEAR(s.lambda_sq, sz2 + mse / delta, 3 * s.stderr);
  EXPECT_GT(s.stderr, 0.0);
}

TEST(SeStep, NoSiBgIsBelowPrior) {
  const SeStep s = se_step(PriorModel{BgPrior(0.3)}, std::nullopt, 1.01, 0.3, 0.01, 100000, 2);
  EXPECT_GT(s.lambda_sq, 0.01);
  EXPECT_LT(s.lambda_sq, 1.01);
}

TEST(SeRun, NoiselessOverdeterminedGaussianReachesZero) {
  const SeTrace tr = se_run(PriorModel{GgPrior(1.0)}, std::nullopt, 2.0, 0.0, settings(10000, 3));
  EXPECT_LT(tr.fixed_point, 1e-12);
}

TEST(SeRun, TraceInvariants) {
  const double sz2 = 0.01, delta = 0.3;
  const SeTrace tr = se_run(PriorModel{BgPrior(0.3)}, SiChannel(0.01), delta, sz2, settings(100000, 4));
  EXPECT_TRUE(tr.converged);
  EXPECT_EQ(tr.lambda_sq.front(), initial_lambda_sq(PriorModel{BgPrior(0.3)}, delta, sz2));
  EXPECT_EQ(tr.stderr.front(), 0.0);
  EXPECT_EQ(tr.mc_samples, 100000u);
  EXPECT_EQ(tr.fixed_point, tr.lambda_sq.back());
  for (std::size_t t = 0; t < tr.lambda_sq.size(); ++t) {
    EXPECT_GE(tr.lambda_sq[t], sz2);
    EXPECT_DOUBLE_EQ(tr.mse(t, delta, sz2), delta * (tr.lambda_sq[t] - sz2));
    if (t > 0) EXPECT_LE(tr.lambda_sq[t], tr.lambda_sq[t - 1] + 3 * tr.stderr[t]);
  }
}

TEST(SeRun, BddTraceIsNonIncreasing) {
  const SeTrace tr = se_run(kFig5Bdd, SiChannel(0.05), 0.3, 0.077 * 0.077, settings(100000, 5));
  for (std::size_t t = 1; t < tr.lambda_sq.size(); ++t)
    EXPECT_LE(tr.lambda_sq[t], tr.lambda_sq[t - 1] + 3 * tr.stderr[t]);
}

TEST(SeRun, Deterministic) {
  const auto a = se_run(PriorModel{BgPrior(0.3)}, SiChannel(0.01), 0.3, 0.01, settings(20000, 6));
  const auto b = se_run(PriorModel{BgPrior(0.3)}, SiChannel(0.01), 0.3, 0.01, settings(20000, 6));
  EXPECT_EQ(a.lambda_sq, b.lambda_sq);
  const auto c = se_run(PriorModel{BgPrior(0.3)}, SiChannel(0.01), 0.3, 0.01, settings(20000, 7));
  EXPECT_NE(a.lambda_sq, c.lambda_sq);
}

TEST(SeRun, RejectsBadInputs) {
  EXPECT_THROW(se_run(PriorModel{BgPrior(0.3)}, std::nullopt, 0.0, 0.01, settings(1000, 1)), std::invalid_argument);
  EXPECT_THROW(se_run(PriorModel{BgPrior(0.3)}, std::nullopt, 0.3, 0.01, settings(1000, 1, 0)), std::invalid_argument);
}

TEST(MatchedFilterSe, AgreesWithTwoChannelForm) {
  const PriorModel prior{BgPrior(0.3)};
  const auto two = se_run(prior, SiChannel(0.01), 0.3, 0.01, settings(200000, 8, 30));
  for (std::size_t t = 1; t < two.lambda_sq.size(); ++t) {
    // Both forms see the same draws of X and Z1 from a shared input; the
    // positive correlation only shrinks the spread of the difference.
    const double l = two.lambda_sq[t - 1];
    const SeStep a = se_step(prior, SiChannel(0.01), l, 0.3, 0.01, 200000, 10 + t);
    const SeStep b = se_gaussian_si_step(prior, 0.01, l, 0.3, 0.01, 200000, 10 + t);
    EXPECT_NEAR(a.lambda_sq, b.lambda_sq, 3 * std::hypot(a.stderr, b.stderr)) << "t=" << t;
  }
  // Fixed points differ through the whole recursion; their Monte-Carlo error
  // comes from independent replications.
  const auto gap = replicate(8, [&](std::uint64_t r) {
    return se_run(prior, SiChannel(0.01), 0.3, 0.01, settings(50000, 100 + r)).fixed_point -
           se_gaussian_si_run(prior, 0.01, 0.3, 0.01, settings(50000, 200 + r)).fixed_point;
  });
  EXPECT_LT(std::abs(gap.mean), 3 * gap.stderr);
}

TEST(MatchedFilterSe, Limits) {
  const PriorModel prior{BgPrior(0.3)};
  const SeStep useless = se_gaussian_si_step(prior, 1e12, 0.5, 0.3, 0.01, 50000, 11);
  const SeStep plain = se_step(prior, std::nullopt, 0.5, 0.3, 0.01, 50000, 11);
  EXPECT_NEAR(useless.lambda_sq, plain.lambda_sq, 1e-9);
  const SeStep perfect = se_gaussian_si_step(prior, 1e-14, 0.5, 0.3, 0.01, 50000, 12);
  EXPECT_NEAR(perfect.lambda_sq, 0.01, 1e-12);
}

TEST(MatchedFilterSe, RejectsBdd) {
  EXPECT_THROW(se_gaussian_si_step(kFig5Bdd, 0.1, 0.5, 0.3, 0.01, 1000, 1), std::invalid_argument);
  EXPECT_THROW(se_gaussian_si_run(kFig5Bdd, 0.1, 0.3, 0.01, settings(1000, 1)), std::invalid_argument);
}

TEST(EffectiveChannel, Examples) {
  const auto useless = effective_channel(0.3, 0.01, 1e12, 0.5);
  EXPECT_NEAR(useless.mu, 1.0, 1e-12);
  EXPECT_NEAR(useless.delta_eff, 0.3, 1e-12);
  EXPECT_NEAR(useless.sigma_eff_sq, 0.01, 1e-14);
  const auto half = effective_channel(0.3, 0.01, 0.2, 0.2);
  EXPECT_DOUBLE_EQ(half.mu, 0.5);
  EXPECT_DOUBLE_EQ(half.delta_eff, 0.6);
  EXPECT_DOUBLE_EQ(half.sigma_eff_sq, 0.005);
}

TEST(EffectiveChannel, FixedPointCoincidesWithPlainSe) {
  const PriorModel prior{BgPrior(0.3)};
  const double delta = 0.3, sz2 = 0.01, sh = 0.01;
  const auto gap = replicate(8, [&](std::uint64_t r) {
    const auto si = se_run(prior, SiChannel(sh), delta, sz2, settings(50000, 300 + r));
    const auto ch = effective_channel(delta, sz2, sh, si.fixed_point);
    const auto plain = se_run(prior, std::nullopt, ch.delta_eff, ch.sigma_eff_sq, settings(50000, 400 + r));
    // The plain recursion runs on mu lambda^2.
    return plain.fixed_point - ch.mu * si.fixed_point;
  });
  EXPECT_LT(std::abs(gap.mean), 3 * gap.stderr);
}

TEST(SeRun, FixedPointGrowsWithSiNoise) {
  const PriorModel prior{BgPrior(0.3)};
  double prev = 0.0, prev_se = 0.0;
  for (double sh : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const auto tr = se_run(prior, SiChannel(sh), 0.3, 0.01, settings(50000, 15));
    EXPECT_GE(tr.fixed_point, prev - 3 * std::hypot(prev_se, tr.stderr.back())) << sh;
    prev = tr.fixed_point;
    prev_se = tr.stderr.back();
  }
}

TEST(BatchChain, FirstBatchIsPlainSeAndLaterBatchesImprove) {
  const auto chain = se_batch_chain(kFig5Bdd, 1.25, 0.01, 4, settings(50000, 16));
  ASSERT_EQ(chain.size(), 4u);
  const auto plain = se_run(kFig5Bdd, std::nullopt, 1.25, 0.01, settings(50000, 16));
  EXPECT_EQ(chain[0].lambda_sq, plain.lambda_sq);
  for (std::size_t b = 1; b < chain.size(); ++b)
    EXPECT_LE(chain[b].fixed_point, chain[b - 1].fixed_point + 3 * chain[b].stderr.back());
}

TEST(PhaseGrid, PriorParameterization) {
  PhaseGridConfig cfg;
  const auto p = phase_prior(cfg, 0.3);
  ASSERT_TRUE(p);
  const auto& b = std::get<BddPrior>(*p);
  EXPECT_NEAR(b.eps()[2], 0.29, 1e-15);
  EXPECT_NEAR(b.eps()[0], 0.69, 1e-15);
  EXPECT_NEAR(b.nonzero_rate(), 0.3, 1e-15);
  EXPECT_FALSE(phase_prior(cfg, 0.005));
  EXPECT_FALSE(phase_prior(cfg, 1.0));
  cfg.family = PriorFamily::bg;
  EXPECT_NEAR(std::get<BgPrior>(*phase_prior(cfg, 0.4)).epsilon(), 0.4, 0.0);
}

TEST(PhaseGrid, BatchOneMatchesPlainSeAndMoreSiHelps) {
  PhaseGridConfig cfg;
  cfg.delta_grid = {0.2, 0.5, 0.9};
  cfg.gamma_grid = {0.1, 0.3, 0.995};
  cfg.se = settings(20000, 17);
  cfg.workers = 2;
  const auto cells = phase_grid(cfg);
  ASSERT_EQ(cells.size(), 27u);
  const std::size_t per_batch = 9;
  for (std::size_t i = 0; i < per_batch; ++i) {
    const PhaseCell& c1 = cells[i];
    EXPECT_EQ(c1.batch, 1);
    const auto prior = phase_prior(cfg, c1.gamma);
    if (!prior) {
      EXPECT_TRUE(std::isnan(c1.mse));
      continue;
    }
    const auto plain = se_run(*prior, std::nullopt, c1.delta, 1e-4, cfg.se);
    EXPECT_DOUBLE_EQ(c1.mse, c1.delta * (plain.fixed_point - 1e-4));
    const PhaseCell& c3 = cells[per_batch + i];
    const PhaseCell& c10 = cells[2 * per_batch + i];
    EXPECT_EQ(c3.batch, 3);
    EXPECT_EQ(c10.batch, 10);
    EXPECT_LE(c3.mse, c1.mse + 3 * c3.stderr);
    EXPECT_LE(c10.mse, c3.mse + 3 * c10.stderr);
  }
}
