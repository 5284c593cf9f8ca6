#pragma once

#include "ampsi/signal_models.hpp"

namespace ampsi {

// Value of a scalar denoiser and its derivative in the pseudo-data argument.
struct DenoiserEval {
  double value;
  double derivative;
};

// Below this SI variance the side information is treated as exact.
inline constexpr double kExactSiThreshold = 1e-14;

// Conditional posterior mean E[X | X + lambda U = a, X + sigma_hat V = b] for
// the Bernoulli-Gaussian prior. The support posterior is formed in the log
// domain, so extreme inputs saturate instead of overflowing.
class BgSiDenoiser {
 public:
  BgSiDenoiser(const BgPrior& prior, double lambda_sq, double sigma_hat_sq);
  DenoiserEval eval(double a, double b) const noexcept;

 private:
  double lambda_sq_, sigma_hat_sq_;
  double log_odds_const_;  // log-normalizer difference, slab minus atom
  double slab_b_var_;      // 1 + sigma_hat^2
  double shrink_b_;        // 1 / (1 + sigma_hat^2)
  double cond_a_var_;      // sigma_hat^2 / (1 + sigma_hat^2) + lambda^2
  double mean_denom_;      // sigma_hat^2 + lambda^2 + sigma_hat^2 lambda^2
};

// Conditional posterior mean E[X_c | X_c + lambda U = a, X_p + sigma_hat V = b]
// for the birth-death-drift prior: a four-way mixture over the transition
// cases, weighted by log-sum-exp.
class BddSiDenoiser {
 public:
  BddSiDenoiser(const BddPrior& prior, double lambda_sq, double sigma_hat_sq);
  DenoiserEval eval(double a, double b) const noexcept;

 private:
  DenoiserEval eval_exact_si(double a, double b) const noexcept;

  double lambda_sq_, sigma_hat_sq_;
  double s_, rho_, drift_;
  double log_eps_[4];
  double log_const_[4];   // log eps_i plus both Gaussian log-normalizers
  double b_var_nonzero_;  // sigma_hat^2 + sigma_s^2
  double drift_gain_;     // rho sigma_s^2 / (sigma_hat^2 + sigma_s^2)
  double drift_a_var_;    // sigma_s^2 (sigma_hat^2 + sigma^2) / (sigma_hat^2 + sigma_s^2) + lambda^2
  double drift_denom_;    // sigma_s^2 (sigma^2 + lambda^2 + sigma_hat^2) + lambda^2 sigma_hat^2
  double birth_a_var_;    // sigma_s^2 + lambda^2
};

// Gaussian signal with Gaussian SI: the posterior mean is linear in (a, b).
class GgSiDenoiser {
 public:
  GgSiDenoiser(const GgPrior& prior, double lambda_sq, double sigma_hat_sq);
  DenoiserEval eval(double a, double b) const noexcept;
  double coeff_a() const noexcept { return coeff_a_; }
  double coeff_b() const noexcept { return coeff_b_; }

 private:
  bool passthrough_;
  double coeff_a_, coeff_b_;
};

// E[X | X + lambda U = a] for X zero w.p. 1 - eps and N(0, slab_var)
// otherwise. Covers the BG prior without SI and the BDD marginal.
class SpikeSlabDenoiser {
 public:
  SpikeSlabDenoiser(double eps, double slab_var, double lambda_sq);
  DenoiserEval eval(double a) const noexcept;

 private:
  double lambda_sq_, slab_var_;
  double log_odds_const_;
  double slab_a_var_;
};

// Wiener filter E[X | X + lambda U = a] for X ~ N(0, sigma_x_sq).
class WienerDenoiser {
 public:
  WienerDenoiser(double sigma_x_sq, double lambda_sq);
  DenoiserEval eval(double a) const noexcept { return {gain_ * a, gain_}; }

 private:
  double gain_;
};

struct DenoiserContext {
  PriorModel prior;
  double lambda_sq;
  double sigma_hat_sq;
};

double eta_bg(const BgPrior& prior, double lambda_sq, double sigma_hat_sq, double a, double b);
double eta_bdd(const BddPrior& prior, double lambda_sq, double sigma_hat_sq, double a, double b);
double eta_gg(const GgPrior& prior, double lambda_sq, double sigma_hat_sq, double a, double b);
double eta_bg_no_si(const BgPrior& prior, double lambda_sq, double a);

// Dispatch on the model held by the context.
double eta(const DenoiserContext& ctx, double a, double b);
double eta_prime(const DenoiserContext& ctx, double a, double b);

// Denoisers used when no SI is available: BG and BDD use the spike-and-slab
// marginal, GG the Wiener filter.
double eta_no_si(const PriorModel& prior, double lambda_sq, double a);
double eta_prime_no_si(const PriorModel& prior, double lambda_sq, double a);

struct DenoisedVector {
  Vector value;
  Vector derivative;
};

DenoisedVector denoise_with_si(const PriorModel& prior, double lambda_sq,
                               double sigma_hat_sq, const Vector& pseudo,
                               const Vector& si);
DenoisedVector denoise_without_si(const PriorModel& prior, double lambda_sq,
                                  const Vector& pseudo);

}  // namespace ampsi
