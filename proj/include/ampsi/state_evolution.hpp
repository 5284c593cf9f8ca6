#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ampsi/signal_models.hpp"

namespace ampsi {

struct SeStep {
  double lambda_sq;
  double stderr;
};

struct SeTrace {
  std::vector<double> lambda_sq;  // lambda_0^2, lambda_1^2, ...
  std::vector<double> stderr;     // Monte-Carlo standard error per entry; 0 for lambda_0^2
  bool converged = false;
  double fixed_point = 0.0;  // last value of the recursion
  std::size_t mc_samples = 0;

  // Predicted MSE of the estimate produced with lambda_t^2.
  double mse(std::size_t t, double delta, double sigma_z_sq) const {
    return delta * (lambda_sq.at(t) - sigma_z_sq);
  }
};

struct SeSettings {
  int t_max = 200;
  std::size_t mc = 100000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

// lambda_0^2 = sigma_z^2 + E[X^2] / delta.
double initial_lambda_sq(const PriorModel& prior, double delta, double sigma_z_sq);

// One step of the recursion
//   lambda_{t+1}^2 = sigma_z^2 + E[(eta_t(X + lambda_t Z1, X_ref + sigma_hat Z2) - X)^2] / delta
// by Monte Carlo over fresh samples. Without SI the model's no-SI denoiser is
// used. X_ref is X_p for BDD and X otherwise.
SeStep se_step(const PriorModel& prior, const std::optional<SiChannel>& si, double lambda_sq_prev,
               double delta, double sigma_z_sq, std::size_t mc, std::uint64_t seed);

// Iterates se_step from lambda_0^2 on one fixed sample set (common random
// numbers across steps) until the relative change drops below tol.
SeTrace se_run(const PriorModel& prior, const std::optional<SiChannel>& si, double delta,
               double sigma_z_sq, const SeSettings& settings);

// Matched-filter form for SI of the form X + N(0, sigma_hat^2): a single
// Gaussian channel of variance lambda^2 sigma_hat^2 / (lambda^2 + sigma_hat^2).
// Throws std::invalid_argument for BDD.
SeStep se_gaussian_si_step(const PriorModel& prior, double sigma_hat_sq, double lambda_sq_prev,
                           double delta, double sigma_z_sq, std::size_t mc, std::uint64_t seed);

SeTrace se_gaussian_si_run(const PriorModel& prior, double sigma_hat_sq, double delta,
                           double sigma_z_sq, const SeSettings& settings);

struct EffectiveChannel {
  double delta_eff;
  double sigma_eff_sq;
  double mu;
};

// mu = sigma_hat^2 / (sigma_hat^2 + lambda^2), delta_eff = delta / mu,
// sigma_eff^2 = mu sigma_z^2.
EffectiveChannel effective_channel(double delta, double sigma_z_sq, double sigma_hat_sq,
                                   double lambda_fixed_sq);

// Multi-batch SE: batch 1 runs without SI, batch b > 1 uses SI whose variance
// is the fixed point of batch b - 1. Each batch reuses the same samples.
std::vector<SeTrace> se_batch_chain(const PriorModel& prior, double delta, double sigma_z_sq,
                                    int batches, const SeSettings& settings);

enum class PriorFamily { bg, bdd };

struct PhaseGridConfig {
  PriorFamily family = PriorFamily::bdd;
  std::vector<double> delta_grid;
  std::vector<double> gamma_grid;
  std::vector<int> batches{1, 3, 10};
  double sigma_z = 0.01;
  // BDD parameters other than the drift probability.
  double eps2 = 0.01;
  double eps4 = 0.01;
  double sigma_s_sq = 1.0;
  double rho = 0.95;
  SeSettings se;
  unsigned workers = 1;
};

struct PhaseCell {
  double delta;
  double gamma;
  int batch;
  double mse;     // NaN for infeasible (delta, gamma) cells
  double stderr;
};

// Prior of a phase-grid cell. BG: epsilon = gamma. BDD: eps3 = gamma - eps4,
// eps1 = 1 - eps2 - eps3 - eps4. Empty when gamma is out of range.
std::optional<PriorModel> phase_prior(const PhaseGridConfig& cfg, double gamma);

// Fixed-point MSE delta (lambda_inf^2 - sigma_z^2) for every (delta, gamma,
// batch). All cells share one seed so neighbouring cells see the same samples.
// Rows are ordered by batch, then gamma, then delta.
std::vector<PhaseCell> phase_grid(const PhaseGridConfig& cfg);

}  // namespace ampsi
