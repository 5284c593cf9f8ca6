#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ampsi/measurement.hpp"
#include "ampsi/signal_models.hpp"

namespace ampsi {

enum class LambdaMode {
  empirical_residual,  // lambda_t^2 = |r^t|^2 / M
  state_evolution,     // lambda_t^2 taken from a precomputed SE schedule
};

struct AmpConfig {
  int max_iters = 30;
  // x^{t+1} = beta x^t + (1 - beta) eta_t(...); beta = 0 disables damping.
  double damping = 0.0;
  LambdaMode lambda_mode = LambdaMode::empirical_residual;
  // Relative change |x^{t+1} - x^t| / |x^t| that stops the iteration; zero
  // runs all max_iters iterations.
  double convergence_tol = 1e-6;
  bool si_enabled = true;
  // lambda_t^2 for t = 0, 1, ... in state_evolution mode; the last entry is
  // reused past the end.
  std::vector<double> lambda_schedule;

  void validate() const;
};

struct SideInfo {
  Vector x_tilde;
  double sigma_hat_sq;
};

// Per-iteration record. Iteration t uses lambda_t^2 and produces x^{t+1}.
// Error fields are NaN when no ground truth is supplied.
struct IterationRecord {
  int iter;
  double lambda_sq;
  double onsager;         // coefficient multiplying r^{t-1} in r^t
  double pseudo_mse;      // |x^t + A^T r^t - x|^2 / N
  double mse;             // |x^{t+1} - x|^2 / N
  double normalized_mse;  // |x^{t+1} - x|^2 / |x|^2
};

struct AmpResult {
  Vector x_hat;     // final estimate
  Vector pseudo;    // pseudo-data of the last iteration
  Vector residual;  // residual of the last iteration
  double lambda_sq = 0.0;  // lambda^2 of the last iteration
  std::vector<IterationRecord> trace;
  bool converged = false;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int iteration, const std::string& what)
      : std::runtime_error("AMP diverged at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

// AMP with side information. With cfg.si_enabled false (or si empty) this is
// plain AMP with the model's no-SI MMSE denoiser. `truth` only feeds the trace.
AmpResult amp_run(const MeasurementOperator& op, const Measurements& y, const PriorModel& prior,
                  const std::optional<SideInfo>& si, const AmpConfig& cfg,
                  const Vector* truth = nullptr);

AmpResult run_no_si(const MeasurementOperator& op, const Measurements& y, const PriorModel& prior,
                    const AmpConfig& cfg, const Vector* truth = nullptr);

// (1/delta) * mean of eta'(pseudo_n, si_n); no-SI denoiser when si is null.
double onsager_coeff(const Vector& pseudo_prev, const Vector* si, const PriorModel& prior,
                     double lambda_sq, double sigma_hat_sq, double delta);

}  // namespace ampsi
