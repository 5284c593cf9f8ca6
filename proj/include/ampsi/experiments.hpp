#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ampsi/amp.hpp"
#include "ampsi/measurement.hpp"
#include "ampsi/signal_models.hpp"
#include "ampsi/state_evolution.hpp"

namespace ampsi {

// Raised when too many trials of an experiment diverge.
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs fn(0) ... fn(count - 1) on up to `workers` threads. Results must not
// depend on scheduling; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& fn);

// How an MSE is turned into decibels.
enum class DbNorm {
  per_entry,   // 10 log10(|x_hat - x|^2 / N)
  per_energy,  // 10 log10(|x_hat - x|^2 / |x|^2)
};

double to_db(double v);

// Mean and half-width of a normal 95% interval.
struct MeanCi {
  double mean;
  double ci;
};
MeanCi mean_ci(const std::vector<double>& v);

// ---------------------------------------------------------------------------
// Single-batch BG recovery with an SE overlay.

struct Fig4Config {
  std::size_t n = 10000;
  std::size_t m = 3000;
  double epsilon = 0.3;
  double sigma_z = 0.1;
  double sigma_hat = 0.1;
  int trials = 20;
  std::uint64_t seed = 1;
  AmpConfig amp;  // convergence_tol should be 0 so every trial reports all iterations
  SeSettings se;
  unsigned workers = 1;
};

struct Fig4Row {
  int iter;  // estimate x^iter, 1-based
  double empirical_mse_mean;
  double empirical_mse_ci;
  double se_mse;
};

struct Fig4Result {
  std::vector<Fig4Row> rows;
  std::vector<std::vector<double>> trial_nmse;  // [trial][iter - 1]
  int diverged = 0;
  SeTrace se;
};

Fig4Result run_fig4(const Fig4Config& cfg);

// ---------------------------------------------------------------------------
// Multi-batch BDD pipeline.

struct BatchRecord {
  int batch;  // 1-based
  Vector x;
  std::optional<Vector> si;
  double si_var = 0.0;  // sigma_hat^2 used with si
  Vector x_hat;
  Vector pseudo;       // final pseudo-data, SI of the next batch
  double lambda_sq;    // final lambda^2, SI variance of the next batch
  std::vector<double> mse;   // |x^{t+1} - x|^2 / N per iteration, padded to max_iters
  std::vector<double> nmse;  // |x^{t+1} - x|^2 / |x|^2 per iteration, padded
  int iterations = 0;
  double wall_seconds = 0.0;
};

struct PipelineConfig {
  OperatorKind kind = OperatorKind::dense_gaussian;
  std::size_t n = 10000;
  std::size_t m = 3000;          // dense operator rows
  std::size_t pilot_len = 1001;  // Toeplitz pilot length
  BddPrior prior{{0.80, 0.01, 0.18, 0.01}, 1.0, 0.95};
  double sigma_z = 0.077;
  int batches = 15;
  AmpConfig amp;
  bool run_plain_arm = true;  // also run AMP without SI on the same data
  std::uint64_t seed = 1;
};

struct TrialOutcome {
  std::vector<BatchRecord> ampsi;
  std::vector<BatchRecord> amp;  // empty unless run_plain_arm
};

// One realization: batch 1 has no SI, batch b > 1 uses the previous batch's
// final pseudo-data with variance equal to its final lambda^2. Both arms see
// the same signals, operators, and noise. Throws DivergenceError.
TrialOutcome run_bdd_trial(const PipelineConfig& cfg, int trial);

// Throws std::logic_error if a record chain breaks the SI chaining rule.
void check_si_chaining(const std::vector<BatchRecord>& records);

struct Fig5Config {
  PipelineConfig pipeline;
  int trials = 100;
  unsigned workers = 1;
};

struct Fig5Row {
  int batch;
  int iter;
  double mse_amp;    // mean normalized MSE over trials
  double mse_ampsi;
};

struct Fig5Result {
  std::vector<Fig5Row> rows;
  // Final normalized MSE per [trial][batch - 1].
  std::vector<std::vector<double>> final_amp;
  std::vector<std::vector<double>> final_ampsi;
  int diverged = 0;
};

Fig5Result run_fig5(const Fig5Config& cfg);

// ---------------------------------------------------------------------------
// Channel estimation with Toeplitz pilots, and the batch-5 comparison table.

struct ChannelConfig {
  std::size_t n = 4000;
  std::size_t pilot_len = 1001;
  BddPrior prior{{0.78, 0.01, 0.20, 0.01}, 1.0, 0.95};
  std::vector<double> sigma_z{1.0, 0.1, 0.01};
  int batches = 5;
  int trials = 50;
  AmpConfig amp;  // damping 0.9 by default in the drivers
  DbNorm db_norm = DbNorm::per_entry;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct ChannelRow {
  double snr_db;
  int batch;
  double mse_db;
};

struct ChannelResult {
  std::vector<ChannelRow> rows;  // every (snr, batch)
  int diverged = 0;
};

ChannelResult run_channel_estimation(const ChannelConfig& cfg);

struct Table2Config {
  ChannelConfig channel;
  int iid_trials = 50;
  AmpConfig iid_amp;  // undamped by default
  int report_batch = 5;
  SeSettings se;
};

struct Table2Row {
  double snr_db;
  double iid_mse_db;
  double se_mse_db;
  double toeplitz_mse_db;
};

struct Table2Result {
  std::vector<Table2Row> rows;
  ChannelResult toeplitz;  // full Toeplitz table, every batch
  int iid_diverged = 0;
};

Table2Result run_table2(const Table2Config& cfg);

// SE prediction of the BDD pipeline's MSE at a given batch, in dB.
double se_pipeline_mse_db(const BddPrior& prior, double delta, double sigma_z, int batch,
                          DbNorm norm, const SeSettings& se);

}  // namespace ampsi
