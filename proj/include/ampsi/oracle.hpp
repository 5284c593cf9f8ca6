#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ampsi/signal_models.hpp"

namespace ampsi {

// Brute-force posterior means used to validate the closed-form denoisers.
// Nothing in here calls the denoiser code.

// E[X | X + lambda U = a, X + sigma_hat V = b] for BG or GG by adaptive
// Gauss-Kronrod quadrature of the continuous part; the BG atom at zero enters
// as an exact second component. Throws std::invalid_argument for BDD and
// std::runtime_error when the quadrature misses its tolerance.
double oracle_posterior_mean_quadrature(const PriorModel& prior, double lambda_sq,
                                        double sigma_hat_sq, double a, double b);

// Same without side information: E[X | X + lambda U = a].
double oracle_posterior_mean_quadrature_no_si(const PriorModel& prior, double lambda_sq, double a);

struct McEstimate {
  double mean;
  double stderr;
  double ess;  // effective sample size (sum w)^2 / sum w^2
  std::size_t samples;
};

// Self-normalized importance sampling with the prior as proposal: draws
// (X_ref, X) and weights each draw by psi_{lambda^2}(a - X) psi_{sigma_hat^2}(b - X_ref).
// X_ref is X_p for BDD and X itself for BG/GG. Throws std::runtime_error when
// the effective sample size is below 100.
McEstimate oracle_posterior_mean_mc(const PriorModel& prior, double lambda_sq, double sigma_hat_sq,
                                    double a, double b, std::size_t samples, std::uint64_t seed);

// integral of psi_{sx}(x) psi_{sb}(b - x) psi_{sa}(a - rho x) dx over
// [-12 sqrt(sx), 12 sqrt(sx)]. Not in the log domain.
double oracle_joint_density(double a, double b, double rho, double sigma_x_sq, double sigma_a_sq,
                            double sigma_b_sq);

// Golden reference values.
struct GoldenRow {
  std::string model;   // bg, bdd, gg, or bg_no_si
  std::uint64_t params_hash;
  double a;
  double b;
  double oracle_value;
  double stderr;       // 0 for quadrature
  std::string method;  // quadrature or monte-carlo
  std::size_t samples; // 0 for quadrature
};

std::uint64_t fnv1a64(std::string_view s) noexcept;

// Canonical text of the denoiser parameters, hashed into params_hash.
std::string params_key(const PriorModel& prior, double lambda_sq, double sigma_hat_sq);
std::string params_key_no_si(const PriorModel& prior, double lambda_sq);

// A reference point of the checked-in golden file.
struct GoldenCase {
  std::string model;  // bg, bdd, gg, or bg_no_si
  PriorModel prior;
  double lambda_sq;
  double sigma_hat_sq;  // ignored for bg_no_si
  double a;
  double b;
  std::size_t samples;  // 0 selects quadrature, otherwise Monte Carlo
  std::uint64_t seed;
};

std::vector<GoldenCase> golden_cases();
GoldenRow evaluate_golden(const GoldenCase& c);
std::uint64_t golden_hash(const GoldenCase& c);

std::vector<GoldenRow> read_golden(const std::filesystem::path& path);
std::string format_golden(const std::vector<GoldenRow>& rows);

}  // namespace ampsi
