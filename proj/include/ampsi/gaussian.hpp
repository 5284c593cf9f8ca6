#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace ampsi {

struct GaussianParams {
  double mean = 0.0;
  double variance = 1.0;
};

// Unchecked log of the zero-mean Gaussian density with variance var > 0.
inline double log_psi(double x, double var) noexcept {
  return -0.5 * (x * x / var + std::log(2.0 * std::numbers::pi * var));
}

// Log-density of N(mean, variance) at x. Throws std::domain_error unless
// variance > 0.
double log_gauss_pdf(double x, GaussianParams params);

// psi(x; p1) * psi(x; p2) = psi(x; combined) * exp(log_scale).
struct GaussianProduct {
  GaussianParams combined;
  double log_scale;
};

GaussianProduct gauss_product(GaussianParams p1, GaussianParams p2);

// Joint density of A = rho X + N(0, sigma_a_sq) and B = X + N(0, sigma_b_sq)
// with X ~ N(0, sigma_x_sq), all independent. Log domain.
double joint_density_log(double a, double b, double rho, double sigma_x_sq,
                         double sigma_a_sq, double sigma_b_sq);

// E[X | A = a, B = b] for the same model.
double joint_cond_mean(double a, double b, double rho, double sigma_x_sq,
                       double sigma_a_sq, double sigma_b_sq);

// Matched-filter combination of two noisy views of X with noise variances
// lambda_sq (first) and sigma_hat_sq (second).
double matched_filter_mu(double a, double b, double lambda_sq,
                         double sigma_hat_sq);
double matched_filter_var(double lambda_sq, double sigma_hat_sq);

// log(sum(exp(v))); -inf for an empty span or when every entry is -inf.
double log_sum_exp(std::span<const double> v) noexcept;

}  // namespace ampsi
