#include "ampsi/gaussian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace ampsi {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(what);
}

}  // namespace

double log_gauss_pdf(double x, GaussianParams params) {
  require_positive(params.variance, "log_gauss_pdf: variance must be > 0");
  return log_psi(x - params.mean, params.variance);
}

GaussianProduct gauss_product(GaussianParams p1, GaussianParams p2) {
  require_positive(p1.variance, "gauss_product: variance must be > 0");
  require_positive(p2.variance, "gauss_product: variance must be > 0");
  const double total = p1.variance + p2.variance;
  GaussianProduct out;
  out.combined.mean = (p1.mean * p2.variance + p2.mean * p1.variance) / total;
  out.combined.variance = p1.variance * p2.variance / total;
  out.log_scale = log_psi(p1.mean - p2.mean, total);
  return out;
}

double joint_density_log(double a, double b, double rho, double sigma_x_sq,
                         double sigma_a_sq, double sigma_b_sq) {
  if (rho == 0.0) throw std::domain_error("joint_density_log: rho must be nonzero");
  require_positive(sigma_x_sq, "joint_density_log: sigma_x_sq must be > 0");
  require_positive(sigma_a_sq, "joint_density_log: sigma_a_sq must be > 0");
  require_positive(sigma_b_sq, "joint_density_log: sigma_b_sq must be > 0");
  const double sxb = sigma_x_sq + sigma_b_sq;
  const double inner_var = sigma_x_sq * sigma_b_sq / sxb + sigma_a_sq / (rho * rho);
  return -std::log(std::abs(rho)) + log_psi(b, sxb) +
         log_psi(sigma_x_sq * b / sxb - a / rho, inner_var);
}

double joint_cond_mean(double a, double b, double rho, double sigma_x_sq,
                       double sigma_a_sq, double sigma_b_sq) {
  const double denom = sigma_x_sq * (sigma_a_sq + rho * rho * sigma_b_sq) +
                       sigma_a_sq * sigma_b_sq;
  if (!(denom > 0.0)) throw std::domain_error("joint_cond_mean: degenerate variances");
  return (rho * sigma_x_sq * sigma_b_sq * a + sigma_x_sq * sigma_a_sq * b) / denom;
}

double matched_filter_mu(double a, double b, double lambda_sq, double sigma_hat_sq) {
  const double total = lambda_sq + sigma_hat_sq;
  if (!(total > 0.0)) throw std::domain_error("matched_filter_mu: both variances are zero");
  return (a * sigma_hat_sq + b * lambda_sq) / total;
}

double matched_filter_var(double lambda_sq, double sigma_hat_sq) {
  const double total = lambda_sq + sigma_hat_sq;
  if (!(total > 0.0)) throw std::domain_error("matched_filter_var: both variances are zero");
  return lambda_sq * sigma_hat_sq / total;
}

double log_sum_exp(std::span<const double> v) noexcept {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace ampsi
