#include "ampsi/denoisers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "ampsi/gaussian.hpp"

namespace ampsi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// (p, 1 - p) for p = 1 / (1 + exp(-d)), without cancellation in either half.
std::pair<double, double> logistic_pair(double d) noexcept {
  if (d >= 0.0) {
    const double e = std::exp(-d);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
  }
  const double e = std::exp(d);
  return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

void check_variances(double lambda_sq, double sigma_hat_sq) {
  if (std::isnan(lambda_sq) || lambda_sq < 0.0)
    throw std::invalid_argument("denoiser: lambda_sq must be >= 0");
  if (std::isnan(sigma_hat_sq) || sigma_hat_sq < 0.0)
    throw std::invalid_argument("denoiser: sigma_hat_sq must be >= 0");
}

// Normalizes log-weights in place; returns false if every weight is zero.
template <std::size_t K>
bool softmax(double (&l)[K]) noexcept {
  double hi = kNegInf;
  for (double v : l) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return false;
  double total = 0.0;
  for (double& v : l) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : l) v /= total;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bernoulli-Gaussian with SI

BgSiDenoiser::BgSiDenoiser(const BgPrior& prior, double lambda_sq, double sigma_hat_sq)
    : lambda_sq_(lambda_sq), sigma_hat_sq_(sigma_hat_sq) {
  check_variances(lambda_sq, sigma_hat_sq);
  slab_b_var_ = 1.0 + sigma_hat_sq;
  shrink_b_ = 1.0 / slab_b_var_;
  cond_a_var_ = sigma_hat_sq / slab_b_var_ + lambda_sq;
  mean_denom_ = sigma_hat_sq + lambda_sq + sigma_hat_sq * lambda_sq;
  log_odds_const_ = 0.0;
  if (lambda_sq > 0.0 && sigma_hat_sq >= kExactSiThreshold) {
    log_odds_const_ = std::log(prior.epsilon()) - std::log1p(-prior.epsilon()) +
                      0.5 * std::log(lambda_sq * sigma_hat_sq / (slab_b_var_ * cond_a_var_));
  }
}

DenoiserEval BgSiDenoiser::eval(double a, double b) const noexcept {
  if (lambda_sq_ <= 0.0) return {a, 1.0};
  const double mean = (a * sigma_hat_sq_ + b * lambda_sq_) / mean_denom_;
  if (sigma_hat_sq_ < kExactSiThreshold) {
    // X = b exactly; a zero SI sample pins X to the atom.
    if (b == 0.0) return {0.0, 0.0};
    return {mean, sigma_hat_sq_ / mean_denom_};
  }
  const double u = shrink_b_ * b - a;
  // log P(slab, a, b) - log P(atom, a, b)
  const double log_odds =
      log_odds_const_ - 0.5 * (b * b / slab_b_var_ + u * u / cond_a_var_ - a * a / lambda_sq_ -
                               b * b / sigma_hat_sq_);
  const auto [p, q] = logistic_pair(log_odds);
  const double dlog_da = u / cond_a_var_ + a / lambda_sq_;
  return {p * mean, p * q * dlog_da * mean + p * sigma_hat_sq_ / mean_denom_};
}

// ---------------------------------------------------------------------------
// Birth-death-drift with SI

BddSiDenoiser::BddSiDenoiser(const BddPrior& prior, double lambda_sq, double sigma_hat_sq)
    : lambda_sq_(lambda_sq), sigma_hat_sq_(sigma_hat_sq) {
  check_variances(lambda_sq, sigma_hat_sq);
  s_ = prior.sigma_s_sq();
  rho_ = prior.rho();
  drift_ = prior.sigma_sq();
  for (std::size_t i = 0; i < 4; ++i) log_eps_[i] = std::log(prior.eps()[i]);
  b_var_nonzero_ = sigma_hat_sq + s_;
  drift_gain_ = rho_ * s_ / b_var_nonzero_;
  drift_a_var_ = s_ * (sigma_hat_sq + drift_) / b_var_nonzero_ + lambda_sq;
  drift_denom_ = s_ * (drift_ + lambda_sq + sigma_hat_sq) + lambda_sq * sigma_hat_sq;
  birth_a_var_ = s_ + lambda_sq;
  if (lambda_sq > 0.0 && sigma_hat_sq > 0.0) {
    const double two_pi = 2.0 * std::numbers::pi;
    const auto norm = [&](double va, double vb) { return -0.5 * std::log(two_pi * va * two_pi * vb); };
    log_const_[0] = log_eps_[0] + norm(lambda_sq, sigma_hat_sq);
    log_const_[1] = log_eps_[1] + norm(lambda_sq, b_var_nonzero_);
    log_const_[2] = log_eps_[2] + norm(drift_a_var_, b_var_nonzero_);
    log_const_[3] = log_eps_[3] + norm(birth_a_var_, sigma_hat_sq);
  }
}

DenoiserEval BddSiDenoiser::eval(double a, double b) const noexcept {
  if (lambda_sq_ <= 0.0) return {a, 1.0};
  if (sigma_hat_sq_ < kExactSiThreshold) return eval_exact_si(a, b);

  const double h = sigma_hat_sq_;
  const double L = lambda_sq_;
  const double u = drift_gain_ * b - a;
  const double qa0 = a * a / L;
  const double qb0 = b * b / h;
  const double qb1 = b * b / b_var_nonzero_;
  double w[4] = {
      log_const_[0] - 0.5 * (qa0 + qb0),
      log_const_[1] - 0.5 * (qa0 + qb1),
      log_const_[2] - 0.5 * (u * u / drift_a_var_ + qb1),
      log_const_[3] - 0.5 * (a * a / birth_a_var_ + qb0),
  };
  if (!softmax(w)) return {0.0, 0.0};

  const double m3 = (s_ * (drift_ + h) * a + rho_ * s_ * L * b) / drift_denom_;
  const double m3_da = s_ * (drift_ + h) / drift_denom_;
  const double m4 = s_ * a / birth_a_var_;
  const double m4_da = s_ / birth_a_var_;

  // d/da of each case's log-weight
  const double g[4] = {-a / L, -a / L, u / drift_a_var_, -a / birth_a_var_};
  double g_mean = 0.0;
  for (int i = 0; i < 4; ++i) g_mean += w[i] * g[i];

  const double value = w[2] * m3 + w[3] * m4;
  const double derivative = w[2] * (g[2] - g_mean) * m3 + w[3] * (g[3] - g_mean) * m4 +
                            w[2] * m3_da + w[3] * m4_da;
  return {value, derivative};
}

DenoiserEval BddSiDenoiser::eval_exact_si(double a, double b) const noexcept {
  const double L = lambda_sq_;
  if (b == 0.0) {
    // x_prev = 0: stay-zero or birth.
    double w[2] = {log_eps_[0] + log_psi(a, L), log_eps_[3] + log_psi(a, birth_a_var_)};
    if (!softmax(w)) return {0.0, 0.0};
    const double g0 = -a / L;
    const double g1 = -a / birth_a_var_;
    const double g_mean = w[0] * g0 + w[1] * g1;
    const double m = s_ * a / birth_a_var_;
    return {w[1] * m, w[1] * (g1 - g_mean) * m + w[1] * s_ / birth_a_var_};
  }
  // x_prev = b: death or drift around rho b.
  const double var3 = drift_ + L;
  const double r = a - rho_ * b;
  double w[2] = {log_eps_[1] + log_psi(a, L), log_eps_[2] + log_psi(r, var3)};
  if (!softmax(w)) return {0.0, 0.0};
  const double g0 = -a / L;
  const double g1 = -r / var3;
  const double g_mean = w[0] * g0 + w[1] * g1;
  const double m = rho_ * b + drift_ * r / var3;
  return {w[1] * m, w[1] * (g1 - g_mean) * m + w[1] * drift_ / var3};
}

// ---------------------------------------------------------------------------
// Gaussian-Gaussian with SI

GgSiDenoiser::GgSiDenoiser(const GgPrior& prior, double lambda_sq, double sigma_hat_sq) {
  check_variances(lambda_sq, sigma_hat_sq);
  passthrough_ = lambda_sq <= 0.0;
  const double sx = prior.sigma_x_sq();
  const double denom = sx * (sigma_hat_sq + lambda_sq) + lambda_sq * sigma_hat_sq;
  coeff_a_ = passthrough_ ? 1.0 : sx * sigma_hat_sq / denom;
  coeff_b_ = passthrough_ ? 0.0 : sx * lambda_sq / denom;
}

DenoiserEval GgSiDenoiser::eval(double a, double b) const noexcept {
  return {coeff_a_ * a + coeff_b_ * b, coeff_a_};
}

// ---------------------------------------------------------------------------
// No-SI denoisers

SpikeSlabDenoiser::SpikeSlabDenoiser(double eps, double slab_var, double lambda_sq)
    : lambda_sq_(lambda_sq), slab_var_(slab_var) {
  check_variances(lambda_sq, 0.0);
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("SpikeSlabDenoiser: eps in [0, 1]");
  if (!(slab_var > 0.0)) throw std::invalid_argument("SpikeSlabDenoiser: slab_var must be > 0");
  slab_a_var_ = slab_var + lambda_sq;
  log_odds_const_ = 0.0;
  if (lambda_sq > 0.0)
    log_odds_const_ = std::log(eps) - std::log1p(-eps) + 0.5 * std::log(lambda_sq / slab_a_var_);
}

DenoiserEval SpikeSlabDenoiser::eval(double a) const noexcept {
  if (lambda_sq_ <= 0.0) return {a, 1.0};
  const double log_odds = log_odds_const_ - 0.5 * (a * a / slab_a_var_ - a * a / lambda_sq_);
  const auto [p, q] = logistic_pair(log_odds);
  const double gain = slab_var_ / slab_a_var_;
  const double mean = gain * a;
  const double dlog_da = -a / slab_a_var_ + a / lambda_sq_;
  return {p * mean, p * q * dlog_da * mean + p * gain};
}

WienerDenoiser::WienerDenoiser(double sigma_x_sq, double lambda_sq) {
  check_variances(lambda_sq, 0.0);
  gain_ = sigma_x_sq / (sigma_x_sq + lambda_sq);
}

// ---------------------------------------------------------------------------
// Free-function entry points

double eta_bg(const BgPrior& prior, double lambda_sq, double sigma_hat_sq, double a, double b) {
  return BgSiDenoiser(prior, lambda_sq, sigma_hat_sq).eval(a, b).value;
}

double eta_bdd(const BddPrior& prior, double lambda_sq, double sigma_hat_sq, double a, double b) {
  return BddSiDenoiser(prior, lambda_sq, sigma_hat_sq).eval(a, b).value;
}

double eta_gg(const GgPrior& prior, double lambda_sq, double sigma_hat_sq, double a, double b) {
  return GgSiDenoiser(prior, lambda_sq, sigma_hat_sq).eval(a, b).value;
}

double eta_bg_no_si(const BgPrior& prior, double lambda_sq, double a) {
  return SpikeSlabDenoiser(prior.epsilon(), 1.0, lambda_sq).eval(a).value;
}

namespace {

DenoiserEval eval_with_si(const DenoiserContext& ctx, double a, double b) {
  struct Visitor {
    double lambda_sq, sigma_hat_sq, a, b;
    DenoiserEval operator()(const BgPrior& p) const {
      return BgSiDenoiser(p, lambda_sq, sigma_hat_sq).eval(a, b);
    }
    DenoiserEval operator()(const BddPrior& p) const {
      return BddSiDenoiser(p, lambda_sq, sigma_hat_sq).eval(a, b);
    }
    DenoiserEval operator()(const GgPrior& p) const {
      return GgSiDenoiser(p, lambda_sq, sigma_hat_sq).eval(a, b);
    }
  };
  return std::visit(Visitor{ctx.lambda_sq, ctx.sigma_hat_sq, a, b}, ctx.prior);
}

DenoiserEval eval_without_si(const PriorModel& prior, double lambda_sq, double a) {
  struct Visitor {
    double lambda_sq, a;
    DenoiserEval operator()(const BgPrior& p) const {
      return SpikeSlabDenoiser(p.epsilon(), 1.0, lambda_sq).eval(a);
    }
    DenoiserEval operator()(const BddPrior& p) const {
      return SpikeSlabDenoiser(p.nonzero_rate(), p.sigma_s_sq(), lambda_sq).eval(a);
    }
    DenoiserEval operator()(const GgPrior& p) const {
      return WienerDenoiser(p.sigma_x_sq(), lambda_sq).eval(a);
    }
  };
  return std::visit(Visitor{lambda_sq, a}, prior);
}

template <class Denoiser>
DenoisedVector apply_pairwise(const Denoiser& d, const Vector& pseudo, const Vector& si) {
  DenoisedVector out{Vector(pseudo.size()), Vector(pseudo.size())};
  for (Eigen::Index i = 0; i < pseudo.size(); ++i) {
    const DenoiserEval e = d.eval(pseudo[i], si[i]);
    out.value[i] = e.value;
    out.derivative[i] = e.derivative;
  }
  return out;
}

template <class Denoiser>
DenoisedVector apply_single(const Denoiser& d, const Vector& pseudo) {
  DenoisedVector out{Vector(pseudo.size()), Vector(pseudo.size())};
  for (Eigen::Index i = 0; i < pseudo.size(); ++i) {
    const DenoiserEval e = d.eval(pseudo[i]);
    out.value[i] = e.value;
    out.derivative[i] = e.derivative;
  }
  return out;
}

}  // namespace

double eta(const DenoiserContext& ctx, double a, double b) { return eval_with_si(ctx, a, b).value; }

double eta_prime(const DenoiserContext& ctx, double a, double b) {
  return eval_with_si(ctx, a, b).derivative;
}

double eta_no_si(const PriorModel& prior, double lambda_sq, double a) {
  return eval_without_si(prior, lambda_sq, a).value;
}

double eta_prime_no_si(const PriorModel& prior, double lambda_sq, double a) {
  return eval_without_si(prior, lambda_sq, a).derivative;
}

DenoisedVector denoise_with_si(const PriorModel& prior, double lambda_sq, double sigma_hat_sq,
                               const Vector& pseudo, const Vector& si) {
  if (pseudo.size() != si.size())
    throw std::invalid_argument("denoise_with_si: pseudo-data and SI lengths differ");
  struct Visitor {
    double lambda_sq, sigma_hat_sq;
    const Vector& pseudo;
    const Vector& si;
    DenoisedVector operator()(const BgPrior& p) const {
      return apply_pairwise(BgSiDenoiser(p, lambda_sq, sigma_hat_sq), pseudo, si);
    }
    DenoisedVector operator()(const BddPrior& p) const {
      return apply_pairwise(BddSiDenoiser(p, lambda_sq, sigma_hat_sq), pseudo, si);
    }
    DenoisedVector operator()(const GgPrior& p) const {
      return apply_pairwise(GgSiDenoiser(p, lambda_sq, sigma_hat_sq), pseudo, si);
    }
  };
  return std::visit(Visitor{lambda_sq, sigma_hat_sq, pseudo, si}, prior);
}

DenoisedVector denoise_without_si(const PriorModel& prior, double lambda_sq,
                                  const Vector& pseudo) {
  struct Visitor {
    double lambda_sq;
    const Vector& pseudo;
    DenoisedVector operator()(const BgPrior& p) const {
      return apply_single(SpikeSlabDenoiser(p.epsilon(), 1.0, lambda_sq), pseudo);
    }
    DenoisedVector operator()(const BddPrior& p) const {
      return apply_single(SpikeSlabDenoiser(p.nonzero_rate(), p.sigma_s_sq(), lambda_sq), pseudo);
    }
    DenoisedVector operator()(const GgPrior& p) const {
      return apply_single(WienerDenoiser(p.sigma_x_sq(), lambda_sq), pseudo);
    }
  };
  return std::visit(Visitor{lambda_sq, pseudo}, prior);
}

}  // namespace ampsi
