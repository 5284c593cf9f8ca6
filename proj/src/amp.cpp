#include "ampsi/amp.hpp"

#include <cmath>
#include <limits>

#include "ampsi/denoisers.hpp"

namespace ampsi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDivergenceFactor = 1e6;

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

void AmpConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("AmpConfig: max_iters must be >= 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw std::invalid_argument("AmpConfig: damping must lie in [0, 1)");
  if (!(convergence_tol >= 0.0)) throw std::invalid_argument("AmpConfig: convergence_tol must be >= 0");
  if (lambda_mode == LambdaMode::state_evolution && lambda_schedule.empty())
    throw std::invalid_argument("AmpConfig: state-evolution mode needs a lambda schedule");
}

double onsager_coeff(const Vector& pseudo_prev, const Vector* si, const PriorModel& prior,
                     double lambda_sq, double sigma_hat_sq, double delta) {
  const DenoisedVector d = si != nullptr
                               ? denoise_with_si(prior, lambda_sq, sigma_hat_sq, pseudo_prev, *si)
                               : denoise_without_si(prior, lambda_sq, pseudo_prev);
  return d.derivative.mean() / delta;
}

AmpResult amp_run(const MeasurementOperator& op, const Measurements& meas, const PriorModel& prior,
                  const std::optional<SideInfo>& si, const AmpConfig& cfg, const Vector* truth) {
  cfg.validate();
  const auto m = static_cast<Eigen::Index>(op.rows());
  const auto n = static_cast<Eigen::Index>(op.cols());
  if (meas.y.size() != m) throw std::invalid_argument("amp_run: measurement length does not match operator rows");
  const bool use_si = cfg.si_enabled && si.has_value();
  if (use_si && si->x_tilde.size() != n) throw std::invalid_argument("amp_run: SI length does not match operator columns");
  if (truth != nullptr && truth->size() != n) throw std::invalid_argument("amp_run: truth length does not match operator columns");

  const double delta = op.delta();
  const double truth_energy = truth != nullptr ? truth->squaredNorm() : kNaN;

  AmpResult res;
  Vector x = Vector::Zero(n);
  Vector r_prev;
  double onsager = 0.0;  // no r^{-1} at t = 0
  double lambda0_sq = kNaN;

  for (int t = 0; t < cfg.max_iters; ++t) {
    Vector r = meas.y - op.apply(x);
    if (t > 0) r += onsager * r_prev;
    Vector pseudo = x + op.apply_adjoint(r);

    double lambda_sq;
    if (cfg.lambda_mode == LambdaMode::empirical_residual) {
      lambda_sq = r.squaredNorm() / static_cast<double>(m);
    } else {
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(t), cfg.lambda_schedule.size() - 1);
      lambda_sq = cfg.lambda_schedule[k];
    }
    if (t == 0) lambda0_sq = lambda_sq;
    if (!std::isfinite(lambda_sq) || !all_finite(pseudo))
      throw DivergenceError(t, "non-finite pseudo-data");
    if (lambda_sq > kDivergenceFactor * lambda0_sq)
      throw DivergenceError(t, "lambda^2 grew by more than 1e6 over its initial value");

    const DenoisedVector d = use_si ? denoise_with_si(prior, lambda_sq, si->sigma_hat_sq, pseudo, si->x_tilde)
                                    : denoise_without_si(prior, lambda_sq, pseudo);
    Vector x_next = cfg.damping > 0.0 ? Vector(cfg.damping * x + (1.0 - cfg.damping) * d.value) : d.value;
    if (!all_finite(x_next)) throw DivergenceError(t, "non-finite estimate");

    IterationRecord rec{t, lambda_sq, t > 0 ? onsager : 0.0, kNaN, kNaN, kNaN};
    if (truth != nullptr) {
      const double nd = static_cast<double>(n);
      rec.pseudo_mse = (pseudo - *truth).squaredNorm() / nd;
      const double err = (x_next - *truth).squaredNorm();
      rec.mse = err / nd;
      rec.normalized_mse = err / truth_energy;
    }
    res.trace.push_back(rec);

    const double change = (x_next - x).norm() / std::max(x.norm(), 1e-12);
    onsager = d.derivative.mean() / delta;
    r_prev = std::move(r);
    x = std::move(x_next);
    res.pseudo = std::move(pseudo);
    res.lambda_sq = lambda_sq;
    if (cfg.convergence_tol > 0.0 && change < cfg.convergence_tol) {
      res.converged = true;
      break;
    }
  }
  res.x_hat = std::move(x);
  res.residual = std::move(r_prev);
  return res;
}

AmpResult run_no_si(const MeasurementOperator& op, const Measurements& y, const PriorModel& prior,
                    const AmpConfig& cfg, const Vector* truth) {
  AmpConfig plain = cfg;
  plain.si_enabled = false;
  return amp_run(op, y, prior, std::nullopt, plain, truth);
}

}  // namespace ampsi
