#include "ampsi/state_evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "ampsi/denoisers.hpp"
#include "ampsi/gaussian.hpp"

namespace ampsi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Joint draws of (X, X_ref) plus the two channel noises.
struct SeSamples {
  Vector x;
  Vector x_ref;
  Vector z1;
  Vector z2;
};

SeSamples draw_samples(const PriorModel& prior, std::size_t mc, std::uint64_t seed) {
  if (mc < 2) throw std::invalid_argument("state evolution: mc must be >= 2");
  const auto n = static_cast<Eigen::Index>(mc);
  SeSamples s{Vector(n), Vector(n), Vector(n), Vector(n)};
  Rng rng = make_rng(seed);
  // Fixed number of draws per sample keeps neighbouring parameter values on
  // the same random numbers.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    const double g1 = normal(rng);
    const double g2 = normal(rng);
    s.z1[i] = normal(rng);
    s.z2[i] = normal(rng);
    if (const auto* bg = std::get_if<BgPrior>(&prior)) {
      s.x[i] = u < bg->epsilon() ? g1 : 0.0;
      s.x_ref[i] = s.x[i];
    } else if (const auto* gg = std::get_if<GgPrior>(&prior)) {
      s.x[i] = std::sqrt(gg->sigma_x_sq()) * g1;
      s.x_ref[i] = s.x[i];
    } else {
      const auto& bdd = std::get<BddPrior>(prior);
      const auto& e = bdd.eps();
      const double sd = std::sqrt(bdd.sigma_s_sq());
      double xp = 0.0, xc = 0.0;
      if (u < e[0]) {
      } else if (u < e[0] + e[1]) {
        xp = sd * g1;
      } else if (u < e[0] + e[1] + e[2]) {
        xp = sd * g1;
        xc = bdd.rho() * xp + std::sqrt(bdd.sigma_sq()) * g2;
      } else {
        xc = sd * g2;
      }
      s.x[i] = xc;
      s.x_ref[i] = xp;
    }
  }
  return s;
}

SeStep finish(const Vector& sq_err, double delta, double sigma_z_sq) {
  const double n = static_cast<double>(sq_err.size());
  const double mean = sq_err.mean();
  const double var = (sq_err.array() - mean).square().sum() / (n - 1.0);
  return {sigma_z_sq + mean / delta, std::sqrt(var / n) / delta};
}

SeStep step_on(const PriorModel& prior, const std::optional<SiChannel>& si, double lambda_sq,
               double delta, double sigma_z_sq, const SeSamples& s, const Vector* b) {
  const Vector a = s.x + std::sqrt(lambda_sq) * s.z1;
  const DenoisedVector d = si ? denoise_with_si(prior, lambda_sq, si->sigma_hat_sq(), a, *b)
                              : denoise_without_si(prior, lambda_sq, a);
  return finish((d.value - s.x).array().square().matrix(), delta, sigma_z_sq);
}

SeStep gaussian_si_step_on(const PriorModel& prior, double sigma_hat_sq, double lambda_sq,
                           double delta, double sigma_z_sq, const SeSamples& s) {
  const double var = matched_filter_var(lambda_sq, sigma_hat_sq);
  const Vector a = s.x + std::sqrt(var) * s.z1;
  const DenoisedVector d = denoise_without_si(prior, var, a);
  return finish((d.value - s.x).array().square().matrix(), delta, sigma_z_sq);
}

void require_gaussian_si(const PriorModel& prior) {
  if (std::holds_alternative<BddPrior>(prior))
    throw std::invalid_argument("matched-filter SE needs SI of the form X + noise; BDD is not supported");
}

void check_inputs(double delta, double sigma_z_sq) {
  if (!(delta > 0.0)) throw std::invalid_argument("state evolution: delta must be > 0");
  if (!(sigma_z_sq >= 0.0)) throw std::invalid_argument("state evolution: sigma_z^2 must be >= 0");
}

template <typename Step>
SeTrace iterate(double lambda0_sq, const SeSettings& st, Step&& step) {
  if (st.t_max < 1) throw std::invalid_argument("state evolution: t_max must be >= 1");
  SeTrace tr;
  tr.mc_samples = st.mc;
  tr.lambda_sq.push_back(lambda0_sq);
  tr.stderr.push_back(0.0);
  double cur = lambda0_sq;
  for (int t = 0; t < st.t_max; ++t) {
    const SeStep next = step(cur);
    tr.lambda_sq.push_back(next.lambda_sq);
    tr.stderr.push_back(next.stderr);
    const bool done = std::abs(next.lambda_sq - cur) < st.tol * cur || next.lambda_sq == 0.0;
    cur = next.lambda_sq;
    if (done) {
      tr.converged = true;
      break;
    }
  }
  tr.fixed_point = cur;
  return tr;
}

}  // namespace

double initial_lambda_sq(const PriorModel& prior, double delta, double sigma_z_sq) {
  check_inputs(delta, sigma_z_sq);
  return sigma_z_sq + second_moment(prior) / delta;
}

SeStep se_step(const PriorModel& prior, const std::optional<SiChannel>& si, double lambda_sq_prev,
               double delta, double sigma_z_sq, std::size_t mc, std::uint64_t seed) {
  check_inputs(delta, sigma_z_sq);
  const SeSamples s = draw_samples(prior, mc, seed);
  Vector b;
  if (si) b = s.x_ref + std::sqrt(si->sigma_hat_sq()) * s.z2;
  return step_on(prior, si, lambda_sq_prev, delta, sigma_z_sq, s, &b);
}

SeTrace se_run(const PriorModel& prior, const std::optional<SiChannel>& si, double delta,
               double sigma_z_sq, const SeSettings& settings) {
  const double l0 = initial_lambda_sq(prior, delta, sigma_z_sq);
  const SeSamples s = draw_samples(prior, settings.mc, settings.seed);
  Vector b;
  if (si) b = s.x_ref + std::sqrt(si->sigma_hat_sq()) * s.z2;
  return iterate(l0, settings, [&](double l) { return step_on(prior, si, l, delta, sigma_z_sq, s, &b); });
}

SeStep se_gaussian_si_step(const PriorModel& prior, double sigma_hat_sq, double lambda_sq_prev,
                           double delta, double sigma_z_sq, std::size_t mc, std::uint64_t seed) {
  require_gaussian_si(prior);
  check_inputs(delta, sigma_z_sq);
  const SeSamples s = draw_samples(prior, mc, seed);
  return gaussian_si_step_on(prior, sigma_hat_sq, lambda_sq_prev, delta, sigma_z_sq, s);
}

SeTrace se_gaussian_si_run(const PriorModel& prior, double sigma_hat_sq, double delta,
                           double sigma_z_sq, const SeSettings& settings) {
  require_gaussian_si(prior);
  const double l0 = initial_lambda_sq(prior, delta, sigma_z_sq);
  const SeSamples s = draw_samples(prior, settings.mc, settings.seed);
  return iterate(l0, settings, [&](double l) {
    return gaussian_si_step_on(prior, sigma_hat_sq, l, delta, sigma_z_sq, s);
  });
}

EffectiveChannel effective_channel(double delta, double sigma_z_sq, double sigma_hat_sq,
                                   double lambda_fixed_sq) {
  if (!(delta > 0.0 && sigma_z_sq >= 0.0 && sigma_hat_sq > 0.0 && lambda_fixed_sq > 0.0))
    throw std::invalid_argument("effective_channel: inputs must be positive");
  const double mu = sigma_hat_sq / (sigma_hat_sq + lambda_fixed_sq);
  return {delta / mu, mu * sigma_z_sq, mu};
}

std::vector<SeTrace> se_batch_chain(const PriorModel& prior, double delta, double sigma_z_sq,
                                    int batches, const SeSettings& settings) {
  if (batches < 1) throw std::invalid_argument("se_batch_chain: batches must be >= 1");
  const double l0 = initial_lambda_sq(prior, delta, sigma_z_sq);
  const SeSamples s = draw_samples(prior, settings.mc, settings.seed);
  std::vector<SeTrace> out;
  std::optional<SiChannel> si;
  for (int k = 0; k < batches; ++k) {
    Vector b;
    if (si) b = s.x_ref + std::sqrt(si->sigma_hat_sq()) * s.z2;
    out.push_back(iterate(l0, settings, [&](double l) {
      return step_on(prior, si, l, delta, sigma_z_sq, s, &b);
    }));
    si.emplace(out.back().fixed_point);
  }
  return out;
}

std::optional<PriorModel> phase_prior(const PhaseGridConfig& cfg, double gamma) {
  if (cfg.family == PriorFamily::bg) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) return std::nullopt;
    return PriorModel{BgPrior(gamma)};
  }
  const double eps3 = gamma - cfg.eps4;
  const double eps1 = 1.0 - cfg.eps2 - eps3 - cfg.eps4;
  if (eps3 < 0.0 || eps1 < -1e-12) return std::nullopt;
  return PriorModel{BddPrior({std::max(eps1, 0.0), cfg.eps2, eps3, cfg.eps4}, cfg.sigma_s_sq, cfg.rho)};
}

std::vector<PhaseCell> phase_grid(const PhaseGridConfig& cfg) {
  if (cfg.delta_grid.empty() || cfg.gamma_grid.empty() || cfg.batches.empty())
    throw std::invalid_argument("phase_grid: grids must be non-empty");
  for (int b : cfg.batches)
    if (b < 1) throw std::invalid_argument("phase_grid: batch indices start at 1");
  const int max_batch = *std::max_element(cfg.batches.begin(), cfg.batches.end());
  const std::size_t nd = cfg.delta_grid.size(), ng = cfg.gamma_grid.size(), nb = cfg.batches.size();
  const double sz2 = cfg.sigma_z * cfg.sigma_z;

  std::vector<PhaseCell> out(nb * ng * nd);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t cell = next++; cell < ng * nd; cell = next++) {
      const std::size_t gi = cell / nd, di = cell % nd;
      const double delta = cfg.delta_grid[di], gamma = cfg.gamma_grid[gi];
      const auto prior = phase_prior(cfg, gamma);
      std::vector<SeTrace> chain;
      if (prior) chain = se_batch_chain(*prior, delta, sz2, max_batch, cfg.se);
      for (std::size_t bi = 0; bi < nb; ++bi) {
        PhaseCell& c = out[(bi * ng + gi) * nd + di];
        c = {delta, gamma, cfg.batches[bi], kNaN, kNaN};
        if (!prior) continue;
        const SeTrace& tr = chain[static_cast<std::size_t>(cfg.batches[bi] - 1)];
        c.mse = delta * (tr.fixed_point - sz2);
        c.stderr = delta * tr.stderr.back();
      }
    }
  };
  const unsigned nthreads = std::max(1u, std::min<unsigned>(cfg.workers, static_cast<unsigned>(ng * nd)));
  std::vector<std::jthread> pool;
  for (unsigned i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();  // join before handing out the results
  return out;
}

}  // namespace ampsi
