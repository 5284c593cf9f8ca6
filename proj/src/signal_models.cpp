#include "ampsi/signal_models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ampsi {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

BgPrior::BgPrior(double epsilon) : epsilon_(epsilon) {
  require(std::isfinite(epsilon) && epsilon >= 0.0 && epsilon <= 1.0,
          "BgPrior: epsilon must lie in [0, 1]");
}

BddPrior::BddPrior(std::array<double, 4> eps, double sigma_s_sq, double rho)
    : eps_(eps), sigma_s_sq_(sigma_s_sq), rho_(rho) {
  double total = 0.0;
  for (double e : eps_) {
    require(std::isfinite(e) && e >= 0.0, "BddPrior: case probabilities must be >= 0");
    total += e;
  }
  require(std::abs(total - 1.0) <= 1e-12, "BddPrior: case probabilities must sum to 1");
  require(std::isfinite(sigma_s_sq) && sigma_s_sq > 0.0, "BddPrior: sigma_s_sq must be > 0");
  // rho = 1 (zero drift noise) is admitted so the BG model stays expressible.
  require(std::isfinite(rho) && rho > 0.0 && rho <= 1.0, "BddPrior: rho must lie in (0, 1]");
  sigma_sq_ = (1.0 - rho_ * rho_) * sigma_s_sq_;
}

BddPrior BddPrior::with_drift_variance(std::array<double, 4> eps, double sigma_s_sq,
                                       double rho, double sigma_sq) {
  BddPrior p(eps, sigma_s_sq, rho);
  require(std::abs(rho * rho * sigma_s_sq + sigma_sq - sigma_s_sq) <= 1e-12,
          "BddPrior: drift variance violates rho^2 sigma_s^2 + sigma^2 = sigma_s^2");
  return p;
}

GgPrior::GgPrior(double sigma_x_sq) : sigma_x_sq_(sigma_x_sq) {
  require(std::isfinite(sigma_x_sq) && sigma_x_sq > 0.0, "GgPrior: sigma_x_sq must be > 0");
}

SiChannel::SiChannel(double sigma_hat_sq) : sigma_hat_sq_(sigma_hat_sq) {
  require(!std::isnan(sigma_hat_sq) && sigma_hat_sq >= 0.0,
          "SiChannel: sigma_hat_sq must be >= 0");
}

double second_moment(const PriorModel& prior) {
  return std::visit([](const auto& p) { return p.second_moment(); }, prior);
}

const char* model_name(const PriorModel& prior) {
  struct Name {
    const char* operator()(const BgPrior&) const { return "bg"; }
    const char* operator()(const BddPrior&) const { return "bdd"; }
    const char* operator()(const GgPrior&) const { return "gg"; }
  };
  return std::visit(Name{}, prior);
}

Vector sample_bg(const BgPrior& prior, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = uniform01(rng);
    const double g = normal(rng);
    x[i] = u < prior.epsilon() ? g : 0.0;
  }
  return x;
}

Vector sample_gg(const GgPrior& prior, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return normal_vector(rng, n, std::sqrt(prior.sigma_x_sq()));
}

Vector sample_bdd_stationary(const BddPrior& prior, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const double sd = std::sqrt(prior.sigma_s_sq());
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = uniform01(rng);
    const double g = normal(rng);
    x[i] = u < prior.nonzero_rate() ? sd * g : 0.0;
  }
  return x;
}

BddStep sample_bdd_step(const BddPrior& prior, const Vector& x_prev, std::uint64_t seed) {
  if (x_prev.size() < 1) throw std::invalid_argument("sample_bdd_step: empty x_prev");
  Rng rng = make_rng(seed);
  const auto& e = prior.eps();
  const double sd_s = std::sqrt(prior.sigma_s_sq());
  const double sd_drift = std::sqrt(prior.sigma_sq());
  const double zero_mass = e[0] + e[3];
  const double nonzero_mass = e[1] + e[2];

  BddStep out{Vector(x_prev.size()), std::vector<BddCase>(static_cast<std::size_t>(x_prev.size()))};
  for (Eigen::Index i = 0; i < x_prev.size(); ++i) {
    const double u = uniform01(rng);
    const double g = normal(rng);
    BddCase c;
    if (x_prev[i] == 0.0) {
      c = (zero_mass > 0.0 && u * zero_mass < e[0]) ? BddCase::stay_zero : BddCase::birth;
    } else {
      c = (nonzero_mass == 0.0 || u * nonzero_mass < e[1]) ? BddCase::death : BddCase::drift;
    }
    switch (c) {
      case BddCase::stay_zero:
      case BddCase::death: out.x[i] = 0.0; break;
      case BddCase::drift: out.x[i] = prior.rho() * x_prev[i] + sd_drift * g; break;
      case BddCase::birth: out.x[i] = sd_s * g; break;
    }
    out.cases[static_cast<std::size_t>(i)] = c;
  }
  return out;
}

Vector sample_signal(const PriorModel& prior, std::size_t n, std::uint64_t seed) {
  struct Sampler {
    std::size_t n;
    std::uint64_t seed;
    Vector operator()(const BgPrior& p) const { return sample_bg(p, n, seed); }
    Vector operator()(const BddPrior& p) const { return sample_bdd_stationary(p, n, seed); }
    Vector operator()(const GgPrior& p) const { return sample_gg(p, n, seed); }
  };
  return std::visit(Sampler{n, seed}, prior);
}

Vector make_si(const Vector& x_ref, const SiChannel& si, std::uint64_t seed) {
  if (si.sigma_hat_sq() == 0.0) return x_ref;
  Rng rng = make_rng(seed);
  return x_ref + normal_vector(rng, static_cast<std::size_t>(x_ref.size()),
                               std::sqrt(si.sigma_hat_sq()));
}

SignalPair sample_pair(const PriorModel& prior, const SiChannel& si, std::size_t n,
                       std::uint64_t seed) {
  const std::uint64_t signal_seed = derive_seed(seed, Stream::signal);
  const std::uint64_t si_seed = derive_seed(seed, Stream::si_noise);
  SignalPair pair;
  if (const auto* bdd = std::get_if<BddPrior>(&prior)) {
    Vector prev = sample_bdd_stationary(*bdd, n, derive_seed(signal_seed, {0}));
    BddStep step = sample_bdd_step(*bdd, prev, derive_seed(signal_seed, {1}));
    pair.x = std::move(step.x);
    pair.cases = std::move(step.cases);
    pair.x_tilde = make_si(prev, si, si_seed);
    pair.x_prev = std::move(prev);
  } else {
    pair.x = sample_signal(prior, n, signal_seed);
    pair.x_tilde = make_si(pair.x, si, si_seed);
  }
  return pair;
}

}  // namespace ampsi
