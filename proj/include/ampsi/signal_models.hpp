#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "ampsi/random.hpp"

namespace ampsi {

// Bernoulli-Gaussian prior: zero with probability 1 - epsilon, otherwise
// standard Gaussian.
class BgPrior {
 public:
  explicit BgPrior(double epsilon);

  double epsilon() const noexcept { return epsilon_; }
  double second_moment() const noexcept { return epsilon_; }

 private:
  double epsilon_;
};

enum class BddCase : std::uint8_t {
  stay_zero = 1,
  death = 2,
  drift = 3,
  birth = 4,
};

// Birth-death-drift prior over (previous, current) signal pairs.
//
//   case 1  x_prev = 0             x = 0
//   case 2  x_prev ~ N(0, s2)      x = 0
//   case 3  x_prev ~ N(0, s2)      x = rho * x_prev + N(0, sigma_sq)
//   case 4  x_prev = 0             x ~ N(0, s2)
//
// The drift variance is tied to the steady state: sigma_sq = (1 - rho^2) s2.
class BddPrior {
 public:
  BddPrior(std::array<double, 4> eps, double sigma_s_sq, double rho);

  // Accepts an explicit drift variance, which must satisfy the steady-state
  // constraint to 1e-12.
  static BddPrior with_drift_variance(std::array<double, 4> eps,
                                      double sigma_s_sq, double rho,
                                      double sigma_sq);

  const std::array<double, 4>& eps() const noexcept { return eps_; }
  double eps(BddCase c) const noexcept {
    return eps_[static_cast<std::size_t>(c) - 1];
  }
  double sigma_s_sq() const noexcept { return sigma_s_sq_; }
  double rho() const noexcept { return rho_; }
  double sigma_sq() const noexcept { return sigma_sq_; }

  // Fraction of nonzero entries in the current signal.
  double nonzero_rate() const noexcept { return eps_[2] + eps_[3]; }
  double second_moment() const noexcept { return nonzero_rate() * sigma_s_sq_; }

 private:
  std::array<double, 4> eps_;
  double sigma_s_sq_;
  double rho_;
  double sigma_sq_;
};

class GgPrior {
 public:
  explicit GgPrior(double sigma_x_sq);

  double sigma_x_sq() const noexcept { return sigma_x_sq_; }
  double second_moment() const noexcept { return sigma_x_sq_; }

 private:
  double sigma_x_sq_;
};

using PriorModel = std::variant<BgPrior, BddPrior, GgPrior>;

double second_moment(const PriorModel& prior);
const char* model_name(const PriorModel& prior);

// Additive white Gaussian noise on the side information; zero means exact SI.
class SiChannel {
 public:
  explicit SiChannel(double sigma_hat_sq);
  double sigma_hat_sq() const noexcept { return sigma_hat_sq_; }

 private:
  double sigma_hat_sq_;
};

struct BddStep {
  Vector x;
  std::vector<BddCase> cases;
};

struct SignalPair {
  Vector x;
  Vector x_tilde;
  std::optional<Vector> x_prev;   // BDD only
  std::vector<BddCase> cases;     // BDD only
};

Vector sample_bg(const BgPrior& prior, std::size_t n, std::uint64_t seed);
Vector sample_gg(const GgPrior& prior, std::size_t n, std::uint64_t seed);

// Stationary BDD marginal: nonzero with probability eps3 + eps4, N(0, s2).
Vector sample_bdd_stationary(const BddPrior& prior, std::size_t n,
                             std::uint64_t seed);

// One BDD transition. The case of each entry is drawn conditionally on the
// support of x_prev (zero entries: cases 1/4 in ratio eps1:eps4; nonzero
// entries: cases 2/3 in ratio eps2:eps3), so (x_prev, x) follows the four-case
// joint law whenever x_prev follows the stationary marginal and eps2 = eps4.
// Entries whose support group has no probability mass are born (if zero) or
// die (if nonzero).
BddStep sample_bdd_step(const BddPrior& prior, const Vector& x_prev,
                        std::uint64_t seed);

// Marginal of the current signal for any model.
Vector sample_signal(const PriorModel& prior, std::size_t n,
                     std::uint64_t seed);

Vector make_si(const Vector& x_ref, const SiChannel& si, std::uint64_t seed);

// Draws a signal and its side information. For BDD the SI is a noisy view of
// x_prev; for BG and GG it is a noisy view of x itself. Streams follow the
// Stream order (signal, then SI noise).
SignalPair sample_pair(const PriorModel& prior, const SiChannel& si,
                       std::size_t n, std::uint64_t seed);

}  // namespace ampsi
