#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace ampsi {

using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Independent random streams of one experiment. The numeric order is part of
// the reproducibility contract: a run derives its per-stream seeds as
// derive_seed(base, {trial, batch, stream}).
enum class Stream : std::uint64_t {
  signal = 0,
  si_noise = 1,
  matrix = 2,
  measurement_noise = 3,
  state_evolution = 4,
  oracle = 5,
};

// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Hashes a base seed together with a path of indices into a child seed.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path) noexcept;

inline std::uint64_t derive_seed(std::uint64_t base, Stream stream) noexcept {
  return derive_seed(base, {static_cast<std::uint64_t>(stream)});
}

Rng make_rng(std::uint64_t seed);

// Gaussian draws use Boost's ziggurat sampler, which produces the same
// sequence on every standard library implementation.
void fill_normal(Rng& rng, std::span<double> out, double stddev = 1.0);
Vector normal_vector(Rng& rng, std::size_t n, double stddev = 1.0);
double normal(Rng& rng);
double uniform01(Rng& rng);

}  // namespace ampsi
