#include "ampsi/random.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace ampsi {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(base);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

Rng make_rng(std::uint64_t seed) { return Rng(seed); }

void fill_normal(Rng& rng, std::span<double> out, double stddev) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  for (double& v : out) v = stddev * dist(rng);
}

Vector normal_vector(Rng& rng, std::size_t n, double stddev) {
  Vector v(static_cast<Eigen::Index>(n));
  fill_normal(rng, std::span<double>(v.data(), n), stddev);
  return v;
}

double normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double uniform01(Rng& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

}  // namespace ampsi
