#pragma once

#include <cstdint>
#include <memory>

#include "ampsi/random.hpp"

namespace ampsi {

enum class OperatorKind { dense_gaussian, toeplitz_pilot };

// Immutable linear measurement operator A (M x N). Copies share storage.
class MeasurementOperator {
 public:
  // I.i.d. N(0, 1/M) entries.
  static MeasurementOperator dense(std::size_t m, std::size_t n, std::uint64_t seed);
  static MeasurementOperator from_matrix(Eigen::MatrixXd matrix);

  // Full linear convolution with a random +-1/sqrt(pilot_len) pilot;
  // M = pilot_len + N - 1.
  static MeasurementOperator toeplitz(std::size_t pilot_len, std::size_t n, std::uint64_t seed);
  static MeasurementOperator from_pilot(Vector pilot, std::size_t n);

  OperatorKind kind() const noexcept;
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;
  double delta() const noexcept {
    return static_cast<double>(rows()) / static_cast<double>(cols());
  }

  Vector apply(const Vector& x) const;
  Vector apply_adjoint(const Vector& r) const;

  // Dense copy of the operator.
  Eigen::MatrixXd materialize() const;

  // Pilot sequence; empty for dense operators.
  const Vector& pilot() const;

  class Impl;

 private:
  explicit MeasurementOperator(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

struct Measurements {
  Vector y;
  double sigma_z;
};

// y = A x + z with z i.i.d. N(0, sigma_z^2).
Measurements measure(const MeasurementOperator& op, const Vector& x, double sigma_z,
                     std::uint64_t seed);

}  // namespace ampsi
