#include "ampsi/measurement.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ampsi {

namespace {

// FFTW's planner is not re-entrant; execution on fresh arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
ComplexBuffer alloc_complex(std::size_t n) { return ComplexBuffer(fftw_alloc_complex(n)); }

void check_length(Eigen::Index got, std::size_t want, const char* what) {
  if (static_cast<std::size_t>(got) != want)
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(want) +
                                ", got " + std::to_string(got));
}

}  // namespace

class MeasurementOperator::Impl {
 public:
  virtual ~Impl() = default;
  virtual OperatorKind kind() const noexcept = 0;
  virtual std::size_t rows() const noexcept = 0;
  virtual std::size_t cols() const noexcept = 0;
  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_adjoint(const Vector& r) const = 0;
  virtual Eigen::MatrixXd materialize() const = 0;
  virtual const Vector& pilot() const = 0;
};

namespace {

class DenseImpl final : public MeasurementOperator::Impl {
 public:
  explicit DenseImpl(Eigen::MatrixXd a) : a_(std::move(a)) {}
  OperatorKind kind() const noexcept override { return OperatorKind::dense_gaussian; }
  std::size_t rows() const noexcept override { return static_cast<std::size_t>(a_.rows()); }
  std::size_t cols() const noexcept override { return static_cast<std::size_t>(a_.cols()); }
  Vector apply(const Vector& x) const override {
    check_length(x.size(), cols(), "apply");
    return a_ * x;
  }
  Vector apply_adjoint(const Vector& r) const override {
    check_length(r.size(), rows(), "apply_adjoint");
    return a_.transpose() * r;
  }
  Eigen::MatrixXd materialize() const override { return a_; }
  const Vector& pilot() const override { return empty_; }

 private:
  Eigen::MatrixXd a_;
  Vector empty_;
};

// Convolution through length-M real FFTs; M >= len(p) + N - 1 so the circular
// products equal the linear convolution and correlation.
class ToeplitzImpl final : public MeasurementOperator::Impl {
 public:
  ToeplitzImpl(Vector pilot, std::size_t n)
      : pilot_(std::move(pilot)), n_(n), m_(static_cast<std::size_t>(pilot_.size()) + n - 1),
        spectrum_len_(m_ / 2 + 1) {
    auto in = alloc_real(m_);
    auto out = alloc_complex(spectrum_len_);
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(m_), in.get(), out.get(), FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(m_), out.get(), in.get(), FFTW_ESTIMATE);
    }
    if (forward_ == nullptr || inverse_ == nullptr) throw std::runtime_error("FFTW planning failed");
    std::fill(in.get(), in.get() + m_, 0.0);
    for (Eigen::Index i = 0; i < pilot_.size(); ++i) in[static_cast<std::size_t>(i)] = pilot_[i];
    fftw_execute_dft_r2c(forward_, in.get(), out.get());
    spectrum_.resize(spectrum_len_);
    for (std::size_t k = 0; k < spectrum_len_; ++k)
      spectrum_[k] = std::complex<double>(out[k][0], out[k][1]) / static_cast<double>(m_);
  }

  ~ToeplitzImpl() override {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  ToeplitzImpl(const ToeplitzImpl&) = delete;
  ToeplitzImpl& operator=(const ToeplitzImpl&) = delete;

  OperatorKind kind() const noexcept override { return OperatorKind::toeplitz_pilot; }
  std::size_t rows() const noexcept override { return m_; }
  std::size_t cols() const noexcept override { return n_; }

  Vector apply(const Vector& x) const override {
    check_length(x.size(), n_, "apply");
    return transform(x, false, m_);
  }

  Vector apply_adjoint(const Vector& r) const override {
    check_length(r.size(), m_, "apply_adjoint");
    return transform(r, true, n_);
  }

  Eigen::MatrixXd materialize() const override {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j)
      a.block(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j), pilot_.size(), 1) = pilot_;
    return a;
  }

  const Vector& pilot() const override { return pilot_; }

 private:
  // Multiplies the spectrum of `v` by the pilot spectrum (conjugated for the
  // adjoint) and returns the first `keep` samples of the inverse transform.
  Vector transform(const Vector& v, bool conjugate, std::size_t keep) const {
    auto in = alloc_real(m_);
    auto spec = alloc_complex(spectrum_len_);
    std::fill(in.get(), in.get() + m_, 0.0);
    for (Eigen::Index i = 0; i < v.size(); ++i) in[static_cast<std::size_t>(i)] = v[i];
    fftw_execute_dft_r2c(forward_, in.get(), spec.get());
    for (std::size_t k = 0; k < spectrum_len_; ++k) {
      const std::complex<double> p = conjugate ? std::conj(spectrum_[k]) : spectrum_[k];
      const std::complex<double> z = std::complex<double>(spec[k][0], spec[k][1]) * p;
      spec[k][0] = z.real();
      spec[k][1] = z.imag();
    }
    fftw_execute_dft_c2r(inverse_, spec.get(), in.get());
    Vector out(static_cast<Eigen::Index>(keep));
    for (std::size_t i = 0; i < keep; ++i) out[static_cast<Eigen::Index>(i)] = in[i];
    return out;
  }

  Vector pilot_;
  std::size_t n_, m_, spectrum_len_;
  std::vector<std::complex<double>> spectrum_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace

MeasurementOperator::MeasurementOperator(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

MeasurementOperator MeasurementOperator::dense(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("dense operator needs m, n >= 1");
  Rng rng = make_rng(seed);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  fill_normal(rng, std::span<double>(a.data(), m * n), 1.0 / std::sqrt(static_cast<double>(m)));
  return from_matrix(std::move(a));
}

MeasurementOperator MeasurementOperator::from_matrix(Eigen::MatrixXd matrix) {
  if (matrix.rows() < 1 || matrix.cols() < 1) throw std::invalid_argument("empty matrix");
  return MeasurementOperator(std::make_shared<const DenseImpl>(std::move(matrix)));
}

MeasurementOperator MeasurementOperator::toeplitz(std::size_t pilot_len, std::size_t n,
                                                  std::uint64_t seed) {
  if (pilot_len < 1 || n < 1) throw std::invalid_argument("toeplitz operator needs pilot_len, n >= 1");
  Rng rng = make_rng(seed);
  const double amp = 1.0 / std::sqrt(static_cast<double>(pilot_len));
  Vector pilot(static_cast<Eigen::Index>(pilot_len));
  for (Eigen::Index i = 0; i < pilot.size(); ++i) pilot[i] = uniform01(rng) < 0.5 ? amp : -amp;
  return from_pilot(std::move(pilot), n);
}

MeasurementOperator MeasurementOperator::from_pilot(Vector pilot, std::size_t n) {
  if (pilot.size() < 1 || n < 1) throw std::invalid_argument("toeplitz operator needs pilot_len, n >= 1");
  return MeasurementOperator(std::make_shared<const ToeplitzImpl>(std::move(pilot), n));
}

OperatorKind MeasurementOperator::kind() const noexcept { return impl_->kind(); }
std::size_t MeasurementOperator::rows() const noexcept { return impl_->rows(); }
std::size_t MeasurementOperator::cols() const noexcept { return impl_->cols(); }
Vector MeasurementOperator::apply(const Vector& x) const { return impl_->apply(x); }
Vector MeasurementOperator::apply_adjoint(const Vector& r) const { return impl_->apply_adjoint(r); }
Eigen::MatrixXd MeasurementOperator::materialize() const { return impl_->materialize(); }
const Vector& MeasurementOperator::pilot() const { return impl_->pilot(); }

Measurements measure(const MeasurementOperator& op, const Vector& x, double sigma_z,
                     std::uint64_t seed) {
  if (std::isnan(sigma_z) || sigma_z < 0.0) throw std::invalid_argument("measure: sigma_z must be >= 0");
  Measurements out{op.apply(x), sigma_z};
  if (sigma_z > 0.0) {
    Rng rng = make_rng(seed);
    out.y += normal_vector(rng, op.rows(), sigma_z);
  }
  return out;
}

}  // namespace ampsi
