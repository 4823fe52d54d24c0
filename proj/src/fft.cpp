#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>
#include <stdexcept>

namespace blurlab::detail {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

}  // namespace

RealFft2d::RealFft2d(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("FFT size must be positive");
  const std::size_t n_real = static_cast<std::size_t>(rows) * cols;
  const std::size_t n_complex = static_cast<std::size_t>(rows) * spectrum_cols();

  std::lock_guard lock(planner_mutex());
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n_real));
  auto* spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_complex));
  if (real_ == nullptr || spec == nullptr) {
    fftw_free(real_);
    fftw_free(spec);
    throw std::bad_alloc();
  }
  spectrum_ = reinterpret_cast<std::complex<double>*>(spec);
  forward_plan_ = fftw_plan_dft_r2c_2d(rows, cols, real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_2d(rows, cols, spec, real_, FFTW_ESTIMATE);
}

RealFft2d::~RealFft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft2d::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

void RealFft2d::inverse() {
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / (static_cast<double>(rows_) * cols_);
  for (double& v : real()) v *= scale;
}

}  // namespace blurlab::detail
