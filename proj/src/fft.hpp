#pragma once

#include <complex>
#include <span>

namespace blurlab::detail {

// Owns aligned buffers and a pair of FFTW plans for a real 2-D transform.
// Not thread-safe per instance; plan creation is serialized internally.
class RealFft2d {
 public:
  RealFft2d(int rows, int cols);
  ~RealFft2d();
  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int spectrum_cols() const { return cols_ / 2 + 1; }

  std::span<double> real() { return {real_, static_cast<std::size_t>(rows_) * cols_}; }
  std::span<std::complex<double>> spectrum() {
    return {spectrum_, static_cast<std::size_t>(rows_) * spectrum_cols()};
  }

  // real() -> spectrum()
  void forward();
  // spectrum() -> real(), divided by rows * cols. Clobbers spectrum().
  void inverse();

 private:
  int rows_;
  int cols_;
  double* real_ = nullptr;
  std::complex<double>* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace blurlab::detail
