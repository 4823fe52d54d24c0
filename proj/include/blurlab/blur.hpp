#pragma once

// Uniform blur model: blurred = kernel * sharp + noise.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blurlab/image.hpp"
#include "blurlab/kernel_geometry.hpp"

namespace blurlab {

namespace detail {
class RealFft2d;
}

// How samples outside the image are synthesized.
//   kReflect   half-sample symmetric: d c b a | a b c d | d c b a
//   kReplicate edge value repeated
//   kZero      zeros
//   kPeriodic  wrap-around
enum class Boundary { kReflect, kReplicate, kZero, kPeriodic };

enum class ConvolutionMethod { kAuto, kDirect, kFft };

std::string to_string(Boundary boundary);
Boundary parse_boundary(std::string_view text);

// Same-size 2-D convolution of one image plane, as a linear operator with
// its exact adjoint:
//
//   out(y, x) = sum_{i,j} k(i, j) * ext(y + ay - i, x + ax - j)
//
// where (ay, ax) is the kernel anchor and ext() extends the input per the
// boundary mode. The adjoint is what iterative deconvolution needs. An
// instance keeps scratch buffers, so share it across threads only with
// external locking.
class BlurOperator {
 public:
  BlurOperator(int height, int width, KernelGrid kernel,
               Boundary boundary = Boundary::kReflect,
               ConvolutionMethod method = ConvolutionMethod::kAuto);
  ~BlurOperator();
  BlurOperator(BlurOperator&&) noexcept;
  BlurOperator& operator=(BlurOperator&&) noexcept;

  int height() const { return height_; }
  int width() const { return width_; }
  const KernelGrid& kernel() const { return kernel_; }
  // kDirect or kFft, after resolving kAuto.
  ConvolutionMethod method() const { return method_; }

  void apply(std::span<const double> in, std::span<double> out) const;
  void apply_adjoint(std::span<const double> in, std::span<double> out) const;

 private:
  void extend(std::span<const double> in, std::span<double> extended) const;
  void fold(std::span<const double> extended, std::span<double> out) const;

  int height_;
  int width_;
  KernelGrid kernel_;
  Boundary boundary_;
  ConvolutionMethod method_;
  int ext_height_;
  int ext_width_;
  std::vector<int> row_source_;  // extended row -> source row, -1 for zero
  std::vector<int> col_source_;
  struct Tap {
    int row;
    int col;
    double weight;
  };
  std::vector<Tap> taps_;
  mutable std::vector<double> scratch_;
  mutable std::unique_ptr<detail::RealFft2d> fft_;
  std::vector<std::complex<double>> kernel_spectrum_;
};

// Convolves every channel with the kernel. Throws std::invalid_argument if
// the kernel is larger than the image in either dimension.
Image convolve(const Image& image, const KernelGrid& kernel,
               Boundary boundary = Boundary::kReflect,
               ConvolutionMethod method = ConvolutionMethod::kAuto);

struct NoiseSpec {
  double variance = 0.0;  // on the [0, 1] intensity scale
  std::uint64_t seed = 0;
};

// Adds i.i.d. zero-mean Gaussian noise; no clipping. Variance must lie in
// {0} or (0, 1].
Image add_gaussian_noise(const Image& image, const NoiseSpec& noise);

// -10 log10(variance): 0.001 -> 30 dB, 0.01 -> 20 dB, 0.1 -> 10 dB.
double variance_to_snr_db(double variance);

struct CropSize {
  int height = 224;
  int width = 224;
};

// Uniformly placed crop; std::nullopt when the image is smaller than the
// crop in either dimension.
std::optional<Image> random_crop(const Image& image, CropSize size,
                                 std::uint64_t seed);

}  // namespace blurlab
