#include "blurlab/blur.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fft.hpp"

namespace blurlab {

namespace {

int source_index(int q, int n, Boundary boundary) {
  switch (boundary) {
    case Boundary::kReflect: {
      const int period = 2 * n;
      int m = q % period;
      if (m < 0) m += period;
      return m < n ? m : period - 1 - m;
    }
    case Boundary::kReplicate:
      return std::clamp(q, 0, n - 1);
    case Boundary::kZero:
      return (q < 0 || q >= n) ? -1 : q;
    case Boundary::kPeriodic: {
      int m = q % n;
      return m < 0 ? m + n : m;
    }
  }
  return -1;
}

std::vector<int> source_map(int n, int kernel_extent, int anchor, Boundary boundary) {
  const int lead = kernel_extent - 1 - anchor;
  std::vector<int> map(static_cast<std::size_t>(n + kernel_extent - 1));
  for (std::size_t e = 0; e < map.size(); ++e) {
    map[e] = source_index(static_cast<int>(e) - lead, n, boundary);
  }
  return map;
}

}  // namespace

std::string to_string(Boundary boundary) {
  switch (boundary) {
    case Boundary::kReflect: return "reflect";
    case Boundary::kReplicate: return "replicate";
    case Boundary::kZero: return "zero";
    case Boundary::kPeriodic: return "periodic";
  }
  return "unknown";
}

Boundary parse_boundary(std::string_view text) {
  if (text == "reflect") return Boundary::kReflect;
  if (text == "replicate") return Boundary::kReplicate;
  if (text == "zero") return Boundary::kZero;
  if (text == "periodic") return Boundary::kPeriodic;
  throw std::invalid_argument("unknown boundary mode '" + std::string(text) + "'");
}

BlurOperator::BlurOperator(int height, int width, KernelGrid kernel,
                           Boundary boundary, ConvolutionMethod method)
    : height_(height),
      width_(width),
      kernel_(std::move(kernel)),
      boundary_(boundary),
      method_(method) {
  if (height < 1 || width < 1) throw std::invalid_argument("image must be non-empty");
  if (kernel_.height < 1 || kernel_.width < 1 ||
      kernel_.weights.size() != static_cast<std::size_t>(kernel_.height) * kernel_.width) {
    throw std::invalid_argument("malformed kernel grid");
  }
  if (kernel_.height > height || kernel_.width > width) {
    throw std::invalid_argument("kernel (" + std::to_string(kernel_.height) + "x" +
                                std::to_string(kernel_.width) +
                                ") is larger than the image (" + std::to_string(height) +
                                "x" + std::to_string(width) + ")");
  }
  for (double w : kernel_.weights) {
    if (!std::isfinite(w)) throw std::invalid_argument("kernel has non-finite weights");
  }

  ext_height_ = height + kernel_.height - 1;
  ext_width_ = width + kernel_.width - 1;
  row_source_ = source_map(height, kernel_.height, kernel_.anchor_row(), boundary);
  col_source_ = source_map(width, kernel_.width, kernel_.anchor_col(), boundary);
  for (int i = 0; i < kernel_.height; ++i) {
    for (int j = 0; j < kernel_.width; ++j) {
      if (kernel_.at(i, j) != 0.0) taps_.push_back({i, j, kernel_.at(i, j)});
    }
  }
  scratch_.resize(static_cast<std::size_t>(ext_height_) * ext_width_);

  if (method_ == ConvolutionMethod::kAuto) {
    // Direct costs ~2 flops per tap per pixel; a pair of real FFTs costs
    // roughly 5 N log2 N.
    const double n = static_cast<double>(ext_height_) * ext_width_;
    method_ = static_cast<double>(taps_.size()) <= 2.5 * std::log2(std::max(n, 2.0))
                  ? ConvolutionMethod::kDirect
                  : ConvolutionMethod::kFft;
  }
  if (method_ == ConvolutionMethod::kFft) {
    fft_ = std::make_unique<detail::RealFft2d>(ext_height_, ext_width_);
    auto real = fft_->real();
    std::fill(real.begin(), real.end(), 0.0);
    for (const Tap& t : taps_) {
      real[static_cast<std::size_t>(t.row) * ext_width_ + t.col] = t.weight;
    }
    fft_->forward();
    kernel_spectrum_.assign(fft_->spectrum().begin(), fft_->spectrum().end());
  }
}

BlurOperator::~BlurOperator() = default;
BlurOperator::BlurOperator(BlurOperator&&) noexcept = default;
BlurOperator& BlurOperator::operator=(BlurOperator&&) noexcept = default;

void BlurOperator::extend(std::span<const double> in, std::span<double> extended) const {
  for (int a = 0; a < ext_height_; ++a) {
    const int sy = row_source_[a];
    double* dst = extended.data() + static_cast<std::size_t>(a) * ext_width_;
    if (sy < 0) {
      std::fill(dst, dst + ext_width_, 0.0);
      continue;
    }
    const double* src = in.data() + static_cast<std::size_t>(sy) * width_;
    for (int b = 0; b < ext_width_; ++b) {
      const int sx = col_source_[b];
      dst[b] = sx < 0 ? 0.0 : src[sx];
    }
  }
}

void BlurOperator::fold(std::span<const double> extended, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (int a = 0; a < ext_height_; ++a) {
    const int sy = row_source_[a];
    if (sy < 0) continue;
    const double* src = extended.data() + static_cast<std::size_t>(a) * ext_width_;
    double* dst = out.data() + static_cast<std::size_t>(sy) * width_;
    for (int b = 0; b < ext_width_; ++b) {
      const int sx = col_source_[b];
      if (sx >= 0) dst[sx] += src[b];
    }
  }
}

void BlurOperator::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  if (in.size() != n || out.size() != n) throw std::invalid_argument("plane size mismatch");
  const int kh = kernel_.height;
  const int kw = kernel_.width;

  if (method_ == ConvolutionMethod::kDirect) {
    extend(in, scratch_);
    std::fill(out.begin(), out.end(), 0.0);
    for (const Tap& t : taps_) {
      const int row0 = kh - 1 - t.row;
      const int col0 = kw - 1 - t.col;
      for (int y = 0; y < height_; ++y) {
        const double* src = scratch_.data() + static_cast<std::size_t>(y + row0) * ext_width_ + col0;
        double* dst = out.data() + static_cast<std::size_t>(y) * width_;
        for (int x = 0; x < width_; ++x) dst[x] += t.weight * src[x];
      }
    }
    return;
  }

  extend(in, fft_->real());
  fft_->forward();
  auto spectrum = fft_->spectrum();
  for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum[i] *= kernel_spectrum_[i];
  fft_->inverse();
  const auto real = fft_->real();
  for (int y = 0; y < height_; ++y) {
    const double* src = real.data() + static_cast<std::size_t>(y + kh - 1) * ext_width_ + (kw - 1);
    std::copy(src, src + width_, out.data() + static_cast<std::size_t>(y) * width_);
  }
}

void BlurOperator::apply_adjoint(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = static_cast<std::size_t>(height_) * width_;
  if (in.size() != n || out.size() != n) throw std::invalid_argument("plane size mismatch");
  const int kh = kernel_.height;
  const int kw = kernel_.width;

  if (method_ == ConvolutionMethod::kDirect) {
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    for (const Tap& t : taps_) {
      const int row0 = kh - 1 - t.row;
      const int col0 = kw - 1 - t.col;
      for (int y = 0; y < height_; ++y) {
        const double* src = in.data() + static_cast<std::size_t>(y) * width_;
        double* dst = scratch_.data() + static_cast<std::size_t>(y + row0) * ext_width_ + col0;
        for (int x = 0; x < width_; ++x) dst[x] += t.weight * src[x];
      }
    }
    fold(scratch_, out);
    return;
  }

  auto real = fft_->real();
  std::fill(real.begin(), real.end(), 0.0);
  for (int y = 0; y < height_; ++y) {
    const double* src = in.data() + static_cast<std::size_t>(y) * width_;
    std::copy(src, src + width_,
              real.data() + static_cast<std::size_t>(y + kh - 1) * ext_width_ + (kw - 1));
  }
  fft_->forward();
  auto spectrum = fft_->spectrum();
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    spectrum[i] *= std::conj(kernel_spectrum_[i]);
  }
  fft_->inverse();
  fold(fft_->real(), out);
}

Image convolve(const Image& image, const KernelGrid& kernel, Boundary boundary,
               ConvolutionMethod method) {
  if (image.empty()) throw std::invalid_argument("cannot convolve an empty image");
  const BlurOperator op(image.height(), image.width(), kernel, boundary, method);
  Image out(image.channels(), image.height(), image.width());
  for (int c = 0; c < image.channels(); ++c) op.apply(image.plane(c), out.plane(c));
  return out;
}

Image add_gaussian_noise(const Image& image, const NoiseSpec& noise) {
  if (!(noise.variance >= 0.0) || noise.variance > 1.0) {
    throw std::invalid_argument("noise variance must lie in [0, 1]");
  }
  Image out = image;
  if (noise.variance == 0.0) return out;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise.variance));
  for (double& v : out.samples()) v += gauss(rng);
  return out;
}

double variance_to_snr_db(double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("variance must be positive");
  return -10.0 * std::log10(variance);
}

std::optional<Image> random_crop(const Image& image, CropSize size, std::uint64_t seed) {
  if (size.height < 1 || size.width < 1) throw std::invalid_argument("crop size must be positive");
  if (image.height() < size.height || image.width() < size.width) return std::nullopt;
  std::mt19937_64 rng(seed);
  const int top = std::uniform_int_distribution<int>(0, image.height() - size.height)(rng);
  const int left = std::uniform_int_distribution<int>(0, image.width() - size.width)(rng);
  Image out(image.channels(), size.height, size.width);
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < size.height; ++y) {
      for (int x = 0; x < size.width; ++x) out.at(c, y, x) = image.at(c, top + y, left + x);
    }
  }
  return out;
}

}  // namespace blurlab
