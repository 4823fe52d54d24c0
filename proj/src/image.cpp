#include "blurlab/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace blurlab {

Image::Image(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  samples_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

void check_finite(const Image& image) {
  for (double v : image.samples()) {
    if (!std::isfinite(v)) throw std::invalid_argument("image contains non-finite samples");
  }
}

double mean(const Image& image) {
  if (image.empty()) throw std::invalid_argument("mean of an empty image");
  double sum = 0.0;
  for (double v : image.samples()) sum += v;
  return sum / static_cast<double>(image.samples().size());
}

double ssd(const Image& a, const Image& b, int margin) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssd: image shapes differ");
  if (margin < 0 || 2 * margin >= a.height() || 2 * margin >= a.width()) {
    throw std::invalid_argument("ssd: margin leaves no interior");
  }
  double total = 0.0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = margin; y < a.height() - margin; ++y) {
      for (int x = margin; x < a.width() - margin; ++x) {
        const double d = a.at(c, y, x) - b.at(c, y, x);
        total += d * d;
      }
    }
  }
  return total;
}

Image quantize_8bit(const Image& image) {
  Image out = image;
  for (double& v : out.samples()) {
    v = static_cast<double>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) * (1.0 / 255.0);
  }
  return out;
}

double psnr(const Image& estimate, const Image& reference, int margin) {
  const double count = static_cast<double>(estimate.channels()) *
                       (estimate.height() - 2 * margin) * (estimate.width() - 2 * margin);
  const double mse = ssd(estimate, reference, margin) / count;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace blurlab
