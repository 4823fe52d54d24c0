#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace blurlab {

// Planar floating-point raster. Samples are nominally in [0, 1]; values
// outside that range are allowed (e.g. after additive noise) but must be
// finite.
class Image {
 public:
  Image() = default;
  Image(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  bool empty() const { return samples_.empty(); }

  double& at(int channel, int row, int col) {
    return samples_[channel * plane_size() + static_cast<std::size_t>(row) * width_ + col];
  }
  double at(int channel, int row, int col) const {
    return samples_[channel * plane_size() + static_cast<std::size_t>(row) * width_ + col];
  }

  std::span<double> plane(int channel) {
    return {samples_.data() + channel * plane_size(), plane_size()};
  }
  std::span<const double> plane(int channel) const {
    return {samples_.data() + channel * plane_size(), plane_size()};
  }
  std::span<double> samples() { return samples_; }
  std::span<const double> samples() const { return samples_; }

  bool same_shape(const Image& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> samples_;
};

// Throws std::invalid_argument if any sample is NaN or infinite.
void check_finite(const Image& image);

double mean(const Image& image);
// Sum of squared differences, optionally skipping a border of `margin` pixels.
double ssd(const Image& a, const Image& b, int margin = 0);
// Peak signal-to-noise ratio for unit peak, over the interior past `margin`.
double psnr(const Image& estimate, const Image& reference, int margin = 0);

// What save_image followed by load_image yields: clamp to [0, 1], round to
// 8 bits, rescale.
Image quantize_8bit(const Image& image);

// Decodes PNG/JPEG (or anything OpenCV reads) into [0, 1]. Grayscale inputs
// are promoted to three channels; alpha is dropped.
Image load_image(const std::filesystem::path& path);
// Clamps to [0, 1] and quantizes to 8 bits. Format follows the extension.
void save_image(const std::filesystem::path& path, const Image& image);
// True if the extension names a format load_image handles.
bool is_image_file(const std::filesystem::path& path);

}  // namespace blurlab
