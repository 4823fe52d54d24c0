#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blurlab/blur.hpp"
#include "blurlab/image.hpp"
#include "blurlab/kernel_geometry.hpp"

namespace blurlab::testing {

// Uniform noise in [0, 1].
Image random_image(int channels, int height, int width, std::uint64_t seed);

// Uniform noise smoothed by a periodic Gaussian of the given sigma and
// stretched to roughly [0.1, 0.9].
Image smooth_texture(int channels, int height, int width, double sigma, std::uint64_t seed);

// Plain nested-loop convolution, written independently of BlurOperator.
Image brute_force_convolve(const Image& image, const KernelGrid& kernel, Boundary boundary);

double max_abs_diff(const Image& a, const Image& b);

KernelGrid grid_of(const std::vector<std::vector<int>>& rows);
std::vector<std::vector<int>> rows_of(const Mask& mask);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Writes `count` random RGB PNGs of the given size into `dir`.
void write_sources(const std::filesystem::path& dir, int count, int height, int width,
                   std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);

}  // namespace blurlab::testing
