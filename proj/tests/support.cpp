#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace blurlab::testing {

namespace fs = std::filesystem;

Image random_image(int channels, int height, int width, std::uint64_t seed) {
  Image img(channels, height, width);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : img.samples()) v = u(rng);
  return img;
}

Image smooth_texture(int channels, int height, int width, double sigma, std::uint64_t seed) {
  const Image noise = random_image(channels, height, width, seed);
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[i + radius];
  }
  for (double& t : taps) t /= total;
  auto wrap = [](int q, int n) { return ((q % n) + n) % n; };

  Image rows(channels, height, width);
  Image out(channels, height, width);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) s += taps[i + radius] * noise.at(c, y, wrap(x + i, width));
        rows.at(c, y, x) = s;
      }
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i) s += taps[i + radius] * rows.at(c, wrap(y + i, height), x);
        out.at(c, y, x) = s;
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(out.samples().begin(), out.samples().end());
  const double a = *lo;
  const double span = std::max(*hi - a, 1e-12);
  for (double& v : out.samples()) v = 0.1 + 0.8 * (v - a) / span;
  return out;
}

namespace {

// Index into [0, n) for an out-of-range coordinate, by repeated folding.
int fold_index(int q, int n, Boundary boundary) {
  switch (boundary) {
    case Boundary::kZero:
      return (q < 0 || q >= n) ? -1 : q;
    case Boundary::kReplicate:
      return q < 0 ? 0 : (q >= n ? n - 1 : q);
    case Boundary::kPeriodic:
      while (q < 0) q += n;
      while (q >= n) q -= n;
      return q;
    case Boundary::kReflect:
      while (q < 0 || q >= n) {
        if (q < 0) q = -q - 1;
        if (q >= n) q = 2 * n - q - 1;
      }
      return q;
  }
  return -1;
}

}  // namespace

Image brute_force_convolve(const Image& image, const KernelGrid& kernel, Boundary boundary) {
  Image out(image.channels(), image.height(), image.width());
  const int ay = kernel.height / 2;
  const int ax = kernel.width / 2;
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < image.height(); ++y) {
      for (int x = 0; x < image.width(); ++x) {
        double s = 0.0;
        for (int i = 0; i < kernel.height; ++i) {
          for (int j = 0; j < kernel.width; ++j) {
            const int sy = fold_index(y + ay - i, image.height(), boundary);
            const int sx = fold_index(x + ax - j, image.width(), boundary);
            if (sy < 0 || sx < 0) continue;
            s += kernel.weights[static_cast<std::size_t>(i) * kernel.width + j] *
                 image.at(c, sy, sx);
          }
        }
        out.at(c, y, x) = s;
      }
    }
  }
  return out;
}

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    m = std::max(m, std::abs(a.samples()[i] - b.samples()[i]));
  }
  return m;
}

KernelGrid grid_of(const std::vector<std::vector<int>>& rows) {
  KernelGrid g(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < g.height; ++i) {
    for (int j = 0; j < g.width; ++j) g.at(i, j) = rows[i][j];
  }
  return g;
}

std::vector<std::vector<int>> rows_of(const Mask& mask) {
  std::vector<std::vector<int>> rows(mask.height(), std::vector<int>(mask.width()));
  for (int i = 0; i < mask.height(); ++i) {
    for (int j = 0; j < mask.width(); ++j) rows[i][j] = mask.at(i, j) ? 1 : 0;
  }
  return rows;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("blurlab-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_sources(const fs::path& dir, int count, int height, int width, std::uint64_t seed) {
  fs::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "src_%04d.png", i);
    save_image(dir / name, smooth_texture(3, height, width, 2.0, seed + i));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace blurlab::testing
