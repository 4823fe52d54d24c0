#pragma once

// Discrete linear motion-blur kernels.
//
// A continuous line (length r, angle theta) is drawn through an h x w pixel
// grid with a Bresenham digital line. Many continuous angles collapse onto
// the same pixel line; each distinct pixel line gets one integer angle label
// phi, and the set of distinct (r, phi) pairs forms the kernel catalog.
//
// Angles are in degrees, measured counter-clockwise from the horizontal axis,
// and live in (-90, 90]. Grid row 0 is the top row.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace blurlab {

// How sin/cos of integer-degree angles are evaluated when sizing the grid.
//
// kExactDegrees uses the exact values at 0, +-30, +-60 and 90 degrees (the
// only integer angles with rational sine or cosine), so that e.g. r = 2 at
// 60 degrees gives a 2 x 1 grid. kFloatingPoint evaluates libm trig on the
// angle in radians, which rounds cos(60) slightly above 0.5 and reproduces
// the 13,034-entry catalog that NumPy trig gives.
enum class TrigMode { kExactDegrees, kFloatingPoint };

struct ContinuousLine {
  double length = 1.0;  // Euclidean length in pixels, >= 1
  double theta = 0.0;   // degrees, in (-90, 90]
};

// Throws std::invalid_argument when length < 1 or theta is outside (-90, 90].
void validate(const ContinuousLine& line);

struct GridSize {
  int height = 1;
  int width = 1;
  friend bool operator==(const GridSize&, const GridSize&) = default;
};

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Binary raster stored row-major.
class Mask {
 public:
  Mask() = default;
  Mask(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  GridSize size() const { return {height_, width_}; }

  bool at(int row, int col) const { return cells_[index(row, col)] != 0; }
  void set(int row, int col, bool on = true) {
    cells_[index(row, col)] = on ? 1 : 0;
  }
  std::span<const std::uint8_t> cells() const { return cells_; }

  int count() const;
  Mask flipped_vertically() const;
  // Byte string identifying the grid shape and contents; used as a hash key.
  std::string key() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Real-valued kernel weights, row-major. The convolution anchor of an
// h x w grid is (h / 2, w / 2) with integer division.
struct KernelGrid {
  int height = 0;
  int width = 0;
  std::vector<double> weights;

  KernelGrid() = default;
  KernelGrid(int h, int w, double fill = 0.0)
      : height(h), width(w), weights(static_cast<std::size_t>(h) * w, fill) {}

  double at(int row, int col) const {
    return weights[static_cast<std::size_t>(row) * width + col];
  }
  double& at(int row, int col) {
    return weights[static_cast<std::size_t>(row) * width + col];
  }
  double sum() const;
  int nonzero_count() const;
  int anchor_row() const { return height / 2; }
  int anchor_col() const { return width / 2; }

  friend bool operator==(const KernelGrid&, const KernelGrid&) = default;
};

struct KernelLabel {
  int length = 1;
  int angle = 0;
  friend auto operator<=>(const KernelLabel&, const KernelLabel&) = default;
};

// A rasterized, unit-sum blur kernel with its canonical label and the set of
// integer continuous angles (within -89..90) that rasterize to it.
class PixelKernel {
 public:
  PixelKernel(const Mask& support, KernelLabel label,
              std::vector<int> theta_set);

  static PixelKernel identity();

  const KernelGrid& grid() const { return grid_; }
  const Mask& support() const { return support_; }
  int height() const { return grid_.height; }
  int width() const { return grid_.width; }
  int chebyshev_length() const { return std::max(grid_.height, grid_.width); }
  KernelLabel label() const { return label_; }
  int length_label() const { return label_.length; }
  int angle_label() const { return label_.angle; }
  const std::vector<int>& theta_set() const { return theta_set_; }

 private:
  Mask support_;
  KernelGrid grid_;
  KernelLabel label_;
  std::vector<int> theta_set_;
};

// Grid extent of the pixel line: h = ceil(r |sin theta|), w = ceil(r cos theta),
// each forced to 1 when the corresponding trig value is exactly zero.
GridSize kernel_dims(const ContinuousLine& line,
                     TrigMode trig = TrigMode::kExactDegrees);

// Integer Bresenham line between two cell centres, inclusive. The stepping
// and tie-breaking match skimage.draw.line.
std::vector<Cell> bresenham_line(Cell from, Cell to);

// Pixel line for the continuous line. theta >= 0 runs from the lower-left
// cell to the upper-right cell; theta < 0 from upper-left to lower-right.
Mask rasterize_line(const ContinuousLine& line,
                    TrigMode trig = TrigMode::kExactDegrees);

// Angle label for a set of non-negative continuous angles:
// 0 if 0 is present, 90 if 90 is present, else ceil(median).
int quantize_angle(std::span<const int> theta_set);

struct CatalogOptions {
  TrigMode trig = TrigMode::kExactDegrees;
  // Insert the 1x1 no-blur kernel labelled (1, 0) when r_min > 1.
  bool include_identity = false;
};

class KernelCatalog {
 public:
  const std::map<KernelLabel, PixelKernel>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  int r_min() const { return r_min_; }
  int r_max() const { return r_max_; }
  bool includes_identity() const { return includes_identity_; }
  TrigMode trig() const { return trig_; }
  // Number of (r, theta) continuous lines covered, theta in {-89, ..., 90}.
  std::size_t lines_explored() const { return lines_explored_; }

  const PixelKernel* find(KernelLabel label) const;
  std::optional<KernelLabel> label_of(int length, const Mask& grid) const;
  bool covers_length(int length) const;
  // Lengths present in the catalog, ascending (includes 1 for the identity).
  std::vector<int> lengths() const;

  // Adds an entry; throws std::invalid_argument on duplicate label or grid.
  void insert(PixelKernel kernel);

 private:
  friend KernelCatalog build_catalog(int, int, const CatalogOptions&);
  friend KernelCatalog make_catalog(int, int, bool, TrigMode);

  std::map<KernelLabel, PixelKernel> entries_;
  std::unordered_map<std::string, KernelLabel> by_grid_;
  int r_min_ = 0;
  int r_max_ = 0;
  bool includes_identity_ = false;
  TrigMode trig_ = TrigMode::kExactDegrees;
  std::size_t lines_explored_ = 0;
};

// Enumerates every distinct pixel line for integer lengths r_min..r_max and
// integer angles -89..90. Positive angles are rasterized directly; negative
// labels are the vertical mirrors of the non-symmetric positive kernels.
KernelCatalog build_catalog(int r_min, int r_max,
                            const CatalogOptions& options = {});

// Empty catalog shell for deserialization.
KernelCatalog make_catalog(int r_min, int r_max, bool includes_identity,
                           TrigMode trig);

std::vector<int> angles_for_length(const KernelCatalog& catalog, int length);

// Normalized kernel for the (r, angle) line, labelled canonically. r = 1 is
// the identity regardless of angle.
PixelKernel realize_kernel(int length, int angle,
                           TrigMode trig = TrigMode::kExactDegrees);

struct CanonicalLabel {
  KernelLabel label;
  bool clamped = false;  // r_hat fell outside the catalog's length range
};

// Maps a real-valued (length, angle) prediction onto the catalog label of the
// kernel it realizes.
CanonicalLabel canonicalize_prediction(double r_hat, double phi_hat,
                                       const KernelCatalog& catalog);

// Wraps an angle in degrees into (-90, 90].
double wrap_angle(double degrees);

}  // namespace blurlab
