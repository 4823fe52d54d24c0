#include "blurlab/kernel_geometry.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace blurlab {

namespace {

struct SinCos {
  double sin;
  double cos;
};

SinCos trig_of(double theta, TrigMode trig) {
  if (trig == TrigMode::kExactDegrees && theta == std::round(theta)) {
    switch (static_cast<int>(theta)) {
      case 0: return {0.0, 1.0};
      case 30: return {0.5, std::sqrt(3.0) / 2.0};
      case -30: return {-0.5, std::sqrt(3.0) / 2.0};
      case 60: return {std::sqrt(3.0) / 2.0, 0.5};
      case -60: return {-std::sqrt(3.0) / 2.0, 0.5};
      case 90: return {1.0, 0.0};
      default: break;
    }
  }
  const double radians = theta * (std::numbers::pi / 180.0);
  return {std::sin(radians), std::cos(radians)};
}

int ceil_extent(double length, double trig_value) {
  if (trig_value == 0.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(length * std::abs(trig_value))));
}

// Distinct pixel lines for one length over theta = 0..90, in order of first
// appearance.
struct AngleGroup {
  Mask mask;
  std::vector<int> thetas;
};

std::vector<AngleGroup> positive_groups(int length, TrigMode trig) {
  std::vector<AngleGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (int theta = 0; theta <= 90; ++theta) {
    Mask mask = rasterize_line({static_cast<double>(length), static_cast<double>(theta)}, trig);
    auto [it, inserted] = index.try_emplace(mask.key(), groups.size());
    if (inserted) {
      groups.push_back({std::move(mask), {theta}});
    } else {
      groups[it->second].thetas.push_back(theta);
    }
  }
  return groups;
}

std::vector<int> negated(const std::vector<int>& thetas) {
  std::vector<int> out;
  out.reserve(thetas.size());
  for (auto it = thetas.rbegin(); it != thetas.rend(); ++it) out.push_back(-*it);
  return out;
}

// Theta set over -89..90 of a kernel equal to its own mirror image.
std::vector<int> symmetric_thetas(const std::vector<int>& positive) {
  std::vector<int> out;
  for (int t : negated(positive)) {
    if (t != 0 && t != -90) out.push_back(t);
  }
  out.insert(out.end(), positive.begin(), positive.end());
  return out;
}

std::string grid_key(int length, const Mask& mask) {
  return std::to_string(length) + '|' + mask.key();
}

}  // namespace

void validate(const ContinuousLine& line) {
  if (!(line.length >= 1.0) || !std::isfinite(line.length)) {
    throw std::invalid_argument("line length must be >= 1, got " +
                                std::to_string(line.length));
  }
  if (!(line.theta > -90.0 && line.theta <= 90.0)) {
    throw std::invalid_argument("line angle must lie in (-90, 90], got " +
                                std::to_string(line.theta));
  }
}

Mask::Mask(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("mask dimensions must be positive");
  }
  cells_.assign(static_cast<std::size_t>(height) * width, 0);
}

int Mask::count() const {
  int n = 0;
  for (auto c : cells_) n += c;
  return n;
}

Mask Mask::flipped_vertically() const {
  Mask out(height_, width_);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) out.set(height_ - 1 - r, c, at(r, c));
  }
  return out;
}

std::string Mask::key() const {
  std::string key = std::to_string(height_) + 'x' + std::to_string(width_) + ':';
  key.append(cells_.begin(), cells_.end());
  return key;
}

double KernelGrid::sum() const {
  double s = 0.0;
  for (double v : weights) s += v;
  return s;
}

int KernelGrid::nonzero_count() const {
  int n = 0;
  for (double v : weights) n += v != 0.0;
  return n;
}

PixelKernel::PixelKernel(const Mask& support, KernelLabel label,
                         std::vector<int> theta_set)
    : support_(support),
      grid_(support.height(), support.width()),
      label_(label),
      theta_set_(std::move(theta_set)) {
  const int n = support.count();
  if (n == 0) throw std::invalid_argument("kernel support is empty");
  const double weight = 1.0 / n;
  for (int r = 0; r < support.height(); ++r) {
    for (int c = 0; c < support.width(); ++c) {
      if (support.at(r, c)) grid_.at(r, c) = weight;
    }
  }
}

PixelKernel PixelKernel::identity() {
  Mask one(1, 1);
  one.set(0, 0);
  std::vector<int> thetas;
  for (int t = -89; t <= 90; ++t) thetas.push_back(t);
  return PixelKernel(one, {1, 0}, std::move(thetas));
}

GridSize kernel_dims(const ContinuousLine& line, TrigMode trig) {
  validate(line);
  const auto [s, c] = trig_of(line.theta, trig);
  return {ceil_extent(line.length, s), ceil_extent(line.length, c)};
}

std::vector<Cell> bresenham_line(Cell from, Cell to) {
  int r = from.row;
  int c = from.col;
  int dr = std::abs(to.row - from.row);
  int dc = std::abs(to.col - from.col);
  int sc = (to.col - c) > 0 ? 1 : -1;
  int sr = (to.row - r) > 0 ? 1 : -1;
  const bool steep = dr > dc;
  if (steep) {
    std::swap(r, c);
    std::swap(dr, dc);
    std::swap(sr, sc);
  }
  int d = 2 * dr - dc;

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(dc) + 1);
  for (int i = 0; i < dc; ++i) {
    cells.push_back(steep ? Cell{c, r} : Cell{r, c});
    while (d >= 0) {
      r += sr;
      d -= 2 * dc;
    }
    c += sc;
    d += 2 * dr;
  }
  cells.push_back(to);
  return cells;
}

Mask rasterize_line(const ContinuousLine& line, TrigMode trig) {
  const GridSize dims = kernel_dims(line, trig);
  const int last_row = dims.height - 1;
  const int last_col = dims.width - 1;
  const auto cells = line.theta >= 0.0
                         ? bresenham_line({last_row, 0}, {0, last_col})
                         : bresenham_line({0, 0}, {last_row, last_col});
  Mask mask(dims.height, dims.width);
  for (const Cell& cell : cells) mask.set(cell.row, cell.col);
  return mask;
}

int quantize_angle(std::span<const int> theta_set) {
  if (theta_set.empty()) {
    throw std::invalid_argument("cannot quantize an empty angle set");
  }
  std::vector<int> sorted(theta_set.begin(), theta_set.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.front() < 0 || sorted.back() > 90) {
    throw std::invalid_argument("angle set must lie within [0, 90]");
  }
  if (sorted.front() == 0) return 0;
  if (sorted.back() == 90) return 90;
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return static_cast<int>(std::ceil(median));
}

const PixelKernel* KernelCatalog::find(KernelLabel label) const {
  auto it = entries_.find(label);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<KernelLabel> KernelCatalog::label_of(int length,
                                                   const Mask& grid) const {
  auto it = by_grid_.find(grid_key(length, grid));
  if (it == by_grid_.end()) return std::nullopt;
  return it->second;
}

bool KernelCatalog::covers_length(int length) const {
  if (length == 1 && includes_identity_) return true;
  return length >= r_min_ && length <= r_max_;
}

std::vector<int> KernelCatalog::lengths() const {
  std::vector<int> out;
  for (const auto& [label, kernel] : entries_) {
    if (out.empty() || out.back() != label.length) out.push_back(label.length);
  }
  return out;
}

void KernelCatalog::insert(PixelKernel kernel) {
  const KernelLabel label = kernel.label();
  if (label.angle <= -90 || label.angle > 90) {
    std::ostringstream msg;
    msg << "angle label " << label.angle << " outside (-90, 90]";
    throw std::invalid_argument(msg.str());
  }
  if (entries_.contains(label)) {
    std::ostringstream msg;
    msg << "duplicate catalog label (" << label.length << ", " << label.angle << ")";
    throw std::invalid_argument(msg.str());
  }
  auto key = grid_key(label.length, kernel.support());
  if (by_grid_.contains(key)) {
    std::ostringstream msg;
    msg << "duplicate grid at length " << label.length << " for angle " << label.angle;
    throw std::invalid_argument(msg.str());
  }
  by_grid_.emplace(std::move(key), label);
  entries_.emplace(label, std::move(kernel));
}

KernelCatalog make_catalog(int r_min, int r_max, bool includes_identity,
                           TrigMode trig) {
  if (r_min < 1 || r_max < r_min) {
    throw std::invalid_argument("catalog length range must satisfy 1 <= r_min <= r_max");
  }
  KernelCatalog catalog;
  catalog.r_min_ = r_min;
  catalog.r_max_ = r_max;
  catalog.includes_identity_ = includes_identity || r_min == 1;
  catalog.trig_ = trig;
  return catalog;
}

KernelCatalog build_catalog(int r_min, int r_max, const CatalogOptions& options) {
  KernelCatalog catalog =
      make_catalog(r_min, r_max, options.include_identity, options.trig);
  if (options.include_identity && r_min > 1) {
    catalog.insert(PixelKernel::identity());
  }
  for (int r = r_min; r <= r_max; ++r) {
    for (auto& group : positive_groups(r, options.trig)) {
      const int phi = quantize_angle(group.thetas);
      Mask mirror = group.mask.flipped_vertically();
      if (mirror == group.mask) {
        catalog.insert(PixelKernel(group.mask, {r, phi}, symmetric_thetas(group.thetas)));
      } else {
        catalog.insert(PixelKernel(mirror, {r, -phi}, negated(group.thetas)));
        catalog.insert(PixelKernel(group.mask, {r, phi}, group.thetas));
      }
    }
    // theta = 0..90 rasterized, -89..-1 covered by the mirrors.
    catalog.lines_explored_ += 180;
  }
  return catalog;
}

std::vector<int> angles_for_length(const KernelCatalog& catalog, int length) {
  if (!catalog.covers_length(length)) {
    throw std::out_of_range("length " + std::to_string(length) +
                            " is outside the catalog range");
  }
  std::vector<int> angles;
  auto it = catalog.entries().lower_bound({length, -90});
  for (; it != catalog.entries().end() && it->first.length == length; ++it) {
    angles.push_back(it->first.angle);
  }
  return angles;
}

PixelKernel realize_kernel(int length, int angle, TrigMode trig) {
  validate({static_cast<double>(length), static_cast<double>(angle)});
  if (length == 1) return PixelKernel::identity();
  const KernelCatalog single = build_catalog(length, length, {trig, false});
  const Mask mask = rasterize_line(
      {static_cast<double>(length), static_cast<double>(angle)}, trig);
  const auto label = single.label_of(length, mask);
  if (!label) {
    throw std::logic_error("rasterized line missing from its own length catalog");
  }
  return *single.find(*label);
}

double wrap_angle(double degrees) {
  double x = std::fmod(degrees, 180.0);
  if (x <= -90.0) x += 180.0;
  if (x > 90.0) x -= 180.0;
  return x;
}

CanonicalLabel canonicalize_prediction(double r_hat, double phi_hat,
                                       const KernelCatalog& catalog) {
  if (!std::isfinite(r_hat) || !std::isfinite(phi_hat)) {
    throw std::invalid_argument("prediction must be finite");
  }
  const int lower = catalog.includes_identity() ? 1 : catalog.r_min();
  const int upper = catalog.r_max();
  long r = std::lround(r_hat);
  CanonicalLabel result;
  if (r < lower || r > upper) {
    result.clamped = true;
    r = std::clamp<long>(r, lower, upper);
  }
  const int length = static_cast<int>(r);
  if (length == 1) {
    result.label = {1, 0};
    return result;
  }
  const int angle = static_cast<int>(wrap_angle(static_cast<double>(std::lround(wrap_angle(phi_hat)))));
  const Mask mask = rasterize_line(
      {static_cast<double>(length), static_cast<double>(angle)}, catalog.trig());
  const auto label = catalog.label_of(length, mask);
  if (!label) {
    throw std::logic_error("realized kernel (" + std::to_string(length) + ", " +
                           std::to_string(angle) + ") is not in the catalog");
  }
  result.label = *label;
  return result;
}

}  // namespace blurlab
