#pragma once

// Balanced blurred-dataset generation.
//
// For each length r (ascending) the generator cycles through every angle
// label available at r, repeating full cycles until at least
// `min_per_length` samples exist for that length. Each sample draws a fresh
// source image, without replacement within that length, from a shuffled
// listing of the source directory. r = 1 is the no-blur length with the
// single label (1, 0).
//
// Manifest CSV columns:
//   output_path,source_id,r,phi,r_norm,phi_norm,sigma2,seed,width,height
// output_path is relative to the manifest's directory; source_id is relative
// to the source directory. A JSON sidecar (manifest.json next to
// manifest.csv) records the generator configuration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "blurlab/blur.hpp"
#include "blurlab/image.hpp"
#include "blurlab/kernel_geometry.hpp"
#include "json.hpp"

namespace blurlab {

inline constexpr int kMaxLabelLength = 100;
inline constexpr std::string_view kManifestHeader =
    "output_path,source_id,r,phi,r_norm,phi_norm,sigma2,seed,width,height";

struct NormalizedLabel {
  double r_norm = 0.0;
  double phi_norm = 0.0;
};

// r in [1, 100] -> (r - 1) / 99; phi in (-90, 90] -> (phi + 89) / 179.
NormalizedLabel normalize_labels(int length, int angle);
// Inverse map, rounded to the nearest integer label.
KernelLabel denormalize_labels(double r_norm, double phi_norm);
// Inverse map without rounding, for real-valued network outputs.
std::pair<double, double> denormalize_prediction(double r_norm, double phi_norm);

struct BlurSampleRecord {
  std::string output_path;
  std::string source_id;
  int r = 1;
  int phi = 0;
  double r_norm = 0.0;
  double phi_norm = 0.0;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const BlurSampleRecord&, const BlurSampleRecord&) = default;
};

struct Manifest {
  std::vector<BlurSampleRecord> records;
  std::string catalog_hash;
  nlohmann::json generator_config = nlohmann::json::object();
};

struct GeneratorConfig {
  int min_per_length = 175;
  // Samples for the no-blur length r = 1; negative means min_per_length
  // (r = 1 balanced like any other length), 0 disables no-blur samples.
  int no_blur_count = -1;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  int workers = 1;
  // Reshuffle and reuse sources once a length exhausts the pool instead of
  // failing.
  bool allow_source_reuse = false;
  Boundary boundary = Boundary::kReflect;
};

// Thrown when a length cannot be filled from the source pool.
class SourceExhausted : public std::runtime_error {
 public:
  SourceExhausted(int length, std::size_t needed, std::size_t produced,
                  std::size_t pool_size);
  int length() const { return length_; }
  std::size_t shortfall() const { return needed_ - produced_; }

 private:
  int length_;
  std::size_t needed_;
  std::size_t produced_;
};

struct LengthPlan {
  int length = 1;
  std::vector<int> angles;
  std::size_t target = 0;
};

// Per-length label cycles and sample targets, in ascending length order.
std::vector<LengthPlan> plan_lengths(const KernelCatalog& catalog,
                                     const GeneratorConfig& config);

struct PlannedSample {
  KernelLabel label;
  std::size_t source_index = 0;
  std::size_t ordinal = 0;  // position within its length
  std::uint64_t seed = 0;
};

// Called for each candidate (sample, source) pair; returns false to reject
// the source (e.g. smaller than the kernel), which then counts as consumed.
using SourceVisitor =
    std::function<bool(const PlannedSample& sample, const PixelKernel& kernel)>;

// Draws sources for one length. Throws SourceExhausted when the pool runs
// dry and reuse is disabled.
std::vector<PlannedSample> sample_length(const LengthPlan& plan,
                                         const KernelCatalog& catalog,
                                         std::size_t source_count,
                                         const GeneratorConfig& config,
                                         const SourceVisitor& visit);

// Sorted relative paths of decodable-looking image files under `dir`.
std::vector<std::string> list_sources(const std::filesystem::path& dir);

// Full manifest without touching any image: every source is assumed usable
// and image sizes are reported as 0.
Manifest plan_dataset(const KernelCatalog& catalog,
                      const std::vector<std::string>& source_ids,
                      const GeneratorConfig& config);

// Relative output path for a sample, e.g. "images/r005/r005_a-45_00012.png".
std::string sample_path(const KernelLabel& label, std::size_t ordinal);

// Blurs (and optionally noises) one source image exactly as the generator
// does for `record`, before 8-bit quantization.
Image render_sample(const Image& source, const BlurSampleRecord& record,
                    const KernelCatalog& catalog, Boundary boundary);

// Generates the dataset under `out_dir` and writes out_dir/manifest.csv
// plus its JSON sidecar.
Manifest generate_dataset(const KernelCatalog& catalog,
                          const std::filesystem::path& source_dir,
                          const std::filesystem::path& out_dir,
                          const GeneratorConfig& config);

void write_manifest(const std::filesystem::path& csv_path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& csv_path);
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
std::string manifest_csv(const Manifest& manifest);

struct DistributionReport {
  std::map<int, std::size_t> per_length;
  std::map<int, std::size_t> per_angle;
  std::map<int, std::size_t> unique_sources_per_length;
  std::map<int, std::size_t> unique_sources_per_angle;
};

DistributionReport distribution_report(const Manifest& manifest);
nlohmann::json to_json(const DistributionReport& report);

// Angle bins that are local maxima and hold at least `factor` times the
// median angle-bin count.
std::vector<int> dominant_angle_peaks(const DistributionReport& report,
                                      double factor = 2.0);

enum class SubsetAxis { kLength, kAngle };
SubsetAxis parse_subset_axis(std::string_view text);

struct SubsetResult {
  Manifest manifest;
  std::vector<std::string> warnings;
};

// Uniformly samples k records per distinct axis value without replacement.
// Values with fewer than k records contribute all of them and a warning.
SubsetResult subset(const Manifest& manifest, SubsetAxis axis, int k,
                    std::uint64_t seed);

}  // namespace blurlab
