#pragma once

// Prediction scoring: R^2 on labels and deconvolution error ratios.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blurlab/dataset.hpp"
#include "blurlab/deconv.hpp"
#include "blurlab/image.hpp"
#include "blurlab/kernel_geometry.hpp"
#include "json.hpp"

namespace blurlab {

inline constexpr std::string_view kPredictionsHeader = "sample_path,r_pred,phi_pred";

struct Prediction {
  std::string sample_path;
  double r_pred = 0.0;
  double phi_pred = 0.0;
};

std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions);
// Truth labels of every record, as a predictions table.
std::vector<Prediction> predictions_from_truth(const Manifest& manifest);

// 1 - SS_res / SS_tot. Throws when the inputs differ in size, are empty, or
// `actual` has zero variance.
double r2_score(std::span<const double> actual, std::span<const double> predicted);

struct R2Report {
  double r2_length = 0.0;
  double r2_angle = 0.0;
  std::size_t matched = 0;
  std::size_t missing = 0;  // manifest records without a prediction
};

// Joins predictions to the manifest on sample_path == output_path.
R2Report evaluate_r2(const Manifest& manifest, const std::vector<Prediction>& predictions);

struct ErrorRatioRecord {
  std::string sample_path;
  double ratio = 1.0;  // +inf when only the true kernel restores exactly
  double ssd_est = 0.0;
  double ssd_true = 0.0;
  KernelLabel true_label;
  KernelLabel est_label;
};

// Border excluded from the SSD: half the largest padded kernel side, rounded up.
int evaluation_margin(const KernelGrid& k_true, const KernelGrid& k_est);

// ssd_est / ssd_true with the conventions 0/0 = 1 and x/0 = +inf.
double ratio_of(double ssd_est, double ssd_true);

// Deblurs `blurred` with both kernels using the same deconvolver and
// compares each result against `sharp` over the interior.
ErrorRatioRecord error_ratio(const Image& sharp, const Image& blurred,
                             const KernelGrid& k_true, const KernelGrid& k_est,
                             const DeblurOptions& options);

struct CumulativeHistogram {
  std::vector<double> bins;          // 1.0, 1.25, ..., last
  std::vector<std::size_t> counts;   // ratios <= bin (first/last bins clamp)
};

// Cumulative counts at bin edges first, first + step, ..., last. Ratios at
// or below `first` land in the first bin; ratios beyond `last` land in the
// last bin, so the last count is always the sample size. NaN ratios are
// dropped; throws if nothing is left.
CumulativeHistogram cumulative_error_histogram(std::span<const double> ratios,
                                               double first = 1.0, double last = 3.0,
                                               double step = 0.25);

struct ErrorRatioJob {
  std::filesystem::path manifest_dir;  // output_path is relative to this
  std::filesystem::path source_dir;    // source_id is relative to this
  DeblurOptions options;
  // Wiener nsr per record is max(sigma2, floor) unless forced.
  double nsr_floor = 1e-4;
  bool force_nsr = false;
  Boundary boundary = Boundary::kReflect;
  int workers = 1;
};

struct EvalReport {
  std::optional<R2Report> r2;
  std::vector<ErrorRatioRecord> ratios;
  std::optional<CumulativeHistogram> histogram;
  std::size_t missing = 0;
};

// Error ratios for every prediction whose sample appears in the manifest,
// in manifest order. Predicted labels are canonicalized against `catalog`
// before their kernel is realized.
EvalReport evaluate_error_ratios(const Manifest& manifest,
                                 const std::vector<Prediction>& predictions,
                                 const KernelCatalog& catalog, const ErrorRatioJob& job);

nlohmann::json to_json(const EvalReport& report);
void write_ratio_csv(const std::filesystem::path& path,
                     const std::vector<ErrorRatioRecord>& ratios);

}  // namespace blurlab
