#include "blurlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "blurlab/text_util.hpp"
#include "csv.hpp"
#include "parallel.hpp"

namespace blurlab {

namespace fs = std::filesystem;

namespace {

const PixelKernel& kernel_for(const KernelCatalog& catalog, KernelLabel label) {
  static const PixelKernel identity = PixelKernel::identity();
  if (label.length == 1) return identity;
  const PixelKernel* k = catalog.find(label);
  if (k == nullptr) {
    throw std::invalid_argument("label (" + std::to_string(label.length) + ", " +
                                std::to_string(label.angle) + ") is not in the catalog");
  }
  return *k;
}

int padded_side(const KernelGrid& k) {
  const int n = std::max(k.height, k.width);
  return n % 2 == 1 ? n : n + 1;
}

nlohmann::json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open predictions '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != kPredictionsHeader) {
    throw std::runtime_error("'" + path.string() + "' is not a predictions file (bad header)");
  }
  std::vector<Prediction> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    try {
      const auto f = detail::parse_csv_line(line);
      if (f.size() != 3) throw std::runtime_error("expected 3 fields");
      out.push_back({f[0], parse_double(f[1]), parse_double(f[2])});
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const fs::path& path, const std::vector<Prediction>& predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << kPredictionsHeader << '\n';
  for (const Prediction& p : predictions) {
    out << detail::csv_field(p.sample_path) << ',' << format_double(p.r_pred) << ','
        << format_double(p.phi_pred) << '\n';
  }
}

std::vector<Prediction> predictions_from_truth(const Manifest& manifest) {
  std::vector<Prediction> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    out.push_back({r.output_path, static_cast<double>(r.r), static_cast<double>(r.phi)});
  }
  return out;
}

double r2_score(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw std::invalid_argument("actual and predicted differ in length");
  }
  if (actual.empty()) throw std::invalid_argument("r2 of an empty sample");
  double mean = 0.0;
  for (double y : actual) mean += y;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r2 undefined: actual values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

R2Report evaluate_r2(const Manifest& manifest, const std::vector<Prediction>& predictions) {
  std::unordered_map<std::string, const Prediction*> by_path;
  for (const Prediction& p : predictions) by_path[p.sample_path] = &p;
  std::vector<double> r_true, r_pred, a_true, a_pred;
  R2Report report;
  for (const auto& rec : manifest.records) {
    const auto it = by_path.find(rec.output_path);
    if (it == by_path.end()) {
      ++report.missing;
      continue;
    }
    r_true.push_back(rec.r);
    a_true.push_back(rec.phi);
    r_pred.push_back(it->second->r_pred);
    a_pred.push_back(it->second->phi_pred);
  }
  report.matched = r_true.size();
  if (report.matched == 0) throw std::runtime_error("no predictions match the manifest");
  report.r2_length = r2_score(r_true, r_pred);
  report.r2_angle = r2_score(a_true, a_pred);
  return report;
}

int evaluation_margin(const KernelGrid& k_true, const KernelGrid& k_est) {
  const int side = std::max(padded_side(k_true), padded_side(k_est));
  return (side + 1) / 2;
}

double ratio_of(double ssd_est, double ssd_true) {
  if (ssd_true > 0.0) return ssd_est / ssd_true;
  return ssd_est > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

ErrorRatioRecord error_ratio(const Image& sharp, const Image& blurred,
                             const KernelGrid& k_true, const KernelGrid& k_est,
                             const DeblurOptions& options) {
  if (!sharp.same_shape(blurred)) {
    throw std::invalid_argument("sharp and blurred images differ in shape");
  }
  const int margin = evaluation_margin(k_true, k_est);
  ErrorRatioRecord rec;
  rec.ssd_true = ssd(deblur(blurred, k_true, options).image, sharp, margin);
  rec.ssd_est = k_est == k_true ? rec.ssd_true
                                : ssd(deblur(blurred, k_est, options).image, sharp, margin);
  rec.ratio = ratio_of(rec.ssd_est, rec.ssd_true);
  return rec;
}

CumulativeHistogram cumulative_error_histogram(std::span<const double> ratios, double first,
                                               double last, double step) {
  if (!(step > 0.0) || !(last >= first)) throw std::invalid_argument("bad histogram range");
  std::vector<double> kept;
  for (double r : ratios) {
    if (!std::isnan(r)) kept.push_back(r);
  }
  if (kept.empty()) throw std::invalid_argument("no ratios to histogram");
  std::sort(kept.begin(), kept.end());
  CumulativeHistogram h;
  const int bins = static_cast<int>(std::floor((last - first) / step + 1e-9)) + 1;
  for (int j = 0; j < bins; ++j) {
    const double edge = first + j * step;
    h.bins.push_back(edge);
    const auto n = static_cast<std::size_t>(
        std::upper_bound(kept.begin(), kept.end(), edge) - kept.begin());
    h.counts.push_back(j + 1 == bins ? kept.size() : n);
  }
  return h;
}

EvalReport evaluate_error_ratios(const Manifest& manifest,
                                 const std::vector<Prediction>& predictions,
                                 const KernelCatalog& catalog, const ErrorRatioJob& job) {
  std::unordered_map<std::string, const Prediction*> by_path;
  for (const Prediction& p : predictions) by_path[p.sample_path] = &p;
  std::vector<std::pair<const BlurSampleRecord*, const Prediction*>> work;
  EvalReport report;
  for (const auto& rec : manifest.records) {
    const auto it = by_path.find(rec.output_path);
    if (it == by_path.end()) {
      ++report.missing;
    } else {
      work.emplace_back(&rec, it->second);
    }
  }
  if (work.empty()) throw std::runtime_error("no predictions match the manifest");

  report.ratios.resize(work.size());
  detail::parallel_for(work.size(), job.workers, [&](std::size_t i) {
    const BlurSampleRecord& rec = *work[i].first;
    const Prediction& pred = *work[i].second;
    const KernelLabel true_label{rec.r, rec.phi};
    const KernelLabel est_label =
        canonicalize_prediction(pred.r_pred, pred.phi_pred, catalog).label;
    DeblurOptions options = job.options;
    if (!job.force_nsr) options.wiener.nsr = std::max(rec.sigma2, job.nsr_floor);
    options.wiener.boundary = job.boundary;
    options.richardson_lucy.boundary = job.boundary;
    const Image sharp = load_image(job.source_dir / rec.source_id);
    const Image blurred = load_image(job.manifest_dir / rec.output_path);
    ErrorRatioRecord out =
        error_ratio(sharp, blurred, kernel_for(catalog, true_label).grid(),
                    kernel_for(catalog, est_label).grid(), options);
    out.sample_path = rec.output_path;
    out.true_label = true_label;
    out.est_label = est_label;
    report.ratios[i] = std::move(out);
  });

  std::vector<double> values;
  for (const auto& r : report.ratios) values.push_back(r.ratio);
  report.histogram = cumulative_error_histogram(values);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j = nlohmann::json::object();
  if (report.r2) {
    j["r2_length"] = report.r2->r2_length;
    j["r2_angle"] = report.r2->r2_angle;
    j["matched"] = report.r2->matched;
  }
  j["missing"] = report.missing;
  if (!report.ratios.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.ratios) {
      rows.push_back({{"sample_path", r.sample_path},
                      {"ratio", number_or_inf(r.ratio)},
                      {"ssd_est", r.ssd_est},
                      {"ssd_true", r.ssd_true},
                      {"r_true", r.true_label.length},
                      {"phi_true", r.true_label.angle},
                      {"r_est", r.est_label.length},
                      {"phi_est", r.est_label.angle}});
    }
    j["ratios"] = std::move(rows);
  }
  if (report.histogram) {
    j["histogram"] = {{"bins", report.histogram->bins}, {"counts", report.histogram->counts}};
  }
  return j;
}

void write_ratio_csv(const fs::path& path, const std::vector<ErrorRatioRecord>& ratios) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "sample_path,r_true,phi_true,r_est,phi_est,ssd_true,ssd_est,ratio\n";
  for (const auto& r : ratios) {
    out << detail::csv_field(r.sample_path) << ',' << r.true_label.length << ','
        << r.true_label.angle << ',' << r.est_label.length << ',' << r.est_label.angle << ','
        << format_double(r.ssd_true) << ',' << format_double(r.ssd_est) << ','
        << (std::isinf(r.ratio) ? std::string("inf") : format_double(r.ratio)) << '\n';
  }
}

}  // namespace blurlab
