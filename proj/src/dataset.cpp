#include "blurlab/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "blurlab/catalog_io.hpp"
#include "blurlab/seeding.hpp"
#include "blurlab/text_util.hpp"
#include "csv.hpp"
#include "parallel.hpp"

namespace blurlab {

namespace fs = std::filesystem;
using detail::csv_field;
using detail::parse_csv_line;

namespace {

// Stream tags keep the different random draws of one run independent.
constexpr std::uint64_t kSourceStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kSubsetStream = 3;

void check_label_range(int length, int angle) {
  if (length < 1 || length > kMaxLabelLength) {
    throw std::invalid_argument("length label " + std::to_string(length) +
                                " outside [1, 100]");
  }
  if (angle <= -90 || angle > 90) {
    throw std::invalid_argument("angle label " + std::to_string(angle) +
                                " outside (-90, 90]");
  }
}

// Shuffled, without-replacement draws from [0, n). A fresh shuffle is made
// for each pass over the pool.
class SourceCursor {
 public:
  SourceCursor(std::size_t pool, std::uint64_t seed, int length)
      : pool_(pool), seed_(seed), length_(length) {
    reshuffle();
  }

  bool exhausted() const { return next_ == order_.size(); }
  std::size_t next() { return order_[next_++]; }
  void reshuffle() {
    order_.resize(pool_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(
        seed_, {kSourceStream, static_cast<std::uint64_t>(length_), pass_++}));
    std::shuffle(order_.begin(), order_.end(), rng);
    next_ = 0;
  }

 private:
  std::size_t pool_;
  std::uint64_t seed_;
  int length_;
  std::uint64_t pass_ = 0;
  std::vector<std::size_t> order_;
  std::size_t next_ = 0;
};

BlurSampleRecord make_record(const PlannedSample& s, const std::string& source_id,
                             const GeneratorConfig& config, int width, int height) {
  BlurSampleRecord rec;
  rec.output_path = sample_path(s.label, s.ordinal);
  rec.source_id = source_id;
  rec.r = s.label.length;
  rec.phi = s.label.angle;
  const NormalizedLabel n = normalize_labels(rec.r, rec.phi);
  rec.r_norm = n.r_norm;
  rec.phi_norm = n.phi_norm;
  rec.sigma2 = config.sigma2;
  rec.seed = s.seed;
  rec.width = width;
  rec.height = height;
  return rec;
}

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

void validate(const GeneratorConfig& config) {
  if (config.min_per_length < 0) throw std::invalid_argument("min_per_length must be >= 0");
  if (!(config.sigma2 >= 0.0) || config.sigma2 > 1.0) {
    throw std::invalid_argument("sigma2 must lie in [0, 1]");
  }
  if (config.workers < 1) throw std::invalid_argument("workers must be >= 1");
}

nlohmann::json config_json(const KernelCatalog& catalog, const GeneratorConfig& config) {
  return {
      {"min_per_length", config.min_per_length},
      {"no_blur_count", config.no_blur_count},
      {"sigma2", config.sigma2},
      {"seed", config.seed},
      {"workers", config.workers},
      {"allow_source_reuse", config.allow_source_reuse},
      {"boundary", to_string(config.boundary)},
      {"r_min", catalog.r_min()},
      {"r_max", catalog.r_max()},
      {"trig", to_string(catalog.trig())},
  };
}

std::string source_digest(const std::vector<std::string>& ids) {
  std::uint64_t h = fnv1a64("");
  for (const std::string& id : ids) {
    h = fnv1a64(id, h);
    h = fnv1a64("\n", h);
  }
  return hex_digest(h);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

NormalizedLabel normalize_labels(int length, int angle) {
  check_label_range(length, angle);
  return {(length - 1) / 99.0, (angle + 89) / 179.0};
}

KernelLabel denormalize_labels(double r_norm, double phi_norm) {
  const auto [r, phi] = denormalize_prediction(r_norm, phi_norm);
  const KernelLabel label{static_cast<int>(std::lround(r)),
                          static_cast<int>(std::lround(phi))};
  check_label_range(label.length, label.angle);
  return label;
}

std::pair<double, double> denormalize_prediction(double r_norm, double phi_norm) {
  if (!std::isfinite(r_norm) || !std::isfinite(phi_norm)) {
    throw std::invalid_argument("normalized labels must be finite");
  }
  return {1.0 + 99.0 * r_norm, -89.0 + 179.0 * phi_norm};
}

SourceExhausted::SourceExhausted(int length, std::size_t needed, std::size_t produced,
                                 std::size_t pool_size)
    : std::runtime_error("source pool exhausted at length " + std::to_string(length) +
                         ": produced " + std::to_string(produced) + " of " +
                         std::to_string(needed) + " samples from " +
                         std::to_string(pool_size) + " sources (shortfall " +
                         std::to_string(needed - produced) + ")"),
      length_(length),
      needed_(needed),
      produced_(produced) {}

std::vector<LengthPlan> plan_lengths(const KernelCatalog& catalog,
                                     const GeneratorConfig& config) {
  validate(config);
  std::vector<LengthPlan> plans;
  const std::size_t no_blur = config.no_blur_count < 0
                                  ? static_cast<std::size_t>(std::max(config.min_per_length, 1))
                                  : static_cast<std::size_t>(config.no_blur_count);
  if (no_blur > 0) plans.push_back({1, {0}, no_blur});
  for (int r : catalog.lengths()) {
    if (r == 1) continue;
    LengthPlan plan{r, angles_for_length(catalog, r), 0};
    const std::size_t cycle = plan.angles.size();
    const std::size_t min = static_cast<std::size_t>(config.min_per_length);
    const std::size_t cycles = std::max<std::size_t>(1, (min + cycle - 1) / cycle);
    plan.target = cycles * cycle;
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<PlannedSample> sample_length(const LengthPlan& plan,
                                         const KernelCatalog& catalog,
                                         std::size_t source_count,
                                         const GeneratorConfig& config,
                                         const SourceVisitor& visit) {
  if (source_count == 0) throw std::invalid_argument("no source images");
  SourceCursor cursor(source_count, config.seed, plan.length);
  std::vector<PlannedSample> out;
  out.reserve(plan.target);
  std::size_t rejected_in_pass = 0;
  while (out.size() < plan.target) {
    if (cursor.exhausted()) {
      // A pass that rejected everything would loop forever under reuse.
      if (!config.allow_source_reuse || rejected_in_pass == source_count) {
        throw SourceExhausted(plan.length, plan.target, out.size(), source_count);
      }
      cursor.reshuffle();
      rejected_in_pass = 0;
    }
    const std::size_t k = out.size();
    PlannedSample s;
    s.label = {plan.length, plan.angles[k % plan.angles.size()]};
    s.source_index = cursor.next();
    s.ordinal = k;
    s.seed = derive_seed(config.seed, {kNoiseStream, static_cast<std::uint64_t>(plan.length),
                                       static_cast<std::uint64_t>(k)});
    if (visit(s, kernel_for(catalog, s.label))) {
      out.push_back(s);
    } else {
      ++rejected_in_pass;
    }
  }
  return out;
}

std::vector<std::string> list_sources(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("source directory '" + dir.string() + "' does not exist");
  }
  std::vector<std::string> ids;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) {
      ids.push_back(fs::relative(entry.path(), dir).generic_string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string sample_path(const KernelLabel& label, std::size_t ordinal) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "images/r%03d/r%03d_a%+03d_%05zu.png", label.length,
                label.length, label.angle, ordinal);
  return buf;
}

Manifest plan_dataset(const KernelCatalog& catalog,
                      const std::vector<std::string>& source_ids,
                      const GeneratorConfig& config) {
  if (source_ids.empty()) throw std::invalid_argument("no source images");
  Manifest manifest;
  manifest.catalog_hash = catalog_hash(catalog);
  manifest.generator_config = config_json(catalog, config);
  manifest.generator_config["source_count"] = source_ids.size();
  manifest.generator_config["source_digest"] = source_digest(source_ids);
  const auto accept = [](const PlannedSample&, const PixelKernel&) { return true; };
  for (const LengthPlan& plan : plan_lengths(catalog, config)) {
    for (const PlannedSample& s :
         sample_length(plan, catalog, source_ids.size(), config, accept)) {
      manifest.records.push_back(make_record(s, source_ids[s.source_index], config, 0, 0));
    }
  }
  return manifest;
}

Image render_sample(const Image& source, const BlurSampleRecord& record,
                    const KernelCatalog& catalog, Boundary boundary) {
  const PixelKernel& kernel = kernel_for(catalog, {record.r, record.phi});
  Image blurred = convolve(source, kernel.grid(), boundary);
  if (record.sigma2 > 0.0) blurred = add_gaussian_noise(blurred, {record.sigma2, record.seed});
  return blurred;
}

Manifest generate_dataset(const KernelCatalog& catalog, const fs::path& source_dir,
                          const fs::path& out_dir, const GeneratorConfig& config) {
  validate(config);
  if (catalog.size() == 0) throw std::invalid_argument("catalog is empty");
  const std::vector<std::string> ids = list_sources(source_dir);
  if (ids.empty()) {
    throw std::runtime_error("no image files in '" + source_dir.string() + "'");
  }
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw std::runtime_error("cannot create output directory '" + out_dir.string() +
                             "': " + ec.message());
  }

  const std::vector<LengthPlan> plans = plan_lengths(catalog, config);
  std::vector<std::vector<BlurSampleRecord>> per_length(plans.size());
  std::atomic<std::size_t> skipped{0};

  detail::parallel_for(plans.size(), config.workers, [&](std::size_t i) {
    const LengthPlan& plan = plans[i];
    fs::create_directories((out_dir / sample_path({plan.length, 0}, 0)).parent_path());
    auto visit = [&](const PlannedSample& s, const PixelKernel& kernel) {
      const Image source = load_image(source_dir / ids[s.source_index]);
      if (kernel.height() > source.height() || kernel.width() > source.width()) {
        ++skipped;
        return false;
      }
      BlurSampleRecord rec =
          make_record(s, ids[s.source_index], config, source.width(), source.height());
      save_image(out_dir / rec.output_path,
                 render_sample(source, rec, catalog, config.boundary));
      per_length[i].push_back(std::move(rec));
      return true;
    };
    sample_length(plan, catalog, ids.size(), config, visit);
  });

  Manifest manifest;
  manifest.catalog_hash = catalog_hash(catalog);
  manifest.generator_config = config_json(catalog, config);
  manifest.generator_config["source_dir"] = fs::absolute(source_dir).lexically_normal().string();
  manifest.generator_config["source_count"] = ids.size();
  manifest.generator_config["source_digest"] = source_digest(ids);
  manifest.generator_config["skipped_small_sources"] = skipped.load();
  for (auto& records : per_length) {
    for (auto& rec : records) manifest.records.push_back(std::move(rec));
  }
  write_manifest(out_dir / "manifest.csv", manifest);
  return manifest;
}

std::string manifest_csv(const Manifest& manifest) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const BlurSampleRecord& r : manifest.records) {
    out += csv_field(r.output_path) + ',' + csv_field(r.source_id) + ',' +
           std::to_string(r.r) + ',' + std::to_string(r.phi) + ',' +
           format_double(r.r_norm) + ',' + format_double(r.phi_norm) + ',' +
           format_double(r.sigma2) + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.width) + ',' + std::to_string(r.height) + '\n';
  }
  return out;
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  return p.replace_extension(".json");
}

void write_manifest(const fs::path& csv_path, const Manifest& manifest) {
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + csv_path.string() + "'");
    out << manifest_csv(manifest);
  }
  nlohmann::json side = manifest.generator_config;
  side["catalog_hash"] = manifest.catalog_hash;
  side["record_count"] = manifest.records.size();
  std::ofstream out(sidecar_path(csv_path), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sidecar for '" + csv_path.string() + "'");
  out << side.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& csv_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest '" + csv_path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != kManifestHeader) {
    throw std::runtime_error("'" + csv_path.string() + "' is not a manifest (bad header)");
  }
  Manifest manifest;
  std::size_t line_no = 1;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    try {
      const auto f = parse_csv_line(line);
      if (f.size() != 10) throw std::runtime_error("expected 10 fields");
      BlurSampleRecord r;
      r.output_path = f[0];
      r.source_id = f[1];
      r.r = static_cast<int>(parse_integer(f[2]));
      r.phi = static_cast<int>(parse_integer(f[3]));
      r.r_norm = parse_double(f[4]);
      r.phi_norm = parse_double(f[5]);
      r.sigma2 = parse_double(f[6]);
      r.seed = std::stoull(f[7]);
      r.width = static_cast<int>(parse_integer(f[8]));
      r.height = static_cast<int>(parse_integer(f[9]));
      check_label_range(r.r, r.phi);
      if (!seen.insert(r.output_path).second) throw std::runtime_error("duplicate output_path");
      manifest.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(csv_path.string() + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  const fs::path side = sidecar_path(csv_path);
  if (fs::exists(side)) {
    std::ifstream sin(side);
    manifest.generator_config = nlohmann::json::parse(sin);
    if (manifest.generator_config.contains("catalog_hash")) {
      manifest.catalog_hash = manifest.generator_config["catalog_hash"].get<std::string>();
      manifest.generator_config.erase("catalog_hash");
    }
    manifest.generator_config.erase("record_count");
  }
  return manifest;
}

DistributionReport distribution_report(const Manifest& manifest) {
  if (manifest.records.empty()) throw std::invalid_argument("manifest is empty");
  DistributionReport report;
  std::map<int, std::set<std::string>> by_length;
  std::map<int, std::set<std::string>> by_angle;
  for (const BlurSampleRecord& r : manifest.records) {
    ++report.per_length[r.r];
    ++report.per_angle[r.phi];
    by_length[r.r].insert(r.source_id);
    by_angle[r.phi].insert(r.source_id);
  }
  for (const auto& [k, s] : by_length) report.unique_sources_per_length[k] = s.size();
  for (const auto& [k, s] : by_angle) report.unique_sources_per_angle[k] = s.size();
  return report;
}

nlohmann::json to_json(const DistributionReport& report) {
  auto table = [](const std::map<int, std::size_t>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
  };
  std::size_t total = 0;
  for (const auto& [k, v] : report.per_length) total += v;
  std::size_t min_count = total;
  for (const auto& [k, v] : report.per_length) {
    if (k > 1) min_count = std::min(min_count, v);
  }
  return {
      {"records", total},
      {"per_length", table(report.per_length)},
      {"per_angle", table(report.per_angle)},
      {"unique_sources_per_length", table(report.unique_sources_per_length)},
      {"unique_sources_per_angle", table(report.unique_sources_per_angle)},
      {"min_blurred_length_count", min_count},
      {"angle_peaks", dominant_angle_peaks(report)},
  };
}

std::vector<int> dominant_angle_peaks(const DistributionReport& report, double factor) {
  std::vector<double> counts;
  for (const auto& [a, c] : report.per_angle) counts.push_back(static_cast<double>(c));
  if (counts.empty()) return {};
  const double threshold = factor * median_of(counts);
  auto count_at = [&](int a) -> double {
    auto it = report.per_angle.find(a);
    return it == report.per_angle.end() ? 0.0 : static_cast<double>(it->second);
  };
  std::vector<int> peaks;
  for (const auto& [a, c] : report.per_angle) {
    const double v = static_cast<double>(c);
    if (v >= threshold && v >= count_at(a - 1) && v >= count_at(a + 1)) peaks.push_back(a);
  }
  return peaks;
}

SubsetAxis parse_subset_axis(std::string_view text) {
  if (text == "length") return SubsetAxis::kLength;
  if (text == "angle") return SubsetAxis::kAngle;
  throw std::invalid_argument("subset axis must be 'length' or 'angle', got '" +
                              std::string(text) + "'");
}

SubsetResult subset(const Manifest& manifest, SubsetAxis axis, int k, std::uint64_t seed) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    groups[axis == SubsetAxis::kLength ? r.r : r.phi].push_back(i);
  }
  SubsetResult result;
  std::vector<std::size_t> chosen;
  const char* name = axis == SubsetAxis::kLength ? "length" : "angle";
  for (auto& [value, idx] : groups) {
    const std::size_t want = static_cast<std::size_t>(k);
    if (idx.size() < want) {
      result.warnings.push_back(std::string(name) + " " + std::to_string(value) + " has only " +
                                std::to_string(idx.size()) + " records; taking all");
      chosen.insert(chosen.end(), idx.begin(), idx.end());
      continue;
    }
    std::mt19937_64 rng(derive_seed(
        seed, {kSubsetStream, static_cast<std::uint64_t>(static_cast<std::int64_t>(value))}));
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
  }
  std::sort(chosen.begin(), chosen.end());
  result.manifest.catalog_hash = manifest.catalog_hash;
  result.manifest.generator_config = manifest.generator_config;
  result.manifest.generator_config["subset"] = {{"axis", name}, {"k", k}, {"seed", seed}};
  for (std::size_t i : chosen) result.manifest.records.push_back(manifest.records[i]);
  return result;
}

}  // namespace blurlab
