#include "blurlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "blurlab/blur.hpp"
#include "blurlab/catalog_io.hpp"
#include "blurlab/dataset.hpp"
#include "blurlab/deconv.hpp"
#include "blurlab/evaluation.hpp"
#include "blurlab/image.hpp"
#include "blurlab/kernel_geometry.hpp"
#include "blurlab/text_util.hpp"
#include "json.hpp"

namespace blurlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Bad input as opposed to a failure while running.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  bool json = false;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string trig = "exact";
};

fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* root = std::getenv("BLURLAB_OUTPUT_ROOT"); root != nullptr && *root) {
      return fs::path(root) / p;
    }
  }
  return p;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Fn>
auto as_usage(Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

// Numbers stay numbers in the log.
json scalar(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  return j.is_number() ? j : json(text);
}

json option_value(const CLI::Option* opt) {
  const bool flag = opt->get_expected_min() == 0;
  if (opt->count() == 0) {
    const std::string d = opt->get_default_str();
    if (flag) return false;
    return d.empty() ? json(nullptr) : scalar(d);
  }
  if (flag) return true;
  const auto& res = opt->results();
  if (res.size() == 1) return scalar(res.front());
  json arr = json::array();
  for (const auto& r : res) arr.push_back(scalar(r));
  return arr;
}

void log_config(std::ostream& err, const CLI::App& app, const CLI::App& sub) {
  json options = json::object();
  auto collect = [&](const CLI::App& a) {
    for (const CLI::Option* opt : a.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string& name = opt->get_lnames().front();
      if (name == "help") continue;
      options[name] = option_value(opt);
    }
  };
  collect(app);
  collect(sub);
  if (const char* root = std::getenv("BLURLAB_OUTPUT_ROOT")) options["BLURLAB_OUTPUT_ROOT"] = root;
  err << "blurlab " << sub.get_name() << " config " << json{{"options", options}}.dump() << '\n';
}

TrigMode trig_of(const Globals& g) { return parse_trig_mode(g.trig); }

void print_kernel_json(std::ostream& out, const PixelKernel& k) {
  json rows = json::array();
  for (int i = 0; i < k.height(); ++i) {
    json row = json::array();
    for (int j = 0; j < k.width(); ++j) row.push_back(k.grid().at(i, j));
    rows.push_back(std::move(row));
  }
  out << json{{"r", k.length_label()},
              {"phi", k.angle_label()},
              {"height", k.height()},
              {"width", k.width()},
              {"weights", rows}}
             .dump(2)
      << '\n';
}

void emit(std::ostream& out, const Globals& g, const json& summary,
          const std::vector<std::pair<std::string, std::string>>& human) {
  if (g.json) {
    out << summary.dump(2) << '\n';
    return;
  }
  std::size_t width = 0;
  for (const auto& [k, v] : human) width = std::max(width, k.size());
  for (const auto& [k, v] : human) {
    out << std::left << std::setw(static_cast<int>(width) + 2) << (k + ":") << v << '\n';
  }
}

std::string str(double v) { return format_double(v); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear motion-blur kernels, blurred datasets and blur-estimate evaluation",
               "blurlab"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json, "Print machine-readable JSON to stdout");
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--trig", g.trig, "Trig evaluation for grid sizing: exact or ieee")
      ->check(CLI::IsMember({"exact", "ieee"}))
      ->capture_default_str();

  // catalog
  auto* cat = app.add_subcommand("catalog", "Enumerate the unique kernel catalog");
  int cat_rmin = 2, cat_rmax = 100;
  bool cat_identity = false;
  std::string cat_out;
  cat->add_option("--r-min", cat_rmin)->check(CLI::Range(1, 1000))->capture_default_str();
  cat->add_option("--r-max", cat_rmax)->check(CLI::Range(1, 1000))->capture_default_str();
  cat->add_flag("--identity", cat_identity, "Include the (1, 0) no-blur kernel");
  cat->add_option("--out", cat_out, "Catalog text file");

  // kernel
  auto* ker = app.add_subcommand("kernel", "Render one normalized kernel");
  int ker_r = 1, ker_phi = 0;
  std::string ker_out;
  bool ker_padded = false;
  ker->add_option("--r", ker_r, "Length")->required()->check(CLI::Range(1, 1000));
  ker->add_option("--phi", ker_phi, "Angle in (-90, 90]")->required()->check(CLI::Range(-89, 90));
  ker->add_option("--out", ker_out, "Write the weight grid here instead of stdout");
  ker->add_flag("--padded", ker_padded, "Also print the odd-square padded variants");

  // blur
  auto* blr = app.add_subcommand("blur", "Blur one image with a catalog kernel");
  std::string blr_in, blr_out, blr_boundary = "reflect", blr_method = "auto";
  int blr_r = 1, blr_phi = 0;
  double blr_sigma2 = 0.0;
  blr->add_option("--in", blr_in)->required()->check(CLI::ExistingFile);
  blr->add_option("--out", blr_out)->required();
  blr->add_option("--r", blr_r)->required()->check(CLI::Range(1, 1000));
  blr->add_option("--phi", blr_phi)->required()->check(CLI::Range(-89, 90));
  blr->add_option("--sigma2", blr_sigma2, "Noise variance")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  blr->add_option("--boundary", blr_boundary)
      ->check(CLI::IsMember({"reflect", "replicate", "zero", "periodic"}))
      ->capture_default_str();
  blr->add_option("--method", blr_method)
      ->check(CLI::IsMember({"auto", "direct", "fft"}))
      ->capture_default_str();

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate a balanced blurred dataset");
  std::string gen_sources, gen_out, gen_catalog, gen_boundary = "reflect";
  int gen_rmin = 2, gen_rmax = 100;
  GeneratorConfig gen_cfg;
  bool gen_dry = false;
  gen->add_option("--sources", gen_sources, "Directory of sharp images")
      ->required()
      ->check(CLI::ExistingDirectory);
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--catalog", gen_catalog, "Use a saved catalog instead of building one")
      ->check(CLI::ExistingFile);
  gen->add_option("--r-min", gen_rmin)->check(CLI::Range(2, kMaxLabelLength))->capture_default_str();
  gen->add_option("--r-max", gen_rmax)->check(CLI::Range(2, kMaxLabelLength))->capture_default_str();
  gen->add_option("--min-per-length", gen_cfg.min_per_length)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen->add_option("--no-blur", gen_cfg.no_blur_count,
                  "No-blur (1, 0) samples; -1 means min-per-length")
      ->capture_default_str();
  gen->add_option("--sigma2", gen_cfg.sigma2)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen->add_option("--boundary", gen_boundary)
      ->check(CLI::IsMember({"reflect", "replicate", "zero", "periodic"}))
      ->capture_default_str();
  gen->add_flag("--allow-source-reuse", gen_cfg.allow_source_reuse,
                "Reshuffle the pool instead of failing when a length exhausts it");
  gen->add_flag("--dry-run", gen_dry, "Write the manifest only; no images are read or written");

  // subset
  auto* sub = app.add_subcommand("subset", "Sample k records per length or angle");
  std::string sub_manifest, sub_out, sub_axis;
  int sub_k = 0;
  sub->add_option("--manifest", sub_manifest)->required()->check(CLI::ExistingFile);
  sub->add_option("--axis", sub_axis)->required()->check(CLI::IsMember({"length", "angle"}));
  sub->add_option("--k", sub_k)->required()->check(CLI::NonNegativeNumber);
  sub->add_option("--out", sub_out, "Output manifest CSV")->required();

  // report-dist
  auto* rep = app.add_subcommand("report-dist", "Per-length and per-angle histograms");
  std::string rep_manifest, rep_out;
  rep->add_option("--manifest", rep_manifest)->required()->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Also write the JSON report here");

  // deblur
  auto* dbl = app.add_subcommand("deblur", "Non-blind deblur with a catalog kernel");
  std::string dbl_in, dbl_out, dbl_method = "wiener", dbl_boundary = "reflect";
  int dbl_r = 1, dbl_phi = 0;
  double dbl_nsr = 1e-4;
  int dbl_iters = 30;
  dbl->add_option("--in", dbl_in)->required()->check(CLI::ExistingFile);
  dbl->add_option("--out", dbl_out)->required();
  dbl->add_option("--r", dbl_r)->required()->check(CLI::Range(1, 1000));
  dbl->add_option("--phi", dbl_phi)->required()->check(CLI::Range(-89, 90));
  dbl->add_option("--method", dbl_method)->check(CLI::IsMember({"wiener", "rl"}))
      ->capture_default_str();
  dbl->add_option("--nsr", dbl_nsr)->check(CLI::NonNegativeNumber)->capture_default_str();
  dbl->add_option("--iterations", dbl_iters)->check(CLI::NonNegativeNumber)->capture_default_str();
  dbl->add_option("--boundary", dbl_boundary)
      ->check(CLI::IsMember({"reflect", "replicate", "zero", "periodic"}))
      ->capture_default_str();

  // eval-error-ratio
  auto* eer = app.add_subcommand("eval-error-ratio", "Deconvolution error ratios of predictions");
  std::string eer_manifest, eer_pred, eer_sources, eer_out, eer_csv, eer_method = "wiener";
  std::string eer_boundary;
  double eer_nsr = 0.0;
  int eer_iters = 30;
  double eer_hist_max = 3.0;
  eer->add_option("--manifest", eer_manifest)->required()->check(CLI::ExistingFile);
  eer->add_option("--pred", eer_pred)->required()->check(CLI::ExistingFile);
  eer->add_option("--sources", eer_sources, "Sharp image directory (default: from the sidecar)")
      ->check(CLI::ExistingDirectory);
  eer->add_option("--method", eer_method)->check(CLI::IsMember({"wiener", "rl"}))
      ->capture_default_str();
  auto* eer_nsr_opt = eer->add_option("--nsr", eer_nsr, "Fixed Wiener nsr (default: max(sigma2, 1e-4))")
                          ->check(CLI::NonNegativeNumber);
  eer->add_option("--iterations", eer_iters)->check(CLI::NonNegativeNumber)->capture_default_str();
  eer->add_option("--boundary", eer_boundary, "Default: the generator's boundary")
      ->check(CLI::IsMember({"reflect", "replicate", "zero", "periodic"}));
  eer->add_option("--hist-max", eer_hist_max, "Last cumulative histogram bin")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eer->add_option("--out", eer_out, "JSON report file");
  eer->add_option("--csv", eer_csv, "Per-image ratio CSV");

  // eval-r2
  auto* er2 = app.add_subcommand("eval-r2", "R^2 of length and angle predictions");
  std::string er2_manifest, er2_pred, er2_out;
  er2->add_option("--manifest", er2_manifest)->required()->check(CLI::ExistingFile);
  er2->add_option("--pred", er2_pred)->required()->check(CLI::ExistingFile);
  er2->add_option("--out", er2_out, "JSON report file");

  // canonicalize
  auto* can = app.add_subcommand("canonicalize", "Map predictions onto realizable catalog labels");
  double can_r = 0.0, can_phi = 0.0;
  std::string can_pred, can_out;
  int can_rmin = 2, can_rmax = 100;
  auto* can_r_opt = can->add_option("--r", can_r, "Predicted length");
  auto* can_phi_opt = can->add_option("--phi", can_phi, "Predicted angle");
  auto* can_pred_opt = can->add_option("--pred", can_pred, "Predictions CSV to canonicalize")
                           ->check(CLI::ExistingFile);
  can->add_option("--out", can_out, "Output predictions CSV (with --pred)");
  can->add_option("--r-min", can_rmin)->check(CLI::Range(2, 1000))->capture_default_str();
  can->add_option("--r-max", can_rmax)->check(CLI::Range(2, 1000))->capture_default_str();
  can_r_opt->needs(can_phi_opt)->excludes(can_pred_opt);
  can_phi_opt->needs(can_r_opt);

  for (CLI::App* s : app.get_subcommands({})) s->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  log_config(err, app, *chosen);
  const auto t0 = std::chrono::steady_clock::now();

  try {
    const TrigMode trig = trig_of(g);

    if (chosen == cat) {
      if (cat_rmin > cat_rmax) throw UsageError("--r-min exceeds --r-max");
      const KernelCatalog catalog = build_catalog(cat_rmin, cat_rmax, {trig, cat_identity});
      err << "catalog built in " << seconds_since(t0) << " s\n";
      if (!cat_out.empty()) {
        const fs::path p = resolve_output(cat_out);
        ensure_parent(p);
        save_catalog(p, catalog);
      }
      const json summary = catalog_summary(catalog);
      if (g.json) {
        out << summary.dump(2) << '\n';
      } else {
        out << "entries        " << catalog.size() << '\n'
            << "lines explored " << catalog.lines_explored() << '\n'
            << "trig           " << to_string(catalog.trig()) << '\n'
            << "hash           " << catalog_hash(catalog) << '\n'
            << "r  angles\n";
        for (int r : catalog.lengths()) {
          out << r << "  " << angles_for_length(catalog, r).size() << '\n';
        }
      }
      return kOk;
    }

    if (chosen == ker) {
      const PixelKernel k = as_usage([&] { return realize_kernel(ker_r, ker_phi, trig); });
      if (!ker_out.empty()) {
        const fs::path p = resolve_output(ker_out);
        ensure_parent(p);
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
        write_kernel_text(f, k.grid());
      }
      if (g.json) {
        print_kernel_json(out, k);
      } else {
        out << "# label (" << k.length_label() << ", " << k.angle_label() << ") " << k.height()
            << "x" << k.width() << '\n';
        if (ker_out.empty()) write_kernel_text(out, k.grid());
      }
      if (ker_padded) {
        for (const KernelGrid& p : pad_to_odd_square(k.grid())) {
          out << "# padded " << p.height << "x" << p.width << '\n';
          write_kernel_text(out, p);
        }
      }
      return kOk;
    }

    if (chosen == blr) {
      const Image in = as_usage([&] { return load_image(blr_in); });
      const PixelKernel k = as_usage([&] { return realize_kernel(blr_r, blr_phi, trig); });
      const ConvolutionMethod method = blr_method == "direct" ? ConvolutionMethod::kDirect
                                       : blr_method == "fft"  ? ConvolutionMethod::kFft
                                                              : ConvolutionMethod::kAuto;
      Image blurred = as_usage(
          [&] { return convolve(in, k.grid(), parse_boundary(blr_boundary), method); });
      if (blr_sigma2 > 0.0) blurred = add_gaussian_noise(blurred, {blr_sigma2, g.seed});
      const fs::path p = resolve_output(blr_out);
      ensure_parent(p);
      save_image(p, blurred);
      json summary{{"out", p.string()},
                   {"r", k.length_label()},
                   {"phi", k.angle_label()},
                   {"height", k.height()},
                   {"width", k.width()},
                   {"sigma2", blr_sigma2},
                   {"seed", g.seed}};
      std::vector<std::pair<std::string, std::string>> human{
          {"out", p.string()},
          {"kernel", "(" + std::to_string(k.length_label()) + ", " +
                         std::to_string(k.angle_label()) + ") " + std::to_string(k.height()) +
                         "x" + std::to_string(k.width())},
          {"sigma2", str(blr_sigma2)}};
      if (blr_sigma2 > 0.0) {
        summary["snr_db"] = variance_to_snr_db(blr_sigma2);
        human.emplace_back("snr_db", str(variance_to_snr_db(blr_sigma2)));
      }
      emit(out, g, summary, human);
      return kOk;
    }

    if (chosen == gen) {
      gen_cfg.seed = g.seed;
      gen_cfg.workers = g.workers;
      gen_cfg.boundary = parse_boundary(gen_boundary);
      KernelCatalog catalog = gen_catalog.empty()
                                  ? (gen_rmin > gen_rmax
                                         ? throw UsageError("--r-min exceeds --r-max")
                                         : build_catalog(gen_rmin, gen_rmax, {trig, false}))
                                  : as_usage([&] { return load_catalog(gen_catalog); });
      const fs::path out_dir = resolve_output(gen_out);
      Manifest manifest;
      if (gen_dry) {
        const auto ids = list_sources(gen_sources);
        if (ids.empty()) throw UsageError("no image files in '" + gen_sources + "'");
        manifest = plan_dataset(catalog, ids, gen_cfg);
        write_manifest(out_dir / "manifest.csv", manifest);
      } else {
        manifest = generate_dataset(catalog, gen_sources, out_dir, gen_cfg);
      }
      const DistributionReport dist = distribution_report(manifest);
      std::size_t min_count = manifest.records.size();
      for (const auto& [r, n] : dist.per_length) {
        if (r > 1) min_count = std::min(min_count, n);
      }
      err << "generated " << manifest.records.size() << " records in " << seconds_since(t0)
          << " s\n";
      const json summary{{"manifest", (out_dir / "manifest.csv").string()},
                         {"records", manifest.records.size()},
                         {"lengths", dist.per_length.size()},
                         {"min_blurred_length_count", min_count},
                         {"catalog_hash", manifest.catalog_hash},
                         {"dry_run", gen_dry}};
      emit(out, g, summary,
           {{"manifest", (out_dir / "manifest.csv").string()},
            {"records", std::to_string(manifest.records.size())},
            {"lengths", std::to_string(dist.per_length.size())},
            {"min per blurred length", std::to_string(min_count)},
            {"catalog hash", manifest.catalog_hash}});
      return kOk;
    }

    if (chosen == sub) {
      const Manifest manifest = as_usage([&] { return read_manifest(sub_manifest); });
      const SubsetResult result = subset(manifest, parse_subset_axis(sub_axis), sub_k, g.seed);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      const fs::path p = resolve_output(sub_out);
      write_manifest(p, result.manifest);
      emit(out, g,
           {{"out", p.string()},
            {"records", result.manifest.records.size()},
            {"warnings", result.warnings}},
           {{"out", p.string()},
            {"records", std::to_string(result.manifest.records.size())},
            {"warnings", std::to_string(result.warnings.size())}});
      return kOk;
    }

    if (chosen == rep) {
      const Manifest manifest = as_usage([&] { return read_manifest(rep_manifest); });
      const DistributionReport report = as_usage([&] { return distribution_report(manifest); });
      const json j = to_json(report);
      if (!rep_out.empty()) {
        const fs::path p = resolve_output(rep_out);
        ensure_parent(p);
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
        f << j.dump(2) << '\n';
      }
      if (g.json) {
        out << j.dump(2) << '\n';
      } else {
        out << "records " << j["records"] << "\nlength  count  unique_sources\n";
        for (const auto& [r, n] : report.per_length) {
          out << std::setw(6) << r << std::setw(7) << n << std::setw(16)
              << report.unique_sources_per_length.at(r) << '\n';
        }
        out << "angle   count  unique_sources\n";
        for (const auto& [a, n] : report.per_angle) {
          out << std::setw(6) << a << std::setw(7) << n << std::setw(16)
              << report.unique_sources_per_angle.at(a) << '\n';
        }
        out << "angle peaks";
        for (int a : dominant_angle_peaks(report)) out << ' ' << a;
        out << '\n';
      }
      return kOk;
    }

    if (chosen == dbl) {
      const Image in = as_usage([&] { return load_image(dbl_in); });
      const PixelKernel k = as_usage([&] { return realize_kernel(dbl_r, dbl_phi, trig); });
      DeblurOptions opt;
      opt.method = parse_deconvolution_method(dbl_method);
      opt.wiener.nsr = dbl_nsr;
      opt.wiener.boundary = parse_boundary(dbl_boundary);
      opt.richardson_lucy.iterations = dbl_iters;
      opt.richardson_lucy.boundary = opt.wiener.boundary;
      const DeblurResult result = as_usage([&] { return deblur(in, k.grid(), opt); });
      const fs::path p = resolve_output(dbl_out);
      ensure_parent(p);
      save_image(p, result.image);
      emit(out, g,
           {{"out", p.string()},
            {"method", to_string(opt.method)},
            {"deconvolutions", result.deconvolutions}},
           {{"out", p.string()},
            {"method", to_string(opt.method)},
            {"deconvolutions", std::to_string(result.deconvolutions)}});
      return kOk;
    }

    if (chosen == eer) {
      const Manifest manifest = as_usage([&] { return read_manifest(eer_manifest); });
      const auto preds = as_usage([&] { return read_predictions(eer_pred); });
      const json& cfg = manifest.generator_config;
      ErrorRatioJob job;
      job.manifest_dir = fs::path(eer_manifest).parent_path();
      if (!eer_sources.empty()) {
        job.source_dir = eer_sources;
      } else if (cfg.contains("source_dir")) {
        job.source_dir = cfg["source_dir"].get<std::string>();
      } else {
        throw UsageError("--sources is required when the manifest has no sidecar source_dir");
      }
      job.boundary = parse_boundary(!eer_boundary.empty() ? eer_boundary
                                    : cfg.contains("boundary")
                                        ? cfg["boundary"].get<std::string>()
                                        : std::string("reflect"));
      job.options.method = parse_deconvolution_method(eer_method);
      job.options.richardson_lucy.iterations = eer_iters;
      if (eer_nsr_opt->count() > 0) {
        job.force_nsr = true;
        job.options.wiener.nsr = eer_nsr;
      }
      job.workers = g.workers;
      const int r_min = cfg.value("r_min", 2);
      const int r_max = cfg.value("r_max", 100);
      const TrigMode cat_trig =
          cfg.contains("trig") ? parse_trig_mode(cfg["trig"].get<std::string>()) : trig;
      const KernelCatalog catalog = build_catalog(r_min, r_max, {cat_trig, true});
      EvalReport report = evaluate_error_ratios(manifest, preds, catalog, job);
      std::vector<double> values;
      for (const auto& r : report.ratios) values.push_back(r.ratio);
      report.histogram = cumulative_error_histogram(values, 1.0, eer_hist_max);
      const json j = to_json(report);
      if (!eer_out.empty()) {
        const fs::path p = resolve_output(eer_out);
        ensure_parent(p);
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
        f << j.dump(2) << '\n';
      }
      if (!eer_csv.empty()) {
        const fs::path p = resolve_output(eer_csv);
        ensure_parent(p);
        write_ratio_csv(p, report.ratios);
      }
      if (g.json) {
        out << j.dump(2) << '\n';
      } else {
        out << "evaluated " << report.ratios.size() << " images (" << report.missing
            << " without predictions)\nbin    cumulative\n";
        for (std::size_t i = 0; i < report.histogram->bins.size(); ++i) {
          out << std::left << std::setw(7) << str(report.histogram->bins[i])
              << report.histogram->counts[i] << '\n';
        }
      }
      return kOk;
    }

    if (chosen == er2) {
      const Manifest manifest = as_usage([&] { return read_manifest(er2_manifest); });
      const auto preds = as_usage([&] { return read_predictions(er2_pred); });
      EvalReport report;
      report.r2 = evaluate_r2(manifest, preds);
      report.missing = report.r2->missing;
      const json j = to_json(report);
      if (!er2_out.empty()) {
        const fs::path p = resolve_output(er2_out);
        ensure_parent(p);
        std::ofstream f(p);
        if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
        f << j.dump(2) << '\n';
      }
      emit(out, g, j,
           {{"r2_length", str(report.r2->r2_length)},
            {"r2_angle", str(report.r2->r2_angle)},
            {"matched", std::to_string(report.r2->matched)},
            {"missing", std::to_string(report.r2->missing)}});
      return kOk;
    }

    if (chosen == can) {
      if (can_rmin > can_rmax) throw UsageError("--r-min exceeds --r-max");
      if (can_r_opt->count() == 0 && can_pred_opt->count() == 0) {
        throw UsageError("give --r and --phi, or --pred");
      }
      const KernelCatalog catalog = build_catalog(can_rmin, can_rmax, {trig, true});
      if (can_pred_opt->count() > 0) {
        if (can_out.empty()) throw UsageError("--pred needs --out");
        auto preds = as_usage([&] { return read_predictions(can_pred); });
        std::size_t clamped = 0;
        for (auto& p : preds) {
          const CanonicalLabel c = canonicalize_prediction(p.r_pred, p.phi_pred, catalog);
          clamped += c.clamped ? 1 : 0;
          p.r_pred = c.label.length;
          p.phi_pred = c.label.angle;
        }
        if (clamped > 0) err << "warning: " << clamped << " lengths clamped to the catalog range\n";
        const fs::path p = resolve_output(can_out);
        ensure_parent(p);
        write_predictions(p, preds);
        emit(out, g, {{"out", p.string()}, {"rows", preds.size()}, {"clamped", clamped}},
             {{"out", p.string()},
              {"rows", std::to_string(preds.size())},
              {"clamped", std::to_string(clamped)}});
        return kOk;
      }
      const CanonicalLabel c = as_usage([&] { return canonicalize_prediction(can_r, can_phi, catalog); });
      if (c.clamped) err << "warning: length " << str(can_r) << " clamped to the catalog range\n";
      emit(out, g, {{"r", c.label.length}, {"phi", c.label.angle}, {"clamped", c.clamped}},
           {{"r", std::to_string(c.label.length)},
            {"phi", std::to_string(c.label.angle)},
            {"clamped", c.clamped ? "yes" : "no"}});
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << chosen->help();
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace blurlab::cli
