#include "blurlab/catalog_io.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "blurlab/text_util.hpp"

namespace blurlab {

namespace {

constexpr std::string_view kMagic = "# blurlab-catalog v1";

std::map<std::string, std::string> parse_header_fields(std::string_view line) {
  std::map<std::string, std::string> fields;
  line.remove_prefix(1);  // '#'
  std::istringstream in{std::string(line)};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

const std::string& required(const std::map<std::string, std::string>& fields,
                            const std::string& key) {
  auto it = fields.find(key);
  if (it == fields.end()) {
    throw std::runtime_error("catalog header is missing '" + key + "'");
  }
  return it->second;
}

}  // namespace

std::string to_string(TrigMode trig) {
  return trig == TrigMode::kExactDegrees ? "exact" : "ieee";
}

TrigMode parse_trig_mode(std::string_view text) {
  if (text == "exact") return TrigMode::kExactDegrees;
  if (text == "ieee") return TrigMode::kFloatingPoint;
  throw std::invalid_argument("unknown trig mode '" + std::string(text) +
                              "' (expected exact or ieee)");
}

std::string encode_rle(const Mask& mask) {
  std::string out;
  bool current = false;
  long run = 0;
  for (auto cell : mask.cells()) {
    const bool on = cell != 0;
    if (on == current) {
      ++run;
      continue;
    }
    out += std::to_string(run);
    out += ' ';
    current = on;
    run = 1;
  }
  out += std::to_string(run);
  return out;
}

Mask decode_rle(int height, int width, std::string_view runs) {
  Mask mask(height, width);
  const long total = static_cast<long>(height) * width;
  long pos = 0;
  bool on = false;
  for (const auto& field : split(trim(runs), ' ')) {
    if (field.empty()) continue;
    const long long run = parse_integer(field);
    if (run < 0 || pos + run > total) {
      throw std::runtime_error("run-length mask overflows its grid");
    }
    for (long i = 0; i < run; ++i, ++pos) {
      if (on) mask.set(static_cast<int>(pos / width), static_cast<int>(pos % width));
    }
    on = !on;
  }
  if (pos != total) throw std::runtime_error("run-length mask does not fill its grid");
  return mask;
}

std::string catalog_body(const KernelCatalog& catalog) {
  std::string body;
  for (const auto& [label, kernel] : catalog.entries()) {
    body += std::to_string(label.length) + ',' + std::to_string(label.angle) + ',' +
            std::to_string(kernel.height()) + ',' + std::to_string(kernel.width()) +
            ',' + encode_rle(kernel.support()) + '\n';
  }
  return body;
}

std::string catalog_hash(const KernelCatalog& catalog) {
  return hex_digest(fnv1a64(catalog_body(catalog)));
}

void write_catalog(std::ostream& out, const KernelCatalog& catalog) {
  out << kMagic << '\n'
      << "# r_min=" << catalog.r_min() << " r_max=" << catalog.r_max()
      << " identity=" << (catalog.includes_identity() ? 1 : 0)
      << " trig=" << to_string(catalog.trig()) << '\n'
      << catalog_body(catalog);
}

KernelCatalog read_catalog(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMagic) {
    throw std::runtime_error("not a blurlab catalog file");
  }
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw std::runtime_error("catalog header line is missing");
  }
  const auto fields = parse_header_fields(line);
  KernelCatalog catalog = make_catalog(
      static_cast<int>(parse_integer(required(fields, "r_min"))),
      static_cast<int>(parse_integer(required(fields, "r_max"))),
      parse_integer(required(fields, "identity")) != 0,
      parse_trig_mode(required(fields, "trig")));

  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto parts = split(line, ',');
    if (parts.size() != 5) {
      throw std::runtime_error("catalog line " + std::to_string(line_no) +
                               ": expected 5 fields");
    }
    const KernelLabel label{static_cast<int>(parse_integer(parts[0])),
                            static_cast<int>(parse_integer(parts[1]))};
    const Mask mask = decode_rle(static_cast<int>(parse_integer(parts[2])),
                                 static_cast<int>(parse_integer(parts[3])), parts[4]);
    catalog.insert(PixelKernel(mask, label, {}));
  }
  return catalog;
}

void save_catalog(const std::filesystem::path& path, const KernelCatalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_catalog(out, catalog);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

KernelCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_catalog(in);
}

nlohmann::json catalog_summary(const KernelCatalog& catalog) {
  nlohmann::json per_length = nlohmann::json::object();
  std::size_t blurred = 0;
  for (int length : catalog.lengths()) {
    const auto n = angles_for_length(catalog, length).size();
    per_length[std::to_string(length)] = n;
    if (length > 1) blurred += n;
  }
  return {
      {"format", "blurlab-catalog"},
      {"r_min", catalog.r_min()},
      {"r_max", catalog.r_max()},
      {"includes_identity", catalog.includes_identity()},
      {"trig", to_string(catalog.trig())},
      {"total_entries", catalog.size()},
      {"blur_entries", blurred},
      {"lines_explored", catalog.lines_explored()},
      {"entries_per_length", per_length},
      {"catalog_hash", catalog_hash(catalog)},
  };
}

void write_kernel_text(std::ostream& out, const KernelGrid& kernel) {
  for (int r = 0; r < kernel.height; ++r) {
    for (int c = 0; c < kernel.width; ++c) {
      if (c > 0) out << ' ';
      out << format_double(kernel.at(r, c));
    }
    out << '\n';
  }
}

KernelGrid read_kernel_text(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& field : split(trim(line), ' ')) {
      if (!field.empty()) row.push_back(parse_double(field));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("kernel rows have unequal lengths");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("kernel file is empty");
  KernelGrid kernel(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < kernel.height; ++r) {
    for (int c = 0; c < kernel.width; ++c) kernel.at(r, c) = rows[r][c];
  }
  return kernel;
}

}  // namespace blurlab
