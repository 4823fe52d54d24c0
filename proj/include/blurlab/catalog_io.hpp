#pragma once

// Plain-text catalog format, one kernel per line:
//
//   # blurlab-catalog v1
//   # r_min=2 r_max=100 identity=0 trig=exact
//   r,phi,h,w,rle
//
// `rle` is the row-major mask as space-separated run lengths that alternate
// between off and on cells, always starting with an off run (possibly 0).
// Example: the 2x2 main diagonal [1 0 / 0 1] is "0 1 2 1". Lines are ordered
// by (r, phi) ascending. Theta sets are not stored.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "blurlab/kernel_geometry.hpp"
#include "json.hpp"

namespace blurlab {

std::string to_string(TrigMode trig);
TrigMode parse_trig_mode(std::string_view text);

std::string encode_rle(const Mask& mask);
Mask decode_rle(int height, int width, std::string_view runs);

// Data lines only (no header); the catalog hash is computed over this text.
std::string catalog_body(const KernelCatalog& catalog);
std::string catalog_hash(const KernelCatalog& catalog);

void write_catalog(std::ostream& out, const KernelCatalog& catalog);
KernelCatalog read_catalog(std::istream& in);
void save_catalog(const std::filesystem::path& path, const KernelCatalog& catalog);
KernelCatalog load_catalog(const std::filesystem::path& path);

// Counts per length, totals, and the catalog hash.
nlohmann::json catalog_summary(const KernelCatalog& catalog);

// One row per line, weights separated by single spaces.
void write_kernel_text(std::ostream& out, const KernelGrid& kernel);
KernelGrid read_kernel_text(std::istream& in);

}  // namespace blurlab
