#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace blurlab {

// 64-bit FNV-1a. Used for catalog and source-listing digests.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex_digest(std::uint64_t value);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Strict parsers: the whole field must be consumed.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

std::vector<std::string> split(std::string_view line, char delimiter);
std::string_view trim(std::string_view text);

}  // namespace blurlab
