#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fch::util {

// Uniform draw in [0, n) by rejection sampling raw mt19937 words.
// std::uniform_int_distribution is implementation-defined; this is not.
std::uint64_t uniform_below(std::mt19937& rng, std::uint64_t n);

// Uniform double in [0, 1) with 53 bits, from two mt19937 words.
double uniform_double(std::mt19937& rng);

// Standard normal via Box-Muller on uniform_double (platform-stable).
double gaussian(std::mt19937& rng);

// FNV-1a 64-bit hex digest; stable across platforms (std::hash is not).
std::string fnv1a_hex(const std::string& data);

bool starts_with(const std::string& s, const std::string& prefix);

// Every byte printable ASCII (0x20..0x7E)?
bool is_printable_ascii(const std::string& s);

// JSON transport for arbitrary byte strings (raw model output can be any
// bytes, but JSON strings must be valid UTF-8): map each byte to its latin-1
// code point U+0000..U+00FF on the way out and back on the way in. The pair
// round-trips every input exactly.
std::string bytes_to_utf8(const std::string& bytes);
std::string utf8_to_bytes(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::vector<std::string> read_lines(const std::string& path);

// Expand ${VAR} occurrences from the process environment; unknown VAR -> error.
std::string interpolate_env(const std::string& text);

// Replace every occurrence of `slot` in `tmpl` with `value`.
std::string replace_all(std::string tmpl, const std::string& slot, const std::string& value);

// Current UTC time as ISO-8601 ("2026-01-31T12:00:00Z").
std::string utc_timestamp();

}  // namespace fch::util
