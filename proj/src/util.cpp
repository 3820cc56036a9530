#include "fch/util.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fch/errors.hpp"

namespace fch::util {

std::uint64_t uniform_below(std::mt19937& rng, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
    if (n == 1) return 0;
    // Rejection sampling over 32-bit words (two words when n is large).
    if (n <= (1ull << 32)) {
        const std::uint64_t limit = ((1ull << 32) / n) * n;
        for (;;) {
            std::uint64_t x = rng();
            if (x < limit) return x % n;
        }
    }
    const std::uint64_t limit = (UINT64_MAX / n) * n;
    for (;;) {
        std::uint64_t x = (static_cast<std::uint64_t>(rng()) << 32) | rng();
        if (x < limit) return x % n;
    }
}

double uniform_double(std::mt19937& rng) {
    const std::uint64_t hi = rng() >> 5;   // 27 bits
    const std::uint64_t lo = rng() >> 6;   // 26 bits
    return ((hi << 26) | lo) * 0x1.0p-53;  // 53-bit mantissa in [0,1)
}

double gaussian(std::mt19937& rng) {
    double u1 = uniform_double(rng);
    while (u1 <= 0.0) u1 = uniform_double(rng);
    const double u2 = uniform_double(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool starts_with(const std::string& s, const std::string& prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool is_printable_ascii(const std::string& s) {
    for (unsigned char c : s)
        if (c < 0x20 || c > 0x7E) return false;
    return true;
}

std::string bytes_to_utf8(const std::string& bytes) {
    std::string out;
    out.reserve(bytes.size());
    for (const char raw : bytes) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (c < 0x80) {
            out += static_cast<char>(c);
        } else {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
        }
    }
    return out;
}

std::string utf8_to_bytes(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        // Only 0xC2/0xC3 introduce latin-1 code points; anything else passes through.
        if ((c == 0xC2 || c == 0xC3) && i + 1 < text.size() &&
            (static_cast<unsigned char>(text[i + 1]) & 0xC0) == 0x80) {
            out += static_cast<char>(((c & 0x03u) << 6) |
                                     (static_cast<unsigned char>(text[i + 1]) & 0x3Fu));
            ++i;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write file: " + path);
    out << content;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::string interpolate_env(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size();) {
        if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
            const size_t close = text.find('}', i + 2);
            if (close == std::string::npos)
                throw config_error("unterminated ${...} in: " + text);
            const std::string var = text.substr(i + 2, close - i - 2);
            const char* val = std::getenv(var.c_str());
            if (!val) throw config_error("environment variable not set: " + var);
            out += val;
            i = close + 1;
        } else {
            out += text[i++];
        }
    }
    return out;
}

std::string replace_all(std::string tmpl, const std::string& slot, const std::string& value) {
    if (slot.empty()) return tmpl;
    size_t pos = 0;
    while ((pos = tmpl.find(slot, pos)) != std::string::npos) {
        tmpl.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return tmpl;
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

}  // namespace fch::util
