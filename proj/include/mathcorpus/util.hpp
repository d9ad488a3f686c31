#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mathcorpus {

// Bad configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// ----------------- hashing -----------------

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = kFnvOffset) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::string_view data);

// ----------------- base64 -----------------

std::string base64_encode(std::string_view data);
// Returns nullopt on malformed input.
std::optional<std::string> base64_decode(std::string_view data);

// ----------------- utf-8 -----------------

bool utf8_valid(std::string_view s);
// Lenient decode: invalid sequences become U+FFFD, one per bad byte.
std::vector<char32_t> utf8_decode(std::string_view s);
void utf8_append(std::string& out, char32_t cp);
std::string utf8_encode(const std::vector<char32_t>& cps);
std::size_t utf8_codepoint_count(std::string_view s);

// ----------------- ascii / strings -----------------

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? char(c - 'A' + 'a') : c; }

std::string to_lower_ascii(std::string_view s);
std::string_view trim(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0);
bool starts_with(std::string_view s, std::string_view prefix);

struct Token {
    std::string_view text;
    std::size_t begin = 0;  // byte offset into the source string
};

// Whitespace-split tokens with byte offsets, case preserved.
std::vector<Token> split_whitespace(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// ----------------- html entities / urls -----------------

// Decodes &amp; &lt; &gt; &quot; &apos; &nbsp; and numeric references.
// Unknown entities are left as-is.
std::string decode_html_entities(std::string_view s);

// Decodes %XX escapes only ('+' is kept, LaTeX uses it).
std::string percent_decode(std::string_view s);

// ----------------- files -----------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
// Non-empty, non-comment ('#') lines, trimmed.
std::vector<std::string> read_line_list(const std::string& path);

// Directory holding the shipped data files (symbol list, suffix rules, ...).
// MATHCORPUS_DATA overrides the compiled-in default.
std::string default_data_dir();

// ----------------- parallel map -----------------

// Applies fn to [0, n) on `workers` threads; results land in input order,
// so output is independent of the worker count.
void parallel_for_ordered(std::size_t n, unsigned workers,
                          const std::function<void(std::size_t)>& fn);

}  // namespace mathcorpus
