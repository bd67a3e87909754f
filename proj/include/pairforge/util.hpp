#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pairforge {

// Error with a stable machine-readable code ("non_alternating_roles", ...).
// Codes are what tests and callers dispatch on; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string trim(std::string_view s);
std::string trim_left(std::string_view s);
std::string trim_right(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_lines(std::string_view s);
std::string to_lower(std::string_view s);

// Whitespace-insensitive comparison key: trimmed, internal whitespace runs
// collapsed to a single space. Stored text is never mutated; this is only
// for equality/dedup decisions.
std::string normalize_for_compare(std::string_view s);

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

// SHA-256, lowercase hex. Self-contained so dataset ids do not drag in a
// crypto library.
std::string sha256_hex(std::string_view data);

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

// SplitMix64. Used wherever results must be reproducible across platforms
// and standard library implementations (sampling, fuzz corpora, jitter in
// tests). std::shuffle/uniform_int_distribution are not portable.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) return 0;
        std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double unit() {  // [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_file(const std::string& path);
std::optional<std::string> read_file_if_exists(const std::string& path);

// Write via temp file in the same directory + rename, so readers never see
// a half-written file.
void atomic_write_file(const std::string& path, std::string_view content);

void append_line(const std::string& path, std::string_view line);

}  // namespace pairforge
