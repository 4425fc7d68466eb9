#pragma once
// Shared utilities: error types, hashing, text helpers, and the versioned
// file container used by every on-disk artifact in a store directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace regkg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or a violated operation precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed corpus input.
class FormatError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// Checksum mismatch or structurally damaged store file.
class CorruptStoreError : public Error {
public:
    using Error::Error;
};

// File written by an incompatible format version.
class VersionError : public Error {
public:
    using Error::Error;
};

// Network failure talking to an external service.
class TransportError : public Error {
public:
    using Error::Error;
};

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::string hex64(std::uint64_t v);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Collapse runs of spaces/tabs into one space, drop spaces adjacent to
// newlines, keep newlines, and trim the ends.
std::string normalize_whitespace(std::string_view s);

// Lowercased alphanumeric runs. Shared by the hashing embedder and the
// token-F1 judge so both see the same token stream.
std::vector<std::string> tokenize(std::string_view s);

// [begin, end) byte spans of sentences in `text`. Every span is trimmed and
// non-empty, so text.substr(begin, end - begin) is a verbatim substring.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
};
std::vector<Span> split_sentences(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes through a temporary sibling and renames it into place, so readers
// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Versioned container: a single header line
//   #regkg <kind> format=<n> checksum=<fnv1a64 hex> bytes=<payload size>
// followed by the payload.
inline constexpr int kFormatVersion = 1;

std::string wrap_versioned(std::string_view kind, std::string_view payload);
std::string unwrap_versioned(std::string_view kind, std::string_view file_content,
                             const std::string& origin);

void write_versioned(const std::filesystem::path& path, std::string_view kind,
                     std::string_view payload);
std::string read_versioned(const std::filesystem::path& path, std::string_view kind);

// 64-bit xorshift* generator. Seed 0 is remapped to a fixed non-zero state.
class XorShiftStar {
public:
    static constexpr std::uint64_t kMultiplier = 0x2545F4914F6CDD1DULL;
    static constexpr std::uint64_t kZeroSeedState = 0x9E3779B97F4A7C15ULL;

    explicit XorShiftStar(std::uint64_t seed) : state_(seed == 0 ? kZeroSeedState : seed) {}

    std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * kMultiplier;
    }

    // Unbiased draw in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t state_;
};

}  // namespace regkg
