#include "regkg/common.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace regkg {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {
bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string to_upper_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (c == '\r') continue;
        if (c == ' ' || c == '\t' || c == '\f' || c == '\v') {
            pending_space = true;
            continue;
        }
        if (c == '\n') {
            pending_space = false;
            while (!out.empty() && out.back() == ' ') out.pop_back();
            out.push_back('\n');
            continue;
        }
        if (pending_space && !out.empty() && out.back() != '\n') out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return trim(out);
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        auto uc = static_cast<unsigned char>(c);
        if (uc < 0x80 && std::isalnum(uc)) {
            cur.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<Span> split_sentences(std::string_view text) {
    std::vector<Span> spans;
    auto emit = [&](std::size_t b, std::size_t e) {
        while (b < e && is_space(text[b])) ++b;
        while (e > b && is_space(text[e - 1])) --e;
        if (e > b) spans.push_back({b, e});
    };
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\n') {
            emit(start, i);
            start = i + 1;
        } else if (c == '.' || c == '?' || c == '!' || c == ';') {
            if (i + 1 == text.size() || is_space(text[i + 1])) {
                emit(start, i + 1);
                start = i + 1;
            }
        }
    }
    emit(start, text.size());
    return spans;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot publish " + path.string() + ": " + ec.message());
}

std::string wrap_versioned(std::string_view kind, std::string_view payload) {
    std::string out = "#regkg ";
    out += kind;
    out += " format=" + std::to_string(kFormatVersion);
    out += " checksum=" + hex64(fnv1a64(payload));
    out += " bytes=" + std::to_string(payload.size());
    out += '\n';
    out += payload;
    return out;
}

std::string unwrap_versioned(std::string_view kind, std::string_view content,
                             const std::string& origin) {
    auto nl = content.find('\n');
    if (nl == std::string_view::npos) throw CorruptStoreError(origin + ": missing header line");
    std::istringstream header{std::string(content.substr(0, nl))};
    std::string magic, file_kind, format, checksum, bytes;
    header >> magic >> file_kind >> format >> checksum >> bytes;
    if (magic != "#regkg" || format.rfind("format=", 0) != 0 ||
        checksum.rfind("checksum=", 0) != 0 || bytes.rfind("bytes=", 0) != 0) {
        throw CorruptStoreError(origin + ": malformed header");
    }
    if (file_kind != kind) {
        throw CorruptStoreError(origin + ": expected " + std::string(kind) + " file, found " +
                                file_kind);
    }
    int version = 0;
    try {
        version = std::stoi(format.substr(7));
    } catch (const std::exception&) {
        throw CorruptStoreError(origin + ": malformed format version");
    }
    if (version != kFormatVersion) {
        throw VersionError(origin + ": format version " + std::to_string(version) +
                           " is not supported by this build (expects " +
                           std::to_string(kFormatVersion) + "); upgrade required");
    }
    std::string_view payload = content.substr(nl + 1);
    if (bytes.substr(6) != std::to_string(payload.size())) {
        throw CorruptStoreError(origin + ": payload size mismatch (header " + bytes.substr(6) +
                                ", actual " + std::to_string(payload.size()) + ")");
    }
    auto actual = hex64(fnv1a64(payload));
    if (checksum.substr(9) != actual) {
        throw CorruptStoreError(origin + ": checksum mismatch (header " + checksum.substr(9) +
                                ", actual " + actual + ")");
    }
    return std::string(payload);
}

void write_versioned(const std::filesystem::path& path, std::string_view kind,
                     std::string_view payload) {
    atomic_write_file(path, wrap_versioned(kind, payload));
}

std::string read_versioned(const std::filesystem::path& path, std::string_view kind) {
    return unwrap_versioned(kind, read_file(path), path.string());
}

std::uint64_t XorShiftStar::below(std::uint64_t bound) {
    if (bound == 0) throw ConfigError("XorShiftStar::below: zero bound");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

}  // namespace regkg
