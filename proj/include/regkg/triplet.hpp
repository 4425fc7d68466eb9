#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace regkg {

enum class ExtractorKind { structural, reference, timeframe, llm };

std::string_view to_string(ExtractorKind k);
std::optional<ExtractorKind> extractor_from_string(std::string_view s);

// Identity of a triplet: (subject, predicate, object). Ordered
// lexicographically by component, which is the order used for every
// "by identity key" sort and tie-break in the project.
struct TripletKey {
    std::string subject;
    std::string predicate;
    std::string object;

    auto operator<=>(const TripletKey&) const = default;
    bool operator==(const TripletKey&) const = default;
};

// "subject|predicate|object", the form used on the CLI and over HTTP.
std::string to_string(const TripletKey& key);
std::optional<TripletKey> parse_key(std::string_view text);

struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;
    std::map<std::string, std::string> qualifiers;
    double confidence = 1.0;
    ExtractorKind extractor = ExtractorKind::structural;

    TripletKey key() const { return {subject, predicate, object}; }
    bool operator==(const Triplet&) const = default;
};

}  // namespace regkg
