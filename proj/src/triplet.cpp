#include "regkg/triplet.hpp"

#include "regkg/common.hpp"

namespace regkg {

std::string_view to_string(ExtractorKind k) {
    switch (k) {
        case ExtractorKind::structural: return "structural";
        case ExtractorKind::reference: return "reference";
        case ExtractorKind::timeframe: return "timeframe";
        case ExtractorKind::llm: return "llm";
    }
    return "unknown";
}

std::optional<ExtractorKind> extractor_from_string(std::string_view s) {
    if (s == "structural") return ExtractorKind::structural;
    if (s == "reference") return ExtractorKind::reference;
    if (s == "timeframe") return ExtractorKind::timeframe;
    if (s == "llm") return ExtractorKind::llm;
    return std::nullopt;
}

std::string to_string(const TripletKey& key) {
    return key.subject + "|" + key.predicate + "|" + key.object;
}

std::optional<TripletKey> parse_key(std::string_view text) {
    auto parts = split(text, '|');
    if (parts.size() != 3) return std::nullopt;
    for (const auto& p : parts)
        if (p.empty()) return std::nullopt;
    return TripletKey{parts[0], parts[1], parts[2]};
}

}  // namespace regkg
