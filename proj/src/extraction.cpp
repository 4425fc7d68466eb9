#include "regkg/extraction.hpp"

#include <algorithm>
#include <charconv>
#include <regex>
#include <set>

#include "json_io.hpp"

namespace regkg {

using nlohmann::json;

namespace {

constexpr const char* kExtractorVersion = "1";

Triplet make_triplet(std::string s, std::string p, std::string o, ExtractorKind kind) {
    Triplet t;
    t.subject = std::move(s);
    t.predicate = std::move(p);
    t.object = std::move(o);
    t.confidence = 1.0;
    t.extractor = kind;
    return t;
}

const std::regex& timeframe_to_re() {
    static const std::regex re(
        R"(\b(\d+)\s+(business\s+days?|days?|months?|years?)\s+to\s+([a-z][^.;:,()\n]*))",
        std::regex::icase);
    return re;
}

const std::regex& timeframe_within_re() {
    static const std::regex re(R"(\bwithin\s+(\d+)\s+(business\s+days?|days?|months?|years?)\b)",
                               std::regex::icase);
    return re;
}

std::string canonical_unit(const std::string& raw) {
    std::string u = to_lower_ascii(normalize_whitespace(raw));
    if (u.rfind("business", 0) == 0) return "business days";
    if (u.rfind("day", 0) == 0) return "days";
    if (u.rfind("month", 0) == 0) return "months";
    return "years";
}

// End offset (relative to `action`) after at most `max_words` words.
std::size_t clip_words(std::string_view action, std::size_t max_words) {
    std::size_t words = 0;
    std::size_t i = 0;
    std::size_t end = 0;
    while (i < action.size()) {
        while (i < action.size() && action[i] == ' ') ++i;
        if (i >= action.size()) break;
        while (i < action.size() && action[i] != ' ') ++i;
        end = i;
        if (++words == max_words) break;
    }
    return end;
}

std::vector<std::string> chunk_text(const std::string& text, std::size_t budget) {
    if (text.size() <= budget) return {text};
    std::vector<std::string> chunks;
    std::string cur;
    for (const auto& span : split_sentences(text)) {
        std::string sentence = text.substr(span.begin, span.end - span.begin);
        if (!cur.empty() && cur.size() + 1 + sentence.size() > budget) {
            chunks.push_back(std::move(cur));
            cur.clear();
        }
        if (!cur.empty()) cur += ' ';
        cur += sentence;
    }
    if (!cur.empty()) chunks.push_back(std::move(cur));
    return chunks;
}

}  // namespace

HierarchyIndex index_sections(std::span<const Section> sections) {
    HierarchyIndex idx;
    for (const auto& s : sections) idx.emplace(s.id, &s);
    return idx;
}

std::vector<Triplet> extract_structural(const Section& section, const HierarchyIndex& hierarchy) {
    if (!section.parent_id) return {};
    auto it = hierarchy.find(*section.parent_id);
    if (it == hierarchy.end())
        throw ConfigError("section " + section.id + ": parent '" + *section.parent_id +
                          "' is not in the hierarchy");
    const Section& parent = *it->second;
    const bool in_subpart = section.ref && parent.ref &&
                            granularity(*section.ref) == Granularity::section &&
                            granularity(*parent.ref) == Granularity::subpart;
    return {make_triplet(section_entity(section), in_subpart ? "inSubpart" : "partOf",
                         section_entity(parent), ExtractorKind::structural)};
}

std::vector<Triplet> extract_references(const Section& section,
                                        std::span<const CrossReference> xrefs) {
    std::vector<Triplet> out;
    std::set<std::string> seen;
    const std::string subject = section_entity(section);
    for (const auto& x : xrefs) {
        if (x.self) continue;
        std::string target = entity_label(x.ref);
        if (target == subject || !seen.insert(target).second) continue;
        out.push_back(make_triplet(subject, "references", std::move(target),
                                   ExtractorKind::reference));
    }
    return out;
}

std::vector<Triplet> extract_timeframes(const Section& section) {
    struct Match {
        std::size_t begin, end;
        std::string count, unit;
    };
    const std::string& text = section.text;
    std::vector<Match> matches;

    for (auto it = std::sregex_iterator(text.begin(), text.end(), timeframe_to_re());
         it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        std::string_view action(text.data() + m.position(3), static_cast<std::size_t>(m.length(3)));
        std::size_t action_end = clip_words(action, 12);
        if (action_end == 0) continue;
        auto begin = static_cast<std::size_t>(m.position(0));
        auto end = static_cast<std::size_t>(m.position(3)) + action_end;
        matches.push_back({begin, end, m[1].str(), canonical_unit(m[2].str())});
    }
    const std::size_t to_matches = matches.size();
    for (auto it = std::sregex_iterator(text.begin(), text.end(), timeframe_within_re());
         it != std::sregex_iterator(); ++it) {
        auto begin = static_cast<std::size_t>(it->position(0));
        auto end = begin + static_cast<std::size_t>(it->length(0));
        bool overlaps = false;
        for (std::size_t i = 0; i < to_matches; ++i)
            if (begin < matches[i].end && matches[i].begin < end) overlaps = true;
        if (!overlaps) matches.push_back({begin, end, (*it)[1].str(), canonical_unit((*it)[2].str())});
    }
    std::sort(matches.begin(), matches.end(),
              [](const Match& a, const Match& b) { return a.begin < b.begin; });

    std::vector<Triplet> out;
    const std::string subject = section_entity(section);
    for (const auto& m : matches) {
        Triplet t = make_triplet(subject, "hasTimeframe", text.substr(m.begin, m.end - m.begin),
                                 ExtractorKind::timeframe);
        t.qualifiers["count"] = m.count;
        t.qualifiers["unit"] = m.unit;
        out.push_back(std::move(t));
    }
    return out;
}

std::string llm_extraction_prompt(const Section& section, std::string_view chunk) {
    std::string p;
    p += "Extract the subject-predicate-object facts stated in the regulatory text below.\n";
    p += "Return one triplet per line in exactly this form and nothing else:\n";
    p += "subject|predicate|object|confidence\n";
    p += "where confidence is a number between 0 and 1.\n\n";
    p += "SECTION: " + section.id + "\n";
    if (!section.heading.empty()) p += "HEADING: " + section.heading + "\n";
    p += "TEXT:\n";
    p += chunk;
    p += "\n";
    return p;
}

std::vector<Triplet> parse_llm_triplets(std::string_view response, int* dropped) {
    std::vector<Triplet> out;
    int bad = 0;
    for (const auto& raw : split(response, '\n')) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        auto fields = split(line, '|');
        if (fields.size() != 4) {
            ++bad;
            continue;
        }
        for (auto& f : fields) f = trim(f);
        if (fields[0].empty() || fields[1].empty() || fields[2].empty()) {
            ++bad;
            continue;
        }
        double conf = 0.5;
        if (!fields[3].empty()) {
            try {
                std::size_t used = 0;
                double v = std::stod(fields[3], &used);
                if (used == fields[3].size() && std::isfinite(v)) conf = std::clamp(v, 0.0, 1.0);
            } catch (const std::exception&) {
            }
        }
        Triplet t = make_triplet(fields[0], fields[1], fields[2], ExtractorKind::llm);
        t.confidence = conf;
        out.push_back(std::move(t));
    }
    if (dropped) *dropped += bad;
    return out;
}

std::vector<Triplet> extract_llm(const Section& section, CompletionClient& client,
                                 std::map<std::string, int>* warnings, const LlmOptions& options) {
    if (trim(section.text).empty()) return {};
    std::vector<Triplet> out;
    int dropped = 0;
    for (const auto& chunk : chunk_text(section.text, options.context_budget)) {
        std::string response = client.complete(llm_extraction_prompt(section, chunk));
        auto parsed = parse_llm_triplets(response, &dropped);
        out.insert(out.end(), parsed.begin(), parsed.end());
    }
    if (warnings) {
        if (dropped) (*warnings)["llm_dropped_lines"] += dropped;
        if (out.empty()) (*warnings)["llm_empty_response"] += 1;
    }
    return out;
}

ExtractionConfig ExtractionConfig::from_list(std::string_view names) {
    ExtractionConfig cfg;
    cfg.structural = cfg.reference = cfg.timeframe = cfg.llm = false;
    for (const auto& raw : split(names, ',')) {
        std::string name = trim(raw);
        if (name.empty()) continue;
        auto kind = extractor_from_string(name);
        if (!kind) throw ConfigError("unknown extractor '" + name + "'");
        switch (*kind) {
            case ExtractorKind::structural: cfg.structural = true; break;
            case ExtractorKind::reference: cfg.reference = true; break;
            case ExtractorKind::timeframe: cfg.timeframe = true; break;
            case ExtractorKind::llm: cfg.llm = true; break;
        }
    }
    return cfg;
}

ExtractionBatch extract_all(const Section& section, const HierarchyIndex& hierarchy,
                            const ExtractionConfig& config) {
    if (!config.any_enabled()) throw ConfigError("no extractors enabled");
    if (config.llm && !config.client) throw ConfigError("llm extractor enabled without a client");

    ExtractionBatch batch;
    batch.section_id = section.id;

    std::vector<std::vector<Triplet>> groups;
    if (config.structural) {
        groups.push_back(extract_structural(section, hierarchy));
        batch.extractor_versions["structural"] = kExtractorVersion;
    }
    if (config.reference) {
        auto xrefs = extract_cross_references(section);
        groups.push_back(extract_references(section, xrefs));
        batch.extractor_versions["reference"] = kExtractorVersion;
    }
    if (config.timeframe) {
        groups.push_back(extract_timeframes(section));
        batch.extractor_versions["timeframe"] = kExtractorVersion;
    }
    if (config.llm) {
        batch.extractor_versions["llm"] = kExtractorVersion;
        try {
            groups.push_back(extract_llm(section, *config.client, &batch.warnings,
                                         config.llm_options));
        } catch (const TransportError&) {
            if (config.llm_required) throw;
            batch.warnings["llm_errors"] += 1;
        }
    }

    std::set<TripletKey> seen;
    for (auto& group : groups) {
        std::stable_sort(group.begin(), group.end(),
                         [](const Triplet& a, const Triplet& b) { return a.key() < b.key(); });
        for (auto& t : group)
            if (seen.insert(t.key()).second) batch.triplets.push_back(std::move(t));
    }
    return batch;
}

std::string batches_to_jsonl(std::span<const ExtractionBatch> batches) {
    std::string out;
    for (const auto& b : batches) {
        json j;
        j["section_id"] = b.section_id;
        j["extractor_versions"] = b.extractor_versions;
        j["warnings"] = b.warnings;
        j["triplets"] = json::array();
        for (const auto& t : b.triplets) j["triplets"].push_back(detail::triplet_to_json(t));
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<ExtractionBatch> batches_from_jsonl(std::string_view payload) {
    std::vector<ExtractionBatch> out;
    for (const auto& line : split(payload, '\n')) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ExtractionBatch b;
            b.section_id = j.at("section_id").get<std::string>();
            b.extractor_versions = j.at("extractor_versions").get<std::map<std::string, std::string>>();
            b.warnings = j.at("warnings").get<std::map<std::string, int>>();
            for (const auto& t : j.at("triplets")) b.triplets.push_back(detail::triplet_from_json(t));
            out.push_back(std::move(b));
        } catch (const json::exception& e) {
            throw CorruptStoreError(std::string("batches: malformed row: ") + e.what());
        }
    }
    return out;
}

}  // namespace regkg
