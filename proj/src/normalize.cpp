#include "regkg/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "regkg/common.hpp"

namespace regkg {

namespace {

const std::regex& section_sign_re() {
    static const std::regex re(R"((?:\bsec(?:tion)?s?\.?|§(?:§)?)\s*(?=\d))", std::regex::icase);
    return re;
}

const std::regex& unit_keyword_re() {
    static const std::regex re(R"(\b(subchapter|subpart|chapter|part|title)\s+([a-z0-9]+)\b)",
                               std::regex::icase);
    return re;
}

bool all_of_chars(const std::string& s, const char* allowed) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [&](char c) {
        return std::strchr(allowed, std::tolower(static_cast<unsigned char>(c))) != nullptr;
    });
}

bool valid_unit_id(const std::string& keyword, const std::string& id) {
    if (keyword == "part" || keyword == "title") return all_of_chars(id, "0123456789");
    if (keyword == "subpart" || keyword == "subchapter")
        return id.size() <= 2 && all_of_chars(id, "abcdefghijklmnopqrstuvwxyz");
    return all_of_chars(id, "ivxlcdm") || all_of_chars(id, "0123456789");  // chapter
}

std::string surface_normalize(std::string_view raw) {
    std::string s;
    s.reserve(raw.size());
    bool space = false;
    for (char c : raw) {
        auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc) || uc < 0x20 || uc == 0x7f) {
            space = true;
            continue;
        }
        if (space && !s.empty()) s.push_back(' ');
        space = false;
        s.push_back(c == '|' ? '/' : c);
    }

    s = std::regex_replace(s, section_sign_re(), "§");

    std::string out;
    std::size_t last = 0;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), unit_keyword_re());
         it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        const std::string keyword = to_lower_ascii(m[1].str());
        const std::string id = m[2].str();
        out.append(s, last, static_cast<std::size_t>(m.position(0)) - last);
        if (valid_unit_id(keyword, id))
            out += to_upper_ascii(keyword) + " " + to_upper_ascii(id);
        else
            out += m.str(0);
        last = static_cast<std::size_t>(m.position(0) + m.length(0));
    }
    out.append(s, last, std::string::npos);
    return out;
}

void merge_into(Triplet& survivor, const Triplet& incoming) {
    for (const auto& [k, v] : incoming.qualifiers) {
        auto it = survivor.qualifiers.find(k);
        if (it == survivor.qualifiers.end()) {
            survivor.qualifiers.emplace(k, v);
        } else if (it->second != v) {
            if (incoming.confidence > survivor.confidence ||
                (incoming.confidence == survivor.confidence && v < it->second))
                it->second = v;
        }
    }
    if (incoming.confidence > survivor.confidence) {
        survivor.confidence = incoming.confidence;
        survivor.extractor = incoming.extractor;
    }
}

}  // namespace

AliasTable::AliasTable(std::map<std::string, std::set<std::string>> entries, std::string version)
    : version_(std::move(version)) {
    for (const auto& [raw_canonical, raw_aliases] : entries) {
        std::string canonical = surface_normalize(raw_canonical);
        if (canonical.empty()) throw ConfigError("alias table: empty canonical form");
        auto [it, inserted] = index_.emplace(to_lower_ascii(canonical), canonical);
        if (!inserted && it->second != canonical)
            throw ConfigError("alias table: '" + canonical + "' collides with '" + it->second + "'");
        entries_[canonical];
    }
    for (const auto& [raw_canonical, raw_aliases] : entries) {
        std::string canonical = surface_normalize(raw_canonical);
        for (const auto& raw_alias : raw_aliases) {
            std::string alias = surface_normalize(raw_alias);
            if (alias.empty()) continue;
            auto [it, inserted] = index_.emplace(to_lower_ascii(alias), canonical);
            if (!inserted && it->second != canonical) {
                throw ConfigError("alias table: alias '" + alias + "' of '" + canonical +
                                  "' is already bound to '" + it->second + "'");
            }
            if (to_lower_ascii(alias) != to_lower_ascii(canonical)) entries_[canonical].insert(alias);
        }
    }
}

AliasTable AliasTable::parse(std::string_view text) {
    std::map<std::string, std::set<std::string>> entries;
    std::size_t lineno = 0;
    for (const auto& raw : split(text, '\n')) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto colon = line.find(':');
        if (colon == std::string::npos)
            throw ConfigError("alias table line " + std::to_string(lineno) + ": expected 'canonical: alias; ...'");
        std::string canonical = trim(line.substr(0, colon));
        if (canonical.empty())
            throw ConfigError("alias table line " + std::to_string(lineno) + ": empty canonical form");
        auto& aliases = entries[canonical];
        for (const auto& a : split(line.substr(colon + 1), ';')) {
            std::string alias = trim(a);
            if (!alias.empty()) aliases.insert(alias);
        }
    }
    return AliasTable(std::move(entries), hex64(fnv1a64(text)));
}

AliasTable AliasTable::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

std::optional<std::string> AliasTable::lookup(std::string_view normalized) const {
    auto it = index_.find(to_lower_ascii(normalized));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::string canonicalize_entity(std::string_view raw, const AliasTable& aliases) {
    std::string s = surface_normalize(raw);
    if (s.empty()) throw ConfigError("empty entity");
    if (auto canonical = aliases.lookup(s)) return *canonical;
    return s;
}

std::string canonicalize_predicate(std::string_view raw) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '|') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    if (words.empty()) throw ConfigError("empty predicate");

    auto is_all_caps = [](const std::string& w) {
        return std::none_of(w.begin(), w.end(),
                            [](char c) { return std::islower(static_cast<unsigned char>(c)); });
    };
    std::string out;
    if (words.size() == 1) {
        out = is_all_caps(words[0]) ? to_lower_ascii(words[0]) : words[0];
        out[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[0])));
        return out;
    }
    out = to_lower_ascii(words[0]);
    for (std::size_t i = 1; i < words.size(); ++i) {
        std::string w = to_lower_ascii(words[i]);
        w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        out += w;
    }
    return out;
}

Triplet canonicalize_triplet(Triplet t, const AliasTable& aliases) {
    t.subject = canonicalize_entity(t.subject, aliases);
    t.predicate = canonicalize_predicate(t.predicate);
    t.object = canonicalize_entity(t.object, aliases);
    return t;
}

std::vector<Triplet> dedupe(std::vector<Triplet> batch) {
    std::map<TripletKey, Triplet> by_key;
    for (auto& t : batch) {
        auto key = t.key();
        auto it = by_key.find(key);
        if (it == by_key.end())
            by_key.emplace(std::move(key), std::move(t));
        else
            merge_into(it->second, t);
    }
    std::vector<Triplet> out;
    out.reserve(by_key.size());
    for (auto& [key, t] : by_key) out.push_back(std::move(t));
    return out;
}

MergeDelta merge_update(KnowledgeGraph& g, const ExtractionBatch& batch) {
    if (!g.known_sections.count(batch.section_id))
        throw NotFoundError("merge: section '" + batch.section_id + "' is not registered in the graph");

    MergeDelta delta;
    for (const auto& t : batch.triplets) {
        const TripletKey key = t.key();
        auto it = g.triplets.find(key);
        if (it == g.triplets.end()) {
            g.triplets.emplace(key, t);
            g.entities.insert(t.subject);
            g.entities.insert(t.object);
            g.provenance[key].insert(batch.section_id);
            g.section_index[batch.section_id].insert(key);
            delta.added.push_back(key);
            continue;
        }
        Triplet before = it->second;
        merge_into(it->second, t);
        if (!(before == it->second)) delta.merged.emplace_back(key, key);
        if (g.provenance[key].insert(batch.section_id).second) {
            g.section_index[batch.section_id].insert(key);
            delta.provenance_extended.push_back({key, {batch.section_id}});
        }
    }
    if (!delta.empty()) ++g.version;
    return delta;
}

ExtractionBatch normalize_batch(ExtractionBatch batch, const AliasTable& aliases) {
    for (auto& t : batch.triplets) t = canonicalize_triplet(std::move(t), aliases);
    batch.triplets = dedupe(std::move(batch.triplets));
    return batch;
}

}  // namespace regkg
