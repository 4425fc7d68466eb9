#include "regkg/corpus.hpp"

#include <ctime>
#include <regex>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "regkg/common.hpp"

namespace regkg {

using nlohmann::json;

namespace {

const std::regex& xref_scan_re() {
    static const std::regex re(
        R"((?:§(?:§)?\s*|\b(?:[Ss]ec(?:tion)?s?\.?|SEC(?:TION)?S?\.?)\s+)\d+\.\d+[a-z]?(?:\s*,\s*(?:and\s+|or\s+)?\d+\.\d+[a-z]?|\s+(?:and|or|through)\s+\d+\.\d+[a-z]?)*)"
        R"(|\b\d+\s+CFR\s+(?:(?:[Pp]art|PART)\s+)?\d+(?:\.\d+[a-z]?)?)"
        R"(|\b(?:[Ss]ubpart|SUBPART)\s+[A-Z]{1,2}\s+of\s+(?:this\s+)?(?:[Pp]art|PART)\s+\d+)"
        R"(|\b(?:[Ss]ubpart|SUBPART)\s+[A-Z]{1,2}\b)"
        R"(|\b(?:[Ss]ubchapter|SUBCHAPTER)\s+[A-Z]{1,2}\b)"
        R"(|\b(?:[Cc]hapter|CHAPTER)\s+[IVXLCDM]+\b)"
        R"(|\b(?:[Pp]art|PART)\s+\d+\b(?!\.\d))"
        R"(|\b(?:[Tt]itle|TITLE)\s+\d+\b)");
    return re;
}

const std::regex& number_re() {
    static const std::regex re(R"(\d+\.\d+[a-z]?)");
    return re;
}

const json* field(const json& rec, const char* name) {
    auto it = rec.find(name);
    if (it == rec.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string string_field(const json& rec, const char* name, std::size_t index, bool required) {
    const json* v = field(rec, name);
    if (!v) {
        if (required)
            throw FormatError("record " + std::to_string(index) + ": missing field '" + name + "'");
        return {};
    }
    if (!v->is_string())
        throw FormatError("record " + std::to_string(index) + ": field '" + name +
                          "' must be a string");
    return v->get<std::string>();
}

std::vector<std::string> split_paragraphs(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find("\n\n", start);
        std::string para = trim(text.substr(start, pos == std::string::npos ? std::string::npos
                                                                            : pos - start));
        if (!para.empty()) out.push_back(std::move(para));
        if (pos == std::string::npos) break;
        start = pos + 2;
    }
    return out;
}

json ref_to_json(const SectionRef& r) {
    json j = json::object();
    if (r.title) j["title"] = *r.title;
    if (r.chapter) j["chapter"] = *r.chapter;
    if (r.subchapter) j["subchapter"] = *r.subchapter;
    if (r.part) j["part"] = *r.part;
    if (r.subpart) j["subpart"] = *r.subpart;
    if (r.section) j["section"] = *r.section;
    return j;
}

SectionRef ref_from_json(const json& j) {
    SectionRef r;
    if (j.contains("title")) r.title = j["title"].get<int>();
    if (j.contains("chapter")) r.chapter = j["chapter"].get<std::string>();
    if (j.contains("subchapter")) r.subchapter = j["subchapter"].get<std::string>();
    if (j.contains("part")) r.part = j["part"].get<int>();
    if (j.contains("subpart")) r.subpart = j["subpart"].get<std::string>();
    if (j.contains("section")) r.section = j["section"].get<std::string>();
    return r;
}

}  // namespace

std::string section_entity(const Section& s) {
    return s.ref ? entity_label(*s.ref) : s.id;
}

std::vector<Section> segment_corpus(std::string_view raw_docs, CorpusFormat format) {
    if (format != CorpusFormat::json_lines) throw ConfigError("unsupported corpus format");

    std::vector<Section> sections;
    std::unordered_map<std::string, std::size_t> first_seen;  // id -> record index
    std::vector<std::pair<std::size_t, std::string>> parent_citations;  // per section

    std::size_t index = 0;
    std::size_t pos = 0;
    while (pos < raw_docs.size()) {
        auto nl = raw_docs.find('\n', pos);
        std::string_view line =
            raw_docs.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? raw_docs.size() : nl + 1;
        if (trim(line).empty()) continue;

        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError("record " + std::to_string(index) + ": not a JSON object (" +
                              e.what() + ")");
        }
        if (!rec.is_object())
            throw FormatError("record " + std::to_string(index) + ": not a JSON object");

        const std::string doc_id = trim(string_field(rec, "doc_id", index, true));
        if (doc_id.empty())
            throw FormatError("record " + std::to_string(index) + ": field 'doc_id' is empty");
        const std::string citation = trim(string_field(rec, "citation", index, false));
        const std::string heading = normalize_whitespace(string_field(rec, "heading", index, false));
        const std::string body = normalize_whitespace(string_field(rec, "body", index, true));
        if (body.empty())
            throw FormatError("record " + std::to_string(index) + ": field 'body' is empty");
        const std::string parent_citation = trim(string_field(rec, "parent_citation", index, false));

        std::map<std::string, std::string> metadata;
        if (const json* md = field(rec, "metadata")) {
            if (!md->is_object())
                throw FormatError("record " + std::to_string(index) +
                                  ": field 'metadata' must be an object");
            for (const auto& [k, v] : md->items()) {
                if (!v.is_string())
                    throw FormatError("record " + std::to_string(index) + ": field 'metadata." +
                                      k + "' must be a string");
                metadata[k] = v.get<std::string>();
            }
        }
        metadata["doc_id"] = doc_id;

        auto add = [&](Section s) {
            auto [it, inserted] = first_seen.emplace(s.id, index);
            if (!inserted) {
                throw FormatError("duplicate citation '" + s.id + "' at records " +
                                  std::to_string(it->second) + " and " + std::to_string(index));
            }
            parent_citations.emplace_back(index, parent_citation);
            sections.push_back(std::move(s));
        };

        if (citation.empty()) {
            auto paragraphs = split_paragraphs(body);
            for (std::size_t p = 0; p < paragraphs.size(); ++p) {
                Section s;
                s.id = doc_id + "#p" + std::to_string(p + 1);
                s.heading = heading;
                s.text = paragraphs[p];
                s.metadata = metadata;
                add(std::move(s));
            }
        } else {
            auto ref = parse_citation(citation);
            if (!ref || !is_valid(*ref))
                throw FormatError("record " + std::to_string(index) + ": field 'citation' ('" +
                                  citation + "') is not a recognized citation");
            Section s;
            s.id = section_id(*ref);
            s.ref = *ref;
            s.heading = heading;
            s.text = body;
            s.metadata = metadata;
            add(std::move(s));
        }
        ++index;
    }

    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < sections.size(); ++i) position.emplace(sections[i].id, i);
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& [rec_index, parent_citation] = parent_citations[i];
        if (parent_citation.empty()) continue;
        auto pref = parse_citation(parent_citation);
        if (!pref)
            throw FormatError("record " + std::to_string(rec_index) +
                              ": field 'parent_citation' ('" + parent_citation +
                              "') is not a recognized citation");
        std::string pid = section_id(*pref);
        auto it = position.find(pid);
        if (it == position.end())
            throw FormatError("record " + std::to_string(rec_index) +
                              ": field 'parent_citation' refers to unknown section '" + pid + "'");
        const Section* parent = &sections[it->second];
        if (sections[i].ref && parent->ref &&
            granularity(*parent->ref) >= granularity(*sections[i].ref)) {
            throw FormatError("record " + std::to_string(rec_index) +
                              ": field 'parent_citation' ('" + pid +
                              "') is not coarser than the record's citation");
        }
        sections[i].parent_id = pid;
    }
    return sections;
}

CorpusManifest make_manifest(std::string corpus_id, std::span<const Section> sections,
                             std::string ingest_timestamp) {
    CorpusManifest m;
    m.corpus_id = std::move(corpus_id);
    m.section_count = sections.size();
    for (const auto& s : sections)
        if (!s.parent_id) m.hierarchy_roots.push_back(s.id);
    m.ingest_timestamp = std::move(ingest_timestamp);
    return m;
}

std::string utc_timestamp_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<CrossReference> extract_cross_references(const Section& section) {
    std::vector<CrossReference> out;
    const std::string& text = section.text;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), xref_scan_re());
         it != std::sregex_iterator(); ++it) {
        const std::string match = it->str();
        const auto base = static_cast<std::size_t>(it->position());
        auto refs = parse_citation_list(match);
        if (refs.empty()) continue;

        std::vector<std::size_t> offsets{base};
        if (refs.size() > 1) {
            auto num = std::sregex_iterator(match.begin(), match.end(), number_re());
            ++num;  // first entry reports the match start
            for (; num != std::sregex_iterator() && offsets.size() < refs.size(); ++num)
                offsets.push_back(base + static_cast<std::size_t>(num->position()));
        }
        for (std::size_t i = 0; i < refs.size(); ++i) {
            SectionRef ref = refs[i];
            if (ref.subpart && !ref.part && section.ref && section.ref->part)
                ref.part = section.ref->part;
            CrossReference x;
            x.target_id = section_id(ref);
            x.ref = std::move(ref);
            x.offset = offsets[std::min(i, offsets.size() - 1)];
            x.self = x.target_id == section.id;
            out.push_back(std::move(x));
        }
    }
    return out;
}

std::vector<const Section*> leaf_sections(std::span<const Section> sections) {
    std::set<std::string> parents;
    for (const auto& s : sections)
        if (s.parent_id) parents.insert(*s.parent_id);
    std::vector<const Section*> out;
    for (const auto& s : sections)
        if (!parents.count(s.id)) out.push_back(&s);
    return out;
}

std::string sections_to_jsonl(std::span<const Section> sections) {
    std::string out;
    for (const auto& s : sections) {
        json j;
        j["id"] = s.id;
        j["ref"] = s.ref ? ref_to_json(*s.ref) : json(nullptr);
        j["heading"] = s.heading;
        j["text"] = s.text;
        j["parent_id"] = s.parent_id ? json(*s.parent_id) : json(nullptr);
        j["metadata"] = s.metadata;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Section> sections_from_jsonl(std::string_view payload) {
    std::vector<Section> out;
    for (const auto& line : split(payload, '\n')) {
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Section s;
            s.id = j.at("id").get<std::string>();
            if (!j.at("ref").is_null()) s.ref = ref_from_json(j["ref"]);
            s.heading = j.at("heading").get<std::string>();
            s.text = j.at("text").get<std::string>();
            if (!j.at("parent_id").is_null()) s.parent_id = j["parent_id"].get<std::string>();
            s.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw CorruptStoreError(std::string("sections: malformed row: ") + e.what());
        }
    }
    return out;
}

std::string manifest_to_json(const CorpusManifest& m) {
    json j;
    j["corpus_id"] = m.corpus_id;
    j["section_count"] = m.section_count;
    j["hierarchy_roots"] = m.hierarchy_roots;
    j["ingest_timestamp"] = m.ingest_timestamp;
    return j.dump(2) + "\n";
}

CorpusManifest manifest_from_json(std::string_view payload) {
    try {
        json j = json::parse(payload);
        CorpusManifest m;
        m.corpus_id = j.at("corpus_id").get<std::string>();
        m.section_count = j.at("section_count").get<std::size_t>();
        m.hierarchy_roots = j.at("hierarchy_roots").get<std::vector<std::string>>();
        m.ingest_timestamp = j.at("ingest_timestamp").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw CorruptStoreError(std::string("manifest: ") + e.what());
    }
}

}  // namespace regkg
