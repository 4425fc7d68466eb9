#pragma once
// Corpus ingestion: line-delimited JSON records -> citable Sections.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regkg/citation.hpp"

namespace regkg {

struct Section {
    std::string id;
    std::optional<SectionRef> ref;  // absent for synthetic "{doc_id}#p{n}" paragraphs
    std::string heading;
    std::string text;
    std::optional<std::string> parent_id;
    std::map<std::string, std::string> metadata;

    bool operator==(const Section&) const = default;
};

// Entity name a section is known by inside the graph.
std::string section_entity(const Section& s);

struct CorpusManifest {
    std::string corpus_id;
    std::size_t section_count = 0;
    std::vector<std::string> hierarchy_roots;
    std::string ingest_timestamp;  // ISO-8601 UTC

    bool operator==(const CorpusManifest&) const = default;
};

enum class CorpusFormat { json_lines };

// Record fields: doc_id, citation, heading, body, parent_citation, metadata.
// A record with a citation becomes one Section; a record without one is
// split on blank lines into "{doc_id}#p{n}" paragraph Sections.
// Throws FormatError naming the record index and field, or listing both
// occurrences of a duplicated citation.
std::vector<Section> segment_corpus(std::string_view raw_docs,
                                    CorpusFormat format = CorpusFormat::json_lines);

CorpusManifest make_manifest(std::string corpus_id, std::span<const Section> sections,
                             std::string ingest_timestamp);

std::string utc_timestamp_now();

struct CrossReference {
    SectionRef ref;
    std::string target_id;  // resolved against the citing section's part
    std::size_t offset = 0;
    bool self = false;

    bool operator==(const CrossReference&) const = default;
};

// Every citation occurrence in section.text, in document order, with the
// byte offset of the match start. Entries of a "§§" list after the first
// report the offset of their own number.
std::vector<CrossReference> extract_cross_references(const Section& section);

// Leaf sections: no other section names them as parent.
std::vector<const Section*> leaf_sections(std::span<const Section> sections);

std::string sections_to_jsonl(std::span<const Section> sections);
std::vector<Section> sections_from_jsonl(std::string_view payload);
std::string manifest_to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(std::string_view payload);

}  // namespace regkg
