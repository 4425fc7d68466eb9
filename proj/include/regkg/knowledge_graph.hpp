#pragma once
// The triplet graph with its provenance map (triplet -> source sections)
// and the inverse index (section -> triplets), plus on-disk persistence.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "regkg/triplet.hpp"

namespace regkg {

struct KnowledgeGraph {
    std::set<std::string> entities;
    std::map<TripletKey, Triplet> triplets;
    std::map<TripletKey, std::set<std::string>> provenance;      // key -> section ids
    std::map<std::string, std::set<TripletKey>> section_index;  // section id -> keys
    std::set<std::string> known_sections;                       // every corpus section id
    std::uint64_t version = 0;

    bool operator==(const KnowledgeGraph&) const = default;

    void register_section(const std::string& id) { known_sections.insert(id); }
};

// Triplets extracted from `section_id`, ordered by key. Throws NotFoundError
// when the section is not registered.
std::vector<Triplet> triplets_of_section(const KnowledgeGraph& g, std::string_view section_id);

// Violations of the graph invariants (inverse maps, entity coverage, known
// provenance sections, non-empty provenance). Empty when consistent.
std::vector<std::string> audit(const KnowledgeGraph& g);

// Byte-stable serialization of the two graph files, exposed for checksums.
std::string serialize_triplets(const KnowledgeGraph& g);
std::string serialize_provenance(const KnowledgeGraph& g);
std::uint64_t graph_checksum(const KnowledgeGraph& g);

// Writes <dir>/triplets.jsonl and <dir>/provenance.jsonl, each with a
// format header and checksum.
void persist_graph(const KnowledgeGraph& g, const std::filesystem::path& dir);
// Throws CorruptStoreError on checksum/structure damage and VersionError on
// an unsupported format version.
KnowledgeGraph load_graph(const std::filesystem::path& dir);
bool graph_exists(const std::filesystem::path& dir);

}  // namespace regkg
