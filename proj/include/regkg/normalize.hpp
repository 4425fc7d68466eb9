#pragma once
// Entity canonicalization, synonym resolution, deduplication, and merging
// extraction batches into the knowledge graph.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "regkg/extraction.hpp"
#include "regkg/knowledge_graph.hpp"
#include "regkg/triplet.hpp"

namespace regkg {

// Hand-curated synonyms. File format, one entry per line:
//   canonical: alias1; alias2
// Blank lines and lines starting with '#' are ignored. Matching is
// case-insensitive; canonical output keeps the case written in the file.
class AliasTable {
public:
    AliasTable() = default;
    // Throws ConfigError when alias sets overlap or an alias collides with a
    // different canonical form.
    AliasTable(std::map<std::string, std::set<std::string>> entries, std::string version);

    static AliasTable parse(std::string_view text);
    static AliasTable load(const std::filesystem::path& path);

    const std::map<std::string, std::set<std::string>>& entries() const { return entries_; }
    const std::string& version() const { return version_; }

    // Canonical form for an already surface-normalized string, if listed.
    std::optional<std::string> lookup(std::string_view normalized) const;

private:
    std::map<std::string, std::set<std::string>> entries_;
    std::string version_;
    std::unordered_map<std::string, std::string> index_;  // lowercase -> canonical
};

// trim -> collapse whitespace -> "Sec."/"Section"/"§§"/"§" before a number
// becomes "§" -> PART/SUBPART/CHAPTER/SUBCHAPTER/TITLE keywords uppercased ->
// alias lookup. Idempotent. Throws ConfigError("empty entity") when nothing
// remains after trimming.
std::string canonicalize_entity(std::string_view raw, const AliasTable& aliases);

// Whitespace/case only: "part of" -> "partOf", "References" -> "references".
std::string canonicalize_predicate(std::string_view raw);

Triplet canonicalize_triplet(Triplet t, const AliasTable& aliases);

// One triplet per identity key: max confidence, union of qualifiers (on a
// key conflict the higher-confidence source wins, ties go to the
// lexicographically smaller value). Sorted by key.
std::vector<Triplet> dedupe(std::vector<Triplet> batch);

struct MergeDelta {
    std::vector<TripletKey> added;
    // (batch key, surviving store key) for batch triplets that folded into an
    // existing triplet and changed its confidence or qualifiers.
    std::vector<std::pair<TripletKey, TripletKey>> merged;
    std::vector<std::pair<TripletKey, std::vector<std::string>>> provenance_extended;

    bool empty() const { return added.empty() && merged.empty() && provenance_extended.empty(); }
};

// Adds new triplets, grows provenance for existing ones, and bumps the graph
// version when anything changed. Throws NotFoundError when the batch's
// section is not registered in the graph.
MergeDelta merge_update(KnowledgeGraph& g, const ExtractionBatch& batch);

// canonicalize_triplet + dedupe over a raw batch.
ExtractionBatch normalize_batch(ExtractionBatch batch, const AliasTable& aliases);

}  // namespace regkg
