#pragma once
// A store directory: every artifact one build produces, each in its own
// versioned, checksummed file.
//
//   manifest.json  sections.jsonl  batches.jsonl  triplets.jsonl
//   provenance.jsonl  merge.log  index.bin  job.json

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "regkg/corpus.hpp"
#include "regkg/extraction.hpp"
#include "regkg/knowledge_graph.hpp"
#include "regkg/normalize.hpp"
#include "regkg/vector_index.hpp"

namespace regkg {

class Store {
public:
    explicit Store(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path manifest_path() const { return dir_ / "manifest.json"; }
    std::filesystem::path sections_path() const { return dir_ / "sections.jsonl"; }
    std::filesystem::path batches_path() const { return dir_ / "batches.jsonl"; }
    std::filesystem::path log_path() const { return dir_ / "merge.log"; }
    std::filesystem::path index_path() const { return dir_ / "index.bin"; }
    std::filesystem::path job_path() const { return dir_ / "job.json"; }

    bool has_corpus() const;
    bool has_batches() const;
    bool has_graph() const;
    bool has_index() const;

    void save_corpus(const CorpusManifest& manifest, std::span<const Section> sections) const;
    CorpusManifest load_manifest() const;
    // Also checks the manifest's section_count against the section file.
    std::vector<Section> load_sections() const;

    void save_batches(std::span<const ExtractionBatch> batches) const;
    std::vector<ExtractionBatch> load_batches() const;

    void save_graph(const KnowledgeGraph& g) const;
    KnowledgeGraph load_graph() const;

    void save_index(const IndexSnapshot& index) const;
    IndexSnapshot load_index() const;

    // Append-only merge log. Each entry is one line "<fnv1a64 hex> <json>"
    // recording a non-empty delta and the graph version it produced.
    void reset_log() const;
    void append_log(const std::string& section_id, const MergeDelta& delta,
                    std::uint64_t graph_version) const;
    // Verifies every line checksum; throws CorruptStoreError on damage.
    std::size_t log_entries() const;

    // Combined hash of every artifact except the job checkpoint.
    std::uint64_t checksum() const;

private:
    std::filesystem::path dir_;
};

}  // namespace regkg
