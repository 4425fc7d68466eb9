#pragma once
// Exact cosine k-nearest-neighbour index over unit-norm triplet embeddings.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "regkg/embedding.hpp"
#include "regkg/knowledge_graph.hpp"

namespace regkg {

struct SearchHit {
    std::size_t row = 0;
    double score = 0.0;
};

// Row-major matrix of unit vectors. Search is an exhaustive scan; results
// are ordered by descending score, ties by ascending row.
class ExactCosineIndex {
public:
    explicit ExactCosineIndex(std::size_t dim = 0) : dim_(dim) {}

    void add(const EmbeddingVector& v);
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    const std::vector<float>& data() const { return data_; }
    EmbeddingVector row(std::size_t i) const;

    // Throws ConfigError for k == 0 or a query of the wrong dimension.
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const;

private:
    std::size_t dim_;
    std::vector<float> data_;
};

struct VectorRecord {
    TripletKey key;
    EmbeddingVector vector;
    std::vector<std::string> provenance;  // sorted section ids
    std::string embedder_id;

    bool operator==(const VectorRecord&) const = default;
};

class IndexSnapshot {
public:
    IndexSnapshot() = default;
    // Records are sorted by key; throws ConfigError on mixed embedder ids,
    // duplicate keys, wrong dimensions, or vectors that are not unit-norm.
    IndexSnapshot(std::string embedder_id, std::size_t dim, std::uint64_t graph_version,
                  std::vector<VectorRecord> records);

    const std::string& embedder_id() const { return embedder_id_; }
    std::size_t dim() const { return dim_; }
    std::uint64_t graph_version() const { return graph_version_; }
    const std::vector<VectorRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const ExactCosineIndex& matrix() const { return matrix_; }

private:
    std::string embedder_id_;
    std::size_t dim_ = 0;
    std::uint64_t graph_version_ = 0;
    std::vector<VectorRecord> records_;
    ExactCosineIndex matrix_;
};

inline constexpr double kUnitNormTolerance = 1e-6;

// One record per triplet, embedding render_triplet(t). Throws ConfigError on
// an empty graph or a triplet without provenance, and Error listing every
// key whose embedding failed.
IndexSnapshot index_build(const KnowledgeGraph& g, const Embedder& embedder);

struct KeyScore {
    TripletKey key;
    double score = 0.0;

    bool operator==(const KeyScore&) const = default;
};

// Exact top-k by cosine similarity; descending score, ties by ascending key.
// Throws ConfigError when `query_embedder_id` differs from the snapshot's.
std::vector<KeyScore> index_search(const IndexSnapshot& snapshot, const EmbeddingVector& query,
                                   std::size_t k, std::string_view query_embedder_id);

std::string serialize_index(const IndexSnapshot& snapshot);
IndexSnapshot deserialize_index(std::string_view payload, const std::string& origin);
void save_index(const IndexSnapshot& snapshot, const std::filesystem::path& path);
IndexSnapshot load_index(const std::filesystem::path& path);

}  // namespace regkg
