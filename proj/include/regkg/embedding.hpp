#pragma once
// Text rendering of triplets and text -> unit-vector embedders.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "regkg/clients.hpp"
#include "regkg/triplet.hpp"

namespace regkg {

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

// Dot product accumulated in double, in index order.
double dot(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_norm(const EmbeddingVector& v);
// Scales to unit length. Throws Error("unembeddable text") on a zero vector
// and Error on non-finite entries.
EmbeddingVector normalized(const std::vector<double>& raw);

// "{subject} {predicate} {object}" plus " [{k}={v}]" per qualifier, sorted
// by qualifier key.
std::string render_triplet(const Triplet& t);

class Embedder {
public:
    virtual ~Embedder() = default;
    // Names the backend and its version; vectors from different ids live in
    // different spaces and must never be compared.
    virtual std::string id() const = 0;
    virtual std::size_t dim() const = 0;
    // Throws ConfigError on empty (after trim) text.
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

inline constexpr std::size_t kDefaultDim = 256;

// Signed feature hashing: lowercase alphanumeric tokens, unigram and
// adjacent-bigram features ("a b"), 64-bit FNV-1a per feature,
// bucket = hash mod d, sign = bit 63 clear ? +1 : -1, then L2 normalization.
class HashingEmbedder final : public Embedder {
public:
    static constexpr std::string_view kVersion = "fnv1a-hash-v1";

    explicit HashingEmbedder(std::size_t dim = kDefaultDim);
    std::string id() const override;
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    std::size_t dim_;
};

// External embedding service: POST {"model", "input"} and read
// data[0].embedding or a top-level "embedding" array of exactly `dim`
// numbers. Retries transport failures and caches vectors on disk by text
// hash when a cache directory is given.
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(HttpServiceConfig cfg, std::size_t dim, std::filesystem::path cache_dir = {},
                 RetryPolicy retry = {});
    std::string id() const override;
    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    HttpServiceConfig cfg_;
    std::size_t dim_;
    std::filesystem::path cache_dir_;
    RetryPolicy retry_;
    mutable std::mutex write_mu_;
};

struct EmbedderConfig {
    std::string backend = "baseline";  // baseline | external
    std::size_t dim = kDefaultDim;
    std::filesystem::path cache_dir;
};

std::shared_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);
// Reconstructs the embedder that produced `embedder_id`. External ids need
// REGKG_EMBED_ENDPOINT in the environment.
std::shared_ptr<Embedder> embedder_for_id(const std::string& embedder_id,
                                          const std::filesystem::path& cache_dir = {});

}  // namespace regkg
