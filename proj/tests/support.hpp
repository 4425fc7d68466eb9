#pragma once
// Shared helpers for the test binaries.

#include <atomic>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "regkg/common.hpp"
#include "regkg/corpus.hpp"
#include "regkg/embedding.hpp"
#include "regkg/extraction.hpp"
#include "regkg/normalize.hpp"
#include "regkg/qa.hpp"
#include "regkg/vector_index.hpp"

namespace regkg::test {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(REGKG_FIXTURE_DIR) / name;
}

inline std::string fixture_text(const std::string& name) { return read_file(fixture(name)); }

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("regkg-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::vector<Section> fixture_sections() {
    return segment_corpus(fixture_text("mini_ecfr.jsonl"));
}

// ingest -> deterministic extractors -> normalize -> merge, all in memory.
inline KnowledgeGraph build_graph(const std::vector<Section>& sections,
                                  const AliasTable& aliases = {}) {
    const auto hierarchy = index_sections(sections);
    KnowledgeGraph g;
    for (const auto& s : sections) g.register_section(s.id);
    for (const auto& s : sections)
        merge_update(g, normalize_batch(extract_all(s, hierarchy, ExtractionConfig{}), aliases));
    return g;
}

inline std::shared_ptr<const QuerySnapshot> fixture_snapshot() {
    auto sections = fixture_sections();
    auto g = build_graph(sections);
    auto emb = std::make_shared<HashingEmbedder>();
    auto idx = index_build(g, *emb);
    return std::make_shared<QuerySnapshot>(std::move(sections), std::move(g), std::move(idx), emb);
}

// Replays canned responses in order; the last one repeats. An empty queue
// throws TransportError, as does a response equal to kFail.
class ScriptedClient final : public CompletionClient {
public:
    static constexpr const char* kFail = "<transport failure>";

    explicit ScriptedClient(std::vector<std::string> responses = {})
        : responses_(responses.begin(), responses.end()) {}

    std::string complete(const std::string& prompt) override {
        std::lock_guard lock(mu_);
        prompts.push_back(prompt);
        if (responses_.empty()) throw TransportError("scripted client: no response");
        std::string r = responses_.front();
        if (responses_.size() > 1) responses_.pop_front();
        if (r == kFail) throw TransportError("scripted client: simulated failure");
        return r;
    }

    std::vector<std::string> prompts;

private:
    std::mutex mu_;
    std::deque<std::string> responses_;
};

inline EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> raw(dim);
    for (auto& x : raw) x = n(rng);
    return normalized(raw);
}

inline std::set<std::string> key_strings(const KnowledgeGraph& g) {
    std::set<std::string> out;
    for (const auto& [k, t] : g.triplets) out.insert(to_string(k));
    return out;
}

}  // namespace regkg::test
