#pragma once
// Query answering: retrieve top-k triplets, gather their source sections,
// assemble a story, and answer with a generator or extractively.

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "regkg/clients.hpp"
#include "regkg/corpus.hpp"
#include "regkg/embedding.hpp"
#include "regkg/knowledge_graph.hpp"
#include "regkg/vector_index.hpp"

namespace regkg {

// Everything a query needs, loaded once and never mutated afterwards.
class QuerySnapshot {
public:
    // Throws ConfigError when the embedder does not match the index, or the
    // index and graph versions disagree.
    QuerySnapshot(std::vector<Section> sections, KnowledgeGraph graph, IndexSnapshot index,
                  std::shared_ptr<const Embedder> embedder);

    const std::vector<Section>& sections() const { return sections_; }
    const KnowledgeGraph& graph() const { return graph_; }
    const IndexSnapshot& index() const { return index_; }
    const Embedder& embedder() const { return *embedder_; }
    std::shared_ptr<const Embedder> embedder_ptr() const { return embedder_; }
    std::uint64_t version() const { return graph_.version; }

    // Throws NotFoundError for an unknown id.
    const Section& section(const std::string& id) const;
    const Section* find_section(const std::string& id) const;

private:
    std::vector<Section> sections_;
    std::unordered_map<std::string, std::size_t> by_id_;
    KnowledgeGraph graph_;
    IndexSnapshot index_;
    std::shared_ptr<const Embedder> embedder_;
};

struct ScoredTriplet {
    Triplet triplet;
    double score = 0.0;
    std::vector<std::string> sections;  // provenance, sorted

    bool operator==(const ScoredTriplet&) const = default;
};

struct RetrievalBundle {
    std::string query;
    std::vector<ScoredTriplet> top_triplets;  // rank order
    std::vector<Section> evidence_sections;   // by (best triplet rank, id)
    std::size_t k = 0;
    std::uint64_t snapshot_version = 0;
    bool index_empty = false;

    bool empty() const { return top_triplets.empty() && evidence_sections.empty(); }
    bool operator==(const RetrievalBundle&) const = default;
};

inline constexpr std::size_t kDefaultK = 5;

// Throws ConfigError for k == 0 or empty query text and Error for an
// unembeddable query.
RetrievalBundle retrieve(std::string_view query, std::size_t k, const QuerySnapshot& snapshot);

inline constexpr std::size_t kStoryCap = 8000;
inline constexpr std::string_view kNoEvidence = "NO EVIDENCE RETRIEVED";
inline constexpr std::string_view kTruncationMarker = "[EVIDENCE TRUNCATED]";

// FACTS block (rendered triplets in rank order), then an EVIDENCE block with
// "[id] heading" and the verbatim text of each section. Over `cap`
// characters, the lowest-ranked evidence is shortened or dropped first and
// the truncation marker is appended.
std::string build_story(const RetrievalBundle& bundle, std::size_t cap = kStoryCap);

enum class AnswerMode { generated, extractive };

std::string_view to_string(AnswerMode m);
AnswerMode answer_mode_from_string(std::string_view s);

struct Answer {
    std::string text;
    AnswerMode mode = AnswerMode::extractive;
    std::vector<std::string> citations;  // section ids, all in the bundle's evidence
    bool degraded = false;               // generator failed; extractive fallback used
    RetrievalBundle bundle;
};

inline constexpr std::string_view kRefusal = "Insufficient evidence to answer the question.";

std::string answer_prompt(std::string_view query, const RetrievalBundle& bundle);

// Section ids in `response` written as "[id]" that name evidence sections,
// in first-mention order.
std::vector<std::string> parse_cited_ids(std::string_view response, const RetrievalBundle& bundle);

// Top evidence sentence by cosine similarity to the query; ties go to the
// earlier sentence in bundle order. The answer text is a verbatim substring
// of its cited section.
Answer answer_extractive(std::string_view query, const RetrievalBundle& bundle,
                         const Embedder& embedder);

// Falls back to answer_extractive with degraded = true when the client
// throws TransportError.
Answer generate_answer(std::string_view query, const RetrievalBundle& bundle,
                       CompletionClient& generator, const Embedder& embedder);

}  // namespace regkg
