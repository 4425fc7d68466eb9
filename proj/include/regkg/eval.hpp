#pragma once
// Evaluation: sampling, ground-truth mention sets, retold stories, question
// generation, overlap scoring, answer judging, the Nav metric, and the
// with/without-triplets comparison report.

#include <cstdint>
#include <functional>
#include <optional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "regkg/clients.hpp"
#include "regkg/corpus.hpp"
#include "regkg/embedding.hpp"
#include "regkg/knowledge_graph.hpp"
#include "regkg/qa.hpp"
#include "regkg/section_graph.hpp"

namespace regkg {

// Uniform sample of k leaf-section ids without replacement: partial
// Fisher-Yates over the ids in ascending order, position i swapped with
// i + below(n - i) drawn from XorShiftStar(seed). Throws ConfigError when k
// exceeds the number of leaf sections.
std::vector<std::string> sample_sections(std::span<const Section> sections, std::size_t k,
                                         std::uint64_t seed);

// True for TITLE/CHAPTER/SUBCHAPTER/PART/SUBPART entities.
bool is_hierarchy_entity(std::string_view entity);

// One-hop mention sets over leaf sections: an explicit cross-reference in
// either direction, or a shared canonical entity (subject or object of a
// triplet extracted from both) other than hierarchy units.
class MentionIndex {
public:
    MentionIndex(std::span<const Section> sections, const KnowledgeGraph& g);

    // Throws NotFoundError when `target` is not a leaf section.
    const std::set<std::string>& mentions(const std::string& target) const;
    const std::string& entity_of(const std::string& section_id) const;

private:
    std::map<std::string, std::set<std::string>> mentions_;
    std::unordered_map<std::string, std::string> entity_;
};

std::set<std::string> build_mentions(std::span<const Section> sections, const KnowledgeGraph& g,
                                     const std::string& target);

struct QaPair {
    std::string question;
    std::string answer;

    bool operator==(const QaPair&) const = default;
};

struct GroundTruthItem {
    std::string target;
    std::set<std::string> mentions;
    std::string retold_story;
    std::vector<QaPair> qa_pairs;
};

// "=== <id> ===\n<text>" for the target, then each mention in id order,
// blocks separated by a blank line.
std::string build_retold_story(const std::string& target, const std::set<std::string>& mentions,
                               const std::function<const Section&(const std::string&)>& lookup);

class QaGenerator {
public:
    virtual ~QaGenerator() = default;
    virtual std::string name() const = 0;
    // Raw pairs; may be empty. `dropped` counts malformed pairs.
    virtual std::vector<QaPair> generate(const GroundTruthItem& item, int m, int* dropped) = 0;
};

inline constexpr int kDefaultQuestions = 3;

std::string qa_generation_prompt(std::string_view story, int m);

// Alternating "Q: ..." / "A: ..." lines. A question without a following
// answer (or an answer without a question) is dropped and counted.
std::vector<QaPair> parse_qa_pairs(std::string_view response, int* dropped = nullptr);

class LlmQaGenerator final : public QaGenerator {
public:
    explicit LlmQaGenerator(std::shared_ptr<CompletionClient> client) : client_(std::move(client)) {}
    std::string name() const override { return "llm"; }
    std::vector<QaPair> generate(const GroundTruthItem& item, int m, int* dropped) override;

private:
    std::shared_ptr<CompletionClient> client_;
};

// Deterministic stand-in: one pair per story sentence, in story order, up
// to m. The question names the section and quotes the sentence's opening
// words; the reference answer is the sentence.
class TemplateQaGenerator final : public QaGenerator {
public:
    std::string name() const override { return "template"; }
    std::vector<QaPair> generate(const GroundTruthItem& item, int m, int* dropped) override;
};

// Throws ConfigError on an empty story and Error when no pair parses.
// Adds the "qa_dropped_pairs" warning when pairs were dropped.
std::vector<QaPair> generate_qa(const GroundTruthItem& item, QaGenerator& generator,
                                int m = kDefaultQuestions,
                                std::map<std::string, int>* warnings = nullptr);

// |retrieved ∩ truth| / |retrieved|; 0 when nothing was retrieved.
double overlap_score(std::span<const std::string> retrieved, const std::set<std::string>& truth);

// Retrieved sections count as hits when some truth section has cosine
// similarity >= theta (identical texts are similarity 1). Sections whose
// text cannot be embedded never match and add a warning.
double overlap_score_theta(std::span<const Section* const> retrieved,
                           std::span<const Section* const> truth, double theta,
                           const Embedder& embedder, std::vector<std::string>* warnings = nullptr);

struct JudgeVerdict {
    double score = 0.0;
    int binary = 0;
    bool fallback = false;  // external judge failed; deterministic judge used

    bool operator==(const JudgeVerdict&) const = default;
};

// Token-level F1 over tokenize() multisets.
double token_f1(std::string_view candidate, std::string_view reference);

inline constexpr double kF1Threshold = 0.6;

class Judge {
public:
    virtual ~Judge() = default;
    virtual std::string name() const = 0;
    virtual JudgeVerdict judge(std::string_view candidate, std::string_view reference,
                               std::string_view story) = 0;
};

class DeterministicJudge final : public Judge {
public:
    std::string name() const override { return "deterministic"; }
    JudgeVerdict judge(std::string_view candidate, std::string_view reference,
                       std::string_view story) override;
};

// Asks for a single 1-5 integer; score = (n - 1) / 4, binary iff n >= 4.
class LlmJudge final : public Judge {
public:
    explicit LlmJudge(std::shared_ptr<CompletionClient> client) : client_(std::move(client)) {}
    std::string name() const override { return "external"; }
    JudgeVerdict judge(std::string_view candidate, std::string_view reference,
                       std::string_view story) override;

private:
    std::shared_ptr<CompletionClient> client_;
    DeterministicJudge fallback_;
};

std::string judge_prompt(std::string_view candidate, std::string_view reference,
                         std::string_view story);
// First integer 1-5 in the response, if any.
std::optional<int> parse_judge_score(std::string_view response);

JudgeVerdict judge_answer(std::string_view candidate, std::string_view reference,
                          std::string_view story, Judge& judge);

enum class NavMode { strict_shared, shared_or_linked };

std::string_view to_string(NavMode m);

// Mean over the sample of sum_l |T(s) ∩ T(m_l)| / sum_l |T(s) ∪ T(m_l)|.
// shared_or_linked additionally counts, among the non-shared triplets of
// the pair, those whose subject is one section's entity and whose object is
// the other's. A zero denominator contributes 0. Throws ConfigError on an
// empty sample.
double nav_metric(const KnowledgeGraph& g, const MentionIndex& mentions,
                  std::span<const std::string> sample, NavMode mode);
double nav_metric(const KnowledgeGraph& g, std::span<const Section> sections,
                  std::span<const std::string> sample, NavMode mode);

// Section-level retrieval for the without-triplets condition: every leaf
// section's text embedded with the snapshot's embedder.
class SectionIndex {
public:
    SectionIndex(const QuerySnapshot& snapshot, std::vector<std::string>* warnings = nullptr);
    // Exact top-k, ties by ascending section id.
    std::vector<std::string> search(std::string_view query, std::size_t k) const;

private:
    const QuerySnapshot* snapshot_;
    std::vector<std::string> ids_;
    ExactCosineIndex matrix_;
};

struct EvalConfig {
    std::size_t sample_k = 10;
    std::uint64_t seed = 1;
    std::vector<double> thetas{0.50, 0.60, 0.75};
    std::size_t k = kDefaultK;
    int questions_per_item = kDefaultQuestions;
    std::shared_ptr<CompletionClient> answer_client;  // null: extractive answers
};

// Runs sampling, ground truth, QA generation, both retrieval conditions,
// overlap scoring, judging, Nav, and graph statistics. Stage failures are
// recorded under "failures" and the report status becomes "partial".
nlohmann::json run_eval(const EvalConfig& config, const QuerySnapshot& snapshot,
                        QaGenerator& generator, Judge& judge);

std::string config_fingerprint(const EvalConfig& config, const QuerySnapshot& snapshot,
                               const QaGenerator& generator, const Judge& judge);

nlohmann::json stats_to_json(const GraphStats& st);

}  // namespace regkg
