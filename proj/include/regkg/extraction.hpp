#pragma once
// Triplet extraction from sections: hierarchy structure, cross-references,
// timeframes, and an optional external-LLM extractor.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "regkg/clients.hpp"
#include "regkg/corpus.hpp"
#include "regkg/triplet.hpp"

namespace regkg {

struct ExtractionBatch {
    std::string section_id;
    std::vector<Triplet> triplets;
    std::map<std::string, std::string> extractor_versions;
    std::map<std::string, int> warnings;

    bool operator==(const ExtractionBatch&) const = default;
};

using HierarchyIndex = std::unordered_map<std::string, const Section*>;

HierarchyIndex index_sections(std::span<const Section> sections);

// (child, partOf, parent) for every hierarchy edge, except a section sitting
// directly under a subpart, which yields (section, inSubpart, subpart).
// Throws ConfigError when section.parent_id is not in `hierarchy`.
std::vector<Triplet> extract_structural(const Section& section, const HierarchyIndex& hierarchy);

// One (section, references, target) per distinct non-self target, ordered by
// first occurrence.
std::vector<Triplet> extract_references(const Section& section,
                                        std::span<const CrossReference> xrefs);

// "<N> <unit> to <action>" and "within <N> <unit>", units days / business
// days / months / years. Subject is the section itself.
std::vector<Triplet> extract_timeframes(const Section& section);

struct LlmOptions {
    std::size_t context_budget = 6000;  // characters of section text per prompt
};

std::string llm_extraction_prompt(const Section& section, std::string_view chunk);

// Parses `subject|predicate|object|confidence` lines. Lines without exactly
// four fields, or with an empty subject/predicate/object, are dropped and
// counted in `dropped`. A missing or non-numeric confidence becomes 0.5;
// numeric values are clamped to [0, 1].
std::vector<Triplet> parse_llm_triplets(std::string_view response, int* dropped = nullptr);

// Sends the section (split on sentence boundaries when over budget) to the
// client. Warning counters "llm_dropped_lines" and "llm_empty_response" are
// accumulated into `warnings` when non-null.
std::vector<Triplet> extract_llm(const Section& section, CompletionClient& client,
                                 std::map<std::string, int>* warnings = nullptr,
                                 const LlmOptions& options = {});

struct ExtractionConfig {
    bool structural = true;
    bool reference = true;
    bool timeframe = true;
    bool llm = false;
    bool llm_required = false;
    CompletionClient* client = nullptr;
    LlmOptions llm_options;

    bool any_enabled() const { return structural || reference || timeframe || llm; }

    // "structural,reference,timeframe[,llm]"; throws ConfigError on an
    // unknown name.
    static ExtractionConfig from_list(std::string_view names);
};

// Union of the enabled extractors, deduplicated by identity key. Ordered by
// extractor (structural, reference, timeframe, llm) and then by key.
// Throws ConfigError when nothing is enabled; LLM failures propagate only
// when the llm extractor is required, otherwise they become the
// "llm_errors" warning.
ExtractionBatch extract_all(const Section& section, const HierarchyIndex& hierarchy,
                            const ExtractionConfig& config);

std::string batches_to_jsonl(std::span<const ExtractionBatch> batches);
std::vector<ExtractionBatch> batches_from_jsonl(std::string_view payload);

}  // namespace regkg
