#pragma once
// Staged, checkpointed build pipeline (ingest -> extract -> normalize ->
// index) and the query pipeline (retrieve -> story -> answer -> subgraph).

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "regkg/embedding.hpp"
#include "regkg/extraction.hpp"
#include "regkg/qa.hpp"
#include "regkg/section_graph.hpp"
#include "regkg/store.hpp"

namespace regkg {

enum class StageStatus { pending, running, done, failed };

std::string_view to_string(StageStatus s);

using Counters = std::map<std::string, std::int64_t>;

struct StageRecord {
    std::string name;
    StageStatus status = StageStatus::pending;
    std::string started;
    std::string finished;
    Counters counters;
    std::string error;
};

struct PipelineJob {
    std::string job_id;
    std::vector<StageRecord> stages;
    std::string store_path;

    bool succeeded() const;
    // Throws NotFoundError for an unknown stage name.
    const StageRecord& stage(std::string_view name) const;
};

inline const std::vector<std::string> kBuildStages{"ingest", "extract", "normalize", "index"};

nlohmann::json job_to_json(const PipelineJob& job);
PipelineJob job_from_json(const nlohmann::json& j);

struct BuildOptions {
    std::filesystem::path corpus;
    std::filesystem::path store;
    std::string corpus_id;  // defaults to the corpus file stem
    // Written into the manifest. Falls back to SOURCE_DATE_EPOCH, then the
    // current time.
    std::optional<std::string> ingest_timestamp;
    ExtractionConfig extraction;
    std::filesystem::path aliases;  // empty: no alias table
    EmbedderConfig embedder;
};

// Individual stages, each reading its inputs from and writing its outputs
// to the store. Return the stage counters.
Counters run_ingest_stage(const BuildOptions& options);
Counters run_extract_stage(const BuildOptions& options);
Counters run_normalize_stage(const BuildOptions& options);
Counters run_index_stage(const BuildOptions& options);

// Runs the four stages in order, checkpointing <store>/job.json after every
// transition. A rerun with the same inputs skips stages already done. The
// first failing stage is marked failed with its cause and later stages stay
// pending; the job is returned rather than thrown. Only one build may run
// against a store at a time.
PipelineJob run_build_pipeline(const BuildOptions& options);

// Throws ConfigError("index not built ...") when the store has no index.
std::shared_ptr<const QuerySnapshot> load_snapshot(const Store& store,
                                                   const std::filesystem::path& embed_cache = {});

struct QueryOptions {
    std::size_t k = kDefaultK;
    AnswerMode mode = AnswerMode::extractive;
    int hops = 1;
    CompletionClient* generator = nullptr;  // required for generated mode
};

struct QueryResult {
    Answer answer;
    Subgraph subgraph;
    std::uint64_t snapshot_version = 0;
};

QueryResult run_query_pipeline(const QuerySnapshot& snapshot, std::string_view question,
                               const QueryOptions& options);
QueryResult run_query_pipeline(const Store& store, std::string_view question,
                               const QueryOptions& options);

// JSON bodies shared by the CLI and the HTTP service.
nlohmann::json query_result_to_json(const QueryResult& r, int hops);
nlohmann::json subgraph_to_json(const Subgraph& sg);
nlohmann::json section_to_json(const Section& s);
std::string url_encode(std::string_view s);

}  // namespace regkg
