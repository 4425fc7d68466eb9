#pragma once
// Application configuration file: a JSON object with optional sections
// corpus, extractors, embedder, retrieval, eval, and service.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regkg/embedding.hpp"

namespace regkg {

struct AppConfig {
    struct Corpus {
        std::filesystem::path path;
        std::string id;  // defaults to the corpus file stem
        std::optional<std::string> ingest_timestamp;
    } corpus;
    struct Extractors {
        std::string enabled = "structural,reference,timeframe";
        bool llm_required = false;
        std::size_t context_budget = 6000;
        std::filesystem::path aliases;
        std::filesystem::path llm_cache_dir;
    } extractors;
    EmbedderConfig embedder;
    struct Retrieval {
        std::size_t k = 5;
        std::string mode = "extractive";
        int hops = 1;
        std::filesystem::path llm_cache_dir;
    } retrieval;
    struct Eval {
        std::size_t sample_k = 10;
        std::uint64_t seed = 1;
        std::vector<double> thetas{0.50, 0.60, 0.75};
        std::string judge = "deterministic";
        std::string generator = "template";
        int questions_per_item = 3;
    } eval;
    struct Service {
        std::string host = "127.0.0.1";
        int port = 8080;
        std::string api_token;
    } service;
};

// Throws ConfigError on unknown sections or keys and on mistyped values.
// Relative paths are resolved against the config file's directory.
AppConfig parse_app_config(std::string_view text, const std::filesystem::path& base_dir = {});
AppConfig load_app_config(const std::filesystem::path& path);

}  // namespace regkg
