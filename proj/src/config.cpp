#include "regkg/config.hpp"

#include <set>

#include "json.hpp"
#include "regkg/common.hpp"

namespace regkg {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + section + "." + it.key() + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + section + "." + key + "' has the wrong type");
    }
}

void read_path(const json& obj, const char* key, std::filesystem::path& out,
               const std::string& section, const std::filesystem::path& base) {
    std::string s;
    read(obj, key, s, section);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

AppConfig parse_app_config(std::string_view text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(root, "<root>", {"corpus", "extractors", "embedder", "retrieval", "eval", "service"});
    AppConfig c;
    if (root.contains("corpus")) {
        const auto& s = root["corpus"];
        check_keys(s, "corpus", {"path", "id", "ingest_timestamp"});
        read_path(s, "path", c.corpus.path, "corpus", base_dir);
        read(s, "id", c.corpus.id, "corpus");
        if (s.contains("ingest_timestamp")) {
            std::string ts;
            read(s, "ingest_timestamp", ts, "corpus");
            c.corpus.ingest_timestamp = ts;
        }
    }
    if (root.contains("extractors")) {
        const auto& s = root["extractors"];
        check_keys(s, "extractors", {"enabled", "llm_required", "context_budget", "aliases", "llm_cache_dir"});
        if (s.contains("enabled")) {
            if (s["enabled"].is_array()) {
                std::vector<std::string> names;
                read(s, "enabled", names, "extractors");
                c.extractors.enabled = join(names, ",");
            } else {
                read(s, "enabled", c.extractors.enabled, "extractors");
            }
        }
        read(s, "llm_required", c.extractors.llm_required, "extractors");
        read(s, "context_budget", c.extractors.context_budget, "extractors");
        read_path(s, "aliases", c.extractors.aliases, "extractors", base_dir);
        read_path(s, "llm_cache_dir", c.extractors.llm_cache_dir, "extractors", base_dir);
    }
    if (root.contains("embedder")) {
        const auto& s = root["embedder"];
        check_keys(s, "embedder", {"backend", "dim", "cache_dir"});
        read(s, "backend", c.embedder.backend, "embedder");
        read(s, "dim", c.embedder.dim, "embedder");
        read_path(s, "cache_dir", c.embedder.cache_dir, "embedder", base_dir);
    }
    if (root.contains("retrieval")) {
        const auto& s = root["retrieval"];
        check_keys(s, "retrieval", {"k", "mode", "hops", "llm_cache_dir"});
        read(s, "k", c.retrieval.k, "retrieval");
        read(s, "mode", c.retrieval.mode, "retrieval");
        read(s, "hops", c.retrieval.hops, "retrieval");
        read_path(s, "llm_cache_dir", c.retrieval.llm_cache_dir, "retrieval", base_dir);
    }
    if (root.contains("eval")) {
        const auto& s = root["eval"];
        check_keys(s, "eval", {"sample_k", "seed", "thetas", "judge", "generator", "questions_per_item"});
        read(s, "sample_k", c.eval.sample_k, "eval");
        read(s, "seed", c.eval.seed, "eval");
        read(s, "thetas", c.eval.thetas, "eval");
        read(s, "judge", c.eval.judge, "eval");
        read(s, "generator", c.eval.generator, "eval");
        read(s, "questions_per_item", c.eval.questions_per_item, "eval");
    }
    if (root.contains("service")) {
        const auto& s = root["service"];
        check_keys(s, "service", {"host", "port", "api_token"});
        read(s, "host", c.service.host, "service");
        read(s, "port", c.service.port, "service");
        read(s, "api_token", c.service.api_token, "service");
    }
    return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
    return parse_app_config(read_file(path), path.parent_path());
}

}  // namespace regkg
