#include "regkg/embedding.hpp"

#include <cmath>

#include "json.hpp"
#include "regkg/common.hpp"

namespace regkg {

using nlohmann::json;

double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw ConfigError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        s += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
    return s;
}

double l2_norm(const EmbeddingVector& v) {
    double s = 0.0;
    for (float x : v.values) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

EmbeddingVector normalized(const std::vector<double>& raw) {
    double sq = 0.0;
    for (double x : raw) {
        if (!std::isfinite(x)) throw Error("embedding has non-finite entries");
        sq += x * x;
    }
    if (sq == 0.0) throw Error("unembeddable text");
    const double norm = std::sqrt(sq);
    EmbeddingVector v;
    v.values.reserve(raw.size());
    for (double x : raw) v.values.push_back(static_cast<float>(x / norm));
    return v;
}

std::string render_triplet(const Triplet& t) {
    std::string out = t.subject + " " + t.predicate + " " + t.object;
    for (const auto& [k, v] : t.qualifiers) out += " [" + k + "=" + v + "]";
    return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashingEmbedder::id() const {
    return std::string(kVersion) + "/d" + std::to_string(dim_);
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
    if (trim(text).empty()) throw ConfigError("cannot embed empty text");
    const auto tokens = tokenize(text);
    std::vector<double> acc(dim_, 0.0);
    auto add = [&](std::string_view feature) {
        const std::uint64_t h = fnv1a64(feature);
        acc[h % dim_] += (h >> 63) == 0 ? 1.0 : -1.0;
    };
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add(tokens[i]);
        if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1]);
    }
    return normalized(acc);
}

HttpEmbedder::HttpEmbedder(HttpServiceConfig cfg, std::size_t dim, std::filesystem::path cache_dir,
                           RetryPolicy retry)
    : cfg_(std::move(cfg)), dim_(dim), cache_dir_(std::move(cache_dir)), retry_(retry) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
    if (!cache_dir_.empty()) std::filesystem::create_directories(cache_dir_);
}

std::string HttpEmbedder::id() const {
    return "external:" + (cfg_.model.empty() ? cfg_.endpoint : cfg_.model) + "/d" +
           std::to_string(dim_);
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
    if (trim(text).empty()) throw ConfigError("cannot embed empty text");
    std::filesystem::path cached;
    std::string body;
    if (!cache_dir_.empty()) {
        cached = cache_dir_ / (hex64(fnv1a64(text, fnv1a64(id()))) + ".json");
        if (std::filesystem::exists(cached)) body = read_file(cached);
    }
    if (body.empty()) {
        json req;
        if (!cfg_.model.empty()) req["model"] = cfg_.model;
        req["input"] = std::string(text);
        body = with_retry(retry_, [&] { return http_post_json(cfg_, req.dump()); });
    }
    std::vector<double> raw;
    try {
        json res = json::parse(body);
        const json* arr = nullptr;
        if (res.contains("data") && res["data"].is_array() && !res["data"].empty())
            arr = &res["data"][0].at("embedding");
        else if (res.contains("embedding"))
            arr = &res["embedding"];
        if (!arr || !arr->is_array()) throw TransportError("embedding response has no vector");
        raw = arr->get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed embedding response: ") + e.what());
    }
    if (raw.size() != dim_)
        throw TransportError("embedding service returned " + std::to_string(raw.size()) +
                             " values, expected " + std::to_string(dim_));
    auto v = normalized(raw);
    if (!cached.empty() && !std::filesystem::exists(cached)) {
        std::lock_guard lock(write_mu_);
        atomic_write_file(cached, body);
    }
    return v;
}

std::shared_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
    if (cfg.backend == "baseline") return std::make_shared<HashingEmbedder>(cfg.dim);
    if (cfg.backend == "external") {
        auto http = embedding_config_from_env();
        if (!http) throw ConfigError("external embedder requires REGKG_EMBED_ENDPOINT");
        return std::make_shared<HttpEmbedder>(*http, cfg.dim, cfg.cache_dir);
    }
    throw ConfigError("unknown embedder backend '" + cfg.backend + "'");
}

std::shared_ptr<Embedder> embedder_for_id(const std::string& embedder_id,
                                          const std::filesystem::path& cache_dir) {
    auto slash = embedder_id.rfind("/d");
    if (slash == std::string::npos) throw ConfigError("malformed embedder id '" + embedder_id + "'");
    std::size_t dim = 0;
    try {
        dim = std::stoul(embedder_id.substr(slash + 2));
    } catch (const std::exception&) {
        throw ConfigError("malformed embedder id '" + embedder_id + "'");
    }
    const std::string backend = embedder_id.substr(0, slash);
    if (backend == HashingEmbedder::kVersion) return std::make_shared<HashingEmbedder>(dim);
    if (backend.rfind("external:", 0) == 0) {
        auto http = embedding_config_from_env();
        if (!http) throw ConfigError("index was built with " + embedder_id +
                                     " but REGKG_EMBED_ENDPOINT is not set");
        auto e = std::make_shared<HttpEmbedder>(*http, dim, cache_dir);
        if (e->id() != embedder_id)
            throw ConfigError("configured embedding service " + e->id() +
                              " does not match index embedder " + embedder_id);
        return e;
    }
    throw ConfigError("unknown embedder '" + embedder_id + "'");
}

}  // namespace regkg
