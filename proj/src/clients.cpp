#include "regkg/clients.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "regkg/common.hpp"

namespace regkg {

using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint is not a URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::optional<HttpServiceConfig> completion_config_from_env() {
    HttpServiceConfig cfg;
    cfg.endpoint = env_or_empty("REGKG_LLM_ENDPOINT");
    if (cfg.endpoint.empty()) return std::nullopt;
    cfg.api_key = env_or_empty("REGKG_LLM_API_KEY");
    cfg.model = env_or_empty("REGKG_LLM_MODEL");
    return cfg;
}

std::optional<HttpServiceConfig> embedding_config_from_env() {
    HttpServiceConfig cfg;
    cfg.endpoint = env_or_empty("REGKG_EMBED_ENDPOINT");
    if (cfg.endpoint.empty()) return std::nullopt;
    cfg.api_key = env_or_empty("REGKG_EMBED_API_KEY");
    return cfg;
}

std::string http_post_json(const HttpServiceConfig& cfg, const std::string& body) {
    auto url = parse_url(cfg.endpoint);
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(cfg.timeout_seconds, 0);
    cli.set_read_timeout(cfg.timeout_seconds, 0);
    cli.set_write_timeout(cfg.timeout_seconds, 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);
    auto res = cli.Post(url.path, headers, body, "application/json");
    if (!res) {
        throw TransportError("POST " + cfg.endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("POST " + cfg.endpoint + " returned HTTP " +
                             std::to_string(res->status));
    }
    return res->body;
}

std::string HttpCompletionClient::complete(const std::string& prompt) {
    json req;
    if (!cfg_.model.empty()) req["model"] = cfg_.model;
    req["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    req["temperature"] = 0;
    const std::string raw = http_post_json(cfg_, req.dump());

    json res;
    try {
        res = json::parse(raw);
    } catch (const json::parse_error&) {
        throw TransportError("completion service returned non-JSON body");
    }
    if (res.contains("choices") && res["choices"].is_array() && !res["choices"].empty()) {
        const auto& c = res["choices"][0];
        if (c.contains("message") && c["message"].contains("content") &&
            c["message"]["content"].is_string())
            return c["message"]["content"].get<std::string>();
        if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    }
    for (const char* k : {"text", "response", "completion"})
        if (res.contains(k) && res[k].is_string()) return res[k].get<std::string>();
    throw TransportError("completion service response has no recognizable text field");
}

std::string with_retry(const RetryPolicy& policy, const std::function<std::string()>& fn) {
    auto delay = policy.base_delay;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransportError&) {
            if (attempt >= policy.attempts) throw;
        }
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        delay *= 2;
    }
}

std::string RetryingCompletionClient::complete(const std::string& prompt) {
    return with_retry(policy_, [&] { return inner_->complete(prompt); });
}

CachingCompletionClient::CachingCompletionClient(std::shared_ptr<CompletionClient> inner,
                                                 std::filesystem::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string CachingCompletionClient::complete(const std::string& prompt) {
    const auto path = dir_ / (hex64(fnv1a64(prompt)) + ".txt");
    if (std::filesystem::exists(path)) {
        ++hits_;
        return read_file(path);
    }
    std::string response = inner_->complete(prompt);
    ++misses_;
    std::lock_guard lock(write_mu_);
    if (!std::filesystem::exists(path)) atomic_write_file(path, response);
    return response;
}

ThrottledCompletionClient::ThrottledCompletionClient(std::shared_ptr<CompletionClient> inner,
                                                     int max_in_flight)
    : inner_(std::move(inner)), max_in_flight_(std::max(1, max_in_flight)) {}

std::string ThrottledCompletionClient::complete(const std::string& prompt) {
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
        ++in_flight_;
    }
    struct Release {
        ThrottledCompletionClient* self;
        ~Release() {
            {
                std::lock_guard lock(self->mu_);
                --self->in_flight_;
            }
            self->cv_.notify_one();
        }
    } release{this};
    return inner_->complete(prompt);
}

std::shared_ptr<CompletionClient> make_completion_client(const HttpServiceConfig& cfg,
                                                         const std::filesystem::path& cache_dir,
                                                         int max_in_flight) {
    std::shared_ptr<CompletionClient> client = std::make_shared<HttpCompletionClient>(cfg);
    client = std::make_shared<RetryingCompletionClient>(std::move(client));
    client = std::make_shared<ThrottledCompletionClient>(std::move(client), max_in_flight);
    if (!cache_dir.empty())
        client = std::make_shared<CachingCompletionClient>(std::move(client), cache_dir);
    return client;
}

}  // namespace regkg
