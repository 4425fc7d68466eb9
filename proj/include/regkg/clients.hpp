#pragma once
// Clients for external text-completion and embedding services, plus the
// retry, caching, and throttling wrappers shared by every caller.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "regkg/common.hpp"

namespace regkg {

class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    // Throws TransportError on network failure.
    virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpServiceConfig {
    std::string endpoint;  // full URL, http:// or https://
    std::string api_key;
    std::string model;
    int timeout_seconds = 60;
};

// REGKG_LLM_ENDPOINT / REGKG_LLM_API_KEY / REGKG_LLM_MODEL. nullopt when the
// endpoint is unset.
std::optional<HttpServiceConfig> completion_config_from_env();
// REGKG_EMBED_ENDPOINT / REGKG_EMBED_API_KEY.
std::optional<HttpServiceConfig> embedding_config_from_env();

// POSTs `body` as JSON and returns the response body. Throws TransportError
// on connection failure or a non-2xx status.
std::string http_post_json(const HttpServiceConfig& cfg, const std::string& body);

// OpenAI-style chat completion request; the reply text is read from
// choices[0].message.content, choices[0].text, or a top-level
// "text"/"response"/"completion" field.
class HttpCompletionClient final : public CompletionClient {
public:
    explicit HttpCompletionClient(HttpServiceConfig cfg) : cfg_(std::move(cfg)) {}
    std::string complete(const std::string& prompt) override;

private:
    HttpServiceConfig cfg_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{200};  // doubled after each failure
};

// Runs `fn`, retrying on TransportError with exponential backoff; rethrows
// the last error once attempts are exhausted.
std::string with_retry(const RetryPolicy& policy, const std::function<std::string()>& fn);

class RetryingCompletionClient final : public CompletionClient {
public:
    RetryingCompletionClient(std::shared_ptr<CompletionClient> inner, RetryPolicy policy = {})
        : inner_(std::move(inner)), policy_(policy) {}
    std::string complete(const std::string& prompt) override;

private:
    std::shared_ptr<CompletionClient> inner_;
    RetryPolicy policy_;
};

// Disk cache keyed by the prompt hash: <dir>/<fnv1a64(prompt)>.txt. Readers
// run concurrently; writes are exclusive and published atomically.
class CachingCompletionClient final : public CompletionClient {
public:
    CachingCompletionClient(std::shared_ptr<CompletionClient> inner, std::filesystem::path dir);
    std::string complete(const std::string& prompt) override;

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    std::shared_ptr<CompletionClient> inner_;
    std::filesystem::path dir_;
    std::mutex write_mu_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

// Bounds the number of concurrent in-flight requests to the inner client.
class ThrottledCompletionClient final : public CompletionClient {
public:
    ThrottledCompletionClient(std::shared_ptr<CompletionClient> inner, int max_in_flight);
    std::string complete(const std::string& prompt) override;

private:
    std::shared_ptr<CompletionClient> inner_;
    int max_in_flight_;
    int in_flight_ = 0;
    std::mutex mu_;
    std::condition_variable cv_;
};

// Full production stack: throttle -> retry -> HTTP, fronted by the disk
// cache when `cache_dir` is non-empty.
std::shared_ptr<CompletionClient> make_completion_client(const HttpServiceConfig& cfg,
                                                         const std::filesystem::path& cache_dir,
                                                         int max_in_flight = 4);

}  // namespace regkg
