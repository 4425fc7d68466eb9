#pragma once
// HTTP service over an immutable query snapshot.
//
//   POST /query          {question, k?, mode?, hops?}
//   GET  /subgraph       ?seed=<s|p|o>[&seed=...]&hops=<n>
//   GET  /section/<id>
//   GET  /stats          ?mode=with|without
//   GET  /healthz
//   POST /admin/reload
//
// Every JSON response carries snapshot_version.

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "regkg/pipeline.hpp"
#include "regkg/qa.hpp"

namespace httplib {
class Server;
}

namespace regkg {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::string api_token;  // when set, required as "Authorization: Bearer <token>"
    QueryOptions defaults;
};

class Service {
public:
    using Loader = std::function<std::shared_ptr<const QuerySnapshot>()>;

    // Loads the initial snapshot immediately; loader errors propagate.
    Service(ServiceConfig config, Loader loader, std::shared_ptr<CompletionClient> generator = nullptr);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Binds and serves on the calling thread until stop().
    void run();
    void stop();

    std::shared_ptr<const QuerySnapshot> snapshot() const;
    // Publishes a freshly loaded snapshot. On failure the current one stays.
    std::uint64_t reload();

private:
    void install_routes();

    ServiceConfig config_;
    Loader loader_;
    std::shared_ptr<CompletionClient> generator_;
    mutable std::mutex mu_;
    std::shared_ptr<const QuerySnapshot> snapshot_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace regkg
