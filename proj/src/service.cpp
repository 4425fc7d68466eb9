#include "regkg/service.hpp"

#include "httplib.h"
#include "json.hpp"
#include "regkg/eval.hpp"
#include "regkg/section_graph.hpp"

namespace regkg {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, json body, std::uint64_t version) {
    body["snapshot_version"] = version;
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 std::uint64_t version) {
    reply(res, status, json{{"error", message}}, version);
}

SectionGraphMode stats_mode(const std::string& s) {
    if (s.empty() || s == "with" || s == "with_triplets") return SectionGraphMode::with_triplets;
    if (s == "without" || s == "text_only" || s == "without_triplets") return SectionGraphMode::text_only;
    throw ConfigError("unknown stats mode '" + s + "' (expected with|without)");
}

int parse_int(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("malformed ") + what + " '" + s + "'");
    }
}

}  // namespace

Service::Service(ServiceConfig config, Loader loader, std::shared_ptr<CompletionClient> generator)
    : config_(std::move(config)),
      loader_(std::move(loader)),
      generator_(std::move(generator)),
      server_(std::make_unique<httplib::Server>()) {
    snapshot_ = loader_();
    if (!snapshot_) throw ConfigError("snapshot loader returned nothing");
    install_routes();
}

Service::~Service() { stop(); }

std::shared_ptr<const QuerySnapshot> Service::snapshot() const {
    std::lock_guard lock(mu_);
    return snapshot_;
}

std::uint64_t Service::reload() {
    auto fresh = loader_();
    if (!fresh) throw ConfigError("snapshot loader returned nothing");
    std::lock_guard lock(mu_);
    snapshot_ = std::move(fresh);
    return snapshot_->version();
}

int Service::start() {
    int port = config_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(config_.host);
    } else if (!server_->bind_to_port(config_.host, port)) {
        port = -1;
    }
    if (port < 0)
        throw ConfigError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void Service::run() {
    if (!server_->listen(config_.host, config_.port))
        throw ConfigError("cannot listen on " + config_.host + ":" + std::to_string(config_.port));
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

void Service::install_routes() {
    auto& srv = *server_;

    srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (config_.api_token.empty() || req.path == "/healthz") return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + config_.api_token)
            return httplib::Server::HandlerResponse::Unhandled;
        reply_error(res, 401, "missing or invalid bearer token", snapshot()->version());
        return httplib::Server::HandlerResponse::Handled;
    });

    // Each handler pins one snapshot for its whole lifetime.
    auto guarded = [this](auto body) {
        return [this, body](const httplib::Request& req, httplib::Response& res) {
            const auto snap = snapshot();
            try {
                body(*snap, req, res);
            } catch (const ConfigError& e) {
                reply_error(res, 400, e.what(), snap->version());
            } catch (const FormatError& e) {
                reply_error(res, 400, e.what(), snap->version());
            } catch (const NotFoundError& e) {
                reply_error(res, 404, e.what(), snap->version());
            } catch (const json::exception& e) {
                reply_error(res, 400, std::string("malformed request body: ") + e.what(), snap->version());
            } catch (const std::exception& e) {
                reply_error(res, 500, e.what(), snap->version());
            }
        };
    };

    srv.Get("/healthz", guarded([](const QuerySnapshot& snap, const httplib::Request&,
                                   httplib::Response& res) {
                reply(res, 200, json{{"status", "ok"}}, snap.version());
            }));

    srv.Post("/query", guarded([this](const QuerySnapshot& snap, const httplib::Request& req,
                                      httplib::Response& res) {
                 const json body = json::parse(req.body);
                 if (!body.is_object() || !body.contains("question") || !body["question"].is_string())
                     throw ConfigError("request body must be an object with a string 'question'");
                 QueryOptions opts = config_.defaults;
                 opts.generator = generator_.get();
                 if (body.contains("k")) {
                     const int k = body["k"].get<int>();
                     if (k < 1) throw ConfigError("k must be at least 1");
                     opts.k = static_cast<std::size_t>(k);
                 }
                 if (body.contains("mode")) opts.mode = answer_mode_from_string(body["mode"].get<std::string>());
                 if (body.contains("hops")) opts.hops = body["hops"].get<int>();
                 if (opts.hops < 0 || opts.hops > kMaxHops)
                     throw ConfigError("hops must be in [0, " + std::to_string(kMaxHops) + "]");
                 const auto result = run_query_pipeline(snap, body["question"].get<std::string>(), opts);
                 reply(res, 200, query_result_to_json(result, opts.hops), snap.version());
             }));

    srv.Get("/subgraph", guarded([](const QuerySnapshot& snap, const httplib::Request& req,
                                    httplib::Response& res) {
                const auto n = req.get_param_value_count("seed");
                if (n == 0) throw ConfigError("at least one seed=<subject|predicate|object> is required");
                std::vector<TripletKey> seeds;
                for (std::size_t i = 0; i < n; ++i) {
                    const auto raw = req.get_param_value("seed", i);
                    auto key = parse_key(raw);
                    if (!key) throw ConfigError("malformed seed key '" + raw + "'");
                    seeds.push_back(*key);
                }
                const int hops = req.has_param("hops") ? parse_int(req.get_param_value("hops"), "hops") : 1;
                try {
                    const auto sg = k_hop_subgraph(snap.graph(), seeds, hops, snap.sections());
                    reply(res, 200, subgraph_to_json(sg), snap.version());
                } catch (const NotFoundError& e) {
                    reply_error(res, 400, e.what(), snap.version());
                }
            }));

    srv.Get(R"(/section/(.+))", guarded([](const QuerySnapshot& snap, const httplib::Request& req,
                                           httplib::Response& res) {
                const std::string id = req.matches[1];
                reply(res, 200, section_to_json(snap.section(id)), snap.version());
            }));

    srv.Get("/stats", guarded([](const QuerySnapshot& snap, const httplib::Request& req,
                                 httplib::Response& res) {
                const auto mode = stats_mode(req.get_param_value("mode"));
                const auto sg = build_section_graph(snap.graph(), snap.sections(), mode);
                json body = stats_to_json(graph_stats(sg));
                body["mode"] = mode == SectionGraphMode::with_triplets ? "with_triplets" : "text_only";
                reply(res, 200, body, snap.version());
            }));

    srv.Post("/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
        try {
            const auto v = reload();
            reply(res, 200, json{{"status", "reloaded"}}, v);
        } catch (const std::exception& e) {
            reply_error(res, 500, std::string("reload failed; keeping current snapshot: ") + e.what(),
                        snapshot()->version());
        }
    });
}

}  // namespace regkg
