// regkg command-line interface.

#include <csignal>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "regkg/config.hpp"
#include "regkg/eval.hpp"
#include "regkg/pipeline.hpp"
#include "regkg/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace regkg;

namespace {

struct Flags {
    std::string config_path;
    std::string store;
    std::string corpus;
    std::string corpus_id;
    std::string timestamp;
    std::string extractors;
    bool llm_required = false;
    std::string aliases;
    std::string backend;
    std::size_t dim = 0;
    std::string question;
    std::size_t k = 0;
    std::string mode;
    int hops = -1;
    bool as_json = false;
    std::vector<std::string> seeds;
    std::string out;
    std::string stats_mode = "with";
    std::size_t sample_k = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string thetas;
    std::string judge;
    std::string generator;
    int questions = 0;
    std::string host;
    int port = -1;
    std::string token;
};

AppConfig effective_config(const Flags& f) {
    AppConfig c = f.config_path.empty() ? AppConfig{} : load_app_config(f.config_path);
    if (!f.corpus.empty()) c.corpus.path = f.corpus;
    if (!f.corpus_id.empty()) c.corpus.id = f.corpus_id;
    if (!f.timestamp.empty()) c.corpus.ingest_timestamp = f.timestamp;
    if (!f.extractors.empty()) c.extractors.enabled = f.extractors;
    if (f.llm_required) c.extractors.llm_required = true;
    if (!f.aliases.empty()) c.extractors.aliases = f.aliases;
    if (!f.backend.empty()) c.embedder.backend = f.backend;
    if (f.dim != 0) c.embedder.dim = f.dim;
    if (f.k != 0) c.retrieval.k = f.k;
    if (!f.mode.empty()) c.retrieval.mode = f.mode;
    if (f.hops >= 0) c.retrieval.hops = f.hops;
    if (f.sample_k != 0) c.eval.sample_k = f.sample_k;
    if (f.seed_set) c.eval.seed = f.seed;
    if (!f.thetas.empty()) {
        c.eval.thetas.clear();
        for (const auto& t : split(f.thetas, ',')) {
            try {
                c.eval.thetas.push_back(std::stod(trim(t)));
            } catch (const std::exception&) {
                throw ConfigError("malformed theta '" + t + "'");
            }
        }
    }
    if (!f.judge.empty()) c.eval.judge = f.judge;
    if (!f.generator.empty()) c.eval.generator = f.generator;
    if (f.questions > 0) c.eval.questions_per_item = f.questions;
    if (!f.host.empty()) c.service.host = f.host;
    if (f.port >= 0) c.service.port = f.port;
    if (!f.token.empty()) c.service.api_token = f.token;
    return c;
}

std::shared_ptr<CompletionClient> llm_client(const fs::path& cache_dir, bool required) {
    auto cfg = completion_config_from_env();
    if (!cfg) {
        if (required) throw ConfigError("an external model is required; set REGKG_LLM_ENDPOINT");
        return nullptr;
    }
    return make_completion_client(*cfg, cache_dir);
}

// Keeps the LLM client alive for as long as the options reference it.
struct Build {
    BuildOptions options;
    std::shared_ptr<CompletionClient> client;
};

Build build_options(const Flags& f, bool need_corpus) {
    const AppConfig c = effective_config(f);
    Build b;
    b.options.store = f.store;
    b.options.corpus = c.corpus.path;
    if (need_corpus && b.options.corpus.empty()) throw ConfigError("--corpus is required");
    b.options.corpus_id = c.corpus.id;
    b.options.ingest_timestamp = c.corpus.ingest_timestamp;
    b.options.extraction = ExtractionConfig::from_list(c.extractors.enabled);
    b.options.extraction.llm_required = c.extractors.llm_required;
    b.options.extraction.llm_options.context_budget = c.extractors.context_budget;
    if (b.options.extraction.llm) {
        b.client = llm_client(c.extractors.llm_cache_dir, true);
        b.options.extraction.client = b.client.get();
    }
    b.options.aliases = c.extractors.aliases;
    b.options.embedder = c.embedder;
    return b;
}

void print_counters(const std::string& stage, const Counters& counters) {
    std::cout << stage << ":";
    for (const auto& [k, v] : counters) std::cout << " " << k << "=" << v;
    std::cout << "\n";
}

int cmd_build(const Flags& f) {
    auto b = build_options(f, true);
    const auto job = run_build_pipeline(b.options);
    for (const auto& s : job.stages) {
        std::cout << s.name << ": " << to_string(s.status);
        for (const auto& [k, v] : s.counters) std::cout << " " << k << "=" << v;
        if (!s.error.empty()) std::cout << " error=\"" << s.error << "\"";
        std::cout << "\n";
    }
    return job.succeeded() ? 0 : 1;
}

int cmd_query(const Flags& f) {
    const AppConfig c = effective_config(f);
    const auto snapshot = load_snapshot(Store(f.store), c.embedder.cache_dir);
    QueryOptions opts;
    opts.k = c.retrieval.k;
    opts.hops = c.retrieval.hops;
    opts.mode = answer_mode_from_string(c.retrieval.mode);
    std::shared_ptr<CompletionClient> client;
    if (opts.mode == AnswerMode::generated) {
        client = llm_client(c.retrieval.llm_cache_dir, true);
        opts.generator = client.get();
    }
    const auto result = run_query_pipeline(*snapshot, f.question, opts);
    if (f.as_json) {
        std::cout << query_result_to_json(result, opts.hops).dump(2) << "\n";
        return 0;
    }
    std::cout << result.answer.text << "\n\n";
    std::cout << "mode: " << to_string(result.answer.mode)
              << (result.answer.degraded ? " (degraded: generator unavailable)" : "") << "\n";
    std::cout << "citations:";
    for (const auto& id : result.answer.citations) std::cout << " " << id;
    std::cout << "\ntriplets:\n";
    for (const auto& st : result.answer.bundle.top_triplets) {
        char score[32];
        std::snprintf(score, sizeof score, "%.4f", st.score);
        std::cout << "  " << score << "  " << to_string(st.triplet.key()) << "  ["
                  << join(st.sections, ", ") << "]\n";
    }
    return 0;
}

int cmd_subgraph(const Flags& f) {
    const Store store(f.store);
    const auto g = store.load_graph();
    const auto sections = store.load_sections();
    std::vector<TripletKey> seeds;
    for (const auto& s : f.seeds) {
        auto key = parse_key(s);
        if (!key) throw ConfigError("malformed seed key '" + s + "' (expected subject|predicate|object)");
        seeds.push_back(*key);
    }
    const auto sg = k_hop_subgraph(g, seeds, f.hops < 0 ? 1 : f.hops, sections);
    const std::string body = subgraph_to_json(sg).dump(2) + "\n";
    if (f.out.empty())
        std::cout << body;
    else
        atomic_write_file(f.out, body);
    return 0;
}

int cmd_stats(const Flags& f) {
    const Store store(f.store);
    SectionGraphMode mode;
    if (f.stats_mode == "with" || f.stats_mode == "with_triplets")
        mode = SectionGraphMode::with_triplets;
    else if (f.stats_mode == "without" || f.stats_mode == "text_only")
        mode = SectionGraphMode::text_only;
    else
        throw ConfigError("unknown stats mode '" + f.stats_mode + "' (expected with|without)");
    const auto sg = build_section_graph(store.load_graph(), store.load_sections(), mode);
    json body = stats_to_json(graph_stats(sg));
    body["mode"] = mode == SectionGraphMode::with_triplets ? "with_triplets" : "text_only";
    std::cout << body.dump(2) << "\n";
    return 0;
}

int cmd_eval(const Flags& f) {
    const AppConfig c = effective_config(f);
    const auto snapshot = load_snapshot(Store(f.store), c.embedder.cache_dir);
    EvalConfig ec;
    ec.sample_k = c.eval.sample_k;
    ec.seed = c.eval.seed;
    ec.thetas = c.eval.thetas;
    ec.k = c.retrieval.k;
    ec.questions_per_item = c.eval.questions_per_item;
    std::shared_ptr<CompletionClient> client;
    auto need_client = [&] {
        if (!client) client = llm_client(c.retrieval.llm_cache_dir, true);
        return client;
    };
    if (answer_mode_from_string(c.retrieval.mode) == AnswerMode::generated) ec.answer_client = need_client();
    std::unique_ptr<QaGenerator> generator;
    if (c.eval.generator == "template")
        generator = std::make_unique<TemplateQaGenerator>();
    else if (c.eval.generator == "llm")
        generator = std::make_unique<LlmQaGenerator>(need_client());
    else
        throw ConfigError("unknown generator '" + c.eval.generator + "' (expected template|llm)");
    std::unique_ptr<Judge> judge;
    if (c.eval.judge == "deterministic")
        judge = std::make_unique<DeterministicJudge>();
    else if (c.eval.judge == "external")
        judge = std::make_unique<LlmJudge>(need_client());
    else
        throw ConfigError("unknown judge '" + c.eval.judge + "' (expected deterministic|external)");
    const auto report = run_eval(ec, *snapshot, *generator, *judge);
    const std::string body = report.dump(2) + "\n";
    if (f.out.empty())
        std::cout << body;
    else
        atomic_write_file(f.out, body);
    const auto& agg = report["aggregates"];
    std::cerr << "status=" << report["status"].get<std::string>()
              << " questions=" << agg["with_triplets"]["questions"] << " nav=" << agg["nav"].dump() << "\n";
    return report["status"] == "complete" ? 0 : 1;
}

Service* g_service = nullptr;

int cmd_serve(const Flags& f) {
    const AppConfig c = effective_config(f);
    ServiceConfig sc;
    sc.host = c.service.host;
    sc.port = c.service.port;
    sc.api_token = c.service.api_token;
    sc.defaults.k = c.retrieval.k;
    sc.defaults.hops = c.retrieval.hops;
    sc.defaults.mode = answer_mode_from_string(c.retrieval.mode);
    auto client = llm_client(c.retrieval.llm_cache_dir, sc.defaults.mode == AnswerMode::generated);
    const Store store(f.store);
    const fs::path cache = c.embedder.cache_dir;
    Service service(sc, [store, cache] { return load_snapshot(store, cache); }, client);
    g_service = &service;
    std::signal(SIGINT, [](int) {
        if (g_service) g_service->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_service) g_service->stop();
    });
    std::cerr << "serving " << f.store << " on " << sc.host << ":" << sc.port
              << " (snapshot_version " << service.snapshot()->version() << ")\n";
    service.run();
    g_service = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regkg: regulatory knowledge-graph builder, retriever, and evaluator"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);

    auto add_store = [&](CLI::App* sub, const char* name = "--store") {
        sub->add_option(name, f.store, "store directory")->required();
    };

    auto* ingest = app.add_subcommand("ingest", "segment a corpus into sections");
    ingest->add_option("--corpus", f.corpus, "line-delimited JSON corpus");
    add_store(ingest, "--out,--store");
    ingest->add_option("--corpus-id", f.corpus_id, "corpus identifier (default: file stem)");
    ingest->add_option("--timestamp", f.timestamp, "ingest timestamp to record (ISO-8601 UTC)");

    auto* extract = app.add_subcommand("extract", "extract triplets from ingested sections");
    add_store(extract);
    extract->add_option("--extractors", f.extractors, "comma list: structural,reference,timeframe,llm");
    extract->add_flag("--llm-required", f.llm_required, "fail instead of warning on LLM errors");

    auto* normalize = app.add_subcommand("normalize", "canonicalize and merge triplets into the graph");
    add_store(normalize);
    normalize->add_option("--aliases", f.aliases, "alias table file");

    auto* index = app.add_subcommand("index", "embed triplets and build the vector index");
    add_store(index);
    index->add_option("--backend", f.backend, "baseline|external");
    index->add_option("--dim", f.dim, "embedding dimension");

    auto* build = app.add_subcommand("build", "run ingest, extract, normalize, and index (resumable)");
    build->add_option("--corpus", f.corpus, "line-delimited JSON corpus");
    add_store(build);
    build->add_option("--corpus-id", f.corpus_id, "corpus identifier");
    build->add_option("--timestamp", f.timestamp, "ingest timestamp to record");
    build->add_option("--extractors", f.extractors, "comma list of extractors");
    build->add_flag("--llm-required", f.llm_required, "fail instead of warning on LLM errors");
    build->add_option("--aliases", f.aliases, "alias table file");
    build->add_option("--backend", f.backend, "baseline|external");
    build->add_option("--dim", f.dim, "embedding dimension");

    auto* query = app.add_subcommand("query", "answer a question from the store");
    add_store(query);
    query->add_option("question", f.question, "question text")->required();
    query->add_option("--k", f.k, "number of triplets to retrieve");
    query->add_option("--mode", f.mode, "generated|extractive");
    query->add_option("--hops", f.hops, "subgraph hops around the retrieved triplets");
    query->add_flag("--json", f.as_json, "print the HTTP response body instead of text");

    auto* subgraph = app.add_subcommand("subgraph", "extract a k-hop subgraph");
    add_store(subgraph);
    subgraph->add_option("--seed", f.seeds, "seed key subject|predicate|object (repeatable)")->required();
    subgraph->add_option("--hops", f.hops, "hops (0-4)");
    subgraph->add_option("--out", f.out, "output file (default: stdout)");

    auto* stats = app.add_subcommand("stats", "section-graph connectivity statistics");
    add_store(stats);
    stats->add_option("--mode", f.stats_mode, "with|without");

    auto* eval = app.add_subcommand("eval", "run the evaluation harness");
    add_store(eval);
    eval->add_option("--sample-k", f.sample_k, "number of target sections");
    eval->add_option("--seed", f.seed, "sampling seed")->each([&](const std::string&) { f.seed_set = true; });
    eval->add_option("--thetas", f.thetas, "comma list of similarity thresholds");
    eval->add_option("--judge", f.judge, "deterministic|external");
    eval->add_option("--generator", f.generator, "template|llm");
    eval->add_option("--questions", f.questions, "questions per target");
    eval->add_option("--k", f.k, "retrieval depth");
    eval->add_option("--mode", f.mode, "answer mode: generated|extractive");
    eval->add_option("--out", f.out, "report file (default: stdout)");

    auto* serve = app.add_subcommand("serve", "serve the HTTP API");
    add_store(serve);
    serve->add_option("--host", f.host, "bind address");
    serve->add_option("--port", f.port, "port");
    serve->add_option("--token", f.token, "require this bearer token");
    serve->add_option("--k", f.k, "default retrieval depth");
    serve->add_option("--mode", f.mode, "default answer mode");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*build) return cmd_build(f);
        if (*ingest || *extract || *normalize || *index) {
            auto b = build_options(f, static_cast<bool>(*ingest));
            if (*ingest) print_counters("ingest", run_ingest_stage(b.options));
            if (*extract) print_counters("extract", run_extract_stage(b.options));
            if (*normalize) print_counters("normalize", run_normalize_stage(b.options));
            if (*index) print_counters("index", run_index_stage(b.options));
            return 0;
        }
        if (*query) return cmd_query(f);
        if (*subgraph) return cmd_subgraph(f);
        if (*stats) return cmd_stats(f);
        if (*eval) return cmd_eval(f);
        if (*serve) return cmd_serve(f);
    } catch (const std::exception& e) {
        std::cerr << "regkg: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
