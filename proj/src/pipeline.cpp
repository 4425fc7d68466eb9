#include "regkg/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cctype>
#include <cstdlib>
#include <ctime>

#include "json_io.hpp"
#include "regkg/normalize.hpp"

namespace regkg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(StageStatus s) {
    switch (s) {
        case StageStatus::pending: return "pending";
        case StageStatus::running: return "running";
        case StageStatus::done: return "done";
        case StageStatus::failed: return "failed";
    }
    return "pending";
}

namespace {

StageStatus status_from_string(const std::string& s) {
    for (auto st : {StageStatus::pending, StageStatus::running, StageStatus::done, StageStatus::failed})
        if (to_string(st) == s) return st;
    throw CorruptStoreError("unknown stage status '" + s + "'");
}

// Advisory lock on <store>/.lock, released when the process exits.
class StoreLock {
public:
    explicit StoreLock(const fs::path& dir) {
        const auto path = dir / ".lock";
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error("cannot open lock file " + path.string());
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(fd_);
            throw ConfigError("another build is running against " + dir.string());
        }
    }
    ~StoreLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    StoreLock(const StoreLock&) = delete;
    StoreLock& operator=(const StoreLock&) = delete;

private:
    int fd_ = -1;
};

std::string resolve_timestamp(const BuildOptions& o) {
    if (o.ingest_timestamp) return *o.ingest_timestamp;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        std::time_t t = 0;
        try {
            t = static_cast<std::time_t>(std::stoll(epoch));
        } catch (const std::exception&) {
            throw ConfigError(std::string("SOURCE_DATE_EPOCH is not an integer: ") + epoch);
        }
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }
    return utc_timestamp_now();
}

std::string job_id_for(const BuildOptions& o) {
    std::uint64_t h = fnv1a64(fs::absolute(o.corpus).lexically_normal().string());
    try {
        h = fnv1a64(read_file(o.corpus), h);
    } catch (const Error&) {
        h = fnv1a64("<unreadable>", h);
    }
    json j;
    j["corpus_id"] = o.corpus_id;
    j["timestamp"] = o.ingest_timestamp ? json(*o.ingest_timestamp) : json(nullptr);
    j["extractors"] = {o.extraction.structural, o.extraction.reference, o.extraction.timeframe,
                       o.extraction.llm, o.extraction.llm_required};
    j["aliases"] = o.aliases.string();
    if (!o.aliases.empty() && fs::exists(o.aliases)) j["aliases_hash"] = hex64(fnv1a64(read_file(o.aliases)));
    j["embedder"] = {o.embedder.backend, o.embedder.dim};
    return hex64(fnv1a64(j.dump(), h));
}

void save_job(const PipelineJob& job) {
    try {
        write_versioned(Store(job.store_path).job_path(), "job", job_to_json(job).dump(2));
    } catch (const std::exception&) {
        // The store may be unwritable; the caller still receives the job.
    }
}

}  // namespace

bool PipelineJob::succeeded() const {
    for (const auto& s : stages)
        if (s.status != StageStatus::done) return false;
    return !stages.empty();
}

const StageRecord& PipelineJob::stage(std::string_view name) const {
    for (const auto& s : stages)
        if (s.name == name) return s;
    throw NotFoundError("job has no stage '" + std::string(name) + "'");
}

json job_to_json(const PipelineJob& job) {
    json j;
    j["job_id"] = job.job_id;
    j["store_path"] = job.store_path;
    j["stages"] = json::array();
    for (const auto& s : job.stages) {
        j["stages"].push_back({{"name", s.name},
                               {"status", std::string(to_string(s.status))},
                               {"started", s.started},
                               {"finished", s.finished},
                               {"counters", s.counters},
                               {"error", s.error}});
    }
    return j;
}

PipelineJob job_from_json(const json& j) {
    try {
        PipelineJob job;
        job.job_id = j.at("job_id").get<std::string>();
        job.store_path = j.at("store_path").get<std::string>();
        for (const auto& s : j.at("stages")) {
            StageRecord r;
            r.name = s.at("name").get<std::string>();
            r.status = status_from_string(s.at("status").get<std::string>());
            r.started = s.at("started").get<std::string>();
            r.finished = s.at("finished").get<std::string>();
            r.counters = s.at("counters").get<Counters>();
            r.error = s.at("error").get<std::string>();
            job.stages.push_back(std::move(r));
        }
        return job;
    } catch (const json::exception& e) {
        throw CorruptStoreError(std::string("malformed job checkpoint: ") + e.what());
    }
}

Counters run_ingest_stage(const BuildOptions& o) {
    const Store store(o.store);
    const std::string raw = read_file(o.corpus);
    auto sections = segment_corpus(raw);
    const std::string id = o.corpus_id.empty() ? o.corpus.stem().string() : o.corpus_id;
    auto manifest = make_manifest(id, sections, resolve_timestamp(o));
    store.save_corpus(manifest, sections);
    return {{"sections", static_cast<std::int64_t>(sections.size())},
            {"roots", static_cast<std::int64_t>(manifest.hierarchy_roots.size())}};
}

Counters run_extract_stage(const BuildOptions& o) {
    const Store store(o.store);
    const auto sections = store.load_sections();
    const auto hierarchy = index_sections(sections);
    std::vector<ExtractionBatch> batches;
    batches.reserve(sections.size());
    Counters c{{"batches", 0}, {"raw_triplets", 0}};
    for (const auto& s : sections) {
        batches.push_back(extract_all(s, hierarchy, o.extraction));
        c["raw_triplets"] += static_cast<std::int64_t>(batches.back().triplets.size());
        for (const auto& [w, n] : batches.back().warnings) c["warning_" + w] += n;
    }
    c["batches"] = static_cast<std::int64_t>(batches.size());
    store.save_batches(batches);
    return c;
}

Counters run_normalize_stage(const BuildOptions& o) {
    const Store store(o.store);
    const auto sections = store.load_sections();
    const auto batches = store.load_batches();
    const AliasTable aliases = o.aliases.empty() ? AliasTable{} : AliasTable::load(o.aliases);
    KnowledgeGraph g;
    for (const auto& s : sections) g.register_section(s.id);
    store.reset_log();
    std::int64_t added = 0;
    std::int64_t extended = 0;
    for (const auto& b : batches) {
        const auto delta = merge_update(g, normalize_batch(b, aliases));
        added += static_cast<std::int64_t>(delta.added.size());
        extended += static_cast<std::int64_t>(delta.provenance_extended.size());
        if (!delta.empty()) store.append_log(b.section_id, delta, g.version);
    }
    store.save_graph(g);
    return {{"triplets", static_cast<std::int64_t>(g.triplets.size())},
            {"triplets_added", added},
            {"provenance_extended", extended},
            {"entities", static_cast<std::int64_t>(g.entities.size())},
            {"graph_version", static_cast<std::int64_t>(g.version)}};
}

Counters run_index_stage(const BuildOptions& o) {
    const Store store(o.store);
    const auto g = store.load_graph();
    const auto embedder = make_embedder(o.embedder);
    const auto index = index_build(g, *embedder);
    store.save_index(index);
    return {{"vectors", static_cast<std::int64_t>(index.size())}};
}

PipelineJob run_build_pipeline(const BuildOptions& o) {
    PipelineJob job;
    job.job_id = job_id_for(o);
    job.store_path = o.store.string();
    for (const auto& name : kBuildStages) {
        StageRecord r;
        r.name = name;
        job.stages.push_back(std::move(r));
    }

    const Store store(o.store);
    if (fs::exists(store.job_path())) {
        try {
            auto prior = job_from_json(json::parse(read_versioned(store.job_path(), "job")));
            if (prior.job_id == job.job_id && prior.stages.size() == job.stages.size()) {
                job = std::move(prior);
                job.store_path = o.store.string();
                for (auto& s : job.stages) {
                    if (s.status != StageStatus::done) {
                        s.status = StageStatus::pending;
                        s.error.clear();
                    }
                }
            }
        } catch (const std::exception&) {
            // Unreadable checkpoint: start over.
        }
    }

    std::unique_ptr<StoreLock> lock;
    try {
        fs::create_directories(o.store);
        lock = std::make_unique<StoreLock>(o.store);
    } catch (const std::exception& e) {
        auto& first = job.stages.front();
        if (first.status != StageStatus::done) {
            first.status = StageStatus::failed;
            first.error = e.what();
        } else {
            for (auto& s : job.stages) {
                if (s.status != StageStatus::done) {
                    s.status = StageStatus::failed;
                    s.error = e.what();
                    break;
                }
            }
        }
        return job;
    }

    using StageFn = Counters (*)(const BuildOptions&);
    const StageFn fns[] = {run_ingest_stage, run_extract_stage, run_normalize_stage, run_index_stage};
    for (std::size_t i = 0; i < job.stages.size(); ++i) {
        auto& stage = job.stages[i];
        if (stage.status == StageStatus::done) continue;
        stage.status = StageStatus::running;
        stage.started = utc_timestamp_now();
        stage.finished.clear();
        stage.counters.clear();
        save_job(job);
        try {
            stage.counters = fns[i](o);
            stage.status = StageStatus::done;
        } catch (const std::exception& e) {
            stage.status = StageStatus::failed;
            stage.error = e.what();
        }
        stage.finished = utc_timestamp_now();
        save_job(job);
        if (stage.status == StageStatus::failed) break;
    }
    return job;
}

std::shared_ptr<const QuerySnapshot> load_snapshot(const Store& store, const fs::path& embed_cache) {
    if (!store.has_index())
        throw ConfigError("index not built for store " + store.dir().string() +
                          "; run the build pipeline or `regkg index` first");
    auto index = store.load_index();
    auto embedder = embedder_for_id(index.embedder_id(), embed_cache);
    return std::make_shared<const QuerySnapshot>(store.load_sections(), store.load_graph(),
                                                 std::move(index), std::move(embedder));
}

QueryResult run_query_pipeline(const QuerySnapshot& snapshot, std::string_view question,
                               const QueryOptions& options) {
    if (trim(question).empty()) throw ConfigError("question is empty");
    if (options.mode == AnswerMode::generated && !options.generator)
        throw ConfigError("generated mode requires a configured generator (set REGKG_LLM_ENDPOINT)");
    QueryResult r;
    r.snapshot_version = snapshot.version();
    const auto bundle = retrieve(question, options.k, snapshot);
    r.answer = options.mode == AnswerMode::generated
                   ? generate_answer(question, bundle, *options.generator, snapshot.embedder())
                   : answer_extractive(question, bundle, snapshot.embedder());
    std::vector<TripletKey> seeds;
    for (const auto& st : bundle.top_triplets) seeds.push_back(st.triplet.key());
    if (!seeds.empty()) {
        r.subgraph = k_hop_subgraph(snapshot.graph(), seeds, options.hops, snapshot.sections());
    } else {
        r.subgraph.hop_limit = options.hops;
    }
    return r;
}

QueryResult run_query_pipeline(const Store& store, std::string_view question,
                               const QueryOptions& options) {
    return run_query_pipeline(*load_snapshot(store), question, options);
}

std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

json subgraph_to_json(const Subgraph& sg) {
    json nodes = json::array();
    for (const auto& n : sg.nodes) {
        json node = {{"id", n.id},
                     {"kind", n.kind == NodeKind::section ? "section" : "entity"},
                     {"hop", n.hop}};
        node["section_id"] = n.section_id ? json(*n.section_id) : json(nullptr);
        nodes.push_back(std::move(node));
    }
    json edges = json::array();
    for (const auto& t : sg.edges) {
        json e = detail::triplet_to_json(t);
        e["key"] = to_string(t.key());
        edges.push_back(std::move(e));
    }
    json seeds = json::array();
    for (const auto& k : sg.seed_keys) seeds.push_back(to_string(k));
    return {{"nodes", nodes},
            {"edges", edges},
            {"seed_keys", seeds},
            {"hop_limit", sg.hop_limit},
            {"truncated", sg.truncated}};
}

json section_to_json(const Section& s) {
    json j;
    j["id"] = s.id;
    j["heading"] = s.heading;
    j["text"] = s.text;
    j["parent_id"] = s.parent_id ? json(*s.parent_id) : json(nullptr);
    j["citation"] = s.ref ? json(render_citation(*s.ref)) : json(nullptr);
    j["entity"] = section_entity(s);
    j["metadata"] = s.metadata;
    return j;
}

json query_result_to_json(const QueryResult& r, int hops) {
    json j;
    j["answer"] = r.answer.text;
    j["mode"] = std::string(to_string(r.answer.mode));
    j["degraded"] = r.answer.degraded;
    j["citations"] = r.answer.citations;
    json triplets = json::array();
    for (const auto& st : r.answer.bundle.top_triplets) {
        triplets.push_back({{"s", st.triplet.subject},
                            {"p", st.triplet.predicate},
                            {"o", st.triplet.object},
                            {"key", to_string(st.triplet.key())},
                            {"qualifiers", st.triplet.qualifiers},
                            {"score", st.score},
                            {"sections", st.sections}});
    }
    j["triplets"] = triplets;
    json evidence = json::array();
    for (const auto& s : r.answer.bundle.evidence_sections) evidence.push_back(s.id);
    j["evidence"] = evidence;
    std::string ref;
    if (!r.subgraph.seed_keys.empty()) {
        ref = "/subgraph?hops=" + std::to_string(hops);
        for (const auto& k : r.subgraph.seed_keys) ref += "&seed=" + url_encode(to_string(k));
    }
    j["subgraph_ref"] = ref.empty() ? json(nullptr) : json(ref);
    j["subgraph"] = subgraph_to_json(r.subgraph);
    j["snapshot_version"] = r.snapshot_version;
    return j;
}

}  // namespace regkg
