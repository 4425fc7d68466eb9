#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "regkg/config.hpp"
#include "regkg/pipeline.hpp"
#include "support.hpp"

using namespace regkg;
namespace fs = std::filesystem;

namespace {

BuildOptions fixture_options(const fs::path& store) {
    BuildOptions o;
    o.corpus = test::fixture("mini_ecfr.jsonl");
    o.store = store;
    o.ingest_timestamp = "2024-04-01T00:00:00Z";
    return o;
}

std::map<std::string, std::string> store_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name == "job.json" || name == ".lock") continue;
        out[name] = read_file(e.path());
    }
    return out;
}

}  // namespace

TEST_CASE("build pipeline on the fixture") {
    test::TempDir dir;
    const auto o = fixture_options(dir / "store");
    const auto job = run_build_pipeline(o);
    REQUIRE(job.succeeded());
    for (const auto& s : job.stages) CHECK(s.status == StageStatus::done);
    CHECK(job.stage("ingest").counters.at("sections") == 8);
    CHECK(job.stage("normalize").counters.at("triplets") == 11);
    CHECK(job.stage("normalize").counters.at("triplets_added") == 11);
    CHECK(job.stage("index").counters.at("vectors") == job.stage("normalize").counters.at("triplets"));
    CHECK_THROWS_AS(job.stage("bogus"), NotFoundError);

    const Store store(o.store);
    CHECK(store.load_manifest().ingest_timestamp == "2024-04-01T00:00:00Z");
    CHECK(store.load_manifest().corpus_id == "mini_ecfr");
    CHECK(store.log_entries() > 0);

    const auto saved = job_from_json(nlohmann::json::parse(read_versioned(store.job_path(), "job")));
    CHECK(job_to_json(saved) == job_to_json(job));
}

TEST_CASE("rerun after success short-circuits") {
    test::TempDir dir;
    const auto o = fixture_options(dir / "store");
    const auto first = run_build_pipeline(o);
    const auto before = store_bytes(o.store);
    const auto second = run_build_pipeline(o);
    CHECK(second.succeeded());
    for (std::size_t i = 0; i < first.stages.size(); ++i) {
        CHECK(second.stages[i].started == first.stages[i].started);
        CHECK(second.stages[i].finished == first.stages[i].finished);
    }
    CHECK(store_bytes(o.store) == before);
}

TEST_CASE("resume restarts at the first non-done stage") {
    test::TempDir dir;
    const auto o = fixture_options(dir / "store");
    auto job = run_build_pipeline(o);
    const Store store(o.store);
    // Pretend the index stage crashed mid-run.
    job.stages[3].status = StageStatus::running;
    write_versioned(store.job_path(), "job", job_to_json(job).dump());
    fs::remove(store.index_path());

    const auto resumed = run_build_pipeline(o);
    CHECK(resumed.succeeded());
    for (std::size_t i = 0; i < 3; ++i) CHECK(resumed.stages[i].started == job.stages[i].started);
    CHECK(store.has_index());
}

TEST_CASE("same build twice is byte-identical") {
    test::TempDir a;
    test::TempDir b;
    run_build_pipeline(fixture_options(a / "store"));
    run_build_pipeline(fixture_options(b / "store"));
    const auto x = store_bytes(a / "store");
    const auto y = store_bytes(b / "store");
    CHECK(x.size() == 7);  // every artifact but job.json
    CHECK(x == y);
    CHECK(Store(a / "store").checksum() == Store(b / "store").checksum());
}

TEST_CASE("unwritable store fails ingest and leaves the rest pending") {
    test::TempDir dir;
    atomic_write_file(dir / "plainfile", "x");
    const auto job = run_build_pipeline(fixture_options(dir / "plainfile" / "store"));
    CHECK_FALSE(job.succeeded());
    CHECK(job.stages[0].status == StageStatus::failed);
    CHECK_FALSE(job.stages[0].error.empty());
    for (std::size_t i = 1; i < job.stages.size(); ++i) CHECK(job.stages[i].status == StageStatus::pending);
}

TEST_CASE("missing corpus fails ingest with the cause") {
    test::TempDir dir;
    auto o = fixture_options(dir / "store");
    o.corpus = dir / "nope.jsonl";
    const auto job = run_build_pipeline(o);
    CHECK(job.stages[0].status == StageStatus::failed);
    CHECK(job.stages[0].error.find("nope.jsonl") != std::string::npos);
    CHECK(job.stages[1].status == StageStatus::pending);
}

TEST_CASE("only one build per store") {
    test::TempDir dir;
    const auto o = fixture_options(dir / "store");
    fs::create_directories(o.store);
    const int fd = ::open((o.store / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
    REQUIRE(fd >= 0);
    REQUIRE(::flock(fd, LOCK_EX | LOCK_NB) == 0);
    const auto blocked = run_build_pipeline(o);
    CHECK(blocked.stages[0].status == StageStatus::failed);
    CHECK(blocked.stages[0].error.find("another build") != std::string::npos);
    ::flock(fd, LOCK_UN);
    ::close(fd);
    CHECK(run_build_pipeline(o).succeeded());
}

TEST_CASE("SOURCE_DATE_EPOCH pins the ingest timestamp") {
    test::TempDir dir;
    auto o = fixture_options(dir / "store");
    o.ingest_timestamp.reset();
    ::setenv("SOURCE_DATE_EPOCH", "1711929600", 1);
    run_build_pipeline(o);
    ::unsetenv("SOURCE_DATE_EPOCH");
    CHECK(Store(o.store).load_manifest().ingest_timestamp == "2024-04-01T00:00:00Z");
}

TEST_CASE("query pipeline") {
    test::TempDir dir;
    const auto o = fixture_options(dir / "store");
    run_build_pipeline(o);
    const Store store(o.store);
    QueryOptions q;
    const auto r = run_query_pipeline(store, "How many days to appeal the order?", q);
    CHECK(r.answer.mode == AnswerMode::extractive);
    REQUIRE_FALSE(r.answer.citations.empty());
    CHECK(r.answer.text.find("15 days") != std::string::npos);
    std::set<TripletKey> sub;
    for (const auto& t : r.subgraph.edges) sub.insert(t.key());
    for (const auto& st : r.answer.bundle.top_triplets) CHECK(sub.count(st.triplet.key()) == 1);
    CHECK(r.snapshot_version == store.load_graph().version);

    const auto j = query_result_to_json(r, q.hops);
    CHECK(j["mode"] == "extractive");
    CHECK(j["snapshot_version"] == r.snapshot_version);
    CHECK(j["triplets"].size() == q.k);

    q.mode = AnswerMode::generated;
    CHECK_THROWS_AS(run_query_pipeline(store, "appeal", q), ConfigError);
    test::ScriptedClient client({test::fixture_text("llm/answer_response.txt")});
    q.generator = &client;
    CHECK(run_query_pipeline(store, "appeal days", q).answer.mode == AnswerMode::generated);
    CHECK_THROWS_AS(run_query_pipeline(store, "  ", q), ConfigError);
}

TEST_CASE("query on an unbuilt store") {
    test::TempDir dir;
    try {
        run_query_pipeline(Store(dir / "empty"), "anything", QueryOptions{});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("index not built") != std::string::npos);
    }
}

TEST_CASE("individual stages in sequence") {
    test::TempDir dir;
    const auto o = fixture_options(dir / "store");
    CHECK(run_ingest_stage(o).at("sections") == 8);
    CHECK(run_extract_stage(o).at("raw_triplets") == 11);
    CHECK(run_normalize_stage(o).at("triplets") == 11);
    CHECK(run_index_stage(o).at("vectors") == 11);
    CHECK(load_snapshot(Store(o.store))->index().size() == 11);
}

TEST_CASE("app config parsing") {
    test::TempDir dir;
    const auto cfg = parse_app_config(R"({
        "corpus": {"path": "data/c.jsonl", "id": "c"},
        "extractors": {"enabled": "structural,reference", "aliases": "aliases.txt"},
        "embedder": {"backend": "baseline", "dim": 128},
        "retrieval": {"k": 7, "mode": "extractive", "hops": 2},
        "eval": {"sample_k": 3, "seed": 9, "thetas": [0.5, 0.75], "judge": "deterministic"},
        "service": {"port": 9000, "api_token": "t"}
    })", dir.path());
    CHECK(cfg.corpus.path == dir / "data/c.jsonl");
    CHECK(cfg.extractors.aliases == dir / "aliases.txt");
    CHECK(cfg.embedder.dim == 128);
    CHECK(cfg.retrieval.k == 7);
    CHECK(cfg.retrieval.hops == 2);
    CHECK(cfg.eval.thetas == std::vector<double>{0.5, 0.75});
    CHECK(cfg.service.port == 9000);

    const auto defaults = parse_app_config("{}");
    CHECK(defaults.eval.thetas == std::vector<double>{0.50, 0.60, 0.75});
    CHECK(defaults.retrieval.k == 5);

    CHECK_THROWS_AS(parse_app_config(R"({"bogus": {}})"), ConfigError);
    CHECK_THROWS_AS(parse_app_config(R"({"retrieval": {"kk": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_app_config(R"({"retrieval": {"k": "five"}})"), ConfigError);
    CHECK_THROWS_AS(parse_app_config("not json"), ConfigError);

    atomic_write_file(dir / "cfg.json", R"({"corpus": {"path": "x.jsonl"}})");
    CHECK(load_app_config(dir / "cfg.json").corpus.path == dir / "x.jsonl");
}

TEST_CASE("url encoding") {
    CHECK(url_encode("§117.257|references|§117.264") == "%C2%A7117.257%7Creferences%7C%C2%A7117.264");
    CHECK(url_encode("a b") == "a%20b");
}
