#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "regkg/embedding.hpp"
#include "regkg/vector_index.hpp"
#include "support.hpp"

using namespace regkg;

TEST_CASE("render_triplet") {
    Triplet t;
    t.subject = "FDA";
    t.predicate = "requires";
    t.object = "submission within 15 days";
    CHECK(render_triplet(t) == "FDA requires submission within 15 days");
    t.qualifiers = {{"unit", "days"}, {"count", "15"}};
    CHECK(render_triplet(t) == "FDA requires submission within 15 days [count=15] [unit=days]");
}

TEST_CASE("hashing embedder golden vector") {
    // tests/oracles/oracles.py: 11 features, each in its own bucket
    const HashingEmbedder e;
    CHECK(e.id() == "fnv1a-hash-v1/d256");
    const auto v = e.embed("FDA requires submission within 15 days");
    REQUIRE(v.dim() == 256);
    const double w = 0.301511344578;
    const std::map<std::size_t, double> expected{
        {9, w},    {21, w},   {32, w},   {78, w},   {106, -w}, {139, w},
        {147, -w}, {150, -w}, {216, -w}, {234, -w}, {242, -w}};
    for (std::size_t i = 0; i < v.dim(); ++i) {
        const auto it = expected.find(i);
        const double want = it == expected.end() ? 0.0 : it->second;
        CHECK_MESSAGE(v.values[i] == doctest::Approx(want).epsilon(1e-7), "bucket " << i);
    }
    CHECK(l2_norm(v) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(e.embed("fda REQUIRES submission, within 15 days!") == v);
    CHECK_THROWS_AS(e.embed("   "), ConfigError);
    CHECK_THROWS_AS(e.embed("§ - ."), Error);
    CHECK_THROWS_AS(HashingEmbedder(0), ConfigError);
}

TEST_CASE("shared tokens raise cosine") {
    const HashingEmbedder e;
    const auto a = e.embed("FDA requires submission within 15 days");
    const double near = dot(a, e.embed("FDA requires submission"));
    const double far = dot(a, e.embed("CHAPTER I partOf SUBCHAPTER B"));
    CHECK(near == doctest::Approx(0.6741998624632421).epsilon(1e-6));
    CHECK(far == doctest::Approx(0.0));
    CHECK(near > far);
}

TEST_CASE("normalized rejects zero and non-finite input") {
    CHECK_THROWS_AS(normalized({0.0, 0.0}), Error);
    CHECK_THROWS_AS(normalized({1.0, NAN}), Error);
    const auto v = normalized({3.0, 4.0});
    CHECK(v.values[0] == doctest::Approx(0.6));
}

TEST_CASE("make_embedder and embedder_for_id") {
    EmbedderConfig cfg;
    cfg.dim = 64;
    const auto e = make_embedder(cfg);
    CHECK(e->id() == "fnv1a-hash-v1/d64");
    CHECK(embedder_for_id(e->id())->dim() == 64);
    cfg.backend = "bogus";
    CHECK_THROWS_AS(make_embedder(cfg), ConfigError);
    CHECK_THROWS_AS(embedder_for_id("mystery/d3"), ConfigError);
}

TEST_CASE("index_build on the fixture") {
    const auto g = test::build_graph(test::fixture_sections());
    const HashingEmbedder e;
    const auto idx = index_build(g, e);
    CHECK(idx.size() == 11);
    CHECK(idx.embedder_id() == e.id());
    CHECK(idx.graph_version() == g.version);
    for (const auto& r : idx.records()) {
        CHECK(std::abs(l2_norm(r.vector) - 1.0) < kUnitNormTolerance);
        CHECK(r.provenance.size() == g.provenance.at(r.key).size());
        CHECK(r.vector == e.embed(render_triplet(g.triplets.at(r.key))));
    }
    CHECK(std::is_sorted(idx.records().begin(), idx.records().end(),
                         [](const VectorRecord& a, const VectorRecord& b) { return a.key < b.key; }));

    CHECK_THROWS_AS(index_build(KnowledgeGraph{}, e), ConfigError);
}

TEST_CASE("exact index matches the brute-force oracle") {
    std::mt19937_64 rng(3);
    const std::size_t d = 32;
    ExactCosineIndex idx(d);
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 50; ++i) {
        auto v = test::random_unit(rng, d);
        rows.push_back(v.values);
        idx.add(v);
    }
    // duplicates force ties
    idx.add(EmbeddingVector{rows[7]});
    rows.push_back(rows[7]);
    idx.add(EmbeddingVector{rows[3]});
    rows.push_back(rows[3]);

    for (int q = 0; q < 40; ++q) {
        const auto query = q % 5 == 0 ? EmbeddingVector{rows[7]} : test::random_unit(rng, d);
        for (std::size_t k : {1u, 3u, 10u, 52u, 80u}) {
            const auto got = idx.search(query, k);
            const auto want = oracle::brute_knn(rows, query.values, k);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].row == want[i].row);
                CHECK(got[i].score == want[i].score);
            }
        }
    }
    CHECK_THROWS_AS(idx.search(test::random_unit(rng, d), 0), ConfigError);
    CHECK_THROWS_AS(idx.search(test::random_unit(rng, d + 1), 1), ConfigError);
    CHECK_THROWS_AS(idx.add(test::random_unit(rng, d + 1)), ConfigError);
}

TEST_CASE("index_search ties break by key and embedder ids must match") {
    const HashingEmbedder e;
    std::vector<VectorRecord> recs;
    const auto v = e.embed("same text");
    for (const char* s : {"c", "a", "b"}) recs.push_back({{s, "p", "o"}, v, {"x"}, e.id()});
    recs.push_back({{"z", "p", "o"}, e.embed("other words entirely"), {"x"}, e.id()});
    const IndexSnapshot snap(e.id(), e.dim(), 3, recs);
    const auto hits = index_search(snap, v, 3, e.id());
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].key.subject == "a");
    CHECK(hits[1].key.subject == "b");
    CHECK(hits[2].key.subject == "c");
    CHECK_THROWS_AS(index_search(snap, v, 3, "fnv1a-hash-v1/d128"), ConfigError);

    auto dup = recs;
    dup.push_back(recs[0]);
    CHECK_THROWS_AS(IndexSnapshot(e.id(), e.dim(), 3, dup), ConfigError);
    auto off = recs;
    off[0].vector.values[0] += 0.5f;
    CHECK_THROWS_AS(IndexSnapshot(e.id(), e.dim(), 3, off), ConfigError);
    auto mixed = recs;
    mixed[1].embedder_id = "other";
    CHECK_THROWS_AS(IndexSnapshot(e.id(), e.dim(), 3, mixed), ConfigError);
}

TEST_CASE("index serialization round-trip") {
    test::TempDir dir;
    const auto g = test::build_graph(test::fixture_sections());
    const auto idx = index_build(g, HashingEmbedder{});
    const auto bytes = serialize_index(idx);
    const auto back = deserialize_index(bytes, "mem");
    CHECK(back.records() == idx.records());
    CHECK(serialize_index(back) == bytes);

    save_index(idx, dir / "index.bin");
    const auto loaded = load_index(dir / "index.bin");
    CHECK(loaded.records() == idx.records());
    CHECK(loaded.graph_version() == idx.graph_version());

    auto raw = read_file(dir / "index.bin");
    raw[raw.size() - 3] ^= 0x01;
    atomic_write_file(dir / "index.bin", raw);
    CHECK_THROWS_AS(load_index(dir / "index.bin"), CorruptStoreError);
}
