#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "regkg/knowledge_graph.hpp"
#include "regkg/section_graph.hpp"
#include "regkg/store.hpp"
#include "support.hpp"

using namespace regkg;

namespace {

const std::set<std::string> kFig1{
    "PART 117 SUBPART E|partOf|PART 117",
    "PART 117|partOf|SUBCHAPTER B",
    "SUBCHAPTER B|partOf|CHAPTER I",
    "§117.257|inSubpart|PART 117 SUBPART E",
    "§117.260|inSubpart|PART 117 SUBPART E",
    "§117.264|inSubpart|PART 117 SUBPART E",
    "§117.267|inSubpart|PART 117 SUBPART E",
    "§117.257|references|§117.264",
    "§117.260|references|§117.267",
    "§117.267|references|§117.264",
    "§117.264|hasTimeframe|15 days to appeal the order",
};

std::set<std::pair<std::string, std::string>> edge_set(const SectionGraph& sg) {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& e : sg.edges) out.emplace(e.a, e.b);
    return out;
}

}  // namespace

TEST_CASE("fixture graph holds the hand-enumerated triplet set") {
    const auto g = test::build_graph(test::fixture_sections());
    CHECK(test::key_strings(g) == kFig1);
    CHECK(audit(g).empty());
    const auto hr = g.triplets.at({"§117.264", "hasTimeframe", "15 days to appeal the order"});
    CHECK(hr.qualifiers.at("count") == "15");
    CHECK(g.provenance.at({"§117.257", "references", "§117.264"}) == std::set<std::string>{"117.257"});
}

TEST_CASE("triplets_of_section") {
    const auto g = test::build_graph(test::fixture_sections());
    const auto ts = triplets_of_section(g, "117.257");
    REQUIRE(ts.size() == 2);
    CHECK(to_string(ts[0].key()) == "§117.257|inSubpart|PART 117 SUBPART E");
    CHECK(to_string(ts[1].key()) == "§117.257|references|§117.264");
    CHECK(triplets_of_section(g, "ChapterI").empty());
    CHECK_THROWS_AS(triplets_of_section(g, "999.1"), NotFoundError);

    // Summed per-section counts reach the triplet count, and exceed it once
    // any triplet has several source sections.
    auto shared = g;
    ExtractionBatch b;
    b.section_id = "117.260";
    b.triplets = {g.triplets.at({"§117.257", "references", "§117.264"})};
    merge_update(shared, b);
    std::size_t sum = 0;
    for (const auto& id : shared.known_sections) sum += triplets_of_section(shared, id).size();
    CHECK(sum == shared.triplets.size() + 1);
}

TEST_CASE("audit reports broken invariants") {
    auto g = test::build_graph(test::fixture_sections());
    g.section_index["117.257"].clear();
    CHECK_FALSE(audit(g).empty());
    auto h = test::build_graph(test::fixture_sections());
    h.provenance.begin()->second.clear();
    CHECK_FALSE(audit(h).empty());
}

TEST_CASE("persistence round-trip is byte-identical") {
    test::TempDir dir;
    const auto g = test::build_graph(test::fixture_sections());
    persist_graph(g, dir.path());
    CHECK(graph_exists(dir.path()));
    const auto back = load_graph(dir.path());
    CHECK(back == g);
    CHECK(serialize_triplets(back) == serialize_triplets(g));
    CHECK(serialize_provenance(back) == serialize_provenance(g));
    CHECK(graph_checksum(back) == graph_checksum(g));

    auto raw = read_file(dir / "triplets.jsonl");
    raw[raw.size() / 2] ^= 0x20;
    atomic_write_file(dir / "triplets.jsonl", raw);
    CHECK_THROWS_AS(load_graph(dir.path()), CorruptStoreError);
}

TEST_CASE("section graph on the fixture") {
    const auto sections = test::fixture_sections();
    const auto g = test::build_graph(sections);
    const auto with = build_section_graph(g, sections, SectionGraphMode::with_triplets);
    const auto text = build_section_graph(g, sections, SectionGraphMode::text_only);
    CHECK(with.nodes == std::vector<std::string>{"117.257", "117.260", "117.264", "117.267"});

    const std::set<std::pair<std::string, std::string>> refs{
        {"117.257", "117.264"}, {"117.260", "117.267"}, {"117.264", "117.267"}};
    CHECK(edge_set(text) == refs);
    const auto we = edge_set(with);
    CHECK(std::includes(we.begin(), we.end(), refs.begin(), refs.end()));

    const auto e = std::find_if(with.edges.begin(), with.edges.end(), [](const SectionEdge& x) {
        return x.a == "117.257" && x.b == "117.264";
    });
    REQUIRE(e != with.edges.end());
    CHECK(e->linking);
    CHECK(e->keys.count({"§117.257", "references", "§117.264"}) == 1);
}

TEST_CASE("graph_stats on the fixture equals the BFS oracle") {
    const auto sections = test::fixture_sections();
    const auto g = test::build_graph(sections);
    for (auto mode : {SectionGraphMode::with_triplets, SectionGraphMode::text_only}) {
        const auto sg = build_section_graph(g, sections, mode);
        const auto st = graph_stats(sg);
        CHECK(st == oracle::bfs_stats(sg));
        CHECK(st.edge_count == 3);
        CHECK(st.avg_degree == 1.5);
        CHECK(st.avg_shortest_path == 10.0 / 6.0);
    }
}

TEST_CASE("graph_stats edge cases and random graphs") {
    SectionGraph empty;
    const auto st = graph_stats(empty);
    CHECK(st.node_count == 0);
    CHECK_FALSE(st.path_defined);

    SectionGraph lone;
    lone.nodes = {"a", "b"};
    const auto ls = graph_stats(lone);
    CHECK(ls.component_count == 2);
    CHECK(ls.unconnected_sections == 2);
    CHECK_FALSE(ls.path_defined);

    std::mt19937_64 rng(11);
    for (int i = 0; i < 30; ++i) {
        const auto sg = oracle::random_graph(rng, 60);
        CHECK(graph_stats(sg) == oracle::bfs_stats(sg));
    }
}

TEST_CASE("graph_stats samples paths above the exact limit") {
    SectionGraph sg;
    for (std::size_t i = 0; i < kExactPathLimit + 10; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "n%05zu", i);
        sg.nodes.emplace_back(buf);
    }
    for (std::size_t i = 0; i + 1 < sg.nodes.size(); ++i) {
        SectionEdge e;
        e.a = sg.nodes[i];
        e.b = sg.nodes[i + 1];
        sg.edges.push_back(e);
    }
    const auto a = graph_stats(sg, 200, 5);
    const auto b = graph_stats(sg, 200, 5);
    CHECK(a.path_sampled);
    CHECK(a.path_pairs == 200);
    CHECK(a == b);
    // path graph: mean distance over all pairs is (n + 1) / 3
    const double exact = (static_cast<double>(sg.nodes.size()) + 1.0) / 3.0;
    CHECK(a.avg_shortest_path == doctest::Approx(exact).epsilon(0.15));
}

TEST_CASE("k_hop_subgraph") {
    const auto sections = test::fixture_sections();
    const auto g = test::build_graph(sections);
    const TripletKey ref{"§117.257", "references", "§117.264"};

    const auto zero = k_hop_subgraph(g, std::vector{ref}, 0, sections);
    CHECK(zero.edges.size() == 1);
    CHECK(zero.nodes.size() == 2);

    const auto one = k_hop_subgraph(g, std::vector{ref}, 1, sections);
    std::set<std::string> ks;
    for (const auto& t : one.edges) ks.insert(to_string(t.key()));
    CHECK(ks.count("§117.264|hasTimeframe|15 days to appeal the order") == 1);
    const auto n264 = std::find_if(one.nodes.begin(), one.nodes.end(),
                                   [](const SubgraphNode& n) { return n.id == "§117.264"; });
    REQUIRE(n264 != one.nodes.end());
    CHECK(n264->kind == NodeKind::section);
    CHECK(n264->section_id == "117.264");
    CHECK(n264->hop == 0);

    for (const auto& seed : {ref, TripletKey{"§117.260", "references", "§117.267"},
                             TripletKey{"§117.267", "references", "§117.264"}}) {
        const auto two = k_hop_subgraph(g, std::vector{seed}, 2, sections);
        std::set<std::string> ids;
        for (const auto& n : two.nodes) ids.insert(n.id);
        for (const char* s : {"§117.257", "§117.260", "§117.264", "§117.267"})
            CHECK_MESSAGE(ids.count(s) == 1, to_string(seed) << " misses " << s);
    }

    CHECK_THROWS_AS(k_hop_subgraph(g, std::vector{ref}, 5), ConfigError);
    CHECK_THROWS_AS(k_hop_subgraph(g, std::vector<TripletKey>{}, 1), ConfigError);
    try {
        k_hop_subgraph(g, std::vector{TripletKey{"x", "y", "z"}}, 1);
        FAIL("expected NotFoundError");
    } catch (const NotFoundError& e) {
        CHECK(std::string(e.what()).find("x|y|z") != std::string::npos);
    }

    SubgraphLimits tight;
    tight.max_nodes = 3;
    const auto cut = k_hop_subgraph(g, std::vector{ref}, 4, sections, tight);
    CHECK(cut.truncated);
    CHECK(cut.nodes.size() <= 3);
}

TEST_CASE("store: artifacts, merge log, checksum") {
    test::TempDir dir;
    const Store store(dir.path());
    CHECK_FALSE(store.has_corpus());
    const auto sections = test::fixture_sections();
    const auto manifest = make_manifest("mini", sections, "2024-04-01T00:00:00Z");
    store.save_corpus(manifest, sections);
    CHECK(store.load_sections() == sections);
    CHECK(store.load_manifest() == manifest);

    const auto g = test::build_graph(sections);
    store.save_graph(g);
    CHECK(store.load_graph() == g);

    store.reset_log();
    MergeDelta d;
    d.added.push_back({"a", "b", "c"});
    store.append_log("117.257", d, 1);
    store.append_log("117.260", d, 2);
    CHECK(store.log_entries() == 2);
    const auto sum = store.checksum();
    CHECK(store.checksum() == sum);

    auto log = read_file(store.log_path());
    log[log.find("117.260")] = 'X';
    atomic_write_file(store.log_path(), log);
    CHECK_THROWS_AS(store.log_entries(), CorruptStoreError);
    CHECK(store.checksum() != sum);

    // a manifest that disagrees with the section file is refused both ways
    auto wrong = manifest;
    wrong.section_count = 3;
    CHECK_THROWS_AS(store.save_corpus(wrong, sections), ConfigError);
    write_versioned(store.manifest_path(), "manifest", manifest_to_json(wrong));
    CHECK_THROWS_AS(store.load_sections(), CorruptStoreError);
}
