#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "regkg/qa.hpp"
#include "support.hpp"

using namespace regkg;

namespace {

std::set<std::string> keys(const RetrievalBundle& b) {
    std::set<std::string> out;
    for (const auto& t : b.top_triplets) out.insert(to_string(t.triplet.key()));
    return out;
}

std::vector<std::string> evidence_ids(const RetrievalBundle& b) {
    std::vector<std::string> out;
    for (const auto& s : b.evidence_sections) out.push_back(s.id);
    return out;
}

}  // namespace

TEST_CASE("snapshot validation") {
    auto sections = test::fixture_sections();
    auto g = test::build_graph(sections);
    auto e = std::make_shared<HashingEmbedder>();
    auto idx = index_build(g, *e);
    auto other = std::make_shared<HashingEmbedder>(128);
    CHECK_THROWS_AS(QuerySnapshot(sections, g, idx, other), ConfigError);
    auto stale = g;
    stale.version += 1;
    CHECK_THROWS_AS(QuerySnapshot(sections, stale, idx, e), ConfigError);
    const QuerySnapshot ok(sections, g, idx, e);
    CHECK(ok.section("117.264").heading == "Procedure for submitting an appeal.");
    CHECK_THROWS_AS(ok.section("1.1"), NotFoundError);
    CHECK(ok.find_section("1.1") == nullptr);
}

TEST_CASE("retrieve: references to 117.264") {
    const auto snap = test::fixture_snapshot();
    const auto b = retrieve("Which sections reference §117.264?", 5, *snap);
    CHECK(b.top_triplets.size() == 5);
    const auto ks = keys(b);
    CHECK(ks.count("§117.257|references|§117.264") == 1);
    CHECK(ks.count("§117.267|references|§117.264") == 1);
    const auto ev = evidence_ids(b);
    CHECK(std::find(ev.begin(), ev.end(), "117.257") != ev.end());
    CHECK(b.snapshot_version == snap->version());
    for (std::size_t i = 1; i < b.top_triplets.size(); ++i)
        CHECK(b.top_triplets[i - 1].score >= b.top_triplets[i].score);
}

TEST_CASE("retrieve: evidence is the provenance union of the oracle top-k") {
    const auto snap = test::fixture_snapshot();
    std::vector<std::vector<float>> rows;
    for (const auto& r : snap->index().records()) rows.push_back(r.vector.values);
    for (const char* q : {"appeal deadline", "informal hearing request", "qualified facility exemption",
                          "part of chapter", "written appeal to FDA"}) {
        for (std::size_t k : {1u, 3u, 5u, 11u, 20u}) {
            const auto b = retrieve(q, k, *snap);
            const auto hits = oracle::brute_knn(rows, snap->embedder().embed(q).values, k);
            // ties by key are row order, since records are sorted by key
            std::vector<std::string> want_ids;
            std::set<std::string> seen;
            REQUIRE(hits.size() == b.top_triplets.size());
            for (std::size_t i = 0; i < hits.size(); ++i) {
                const auto& rec = snap->index().records()[hits[i].row];
                CHECK(rec.key == b.top_triplets[i].triplet.key());
                for (const auto& id : rec.provenance)
                    if (seen.insert(id).second) want_ids.push_back(id);
            }
            CHECK(evidence_ids(b) == want_ids);
        }
    }
}

TEST_CASE("retrieve errors") {
    const auto snap = test::fixture_snapshot();
    CHECK_THROWS_AS(retrieve("appeal", 0, *snap), ConfigError);
    CHECK_THROWS_AS(retrieve("   ", 3, *snap), ConfigError);
    CHECK_THROWS_AS(retrieve("§ - ?", 3, *snap), Error);
}

TEST_CASE("build_story template") {
    const auto snap = test::fixture_snapshot();
    RetrievalBundle b;
    b.query = "q";
    b.k = 2;
    ScoredTriplet a;
    a.triplet = snap->graph().triplets.at({"§117.257", "references", "§117.264"});
    a.score = 0.5;
    a.sections = {"117.257"};
    ScoredTriplet c;
    c.triplet = snap->graph().triplets.at({"§117.257", "inSubpart", "PART 117 SUBPART E"});
    c.score = 0.25;
    c.sections = {"117.257"};
    b.top_triplets = {a, c};
    b.evidence_sections = {snap->section("117.257")};
    const auto& s = snap->section("117.257");
    const std::string expected = "FACTS\n"
                                 "1. §117.257 references §117.264 (score 0.5000)\n"
                                 "2. §117.257 inSubpart PART 117 SUBPART E (score 0.2500)\n"
                                 "\nEVIDENCE\n"
                                 "[117.257] " + s.heading + "\n" + s.text + "\n\n";
    CHECK(build_story(b) == expected);

    const auto cut = build_story(b, 200);
    CHECK(cut.size() <= 200);
    CHECK(cut.find(kTruncationMarker) != std::string::npos);
    CHECK(cut.rfind("FACTS\n1. ", 0) == 0);

    CHECK(build_story(RetrievalBundle{}) == kNoEvidence);
}

TEST_CASE("story cap drops lowest-ranked evidence first") {
    const auto snap = test::fixture_snapshot();
    const auto b = retrieve("appeal the order", 11, *snap);
    const auto full = build_story(b);
    CHECK(full.size() <= kStoryCap);
    const auto first = "[" + b.evidence_sections.front().id + "]";
    const auto last = "[" + b.evidence_sections.back().id + "]";
    const auto cut = build_story(b, full.size() - 40);
    CHECK(cut.find(first) != std::string::npos);
    CHECK(cut.find(last + " " + b.evidence_sections.back().heading + "\n" +
                   b.evidence_sections.back().text) == std::string::npos);
    CHECK(cut.size() <= full.size() - 40);
}

TEST_CASE("generated answer from a recorded response") {
    const auto snap = test::fixture_snapshot();
    const auto b = retrieve("How many days to appeal an order and request an informal hearing?", 11, *snap);
    test::ScriptedClient client({test::fixture_text("llm/answer_response.txt")});
    const auto a = generate_answer(b.query, b, client, snap->embedder());
    CHECK(a.mode == AnswerMode::generated);
    CHECK_FALSE(a.degraded);
    CHECK(a.text.find("15 days") != std::string::npos);
    CHECK(a.citations == std::vector<std::string>{"117.264", "117.267"});
    REQUIRE(client.prompts.size() == 1);
    CHECK(client.prompts[0].find("hasTimeframe 15 days to appeal the order") != std::string::npos);
}

TEST_CASE("parse_cited_ids") {
    const auto snap = test::fixture_snapshot();
    const auto b = retrieve("appeal", 11, *snap);
    CHECK(parse_cited_ids("see [§ 117.257] and [117.264], again [117.257], not [1.1] [", b) ==
          std::vector<std::string>{"117.257", "117.264"});
    CHECK(parse_cited_ids("no brackets", b).empty());
}

TEST_CASE("generator failure degrades to extractive") {
    const auto snap = test::fixture_snapshot();
    const auto b = retrieve("how long to appeal", 5, *snap);
    test::ScriptedClient failing({test::ScriptedClient::kFail});
    const auto a = generate_answer(b.query, b, failing, snap->embedder());
    CHECK(a.degraded);
    CHECK(a.mode == AnswerMode::extractive);
    REQUIRE(a.citations.size() == 1);
}

TEST_CASE("extractive answers") {
    const auto snap = test::fixture_snapshot();
    const auto& e = snap->embedder();
    // oracle cosines: the 15-day sentence beats all hierarchy boilerplate
    const auto q = e.embed("how long to appeal");
    const double fifteen =
        dot(q, e.embed("A qualified facility that receives an order has 15 days to appeal the order."));
    CHECK(fifteen == doctest::Approx(0.15118578920369088).epsilon(1e-6));
    for (const auto& s : snap->sections())
        if (!s.id.starts_with("117.")) CHECK(dot(q, e.embed(s.text)) < fifteen);

    const auto b = retrieve("how long to appeal", 5, *snap);
    const auto a = answer_extractive("how long to appeal", b, e);
    REQUIRE(a.citations.size() == 1);
    const auto& cited = snap->section(a.citations[0]);
    CHECK(cited.text.find(a.text) != std::string::npos);
    CHECK(a.text == "To appeal an order to withdraw a qualified facility exemption, you must submit a "
                    "written appeal to FDA.");

    const auto none = answer_extractive("anything", RetrievalBundle{}, e);
    CHECK(none.text == kRefusal);
    CHECK(none.citations.empty());
}

TEST_CASE("extractive ties go to the earlier sentence") {
    const HashingEmbedder e;
    RetrievalBundle b;
    Section s1;
    s1.id = "a.1";
    s1.text = "Alpha beta. Alpha beta.";
    Section s2 = s1;
    s2.id = "a.2";
    b.evidence_sections = {s1, s2};
    const auto a = answer_extractive("alpha beta", b, e);
    CHECK(a.citations == std::vector<std::string>{"a.1"});
    CHECK(a.text == "Alpha beta.");
}

TEST_CASE("answer modes") {
    CHECK(answer_mode_from_string("generated") == AnswerMode::generated);
    CHECK(to_string(AnswerMode::extractive) == "extractive");
    CHECK_THROWS_AS(answer_mode_from_string("magic"), ConfigError);
}
