#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "regkg/extraction.hpp"
#include "support.hpp"

using namespace regkg;

namespace {

const Section& by_id(const std::vector<Section>& v, const std::string& id) {
    for (const auto& s : v)
        if (s.id == id) return s;
    throw NotFoundError(id);
}

std::set<std::string> keys_of(const std::vector<Triplet>& ts) {
    std::set<std::string> out;
    for (const auto& t : ts) out.insert(to_string(t.key()));
    return out;
}

}  // namespace

TEST_CASE("structural: section under a subpart") {
    const auto sections = test::fixture_sections();
    const auto h = index_sections(sections);
    const auto ts = extract_structural(by_id(sections, "117.257"), h);
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].subject == "§117.257");
    CHECK(ts[0].predicate == "inSubpart");
    CHECK(ts[0].object == "PART 117 SUBPART E");
    CHECK(ts[0].extractor == ExtractorKind::structural);
    CHECK(ts[0].confidence == 1.0);
}

TEST_CASE("structural: part and subchapter give two partOf edges") {
    const auto sections = test::fixture_sections();
    const auto h = index_sections(sections);
    auto ts = extract_structural(by_id(sections, "Part117"), h);
    const auto more = extract_structural(by_id(sections, "SubchapterB"), h);
    ts.insert(ts.end(), more.begin(), more.end());
    CHECK(keys_of(ts) == std::set<std::string>{"PART 117|partOf|SUBCHAPTER B",
                                               "SUBCHAPTER B|partOf|CHAPTER I"});
    CHECK(extract_structural(by_id(sections, "ChapterI"), h).empty());

    Section orphan = by_id(sections, "117.257");
    orphan.parent_id = "Part999";
    CHECK_THROWS_AS(extract_structural(orphan, h), ConfigError);
}

TEST_CASE("references: one triplet per distinct target") {
    const auto sections = test::fixture_sections();
    const auto& s = by_id(sections, "117.257");
    const auto xr = extract_cross_references(s);
    const auto ts = extract_references(s, xr);
    REQUIRE(ts.size() == 1);
    CHECK(to_string(ts[0].key()) == "§117.257|references|§117.264");

    Section twice = s;
    twice.text = "See § 117.264. Appeals follow § 117.264 as well, and § 117.257 itself.";
    const auto xr2 = extract_cross_references(twice);
    CHECK(xr2.size() == 3);
    const auto ts2 = extract_references(twice, xr2);
    REQUIRE(ts2.size() == 1);  // duplicate target collapsed, self reference skipped
    CHECK(ts2[0].object == "§117.264");
}

TEST_CASE("timeframes") {
    const auto sections = test::fixture_sections();
    const auto ts = extract_timeframes(by_id(sections, "117.264"));
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].subject == "§117.264");
    CHECK(ts[0].predicate == "hasTimeframe");
    CHECK(ts[0].object == "15 days to appeal the order");
    CHECK(ts[0].qualifiers == std::map<std::string, std::string>{{"count", "15"}, {"unit", "days"}});

    Section within = by_id(sections, "117.264");
    within.text = "You must file the response within 30 days.";
    const auto w = extract_timeframes(within);
    REQUIRE(w.size() == 1);
    CHECK(w[0].qualifiers == std::map<std::string, std::string>{{"count", "30"}, {"unit", "days"}});

    within.text = "No deadline here.";
    CHECK(extract_timeframes(within).empty());
}

TEST_CASE("llm line parser replays the recorded response") {
    int dropped = 0;
    const auto ts = parse_llm_triplets(test::fixture_text("llm/extraction_response.txt"), &dropped);
    CHECK(dropped == 2);
    REQUIRE(ts.size() == 3);
    CHECK(to_string(ts[0].key()) == "FDA|requires|submission within 15 days");
    CHECK(ts[0].confidence == doctest::Approx(0.9));
    CHECK(ts[0].extractor == ExtractorKind::llm);
    CHECK(ts[1].confidence == 0.5);  // non-numeric
    CHECK(ts[2].confidence == 1.0);  // clamped
}

TEST_CASE("llm extractor: prompts, chunking, failures") {
    const auto sections = test::fixture_sections();
    const auto& s = by_id(sections, "117.264");

    test::ScriptedClient client({test::fixture_text("llm/extraction_response.txt")});
    std::map<std::string, int> warnings;
    const auto ts = extract_llm(s, client, &warnings);
    CHECK(ts.size() == 3);
    REQUIRE(client.prompts.size() == 1);
    CHECK(client.prompts[0].find("15 days to appeal") != std::string::npos);
    CHECK(warnings["llm_dropped_lines"] == 2);

    test::ScriptedClient chunked({"x|y|z|1"});
    LlmOptions small;
    small.context_budget = 90;
    extract_llm(s, chunked, nullptr, small);
    CHECK(chunked.prompts.size() >= 2);

    test::ScriptedClient empty({""});
    std::map<std::string, int> w2;
    CHECK(extract_llm(s, empty, &w2).empty());
    CHECK(w2["llm_empty_response"] == 1);
}

TEST_CASE("extract_all on the fixture") {
    const auto sections = test::fixture_sections();
    const auto h = index_sections(sections);
    const ExtractionConfig cfg;

    const auto b257 = extract_all(by_id(sections, "117.257"), h, cfg);
    CHECK(keys_of(b257.triplets) == std::set<std::string>{"§117.257|inSubpart|PART 117 SUBPART E",
                                                          "§117.257|references|§117.264"});
    CHECK(b257.extractor_versions.count("structural") == 1);

    std::size_t total = 0;
    std::map<std::string, int> by_pred;
    for (const auto& s : sections) {
        for (const auto& t : extract_all(s, h, cfg).triplets) {
            ++total;
            ++by_pred[t.predicate];
        }
    }
    // Hand count: 3 partOf (two chapter-level links plus the subpart link),
    // 4 inSubpart, 3 references, 1 timeframe.
    CHECK(total == 11);
    CHECK(by_pred == std::map<std::string, int>{
                         {"partOf", 3}, {"inSubpart", 4}, {"references", 3}, {"hasTimeframe", 1}});
}

TEST_CASE("extract_all with llm enabled, optional and required") {
    const auto sections = test::fixture_sections();
    const auto h = index_sections(sections);
    test::ScriptedClient failing({test::ScriptedClient::kFail});
    auto cfg = ExtractionConfig::from_list("structural,llm");
    cfg.client = &failing;

    const auto b = extract_all(by_id(sections, "117.264"), h, cfg);
    CHECK(b.warnings.at("llm_errors") == 1);
    CHECK(b.triplets.size() == 1);

    cfg.llm_required = true;
    CHECK_THROWS_AS(extract_all(by_id(sections, "117.264"), h, cfg), TransportError);

    test::ScriptedClient ok({test::fixture_text("llm/extraction_response.txt")});
    cfg.client = &ok;
    const auto b2 = extract_all(by_id(sections, "117.264"), h, cfg);
    CHECK(b2.triplets.size() == 4);
    CHECK(b2.triplets.back().extractor == ExtractorKind::llm);
}

TEST_CASE("extraction config validation") {
    CHECK_THROWS_AS(ExtractionConfig::from_list("structural,bogus"), ConfigError);
    ExtractionConfig none{false, false, false, false};
    const auto sections = test::fixture_sections();
    CHECK_THROWS_AS(extract_all(sections[0], index_sections(sections), none), ConfigError);
}

TEST_CASE("batches round-trip through jsonl") {
    const auto sections = test::fixture_sections();
    const auto h = index_sections(sections);
    std::vector<ExtractionBatch> batches;
    for (const auto& s : sections) batches.push_back(extract_all(s, h, ExtractionConfig{}));
    const auto text = batches_to_jsonl(batches);
    CHECK(batches_from_jsonl(text) == batches);
    CHECK(batches_to_jsonl(batches_from_jsonl(text)) == text);
}
