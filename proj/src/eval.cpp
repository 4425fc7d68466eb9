#include "regkg/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include "regkg/common.hpp"

namespace regkg {

using nlohmann::json;

std::vector<std::string> sample_sections(std::span<const Section> sections, std::size_t k,
                                         std::uint64_t seed) {
    std::vector<std::string> pool;
    for (const auto* s : leaf_sections(sections)) pool.push_back(s->id);
    std::sort(pool.begin(), pool.end());
    if (k > pool.size())
        throw ConfigError("cannot sample " + std::to_string(k) + " sections from " +
                          std::to_string(pool.size()));
    XorShiftStar rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

bool is_hierarchy_entity(std::string_view entity) {
    static const std::regex re(R"(^(TITLE|CHAPTER|SUBCHAPTER|PART|SUBPART)\b)");
    return std::regex_search(entity.begin(), entity.end(), re);
}

MentionIndex::MentionIndex(std::span<const Section> sections, const KnowledgeGraph& g) {
    const auto leaves = leaf_sections(sections);
    for (const auto& s : sections) entity_.emplace(s.id, section_entity(s));
    for (const auto* s : leaves) mentions_[s->id];

    for (const auto* s : leaves) {
        for (const auto& x : extract_cross_references(*s)) {
            if (x.self || x.target_id == s->id || !mentions_.count(x.target_id)) continue;
            mentions_[s->id].insert(x.target_id);
            mentions_[x.target_id].insert(s->id);
        }
    }

    std::map<std::string, std::set<std::string>> holders;  // entity -> leaf sections
    for (const auto* s : leaves) {
        auto idx = g.section_index.find(s->id);
        if (idx == g.section_index.end()) continue;
        for (const auto& key : idx->second) {
            for (const std::string* e : {&key.subject, &key.object})
                if (!is_hierarchy_entity(*e)) holders[*e].insert(s->id);
        }
    }
    for (const auto& [entity, ids] : holders) {
        for (auto a = ids.begin(); a != ids.end(); ++a) {
            for (auto b = std::next(a); b != ids.end(); ++b) {
                mentions_[*a].insert(*b);
                mentions_[*b].insert(*a);
            }
        }
    }
}

const std::set<std::string>& MentionIndex::mentions(const std::string& target) const {
    auto it = mentions_.find(target);
    if (it == mentions_.end()) throw NotFoundError("unknown leaf section '" + target + "'");
    return it->second;
}

const std::string& MentionIndex::entity_of(const std::string& section_id) const {
    auto it = entity_.find(section_id);
    if (it == entity_.end()) throw NotFoundError("unknown section '" + section_id + "'");
    return it->second;
}

std::set<std::string> build_mentions(std::span<const Section> sections, const KnowledgeGraph& g,
                                     const std::string& target) {
    return MentionIndex(sections, g).mentions(target);
}

std::string build_retold_story(const std::string& target, const std::set<std::string>& mentions,
                               const std::function<const Section&(const std::string&)>& lookup) {
    std::string out = "=== " + target + " ===\n" + lookup(target).text;
    for (const auto& m : mentions) {
        if (m == target) continue;
        out += "\n\n=== " + m + " ===\n" + lookup(m).text;
    }
    return out;
}

std::string qa_generation_prompt(std::string_view story, int m) {
    std::string p = "Write " + std::to_string(m) +
                    " question and answer pairs that can be answered strictly from the regulatory "
                    "text below. Use exactly this format, one line each:\nQ: <question>\nA: "
                    "<answer>\n\nTEXT:\n";
    p += story;
    return p;
}

std::vector<QaPair> parse_qa_pairs(std::string_view response, int* dropped) {
    std::vector<QaPair> out;
    int bad = 0;
    std::optional<std::string> pending;
    for (const auto& raw : split(response, '\n')) {
        const std::string line = trim(raw);
        if (line.rfind("Q:", 0) == 0) {
            if (pending) ++bad;
            pending = trim(line.substr(2));
            if (pending->empty()) {
                ++bad;
                pending.reset();
            }
        } else if (line.rfind("A:", 0) == 0) {
            std::string answer = trim(line.substr(2));
            if (!pending || answer.empty()) {
                ++bad;
            } else {
                out.push_back({*pending, answer});
            }
            pending.reset();
        }
    }
    if (pending) ++bad;
    if (dropped) *dropped = bad;
    return out;
}

std::vector<QaPair> LlmQaGenerator::generate(const GroundTruthItem& item, int m, int* dropped) {
    return parse_qa_pairs(client_->complete(qa_generation_prompt(item.retold_story, m)), dropped);
}

std::vector<QaPair> TemplateQaGenerator::generate(const GroundTruthItem& item, int m, int* dropped) {
    if (dropped) *dropped = 0;
    std::vector<QaPair> out;
    std::string current;
    for (const auto& line : split(item.retold_story, '\n')) {
        if (line.rfind("=== ", 0) == 0 && line.size() > 8 && line.ends_with(" ===")) {
            current = line.substr(4, line.size() - 8);
            continue;
        }
        for (const auto& span : split_sentences(line)) {
            if (static_cast<int>(out.size()) >= m) return out;
            const std::string sentence = line.substr(span.begin, span.end - span.begin);
            std::vector<std::string> words;
            for (const auto& w : split(sentence, ' '))
                if (!w.empty()) words.push_back(w);
            if (tokenize(sentence).size() < 3) continue;
            if (words.size() > 8) words.resize(8);
            out.push_back({"What does section " + current + " say about \"" + join(words, " ") + "\"?",
                           sentence});
        }
    }
    return out;
}

std::vector<QaPair> generate_qa(const GroundTruthItem& item, QaGenerator& generator, int m,
                                std::map<std::string, int>* warnings) {
    if (trim(item.retold_story).empty()) throw ConfigError("cannot generate questions from an empty story");
    if (m < 1) throw ConfigError("questions per item must be at least 1");
    int dropped = 0;
    auto pairs = generator.generate(item, m, &dropped);
    if (dropped > 0 && warnings) (*warnings)["qa_dropped_pairs"] += dropped;
    if (pairs.empty())
        throw Error("question generation for " + item.target + " produced no well-formed pairs");
    return pairs;
}

double overlap_score(std::span<const std::string> retrieved, const std::set<std::string>& truth) {
    if (retrieved.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : retrieved)
        if (truth.count(r)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(retrieved.size());
}

double overlap_score_theta(std::span<const Section* const> retrieved,
                           std::span<const Section* const> truth, double theta,
                           const Embedder& embedder, std::vector<std::string>* warnings) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
    if (retrieved.empty()) return 0.0;
    auto try_embed = [&](const Section& s) -> std::optional<EmbeddingVector> {
        try {
            return embedder.embed(s.text);
        } catch (const Error& e) {
            if (warnings) warnings->push_back("section " + s.id + " not embeddable: " + e.what());
            return std::nullopt;
        }
    };
    std::vector<std::optional<EmbeddingVector>> truth_vecs;
    for (const auto* g : truth) truth_vecs.push_back(try_embed(*g));
    std::size_t hits = 0;
    for (const auto* r : retrieved) {
        auto rv = try_embed(*r);
        if (!rv) continue;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (!truth_vecs[i]) continue;
            const double sim = truth[i]->text == r->text ? 1.0 : dot(*rv, *truth_vecs[i]);
            if (sim >= theta) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(retrieved.size());
}

double token_f1(std::string_view candidate, std::string_view reference) {
    auto c = tokenize(candidate);
    auto r = tokenize(reference);
    if (c.empty() && r.empty()) return 1.0;
    if (c.empty() || r.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : r) ++counts[t];
    std::size_t common = 0;
    for (const auto& t : c) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double p = static_cast<double>(common) / static_cast<double>(c.size());
    const double rc = static_cast<double>(common) / static_cast<double>(r.size());
    return 2.0 * p * rc / (p + rc);
}

JudgeVerdict DeterministicJudge::judge(std::string_view candidate, std::string_view reference,
                                       std::string_view) {
    JudgeVerdict v;
    v.score = token_f1(candidate, reference);
    v.binary = v.score >= kF1Threshold ? 1 : 0;
    return v;
}

std::string judge_prompt(std::string_view candidate, std::string_view reference,
                         std::string_view story) {
    std::string p =
        "Rate whether the candidate answer is factually correct and consistent with the "
        "reference answer and the source text. Reply with a single integer from 1 (wrong) to 5 "
        "(fully correct).\n\nSOURCE:\n";
    p += story;
    p += "\n\nREFERENCE ANSWER:\n";
    p += reference;
    p += "\n\nCANDIDATE ANSWER:\n";
    p += candidate;
    p += "\n\nSCORE:";
    return p;
}

std::optional<int> parse_judge_score(std::string_view response) {
    for (std::size_t i = 0; i < response.size(); ++i) {
        const char c = response[i];
        if (c < '0' || c > '9') continue;
        std::size_t j = i;
        while (j < response.size() && response[j] >= '0' && response[j] <= '9') ++j;
        if (j - i == 1 && c >= '1' && c <= '5') return c - '0';
        i = j;
    }
    return std::nullopt;
}

JudgeVerdict LlmJudge::judge(std::string_view candidate, std::string_view reference,
                             std::string_view story) {
    std::optional<int> n;
    try {
        n = parse_judge_score(client_->complete(judge_prompt(candidate, reference, story)));
    } catch (const TransportError&) {
    }
    if (!n) {
        auto v = fallback_.judge(candidate, reference, story);
        v.fallback = true;
        return v;
    }
    JudgeVerdict v;
    v.score = (*n - 1) / 4.0;
    v.binary = *n >= 4 ? 1 : 0;
    return v;
}

JudgeVerdict judge_answer(std::string_view candidate, std::string_view reference,
                          std::string_view story, Judge& judge) {
    return judge.judge(candidate, reference, story);
}

std::string_view to_string(NavMode m) {
    return m == NavMode::strict_shared ? "strict_shared" : "shared_or_linked";
}

namespace {

const std::set<TripletKey>& keys_of(const KnowledgeGraph& g, const std::string& id) {
    static const std::set<TripletKey> none;
    auto it = g.section_index.find(id);
    return it == g.section_index.end() ? none : it->second;
}

bool links(const TripletKey& k, const std::string& ea, const std::string& eb) {
    return (k.subject == ea && k.object == eb) || (k.subject == eb && k.object == ea);
}

}  // namespace

double nav_metric(const KnowledgeGraph& g, const MentionIndex& mentions,
                  std::span<const std::string> sample, NavMode mode) {
    if (sample.empty()) throw ConfigError("nav metric requires a non-empty sample");
    double total = 0.0;
    for (const auto& s : sample) {
        const auto& ts = keys_of(g, s);
        const auto& es = mentions.entity_of(s);
        std::size_t num = 0;
        std::size_t den = 0;
        for (const auto& m : mentions.mentions(s)) {
            const auto& tm = keys_of(g, m);
            const auto& em = mentions.entity_of(m);
            std::size_t inter = 0;
            std::size_t linked = 0;
            for (const auto& k : ts) {
                if (tm.count(k))
                    ++inter;
                else if (mode == NavMode::shared_or_linked && links(k, es, em))
                    ++linked;
            }
            if (mode == NavMode::shared_or_linked)
                for (const auto& k : tm)
                    if (!ts.count(k) && links(k, es, em)) ++linked;
            num += inter + linked;
            den += ts.size() + tm.size() - inter;
        }
        if (den > 0) total += static_cast<double>(num) / static_cast<double>(den);
    }
    return total / static_cast<double>(sample.size());
}

double nav_metric(const KnowledgeGraph& g, std::span<const Section> sections,
                  std::span<const std::string> sample, NavMode mode) {
    return nav_metric(g, MentionIndex(sections, g), sample, mode);
}

SectionIndex::SectionIndex(const QuerySnapshot& snapshot, std::vector<std::string>* warnings)
    : snapshot_(&snapshot), matrix_(snapshot.embedder().dim()) {
    std::vector<const Section*> leaves = leaf_sections(snapshot.sections());
    std::sort(leaves.begin(), leaves.end(),
              [](const Section* a, const Section* b) { return a->id < b->id; });
    for (const auto* s : leaves) {
        try {
            matrix_.add(snapshot.embedder().embed(s->text));
            ids_.push_back(s->id);
        } catch (const Error& e) {
            if (warnings) warnings->push_back("section " + s->id + " not embeddable: " + e.what());
        }
    }
}

std::vector<std::string> SectionIndex::search(std::string_view query, std::size_t k) const {
    if (ids_.empty()) return {};
    std::vector<std::string> out;
    for (const auto& hit : matrix_.search(snapshot_->embedder().embed(query), k))
        out.push_back(ids_[hit.row]);
    return out;
}

json stats_to_json(const GraphStats& st) {
    return json{{"node_count", st.node_count},
                {"edge_count", st.edge_count},
                {"avg_degree", st.avg_degree},
                {"component_count", st.component_count},
                {"unconnected_sections", st.unconnected_sections},
                {"connected_sections", st.connected_sections},
                {"avg_shortest_path", st.avg_shortest_path},
                {"path_defined", st.path_defined},
                {"path_sampled", st.path_sampled},
                {"path_pairs", st.path_pairs}};
}

namespace {

std::string theta_label(double theta) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.2f", theta);
    return buf;
}

json mean_or_null(const std::vector<double>& xs) {
    if (xs.empty()) return nullptr;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

}  // namespace

std::string config_fingerprint(const EvalConfig& config, const QuerySnapshot& snapshot,
                               const QaGenerator& generator, const Judge& judge) {
    json j;
    j["sample_k"] = config.sample_k;
    j["seed"] = config.seed;
    j["thetas"] = config.thetas;
    j["k"] = config.k;
    j["questions_per_item"] = config.questions_per_item;
    j["answers"] = config.answer_client ? "generated" : "extractive";
    j["generator"] = generator.name();
    j["judge"] = judge.name();
    j["embedder"] = snapshot.embedder().id();
    j["graph_version"] = snapshot.version();
    j["graph_checksum"] = hex64(graph_checksum(snapshot.graph()));
    return hex64(fnv1a64(j.dump()));
}

json run_eval(const EvalConfig& config, const QuerySnapshot& snapshot, QaGenerator& generator,
              Judge& judge) {
    json report;
    report["config"] = {{"sample_k", config.sample_k},
                        {"seed", config.seed},
                        {"thetas", config.thetas},
                        {"k", config.k},
                        {"questions_per_item", config.questions_per_item},
                        {"answers", config.answer_client ? "generated" : "extractive"},
                        {"generator", generator.name()},
                        {"judge", judge.name()},
                        {"embedder", snapshot.embedder().id()}};
    report["config_fingerprint"] = config_fingerprint(config, snapshot, generator, judge);
    report["snapshot_version"] = snapshot.version();
    json failures = json::array();
    std::map<std::string, int> warnings;
    auto fail = [&](const std::string& stage, const std::string& what, const json& where) {
        json f = {{"stage", stage}, {"error", what}};
        for (auto it = where.begin(); it != where.end(); ++it) f[it.key()] = it.value();
        failures.push_back(std::move(f));
    };
    for (double t : config.thetas)
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("theta " + std::to_string(t) + " outside [0, 1]");

    std::vector<std::string> sample;
    try {
        sample = sample_sections(snapshot.sections(), config.sample_k, config.seed);
    } catch (const Error& e) {
        fail("sampling", e.what(), json::object());
    }
    report["sample"] = sample;

    const MentionIndex mentions(snapshot.sections(), snapshot.graph());
    std::vector<std::string> section_warnings;
    const SectionIndex section_index(snapshot, &section_warnings);
    if (!section_warnings.empty())
        warnings["section_not_embeddable"] = static_cast<int>(section_warnings.size());
    auto lookup = [&](const std::string& id) -> const Section& { return snapshot.section(id); };

    const std::vector<std::string> conditions{"with_triplets", "without_triplets"};
    std::map<std::string, std::map<std::string, std::vector<double>>> overlap_theta;
    std::map<std::string, std::vector<double>> overlap_exact, judge_score, judge_binary;
    json per_question = json::array();
    json items = json::array();

    for (const auto& target : sample) {
        GroundTruthItem item;
        item.target = target;
        try {
            item.mentions = mentions.mentions(target);
            item.retold_story = build_retold_story(target, item.mentions, lookup);
        } catch (const Error& e) {
            fail("ground_truth", e.what(), {{"target", target}});
            continue;
        }
        try {
            item.qa_pairs = generate_qa(item, generator, config.questions_per_item, &warnings);
        } catch (const Error& e) {
            fail("qa_generation", e.what(), {{"target", target}});
            continue;
        }
        items.push_back({{"target", target},
                         {"mentions", item.mentions},
                         {"questions", item.qa_pairs.size()}});

        std::set<std::string> truth_ids(item.mentions);
        truth_ids.insert(target);
        std::vector<const Section*> truth;
        for (const auto& id : truth_ids) truth.push_back(&snapshot.section(id));

        for (const auto& qa : item.qa_pairs) {
            for (const auto& condition : conditions) {
                try {
                    RetrievalBundle bundle;
                    if (condition == "with_triplets") {
                        bundle = retrieve(qa.question, config.k, snapshot);
                    } else {
                        bundle.query = qa.question;
                        bundle.k = config.k;
                        bundle.snapshot_version = snapshot.version();
                        for (const auto& id : section_index.search(qa.question, config.k))
                            bundle.evidence_sections.push_back(snapshot.section(id));
                    }
                    Answer answer = config.answer_client
                                        ? generate_answer(qa.question, bundle, *config.answer_client,
                                                          snapshot.embedder())
                                        : answer_extractive(qa.question, bundle, snapshot.embedder());
                    std::vector<std::string> retrieved;
                    std::vector<const Section*> retrieved_sections;
                    for (const auto& s : bundle.evidence_sections) {
                        retrieved.push_back(s.id);
                        retrieved_sections.push_back(&s);
                    }
                    json row;
                    row["target"] = target;
                    row["question"] = qa.question;
                    row["reference"] = qa.answer;
                    row["condition"] = condition;
                    row["retrieved"] = retrieved;
                    row["answer"] = answer.text;
                    row["answer_mode"] = std::string(to_string(answer.mode));
                    row["degraded"] = answer.degraded;
                    const double exact = overlap_score(retrieved, truth_ids);
                    row["overlap"] = exact;
                    overlap_exact[condition].push_back(exact);
                    json by_theta = json::object();
                    for (double t : config.thetas) {
                        std::vector<std::string> w;
                        const double o =
                            overlap_score_theta(retrieved_sections, truth, t, snapshot.embedder(), &w);
                        if (!w.empty()) warnings["overlap_unembeddable"] += static_cast<int>(w.size());
                        by_theta[theta_label(t)] = o;
                        overlap_theta[condition][theta_label(t)].push_back(o);
                    }
                    row["overlap_theta"] = by_theta;
                    const auto verdict = judge_answer(answer.text, qa.answer, item.retold_story, judge);
                    row["judge"] = {{"score", verdict.score},
                                    {"binary", verdict.binary},
                                    {"fallback", verdict.fallback}};
                    judge_score[condition].push_back(verdict.score);
                    judge_binary[condition].push_back(verdict.binary);
                    if (verdict.fallback) ++warnings["judge_fallback"];
                    per_question.push_back(std::move(row));
                } catch (const Error& e) {
                    fail("answering", e.what(),
                         {{"target", target}, {"question", qa.question}, {"condition", condition}});
                }
            }
        }
    }
    report["items"] = items;
    report["per_question"] = per_question;

    json aggregates;
    for (const auto& condition : conditions) {
        json c;
        c["questions"] = overlap_exact[condition].size();
        c["mean_overlap"] = mean_or_null(overlap_exact[condition]);
        json mt = json::object();
        for (double t : config.thetas) mt[theta_label(t)] = mean_or_null(overlap_theta[condition][theta_label(t)]);
        c["mean_overlap_theta"] = mt;
        c["mean_judge_score"] = mean_or_null(judge_score[condition]);
        c["mean_judge_binary"] = mean_or_null(judge_binary[condition]);
        aggregates[condition] = c;
    }
    try {
        if (sample.empty()) throw ConfigError("nav metric requires a non-empty sample");
        aggregates["nav"] = {
            {"strict_shared", nav_metric(snapshot.graph(), mentions, sample, NavMode::strict_shared)},
            {"shared_or_linked",
             nav_metric(snapshot.graph(), mentions, sample, NavMode::shared_or_linked)}};
    } catch (const Error& e) {
        aggregates["nav"] = nullptr;
        fail("nav", e.what(), json::object());
    }
    try {
        aggregates["stats_with"] = stats_to_json(graph_stats(
            build_section_graph(snapshot.graph(), snapshot.sections(), SectionGraphMode::with_triplets)));
        aggregates["stats_without"] = stats_to_json(graph_stats(
            build_section_graph(snapshot.graph(), snapshot.sections(), SectionGraphMode::text_only)));
    } catch (const Error& e) {
        fail("graph_stats", e.what(), json::object());
    }
    report["aggregates"] = aggregates;
    report["warnings"] = warnings;
    report["failures"] = failures;
    report["status"] = failures.empty() ? "complete" : "partial";
    return report;
}

}  // namespace regkg
