#include "regkg/qa.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "regkg/common.hpp"

namespace regkg {

QuerySnapshot::QuerySnapshot(std::vector<Section> sections, KnowledgeGraph graph,
                             IndexSnapshot index, std::shared_ptr<const Embedder> embedder)
    : sections_(std::move(sections)),
      graph_(std::move(graph)),
      index_(std::move(index)),
      embedder_(std::move(embedder)) {
    if (!embedder_) throw ConfigError("query snapshot requires an embedder");
    if (!index_.empty() && embedder_->id() != index_.embedder_id())
        throw ConfigError("embedder " + embedder_->id() + " does not match index embedder " +
                          index_.embedder_id());
    if (!index_.empty() && index_.graph_version() != graph_.version)
        throw ConfigError("index was built from graph version " +
                          std::to_string(index_.graph_version()) + " but the graph is at version " +
                          std::to_string(graph_.version) + "; rebuild the index");
    for (std::size_t i = 0; i < sections_.size(); ++i) by_id_.emplace(sections_[i].id, i);
}

const Section* QuerySnapshot::find_section(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &sections_[it->second];
}

const Section& QuerySnapshot::section(const std::string& id) const {
    const Section* s = find_section(id);
    if (!s) throw NotFoundError("unknown section '" + id + "'");
    return *s;
}

RetrievalBundle retrieve(std::string_view query, std::size_t k, const QuerySnapshot& snapshot) {
    if (k == 0) throw ConfigError("k must be at least 1");
    RetrievalBundle bundle;
    bundle.query = std::string(query);
    bundle.k = k;
    bundle.snapshot_version = snapshot.version();
    const auto qv = snapshot.embedder().embed(query);
    if (snapshot.index().empty()) {
        bundle.index_empty = true;
        return bundle;
    }
    std::set<std::string> seen;
    for (const auto& hit : index_search(snapshot.index(), qv, k, snapshot.embedder().id())) {
        ScoredTriplet st;
        st.triplet = snapshot.graph().triplets.at(hit.key);
        st.score = hit.score;
        const auto& prov = snapshot.graph().provenance.at(hit.key);
        st.sections.assign(prov.begin(), prov.end());
        for (const auto& id : st.sections)
            if (seen.insert(id).second) bundle.evidence_sections.push_back(snapshot.section(id));
        bundle.top_triplets.push_back(std::move(st));
    }
    return bundle;
}

std::string build_story(const RetrievalBundle& bundle, std::size_t cap) {
    if (bundle.empty()) return std::string(kNoEvidence);
    std::string head = "FACTS\n";
    for (std::size_t i = 0; i < bundle.top_triplets.size(); ++i) {
        char score[32];
        std::snprintf(score, sizeof score, "%.4f", bundle.top_triplets[i].score);
        head += std::to_string(i + 1) + ". " + render_triplet(bundle.top_triplets[i].triplet) +
                " (score " + score + ")\n";
    }
    head += "\nEVIDENCE\n";
    std::vector<std::string> blocks;
    std::size_t total = head.size();
    for (const auto& s : bundle.evidence_sections) {
        std::string b = "[" + s.id + "]";
        if (!s.heading.empty()) b += " " + s.heading;
        b += "\n" + s.text + "\n\n";
        total += b.size();
        blocks.push_back(std::move(b));
    }
    std::string out = head;
    if (total <= cap) {
        for (const auto& b : blocks) out += b;
        return out;
    }
    const std::string marker = std::string(kTruncationMarker) + "\n";
    if (head.size() + marker.size() >= cap) return head.substr(0, cap - std::min(cap, marker.size())) + marker;
    std::size_t budget = cap - head.size() - marker.size();
    for (const auto& b : blocks) {
        if (b.size() <= budget) {
            out += b;
            budget -= b.size();
        } else {
            // Keep a partial block only when its header line survives.
            if (b.find('\n') < budget) out += b.substr(0, budget);
            break;
        }
    }
    return out + marker;
}

std::string_view to_string(AnswerMode m) {
    return m == AnswerMode::generated ? "generated" : "extractive";
}

AnswerMode answer_mode_from_string(std::string_view s) {
    if (s == "generated") return AnswerMode::generated;
    if (s == "extractive") return AnswerMode::extractive;
    throw ConfigError("unknown answer mode '" + std::string(s) + "' (expected generated|extractive)");
}

namespace {

Answer refusal(const RetrievalBundle& bundle, AnswerMode mode) {
    Answer a;
    a.text = std::string(kRefusal);
    a.mode = mode;
    a.bundle = bundle;
    return a;
}

}  // namespace

std::string answer_prompt(std::string_view query, const RetrievalBundle& bundle) {
    std::string p =
        "Answer the question using only the FACTS and EVIDENCE below. Cite every section you "
        "rely on by writing its id in square brackets exactly as it appears in EVIDENCE, for "
        "example [117.264]. Do not cite anything that is not listed in EVIDENCE. If the evidence "
        "does not answer the question, say so.\n\nQUESTION: ";
    p += query;
    p += "\n\n";
    p += build_story(bundle);
    return p;
}

std::vector<std::string> parse_cited_ids(std::string_view response, const RetrievalBundle& bundle) {
    std::set<std::string> evidence;
    for (const auto& s : bundle.evidence_sections) evidence.insert(s.id);
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::size_t pos = 0;
    while ((pos = response.find('[', pos)) != std::string_view::npos) {
        auto close = response.find(']', pos + 1);
        if (close == std::string_view::npos) break;
        std::string id = trim(response.substr(pos + 1, close - pos - 1));
        constexpr std::string_view kSign = "§";
        if (id.rfind(kSign, 0) == 0) id = trim(std::string_view(id).substr(kSign.size()));
        if (evidence.count(id) && seen.insert(id).second) out.push_back(id);
        pos = close + 1;
    }
    return out;
}

Answer answer_extractive(std::string_view query, const RetrievalBundle& bundle,
                         const Embedder& embedder) {
    if (bundle.evidence_sections.empty()) return refusal(bundle, AnswerMode::extractive);
    const auto qv = embedder.embed(query);
    const Section* best_section = nullptr;
    Span best_span;
    double best = 0.0;
    for (const auto& s : bundle.evidence_sections) {
        for (const auto& span : split_sentences(s.text)) {
            EmbeddingVector sv;
            try {
                sv = embedder.embed(std::string_view(s.text).substr(span.begin, span.end - span.begin));
            } catch (const Error&) {
                continue;  // punctuation-only fragments
            }
            const double score = dot(qv, sv);
            if (!best_section || score > best) {
                best = score;
                best_section = &s;
                best_span = span;
            }
        }
    }
    if (!best_section) return refusal(bundle, AnswerMode::extractive);
    Answer a;
    a.text = best_section->text.substr(best_span.begin, best_span.end - best_span.begin);
    a.mode = AnswerMode::extractive;
    a.citations = {best_section->id};
    a.bundle = bundle;
    return a;
}

Answer generate_answer(std::string_view query, const RetrievalBundle& bundle,
                       CompletionClient& generator, const Embedder& embedder) {
    if (bundle.evidence_sections.empty()) return refusal(bundle, AnswerMode::generated);
    std::string response;
    try {
        response = generator.complete(answer_prompt(query, bundle));
    } catch (const TransportError&) {
        Answer a = answer_extractive(query, bundle, embedder);
        a.degraded = true;
        return a;
    }
    Answer a;
    a.text = trim(response);
    a.mode = AnswerMode::generated;
    a.citations = parse_cited_ids(a.text, bundle);
    a.bundle = bundle;
    return a;
}

}  // namespace regkg
