#include "regkg/knowledge_graph.hpp"

#include "json_io.hpp"

namespace regkg {

using nlohmann::json;

std::vector<Triplet> triplets_of_section(const KnowledgeGraph& g, std::string_view section_id) {
    const std::string id(section_id);
    if (!g.known_sections.count(id)) throw NotFoundError("unknown section '" + id + "'");
    std::vector<Triplet> out;
    auto it = g.section_index.find(id);
    if (it == g.section_index.end()) return out;
    for (const auto& key : it->second) out.push_back(g.triplets.at(key));
    return out;
}

std::vector<std::string> audit(const KnowledgeGraph& g) {
    std::vector<std::string> problems;
    for (const auto& [key, t] : g.triplets) {
        if (t.key() != key) problems.push_back("triplet stored under a foreign key: " + to_string(key));
        if (!g.entities.count(key.subject)) problems.push_back("missing entity " + key.subject);
        if (!g.entities.count(key.object)) problems.push_back("missing entity " + key.object);
        auto p = g.provenance.find(key);
        if (p == g.provenance.end() || p->second.empty())
            problems.push_back("triplet without provenance: " + to_string(key));
    }
    for (const auto& [key, sections] : g.provenance) {
        if (!g.triplets.count(key)) problems.push_back("provenance for unknown triplet " + to_string(key));
        for (const auto& s : sections) {
            if (!g.known_sections.count(s))
                problems.push_back("provenance names unknown section " + s);
            auto idx = g.section_index.find(s);
            if (idx == g.section_index.end() || !idx->second.count(key))
                problems.push_back("section index misses " + s + " -> " + to_string(key));
        }
    }
    for (const auto& [s, keys] : g.section_index) {
        for (const auto& key : keys) {
            auto p = g.provenance.find(key);
            if (p == g.provenance.end() || !p->second.count(s))
                problems.push_back("provenance misses " + to_string(key) + " -> " + s);
        }
    }
    return problems;
}

std::string serialize_triplets(const KnowledgeGraph& g) {
    std::string out = json{{"graph_version", g.version}}.dump() + "\n";
    for (const auto& [key, t] : g.triplets) out += detail::triplet_to_json(t).dump() + "\n";
    return out;
}

std::string serialize_provenance(const KnowledgeGraph& g) {
    std::string out = json{{"sections", g.known_sections}}.dump() + "\n";
    for (const auto& [key, sections] : g.provenance) {
        json row;
        row["key"] = detail::key_to_json(key);
        row["sections"] = sections;
        out += row.dump() + "\n";
    }
    return out;
}

std::uint64_t graph_checksum(const KnowledgeGraph& g) {
    return fnv1a64(serialize_provenance(g), fnv1a64(serialize_triplets(g)));
}

void persist_graph(const KnowledgeGraph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_versioned(dir / "triplets.jsonl", "triplets", serialize_triplets(g));
    write_versioned(dir / "provenance.jsonl", "provenance", serialize_provenance(g));
}

bool graph_exists(const std::filesystem::path& dir) {
    return std::filesystem::exists(dir / "triplets.jsonl") &&
           std::filesystem::exists(dir / "provenance.jsonl");
}

KnowledgeGraph load_graph(const std::filesystem::path& dir) {
    const auto triplets_path = dir / "triplets.jsonl";
    const auto provenance_path = dir / "provenance.jsonl";
    const std::string triplets = read_versioned(triplets_path, "triplets");
    const std::string provenance = read_versioned(provenance_path, "provenance");

    KnowledgeGraph g;
    try {
        auto lines = split(triplets, '\n');
        if (lines.empty() || lines[0].empty())
            throw CorruptStoreError(triplets_path.string() + ": missing graph header row");
        g.version = json::parse(lines[0]).at("graph_version").get<std::uint64_t>();
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            Triplet t = detail::triplet_from_json(json::parse(lines[i]));
            g.entities.insert(t.subject);
            g.entities.insert(t.object);
            g.triplets.emplace(t.key(), std::move(t));
        }

        lines = split(provenance, '\n');
        if (lines.empty() || lines[0].empty())
            throw CorruptStoreError(provenance_path.string() + ": missing section list row");
        g.known_sections = json::parse(lines[0]).at("sections").get<std::set<std::string>>();
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            json row = json::parse(lines[i]);
            TripletKey key = detail::key_from_json(row.at("key"));
            auto sections = row.at("sections").get<std::set<std::string>>();
            for (const auto& s : sections) g.section_index[s].insert(key);
            g.provenance.emplace(std::move(key), std::move(sections));
        }
    } catch (const json::exception& e) {
        throw CorruptStoreError(dir.string() + ": malformed graph row: " + e.what());
    }
    auto problems = audit(g);
    if (!problems.empty())
        throw CorruptStoreError(dir.string() + ": graph integrity check failed: " + problems.front());
    return g;
}

}  // namespace regkg
