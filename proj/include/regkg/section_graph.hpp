#pragma once
// Section-level graph derived from the triplet graph (or from raw
// citations), its connectivity statistics, and entity-level k-hop subgraphs.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "regkg/corpus.hpp"
#include "regkg/knowledge_graph.hpp"

namespace regkg {

enum class SectionGraphMode { with_triplets, text_only };

struct SectionEdge {
    std::string a;  // a < b
    std::string b;
    std::set<TripletKey> keys;  // justifying triplets (empty in text_only mode)
    bool shared = false;        // some triplet has both sections in its provenance
    bool linking = false;       // a triplet of one section names the other as subject/object
    bool citation = false;      // explicit cross-reference in the text

    bool operator==(const SectionEdge&) const = default;
};

struct SectionGraph {
    std::vector<std::string> nodes;  // sorted
    std::vector<SectionEdge> edges;  // sorted by (a, b)
    SectionGraphMode mode = SectionGraphMode::with_triplets;
};

// Nodes are the leaf sections of the corpus (numbered sections and synthetic
// paragraphs; hierarchy containers are excluded).
//   with_triplets: edge iff the sections share a triplet, or a triplet of
//                  one has the other's entity as subject or object.
//   text_only:     edge iff one section's text cites the other.
SectionGraph build_section_graph(const KnowledgeGraph& g, std::span<const Section> sections,
                                 SectionGraphMode mode);

struct GraphStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    double avg_degree = 0.0;
    std::size_t component_count = 0;
    std::size_t unconnected_sections = 0;  // isolated nodes
    std::size_t connected_sections = 0;    // nodes with degree >= 1
    double avg_shortest_path = 0.0;
    bool path_defined = false;  // false when no node pair is connected
    bool path_sampled = false;  // true when estimated from sampled pairs
    std::size_t path_pairs = 0; // pairs contributing to avg_shortest_path

    bool operator==(const GraphStats&) const = default;
};

inline constexpr std::size_t kExactPathLimit = 2000;

// avg_shortest_path is the mean BFS distance over connected unordered pairs:
// exact when node_count <= 2000, otherwise the mean over `path_sample`
// seeded-random connected pairs.
GraphStats graph_stats(const SectionGraph& sg, std::optional<std::size_t> path_sample = std::nullopt,
                       std::uint64_t seed = 1);

enum class NodeKind { section, entity };

struct SubgraphNode {
    std::string id;  // entity name
    NodeKind kind = NodeKind::entity;
    std::optional<std::string> section_id;
    int hop = 0;

    bool operator==(const SubgraphNode&) const = default;
};

struct Subgraph {
    std::vector<SubgraphNode> nodes;  // sorted by id
    std::vector<Triplet> edges;       // sorted by key
    std::vector<TripletKey> seed_keys;
    int hop_limit = 0;
    bool truncated = false;
};

struct SubgraphLimits {
    std::size_t max_nodes = 200;
    std::size_t max_edges = 1000;
};

inline constexpr int kMaxHops = 4;

// Breadth-first expansion over entity adjacency from the seed triplets'
// endpoints. hops = 0 returns exactly the seeds and their endpoints; for
// hops >= 1 every triplet with both endpoints inside the reached node set is
// included. Throws ConfigError for hops outside [0, 4] or empty seeds, and
// NotFoundError listing unknown seed keys. `sections` (optional) tags nodes
// that name a corpus section.
Subgraph k_hop_subgraph(const KnowledgeGraph& g, std::span<const TripletKey> seeds, int hops,
                        std::span<const Section> sections = {}, SubgraphLimits limits = {});

}  // namespace regkg
