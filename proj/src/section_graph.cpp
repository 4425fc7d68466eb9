#include "regkg/section_graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <unordered_map>

#include "regkg/common.hpp"

namespace regkg {

namespace {

using EdgeMap = std::map<std::pair<std::string, std::string>, SectionEdge>;

SectionEdge& edge_for(EdgeMap& edges, const std::string& x, const std::string& y) {
    auto ab = x < y ? std::make_pair(x, y) : std::make_pair(y, x);
    auto [it, inserted] = edges.try_emplace(ab);
    if (inserted) {
        it->second.a = ab.first;
        it->second.b = ab.second;
    }
    return it->second;
}

// BFS distances from `source`; -1 marks unreachable nodes.
std::vector<int> bfs(const std::vector<std::vector<std::size_t>>& adj, std::size_t source) {
    std::vector<int> dist(adj.size(), -1);
    std::queue<std::size_t> q;
    dist[source] = 0;
    q.push(source);
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (auto v : adj[u]) {
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                q.push(v);
            }
        }
    }
    return dist;
}

}  // namespace

SectionGraph build_section_graph(const KnowledgeGraph& g, std::span<const Section> sections,
                                 SectionGraphMode mode) {
    SectionGraph sg;
    sg.mode = mode;
    const auto leaves = leaf_sections(sections);
    std::set<std::string> leaf_ids;
    for (const auto* s : leaves) leaf_ids.insert(s->id);
    sg.nodes.assign(leaf_ids.begin(), leaf_ids.end());

    EdgeMap edges;
    if (mode == SectionGraphMode::text_only) {
        for (const auto* s : leaves) {
            for (const auto& x : extract_cross_references(*s)) {
                if (x.self || !leaf_ids.count(x.target_id)) continue;
                edge_for(edges, s->id, x.target_id).citation = true;
            }
        }
    } else {
        for (const auto& [key, prov] : g.provenance) {
            std::vector<std::string> in_graph;
            for (const auto& s : prov)
                if (leaf_ids.count(s)) in_graph.push_back(s);
            for (std::size_t i = 0; i < in_graph.size(); ++i) {
                for (std::size_t j = i + 1; j < in_graph.size(); ++j) {
                    auto& e = edge_for(edges, in_graph[i], in_graph[j]);
                    e.shared = true;
                    e.keys.insert(key);
                }
            }
        }
        std::unordered_map<std::string, std::string> by_entity;
        for (const auto* s : leaves) by_entity.emplace(section_entity(*s), s->id);
        for (const auto* s : leaves) {
            auto idx = g.section_index.find(s->id);
            if (idx == g.section_index.end()) continue;
            for (const auto& key : idx->second) {
                for (const std::string* endpoint : {&key.subject, &key.object}) {
                    auto hit = by_entity.find(*endpoint);
                    if (hit == by_entity.end() || hit->second == s->id) continue;
                    auto& e = edge_for(edges, s->id, hit->second);
                    e.linking = true;
                    e.keys.insert(key);
                }
            }
        }
    }
    for (auto& [ab, e] : edges) sg.edges.push_back(std::move(e));
    return sg;
}

GraphStats graph_stats(const SectionGraph& sg, std::optional<std::size_t> path_sample,
                       std::uint64_t seed) {
    GraphStats st;
    const std::size_t n = sg.nodes.size();
    st.node_count = n;
    st.edge_count = sg.edges.size();
    if (n == 0) return st;
    st.avg_degree = 2.0 * static_cast<double>(st.edge_count) / static_cast<double>(n);

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(sg.nodes[i], i);
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : sg.edges) {
        auto a = index.at(e.a);
        auto b = index.at(e.b);
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());

    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (adj[i].empty()) ++st.unconnected_sections;
        if (seen[i]) continue;
        ++st.component_count;
        auto dist = bfs(adj, i);
        for (std::size_t j = 0; j < n; ++j)
            if (dist[j] >= 0) seen[j] = true;
    }
    st.connected_sections = n - st.unconnected_sections;

    std::uint64_t distance_sum = 0;
    std::size_t pairs = 0;
    if (n <= kExactPathLimit) {
        for (std::size_t i = 0; i < n; ++i) {
            if (adj[i].empty()) continue;
            auto dist = bfs(adj, i);
            for (std::size_t j = i + 1; j < n; ++j) {
                if (dist[j] > 0) {
                    distance_sum += static_cast<std::uint64_t>(dist[j]);
                    ++pairs;
                }
            }
        }
    } else {
        st.path_sampled = true;
        std::vector<std::size_t> sources;
        for (std::size_t i = 0; i < n; ++i)
            if (!adj[i].empty()) sources.push_back(i);
        const std::size_t samples = path_sample.value_or(1000);
        XorShiftStar rng(seed);
        for (std::size_t s = 0; s < samples && !sources.empty(); ++s) {
            auto src = sources[rng.below(sources.size())];
            auto dist = bfs(adj, src);
            std::vector<std::size_t> reachable;
            for (std::size_t j = 0; j < n; ++j)
                if (dist[j] > 0) reachable.push_back(j);
            auto dst = reachable[rng.below(reachable.size())];
            distance_sum += static_cast<std::uint64_t>(dist[dst]);
            ++pairs;
        }
    }
    st.path_pairs = pairs;
    if (pairs > 0) {
        st.path_defined = true;
        st.avg_shortest_path = static_cast<double>(distance_sum) / static_cast<double>(pairs);
    }
    return st;
}

Subgraph k_hop_subgraph(const KnowledgeGraph& g, std::span<const TripletKey> seeds, int hops,
                        std::span<const Section> sections, SubgraphLimits limits) {
    if (hops < 0 || hops > kMaxHops)
        throw ConfigError("hops must be in [0, " + std::to_string(kMaxHops) + "], got " +
                          std::to_string(hops));
    if (seeds.empty()) throw ConfigError("subgraph requires at least one seed");
    std::vector<std::string> unknown;
    for (const auto& k : seeds)
        if (!g.triplets.count(k)) unknown.push_back(to_string(k));
    if (!unknown.empty()) throw NotFoundError("unknown seed key(s): " + join(unknown, ", "));

    Subgraph sub;
    sub.hop_limit = hops;
    std::set<TripletKey> seed_set(seeds.begin(), seeds.end());
    sub.seed_keys.assign(seed_set.begin(), seed_set.end());

    std::map<std::string, int> reached;  // entity -> hop
    for (const auto& k : seed_set) {
        reached.emplace(k.subject, 0);
        reached.emplace(k.object, 0);
    }
    if (reached.size() > limits.max_nodes) sub.truncated = true;

    std::set<TripletKey> edge_keys(seed_set);
    if (hops > 0) {
        std::map<std::string, std::set<TripletKey>> incident;
        for (const auto& [key, t] : g.triplets) {
            incident[key.subject].insert(key);
            incident[key.object].insert(key);
        }
        std::set<std::string> frontier;
        for (const auto& [e, h] : reached) frontier.insert(e);
        for (int h = 1; h <= hops && !frontier.empty() && !sub.truncated; ++h) {
            std::set<std::string> next;
            for (const auto& node : frontier) {
                for (const auto& key : incident[node]) {
                    const std::string& other = key.subject == node ? key.object : key.subject;
                    if (reached.count(other)) continue;
                    if (reached.size() >= limits.max_nodes) {
                        sub.truncated = true;
                        break;
                    }
                    reached.emplace(other, h);
                    next.insert(other);
                }
                if (sub.truncated) break;
            }
            frontier = std::move(next);
        }
        for (const auto& [key, t] : g.triplets)
            if (reached.count(key.subject) && reached.count(key.object)) edge_keys.insert(key);
    }

    std::size_t budget = limits.max_edges > seed_set.size() ? limits.max_edges - seed_set.size() : 0;
    for (const auto& key : edge_keys) {
        if (seed_set.count(key)) {
            sub.edges.push_back(g.triplets.at(key));
        } else if (budget > 0) {
            sub.edges.push_back(g.triplets.at(key));
            --budget;
        } else {
            sub.truncated = true;
        }
    }

    std::unordered_map<std::string, std::string> by_entity;
    for (const auto& s : sections) by_entity.emplace(section_entity(s), s.id);
    for (const auto& [entity, h] : reached) {
        SubgraphNode node;
        node.id = entity;
        node.hop = h;
        auto it = by_entity.find(entity);
        if (it != by_entity.end()) {
            node.kind = NodeKind::section;
            node.section_id = it->second;
        }
        sub.nodes.push_back(std::move(node));
    }
    return sub;
}

}  // namespace regkg
