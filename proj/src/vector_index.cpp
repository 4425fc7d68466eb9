#include "regkg/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "json_io.hpp"

namespace regkg {

using nlohmann::json;

void ExactCosineIndex::add(const EmbeddingVector& v) {
    if (v.dim() != dim_)
        throw ConfigError("index expects dimension " + std::to_string(dim_) + ", got " +
                          std::to_string(v.dim()));
    data_.insert(data_.end(), v.values.begin(), v.values.end());
}

EmbeddingVector ExactCosineIndex::row(std::size_t i) const {
    EmbeddingVector v;
    v.values.assign(data_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                    data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    return v;
}

std::vector<SearchHit> ExactCosineIndex::search(const EmbeddingVector& query, std::size_t k) const {
    if (k == 0) throw ConfigError("k must be at least 1");
    if (query.dim() != dim_)
        throw ConfigError("query dimension " + std::to_string(query.dim()) +
                          " does not match index dimension " + std::to_string(dim_));
    const std::size_t n = size();
    std::vector<double> scores(n);
    const float* q = query.values.data();
    for (std::size_t r = 0; r < n; ++r) {
        const float* row = data_.data() + r * dim_;
        double s = 0.0;
        for (std::size_t j = 0; j < dim_; ++j)
            s += static_cast<double>(q[j]) * static_cast<double>(row[j]);
        scores[r] = s;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) hits.push_back({order[i], scores[order[i]]});
    return hits;
}

IndexSnapshot::IndexSnapshot(std::string embedder_id, std::size_t dim, std::uint64_t graph_version,
                             std::vector<VectorRecord> records)
    : embedder_id_(std::move(embedder_id)),
      dim_(dim),
      graph_version_(graph_version),
      records_(std::move(records)),
      matrix_(dim) {
    std::sort(records_.begin(), records_.end(),
              [](const VectorRecord& a, const VectorRecord& b) { return a.key < b.key; });
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (i > 0 && records_[i - 1].key == r.key)
            throw ConfigError("duplicate index key " + to_string(r.key));
        if (r.embedder_id != embedder_id_)
            throw ConfigError("record " + to_string(r.key) + " embedded with " + r.embedder_id +
                              ", snapshot uses " + embedder_id_);
        if (std::abs(l2_norm(r.vector) - 1.0) > kUnitNormTolerance)
            throw ConfigError("record " + to_string(r.key) + " is not unit-norm");
        matrix_.add(r.vector);
    }
}

IndexSnapshot index_build(const KnowledgeGraph& g, const Embedder& embedder) {
    if (g.triplets.empty()) throw ConfigError("cannot build an index from an empty graph");
    std::vector<VectorRecord> records;
    records.reserve(g.triplets.size());
    std::vector<std::string> failures;
    const std::string eid = embedder.id();
    for (const auto& [key, t] : g.triplets) {
        auto prov = g.provenance.find(key);
        if (prov == g.provenance.end() || prov->second.empty())
            throw ConfigError("triplet without provenance cannot be indexed: " + to_string(key));
        try {
            VectorRecord r;
            r.key = key;
            r.vector = embedder.embed(render_triplet(t));
            r.provenance.assign(prov->second.begin(), prov->second.end());
            r.embedder_id = eid;
            records.push_back(std::move(r));
        } catch (const Error& e) {
            failures.push_back(to_string(key) + " (" + e.what() + ")");
        }
    }
    if (!failures.empty())
        throw Error("index build aborted; embedding failed for: " + join(failures, "; "));
    return IndexSnapshot(eid, embedder.dim(), g.version, std::move(records));
}

std::vector<KeyScore> index_search(const IndexSnapshot& snapshot, const EmbeddingVector& query,
                                   std::size_t k, std::string_view query_embedder_id) {
    if (query_embedder_id != snapshot.embedder_id())
        throw ConfigError("query embedded with " + std::string(query_embedder_id) +
                          " but index uses " + snapshot.embedder_id());
    if (k == 0) throw ConfigError("k must be at least 1");
    if (snapshot.empty()) return {};
    std::vector<KeyScore> out;
    for (const auto& hit : snapshot.matrix().search(query, k))
        out.push_back({snapshot.records()[hit.row].key, hit.score});
    return out;
}

std::string serialize_index(const IndexSnapshot& snapshot) {
    json header;
    header["embedder_id"] = snapshot.embedder_id();
    header["dim"] = snapshot.dim();
    header["count"] = snapshot.size();
    header["graph_version"] = snapshot.graph_version();
    std::string out = header.dump() + "\n";
    for (const auto& r : snapshot.records()) {
        json row;
        row["key"] = detail::key_to_json(r.key);
        row["provenance"] = r.provenance;
        out += row.dump() + "\n";
    }
    // Raw IEEE-754 floats in host byte order (little-endian on supported targets).
    const auto& data = snapshot.matrix().data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(float));
    return out;
}

IndexSnapshot deserialize_index(std::string_view payload, const std::string& origin) {
    try {
        std::size_t pos = payload.find('\n');
        if (pos == std::string_view::npos) throw CorruptStoreError(origin + ": missing index header");
        json header = json::parse(payload.substr(0, pos));
        const auto eid = header.at("embedder_id").get<std::string>();
        const auto dim = header.at("dim").get<std::size_t>();
        const auto count = header.at("count").get<std::size_t>();
        const auto version = header.at("graph_version").get<std::uint64_t>();
        ++pos;
        std::vector<VectorRecord> records(count);
        for (auto& r : records) {
            auto nl = payload.find('\n', pos);
            if (nl == std::string_view::npos) throw CorruptStoreError(origin + ": truncated record list");
            json row = json::parse(payload.substr(pos, nl - pos));
            r.key = detail::key_from_json(row.at("key"));
            r.provenance = row.at("provenance").get<std::vector<std::string>>();
            r.embedder_id = eid;
            pos = nl + 1;
        }
        const std::size_t bytes = count * dim * sizeof(float);
        if (payload.size() - pos != bytes)
            throw CorruptStoreError(origin + ": vector block has " + std::to_string(payload.size() - pos) +
                                    " bytes, expected " + std::to_string(bytes));
        for (auto& r : records) {
            r.vector.values.resize(dim);
            std::memcpy(r.vector.values.data(), payload.data() + pos, dim * sizeof(float));
            pos += dim * sizeof(float);
        }
        return IndexSnapshot(eid, dim, version, std::move(records));
    } catch (const json::exception& e) {
        throw CorruptStoreError(origin + ": malformed index: " + e.what());
    } catch (const ConfigError& e) {
        throw CorruptStoreError(origin + ": " + e.what());
    }
}

void save_index(const IndexSnapshot& snapshot, const std::filesystem::path& path) {
    write_versioned(path, "index", serialize_index(snapshot));
}

IndexSnapshot load_index(const std::filesystem::path& path) {
    return deserialize_index(read_versioned(path, "index"), path.string());
}

}  // namespace regkg
