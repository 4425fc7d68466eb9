#include "regkg/store.hpp"

#include <fstream>

#include "json_io.hpp"

namespace regkg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kLogHeader = "#regkg merge-log format=1\n";

}  // namespace

bool Store::has_corpus() const {
    return fs::exists(manifest_path()) && fs::exists(sections_path());
}

bool Store::has_batches() const { return fs::exists(batches_path()); }

bool Store::has_graph() const { return graph_exists(dir_); }

bool Store::has_index() const { return fs::exists(index_path()); }

void Store::save_corpus(const CorpusManifest& manifest, std::span<const Section> sections) const {
    if (manifest.section_count != sections.size())
        throw ConfigError("manifest section_count " + std::to_string(manifest.section_count) +
                          " does not match " + std::to_string(sections.size()) + " sections");
    fs::create_directories(dir_);
    write_versioned(sections_path(), "sections", sections_to_jsonl(sections));
    write_versioned(manifest_path(), "manifest", manifest_to_json(manifest));
}

CorpusManifest Store::load_manifest() const {
    return manifest_from_json(read_versioned(manifest_path(), "manifest"));
}

std::vector<Section> Store::load_sections() const {
    auto sections = sections_from_jsonl(read_versioned(sections_path(), "sections"));
    auto manifest = load_manifest();
    if (manifest.section_count != sections.size())
        throw CorruptStoreError(sections_path().string() + ": manifest lists " +
                                std::to_string(manifest.section_count) + " sections, file has " +
                                std::to_string(sections.size()));
    return sections;
}

void Store::save_batches(std::span<const ExtractionBatch> batches) const {
    fs::create_directories(dir_);
    write_versioned(batches_path(), "batches", batches_to_jsonl(batches));
}

std::vector<ExtractionBatch> Store::load_batches() const {
    return batches_from_jsonl(read_versioned(batches_path(), "batches"));
}

void Store::save_graph(const KnowledgeGraph& g) const { persist_graph(g, dir_); }

KnowledgeGraph Store::load_graph() const { return regkg::load_graph(dir_); }

void Store::save_index(const IndexSnapshot& index) const {
    fs::create_directories(dir_);
    regkg::save_index(index, index_path());
}

IndexSnapshot Store::load_index() const { return regkg::load_index(index_path()); }

void Store::reset_log() const {
    fs::create_directories(dir_);
    atomic_write_file(log_path(), kLogHeader);
}

void Store::append_log(const std::string& section_id, const MergeDelta& delta,
                       std::uint64_t graph_version) const {
    if (!fs::exists(log_path())) reset_log();
    json entry;
    entry["graph_version"] = graph_version;
    entry["section"] = section_id;
    json added = json::array();
    for (const auto& k : delta.added) added.push_back(detail::key_to_json(k));
    entry["added"] = added;
    json merged = json::array();
    for (const auto& [from, into] : delta.merged)
        merged.push_back({detail::key_to_json(from), detail::key_to_json(into)});
    entry["merged"] = merged;
    json extended = json::array();
    for (const auto& [k, sections] : delta.provenance_extended)
        extended.push_back({{"key", detail::key_to_json(k)}, {"sections", sections}});
    entry["provenance_extended"] = extended;
    const std::string body = entry.dump();
    std::ofstream out(log_path(), std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot append to " + log_path().string());
    out << hex64(fnv1a64(body)) << ' ' << body << '\n';
    out.flush();
    if (!out) throw Error("short write to " + log_path().string());
}

std::size_t Store::log_entries() const {
    const std::string content = read_file(log_path());
    if (content.rfind(kLogHeader, 0) != 0) {
        if (content.rfind("#regkg merge-log format=", 0) == 0)
            throw VersionError(log_path().string() + ": unsupported merge log format; upgrade required");
        throw CorruptStoreError(log_path().string() + ": missing merge log header");
    }
    std::size_t n = 0;
    std::size_t line_no = 1;
    for (const auto& line : split(std::string_view(content).substr(kLogHeader.size()), '\n')) {
        ++line_no;
        if (line.empty()) continue;
        auto sp = line.find(' ');
        if (sp == std::string::npos || line.substr(0, sp) != hex64(fnv1a64(line.substr(sp + 1))))
            throw CorruptStoreError(log_path().string() + ": checksum mismatch on line " +
                                    std::to_string(line_no));
        ++n;
    }
    return n;
}

std::uint64_t Store::checksum() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& p : {manifest_path(), sections_path(), batches_path(), dir_ / "triplets.jsonl",
                          dir_ / "provenance.jsonl", log_path(), index_path()}) {
        h = fnv1a64(p.filename().string(), h);
        if (fs::exists(p)) h = fnv1a64(read_file(p), h);
    }
    return h;
}

}  // namespace regkg
