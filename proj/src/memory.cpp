#include "okg/memory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace okg {

using nlohmann::json;

MemoryStore::MemoryStore(int dim) : dim_(dim) {
    if (dim < 1) throw DimensionError("memory dimension must be >= 1");
}

std::size_t MemoryStore::add(MemoryRecord record) {
    if (static_cast<int>(record.embedding.size()) != dim_) {
        throw DimensionError("record dimension " + std::to_string(record.embedding.size()) +
                             " != store dimension " + std::to_string(dim_));
    }
    records_.push_back(std::move(record));
    return records_.size() - 1;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionError("cosine over mismatched dimensions");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

std::vector<MemoryStore::Hit> MemoryStore::query_top_k(std::span<const float> query,
                                                       std::size_t k) const {
    if (k < 1) throw InvalidInput("k must be >= 1");
    if (static_cast<int>(query.size()) != dim_) {
        throw DimensionError("query dimension mismatch");
    }
    std::vector<Hit> hits;
    hits.reserve(records_.size());
    for (std::size_t id = 0; id < records_.size(); ++id) {
        hits.push_back({id, cosine(query, records_[id].embedding), &records_[id]});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.cosine != b.cosine) return a.cosine > b.cosine;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

namespace {

std::string format_float9(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string escape_json(const std::string& s) {
    return json(s).dump();
}

}  // namespace

void MemoryStore::snapshot(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open snapshot path for writing: " + path.string());
    out << "{\"version\":1,\"dim\":" << dim_ << "}\n";
    for (std::size_t id = 0; id < records_.size(); ++id) {
        const MemoryRecord& r = records_[id];
        out << "{\"id\":" << id
            << ",\"keyword\":{\"surface\":" << escape_json(r.keyword.surface)
            << ",\"normalized\":" << escape_json(r.keyword.normalized)
            << ",\"category\":" << escape_json(r.keyword.category)
            << ",\"origin\":\"" << to_string(r.keyword.origin)
            << "\",\"step_introduced\":" << r.keyword.step_introduced
            << "},\"kpis\":{\"clicks\":" << r.kpis.clicks
            << ",\"search_volume\":" << r.kpis.search_volume
            << ",\"cpc\":" << format_double(r.kpis.cpc)
            << ",\"competitor_score\":" << format_double(r.kpis.competitor_score)
            << ",\"conversions\":" << r.kpis.conversions
            << "},\"step\":" << r.step << ",\"embedding\":[";
        for (std::size_t i = 0; i < r.embedding.size(); ++i) {
            if (i > 0) out << ',';
            out << format_float9(r.embedding[i]);
        }
        out << "]}\n";
    }
    if (!out.good()) throw Error("failed writing snapshot: " + path.string());
}

MemoryStore MemoryStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open snapshot: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw CorruptSnapshot("empty snapshot file");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw CorruptSnapshot(std::string("bad snapshot header: ") + e.what());
    }
    if (!header.contains("version") || !header["version"].is_number_integer()) {
        throw CorruptSnapshot("snapshot header missing version");
    }
    if (header["version"].get<int>() != 1) {
        throw SnapshotVersionMismatch("unsupported snapshot version " +
                                      std::to_string(header["version"].get<int>()));
    }
    if (!header.contains("dim") || !header["dim"].is_number_integer()) {
        throw CorruptSnapshot("snapshot header missing dim");
    }

    MemoryStore store(header["dim"].get<int>());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw CorruptSnapshot("bad record at line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            MemoryRecord r;
            const json& kw = rec.at("keyword");
            r.keyword.surface = kw.at("surface").get<std::string>();
            r.keyword.normalized = kw.at("normalized").get<std::string>();
            r.keyword.category = kw.at("category").get<std::string>();
            r.keyword.origin = origin_from_string(kw.at("origin").get<std::string>());
            r.keyword.step_introduced = kw.at("step_introduced").get<int>();
            const json& kpis = rec.at("kpis");
            r.kpis.clicks = kpis.at("clicks").get<std::int64_t>();
            r.kpis.search_volume = kpis.at("search_volume").get<std::int64_t>();
            r.kpis.cpc = kpis.at("cpc").get<double>();
            r.kpis.competitor_score = kpis.at("competitor_score").get<double>();
            r.kpis.conversions = kpis.value("conversions", std::int64_t{0});
            r.step = rec.at("step").get<int>();
            const json& emb = rec.at("embedding");
            if (!emb.is_array()) throw CorruptSnapshot("embedding is not an array");
            r.embedding.reserve(emb.size());
            for (const auto& x : emb) r.embedding.push_back(static_cast<float>(x.get<double>()));
            const std::size_t expected_id = rec.at("id").get<std::size_t>();
            if (expected_id != store.size()) {
                throw CorruptSnapshot("non-contiguous record ids at line " + std::to_string(line_no));
            }
            store.add(std::move(r));
        } catch (const json::exception& e) {
            throw CorruptSnapshot("bad record at line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (in.bad()) throw CorruptSnapshot("read error in snapshot: " + path.string());
    return store;
}

}  // namespace okg
