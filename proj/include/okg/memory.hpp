#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "okg/domain.hpp"

namespace okg {

struct MemoryRecord {
    Keyword keyword;
    KpiRecord kpis;
    int step = 0;
    std::vector<float> embedding;  // unit L2 norm, dimension = store dim
};

// Flat exact-scan vector memory. Record ids are insertion indices. Small
// campaign memories (a few thousand records) make a brute-force scan both
// exact and fast enough.
class MemoryStore {
public:
    explicit MemoryStore(int dim);

    int dim() const { return dim_; }
    std::size_t size() const { return records_.size(); }
    const MemoryRecord& record(std::size_t id) const { return records_.at(id); }

    // Returns the new record's id. Throws DimensionError on dim mismatch.
    std::size_t add(MemoryRecord record);

    struct Hit {
        std::size_t id = 0;
        double cosine = 0.0;
        const MemoryRecord* record = nullptr;
    };

    // Exact top-k by cosine, descending; ties broken by lower insertion id.
    // Returns min(k, size) hits; an empty store yields an empty list.
    std::vector<Hit> query_top_k(std::span<const float> query, std::size_t k) const;

    // JSON-lines snapshot: header {"version":1,"dim":d}, then one record per
    // line with embedding components printed to 9 significant digits.
    void snapshot(const std::filesystem::path& path) const;
    static MemoryStore load(const std::filesystem::path& path);

private:
    int dim_;
    std::vector<MemoryRecord> records_;
};

double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace okg
