#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "okg/domain.hpp"
#include "okg/tools.hpp"

namespace okg {

struct DatasetRow {
    std::string product;
    std::string keyword;
    std::int64_t search_volume = 0;
    std::int64_t clicks = 0;
    double cpc = 0.0;
    double competitor_score = 0.0;
    std::int64_t conversions = 0;
    std::size_t line_no = 0;

    KpiRecord kpis() const;
};

// Maps canonical column names to the header names actually present in a file.
// Canonical names: product, keyword, search_volume, clicks, cpc,
// competitor_score, and optionally conversions.
struct ColumnMap {
    std::map<std::string, std::string> names;

    static ColumnMap identity();
    static ColumnMap from_file(const std::filesystem::path& path);
    std::string column_for(const std::string& canonical) const;
};

// Loads and validates the keyword-KPI dataset (UTF-8 CSV). Rejects missing
// columns, negative values, and duplicate (product, normalized keyword) pairs,
// reporting the offending line. `product_filter` keeps only matching rows.
std::vector<DatasetRow> load_dataset(const std::filesystem::path& path,
                                     const std::optional<std::string>& product_filter = {},
                                     const ColumnMap& columns = ColumnMap::identity());

// Collects every ValidationError instead of stopping at the first; used by
// `dataset validate`.
std::vector<ValidationError> validate_dataset(const std::filesystem::path& path,
                                              const ColumnMap& columns = ColumnMap::identity());

struct KpiSource {
    virtual ~KpiSource() = default;
    // Total mapping: every input keyword gets a record (zero when unmatched).
    virtual std::map<std::string, KpiRecord> observe(const std::vector<Keyword>& keywords) = 0;
};

// Dataset-backed KPI oracle: each keyword inherits the KPIs of its most
// similar dataset keyword when their embedding cosine exceeds 0.6 (strict),
// and the zero record otherwise.
class ReplayKpiSource final : public KpiSource {
public:
    ReplayKpiSource(std::vector<DatasetRow> rows, std::shared_ptr<Embedder> embedder);

    struct Match {
        std::size_t row_index = 0;
        double cosine = 0.0;
    };

    // Best row by cosine, only if cosine > threshold; ties by lower row index.
    std::optional<Match> match(const Keyword& keyword) const;

    std::map<std::string, KpiRecord> observe(const std::vector<Keyword>& keywords) override;

    // Multiplicative log-normal KPI noise for robustness experiments.
    void enable_noise(double sigma, std::uint64_t seed);

    const std::vector<DatasetRow>& rows() const { return rows_; }
    double threshold() const { return threshold_; }

private:
    std::vector<DatasetRow> rows_;
    std::vector<std::vector<float>> row_embeddings_;
    std::shared_ptr<Embedder> embedder_;
    double threshold_ = 0.6;
    bool noise_enabled_ = false;
    double noise_sigma_ = 0.0;
    std::uint64_t noise_seed_ = 0;
};

// Method-level aggregate used by the normalized comparison table. Counts are
// real-valued since aggregates may be averaged across products.
struct KpiAggregate {
    double clicks = 0.0;
    double search_volume = 0.0;
    double cpc = 0.0;
    double competitor_score = 0.0;
};

// Sums clicks/search volume over matched rows and averages cpc and competitor
// score over them; unmatched keywords contribute nothing.
KpiAggregate aggregate_matches(const std::vector<Keyword>& keywords,
                               const ReplayKpiSource& source);

struct NormalizedKpiTable {
    std::vector<std::string> methods;
    std::vector<double> clicks;          // 0..100, best = 100
    std::vector<double> search_volume;   // 0..100, best = 100
    std::vector<double> cpc;             // 0..1, max = 1.0
    std::vector<double> competitor;      // raw
};

// Max-scales clicks and search volume to 0-100 and cpc to 0-1; competitor
// score passes through raw. An all-zero column stays all-zero.
NormalizedKpiTable normalize_kpi_table(
    const std::vector<std::pair<std::string, KpiAggregate>>& groups);

}  // namespace okg
