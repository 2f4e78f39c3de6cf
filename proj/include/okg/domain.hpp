#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "okg/errors.hpp"

namespace okg {

enum class Origin { initial, wider, deeper };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view name);

enum class KpiMetric { clicks, conversions };

std::string_view to_string(KpiMetric metric);
KpiMetric kpi_metric_from_string(std::string_view name);

// Canonical keyword identity: trim, collapse internal whitespace, lowercase,
// NFKC. Two keywords with equal normalized forms are the same bid keyword.
// Throws InvalidKeyword when the input is empty after trimming.
std::string normalize_keyword(std::string_view raw);

struct Keyword {
    std::string surface;
    std::string normalized;
    std::string category;
    Origin origin = Origin::initial;
    int step_introduced = 0;

    // Builds a keyword with surface cleaned (trimmed, whitespace collapsed)
    // and the normalized form derived from it.
    static Keyword make(std::string_view raw_surface, std::string_view category,
                        Origin origin, int step_introduced);
};

struct KpiRecord {
    std::int64_t clicks = 0;
    std::int64_t search_volume = 0;
    double cpc = 0.0;
    double competitor_score = 0.0;
    std::int64_t conversions = 0;

    bool is_zero() const;
    void validate() const;  // throws InvalidKpi
};

double selected_kpi(const KpiRecord& record, KpiMetric metric);

struct KeywordSet {
    int step = 0;
    std::vector<Keyword> keywords;

    // Throws InvalidKeyword when two members share a normalized form.
    void validate() const;
};

struct CampaignConfig {
    std::string product;
    int horizon_T = 3;
    int per_step_n = 1;
    int initial_count = 1;
    KpiMetric kpi_metric = KpiMetric::clicks;
    double temperature = 0.1;
    int retry_limit = 3;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError naming the field
};

struct Snippet {
    std::string source_id;
    std::string text;
    std::int64_t retrieved_at = 0;  // unix seconds; fixtures pin this
};

struct SearchContext {
    std::string query;
    std::vector<Snippet> snippets;
};

struct StepOutcome {
    int step = 0;
    KeywordSet keyword_set;
    std::map<std::string, KpiRecord> observed_kpis;  // by normalized form
    double group_kpi_wider = 0.0;
    double group_kpi_deeper = 0.0;
};

struct CategoryStats {
    std::vector<std::string> members;  // normalized forms, insertion order
    double cumulative_kpi = 0.0;       // selected-KPI total across history
    int created_step = 0;
};

class CampaignState {
public:
    CampaignConfig config;
    int t = 0;

    bool contains(const std::string& normalized) const;
    bool has_category(const std::string& category) const;

    const std::map<std::string, Keyword>& cumulative() const { return cumulative_; }
    const std::vector<std::string>& category_order() const { return category_order_; }
    const std::map<std::string, CategoryStats>& categories() const { return categories_; }
    const std::vector<StepOutcome>& history() const { return history_; }

    // Categories with cumulative selected-KPI totals, in creation order.
    std::vector<std::pair<std::string, double>> category_kpis() const;

    // Records a completed step: inserts its keywords into the cumulative
    // ledger (rejecting normalized duplicates), updates category totals from
    // the outcome's observed KPIs, appends to history, and sets t to
    // outcome.step.
    void record_outcome(const StepOutcome& outcome);

private:
    std::map<std::string, Keyword> cumulative_;
    std::vector<std::string> category_order_;
    std::map<std::string, CategoryStats> categories_;
    std::vector<StepOutcome> history_;
};

struct AllocationPlan {
    int n = 0;
    int wider_count = 0;
    int deeper_count = 0;
    double p_wider = 0.0;
    double p_deeper = 0.0;
    // Existing-category quotas in category creation order; values sum to
    // deeper_count.
    std::vector<std::pair<std::string, int>> deeper_quotas;

    void validate() const;
};

}  // namespace okg
