#include "okg/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "okg/unicode.hpp"

namespace okg {

std::string_view to_string(Origin origin) {
    switch (origin) {
        case Origin::initial: return "initial";
        case Origin::wider: return "wider";
        case Origin::deeper: return "deeper";
    }
    return "initial";
}

Origin origin_from_string(std::string_view name) {
    if (name == "initial") return Origin::initial;
    if (name == "wider") return Origin::wider;
    if (name == "deeper") return Origin::deeper;
    throw InvalidInput("unknown origin: " + std::string(name));
}

std::string_view to_string(KpiMetric metric) {
    switch (metric) {
        case KpiMetric::clicks: return "clicks";
        case KpiMetric::conversions: return "conversions";
    }
    return "clicks";
}

KpiMetric kpi_metric_from_string(std::string_view name) {
    if (name == "clicks") return KpiMetric::clicks;
    if (name == "conversions") return KpiMetric::conversions;
    throw InvalidInput("unknown kpi metric: " + std::string(name));
}

std::string normalize_keyword(std::string_view raw) {
    std::string folded = fold_text(raw);
    if (folded.empty()) throw InvalidKeyword("keyword empty after trimming");
    return folded;
}

namespace {

// Surface cleanup keeps the original case and width, only fixing whitespace.
std::string clean_surface(std::string_view raw) {
    std::u32string cps = utf8_decode(raw);
    std::u32string out;
    bool pending_space = false;
    for (char32_t cp : cps) {
        if (is_unicode_whitespace(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return utf8_encode(out);
}

}  // namespace

Keyword Keyword::make(std::string_view raw_surface, std::string_view category,
                      Origin origin, int step_introduced) {
    Keyword kw;
    kw.surface = clean_surface(raw_surface);
    if (kw.surface.empty()) throw InvalidKeyword("keyword empty after trimming");
    kw.normalized = normalize_keyword(kw.surface);
    kw.category = std::string(category);
    kw.origin = origin;
    kw.step_introduced = step_introduced;
    if ((step_introduced == 0) != (origin == Origin::initial)) {
        throw InvalidKeyword("step_introduced = 0 iff origin = initial");
    }
    return kw;
}

bool KpiRecord::is_zero() const {
    return clicks == 0 && search_volume == 0 && cpc == 0.0 &&
           competitor_score == 0.0 && conversions == 0;
}

void KpiRecord::validate() const {
    if (clicks < 0 || search_volume < 0 || cpc < 0.0 || competitor_score < 0.0 ||
        conversions < 0) {
        throw InvalidKpi("KPI fields must be non-negative");
    }
    if (competitor_score > 100.0) {
        throw InvalidKpi("competitor_score must be <= 100");
    }
}

double selected_kpi(const KpiRecord& record, KpiMetric metric) {
    switch (metric) {
        case KpiMetric::clicks: return static_cast<double>(record.clicks);
        case KpiMetric::conversions: return static_cast<double>(record.conversions);
    }
    return static_cast<double>(record.clicks);
}

void KeywordSet::validate() const {
    std::set<std::string> seen;
    for (const auto& kw : keywords) {
        if (!seen.insert(kw.normalized).second) {
            throw InvalidKeyword("duplicate normalized keyword in set: " + kw.normalized);
        }
    }
}

void CampaignConfig::validate() const {
    if (product.empty()) throw ConfigError("product must be non-empty", "product");
    if (horizon_T < 1) throw ConfigError("horizon_T must be >= 1", "horizon_T");
    if (per_step_n < 1) throw ConfigError("per_step_n must be >= 1", "per_step_n");
    if (initial_count < 1) throw ConfigError("initial_count must be >= 1", "initial_count");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0", "temperature");
    if (retry_limit < 0) throw ConfigError("retry_limit must be >= 0", "retry_limit");
}

bool CampaignState::contains(const std::string& normalized) const {
    return cumulative_.count(normalized) > 0;
}

bool CampaignState::has_category(const std::string& category) const {
    return categories_.count(category) > 0;
}

std::vector<std::pair<std::string, double>> CampaignState::category_kpis() const {
    std::vector<std::pair<std::string, double>> out;
    out.reserve(category_order_.size());
    for (const auto& name : category_order_) {
        out.emplace_back(name, categories_.at(name).cumulative_kpi);
    }
    return out;
}

void CampaignState::record_outcome(const StepOutcome& outcome) {
    outcome.keyword_set.validate();
    for (const auto& kw : outcome.keyword_set.keywords) {
        if (contains(kw.normalized)) {
            throw InvalidKeyword("keyword already in cumulative set: " + kw.normalized);
        }
    }
    for (const auto& kw : outcome.keyword_set.keywords) {
        cumulative_.emplace(kw.normalized, kw);
        auto it = categories_.find(kw.category);
        if (it == categories_.end()) {
            category_order_.push_back(kw.category);
            it = categories_.emplace(kw.category, CategoryStats{{}, 0.0, outcome.step}).first;
        }
        it->second.members.push_back(kw.normalized);
    }
    for (const auto& kw : outcome.keyword_set.keywords) {
        auto hit = outcome.observed_kpis.find(kw.normalized);
        if (hit != outcome.observed_kpis.end()) {
            categories_.at(kw.category).cumulative_kpi +=
                selected_kpi(hit->second, config.kpi_metric);
        }
    }
    history_.push_back(outcome);
    t = outcome.step;
}

void AllocationPlan::validate() const {
    if (n < 0 || wider_count < 0 || deeper_count < 0) {
        throw InvalidKpi("allocation counts must be non-negative");
    }
    if (wider_count + deeper_count != n) {
        throw InvalidKpi("wider_count + deeper_count must equal n");
    }
    if (p_wider < 0.0 || p_wider > 1.0 || p_deeper < 0.0 || p_deeper > 1.0) {
        throw InvalidKpi("allocation proportions must lie in [0,1]");
    }
    if (std::abs(p_wider + p_deeper - 1.0) > 1e-12) {
        throw InvalidKpi("allocation proportions must sum to 1");
    }
    int quota_sum = 0;
    for (const auto& [name, quota] : deeper_quotas) {
        if (quota < 0) throw InvalidKpi("negative quota for category " + name);
        quota_sum += quota;
    }
    if (quota_sum != deeper_count) {
        throw InvalidKpi("deeper quotas must sum to deeper_count");
    }
}

}  // namespace okg
