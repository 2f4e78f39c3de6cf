#include "okg/allocation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace okg {

PolicyVariant PolicyVariant::fixed_growth(double ratio) {
    if (ratio < 0.0 || ratio > 1.0) {
        throw InvalidInput("fixed_growth ratio must lie in [0,1]");
    }
    return {Kind::fixed_growth, ratio};
}

PolicyVariant PolicyVariant::parse(std::string_view text) {
    if (text == "full_adaptive") return full_adaptive();
    if (text == "wide_only") return wide_only();
    if (text == "deep_only") return deep_only();
    constexpr std::string_view prefix = "fixed_growth";
    if (text.substr(0, prefix.size()) == prefix) {
        std::string_view rest = text.substr(prefix.size());
        if (rest.empty()) return fixed_growth(0.5);
        if (rest.front() == ':') {
            rest.remove_prefix(1);
            double ratio = 0.0;
            auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), ratio);
            if (ec == std::errc{} && ptr == rest.data() + rest.size()) {
                return fixed_growth(ratio);
            }
        }
    }
    throw InvalidInput("unknown policy variant: " + std::string(text));
}

std::string PolicyVariant::name() const {
    switch (kind) {
        case Kind::full_adaptive: return "full_adaptive";
        case Kind::wide_only: return "wide_only";
        case Kind::deep_only: return "deep_only";
        case Kind::fixed_growth: {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "fixed_growth:%g", ratio);
            return buf;
        }
    }
    return "full_adaptive";
}

std::pair<double, double> aggregate_group_kpi(const StepOutcome& previous,
                                              KpiMetric metric) {
    double wider = 0.0;
    double deeper = 0.0;
    for (const auto& kw : previous.keyword_set.keywords) {
        auto hit = previous.observed_kpis.find(kw.normalized);
        if (hit == previous.observed_kpis.end()) continue;
        double value = selected_kpi(hit->second, metric);
        if (kw.origin == Origin::wider) wider += value;
        else if (kw.origin == Origin::deeper) deeper += value;
    }
    return {wider, deeper};
}

AllocationPlan compute_split(double pW_kpi, double pD_kpi, int n,
                             const PolicyVariant& variant) {
    if (pW_kpi < 0.0 || pD_kpi < 0.0 || !std::isfinite(pW_kpi) || !std::isfinite(pD_kpi)) {
        throw InvalidKpi("group KPIs must be finite and non-negative");
    }
    if (n < 1) throw InvalidKpi("n must be >= 1");

    AllocationPlan plan;
    plan.n = n;

    switch (variant.kind) {
        case PolicyVariant::Kind::wide_only:
            plan.p_wider = 1.0;
            plan.wider_count = n;
            break;
        case PolicyVariant::Kind::deep_only:
            plan.p_wider = 0.0;
            plan.wider_count = 0;
            break;
        case PolicyVariant::Kind::fixed_growth:
            plan.p_wider = variant.ratio;
            plan.wider_count = static_cast<int>(std::floor(plan.p_wider * n));
            break;
        case PolicyVariant::Kind::full_adaptive: {
            const double total = pW_kpi + pD_kpi;
            plan.p_wider = total > 0.0 ? pW_kpi / total : 0.5;
            plan.wider_count = static_cast<int>(std::floor(plan.p_wider * n));
            break;
        }
    }
    plan.wider_count = std::clamp(plan.wider_count, 0, n);
    plan.deeper_count = n - plan.wider_count;
    plan.p_deeper = 1.0 - plan.p_wider;
    return plan;
}

std::vector<std::pair<std::string, int>> assign_deeper_quotas(
    int deeper_count, std::span<const std::pair<std::string, double>> categories) {
    if (deeper_count < 0) throw InvalidKpi("deeper_count must be >= 0");
    if (deeper_count == 0) {
        std::vector<std::pair<std::string, int>> quotas;
        quotas.reserve(categories.size());
        for (const auto& [name, kpi] : categories) quotas.emplace_back(name, 0);
        return quotas;
    }
    if (categories.empty()) {
        throw NoCategories("deeper_count > 0 with no existing categories");
    }

    const size_t m = categories.size();
    std::vector<std::pair<std::string, int>> quotas;
    quotas.reserve(m);

    double total = 0.0;
    for (const auto& [name, kpi] : categories) {
        if (kpi < 0.0) throw InvalidKpi("negative category KPI: " + name);
        total += kpi;
    }

    if (total <= 0.0) {
        // Even split; remainder goes to the earliest-created categories.
        const int base = deeper_count / static_cast<int>(m);
        const int extra = deeper_count % static_cast<int>(m);
        for (size_t i = 0; i < m; ++i) {
            quotas.emplace_back(categories[i].first,
                                base + (static_cast<int>(i) < extra ? 1 : 0));
        }
        return quotas;
    }

    std::vector<double> remainders(m);
    int assigned = 0;
    for (size_t i = 0; i < m; ++i) {
        const double ideal = deeper_count * categories[i].second / total;
        const int floor_share = static_cast<int>(std::floor(ideal));
        quotas.emplace_back(categories[i].first, floor_share);
        remainders[i] = ideal - floor_share;
        assigned += floor_share;
    }

    int leftover = deeper_count - assigned;
    std::vector<size_t> order(m);
    for (size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
        return quotas[a].first < quotas[b].first;
    });
    for (int i = 0; i < leftover; ++i) {
        quotas[order[static_cast<size_t>(i)]].second += 1;
    }
    return quotas;
}

AllocationPlan make_plan(double pW_kpi, double pD_kpi, int n,
                         const PolicyVariant& variant,
                         std::span<const std::pair<std::string, double>> categories) {
    AllocationPlan plan = compute_split(pW_kpi, pD_kpi, n, variant);
    plan.deeper_quotas = assign_deeper_quotas(plan.deeper_count, categories);
    plan.validate();
    return plan;
}

}  // namespace okg
