#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "okg/domain.hpp"

namespace okg {

// Budget policy for splitting each step's n keywords between new categories
// (wider) and existing ones (deeper).
struct PolicyVariant {
    enum class Kind { full_adaptive, fixed_growth, wide_only, deep_only };

    Kind kind = Kind::full_adaptive;
    double ratio = 0.0;  // wider share, meaningful only for fixed_growth

    static PolicyVariant full_adaptive() { return {Kind::full_adaptive, 0.0}; }
    static PolicyVariant fixed_growth(double ratio);
    static PolicyVariant wide_only() { return {Kind::wide_only, 0.0}; }
    static PolicyVariant deep_only() { return {Kind::deep_only, 0.0}; }

    // Accepts "full_adaptive", "wide_only", "deep_only", "fixed_growth:<r>".
    static PolicyVariant parse(std::string_view text);
    std::string name() const;

    bool operator==(const PolicyVariant&) const = default;
};

// Sums the previous step's observed selected-KPI by origin tag. Initial-origin
// keywords count toward neither group, so step 1 sees (0, 0).
std::pair<double, double> aggregate_group_kpi(const StepOutcome& previous,
                                              KpiMetric metric);

// Splits the n-keyword budget between wider and deeper. For full_adaptive,
// p_wider = pW/(pW+pD) and wider_count = floor(p_wider * n); a zero total
// falls back to 50/50. The returned plan has empty deeper_quotas; see
// assign_deeper_quotas / make_plan.
AllocationPlan compute_split(double pW_kpi, double pD_kpi, int n,
                             const PolicyVariant& variant);

// Largest-remainder apportionment of deeper_count over existing categories,
// proportional to cumulative KPI. Categories must be given in creation order:
// with an all-zero KPI table the split is as even as possible with the
// remainder going to the earliest-created categories. Remainder ties break by
// lexicographic category name.
std::vector<std::pair<std::string, int>> assign_deeper_quotas(
    int deeper_count, std::span<const std::pair<std::string, double>> categories);

// compute_split + assign_deeper_quotas in one call; the result satisfies all
// AllocationPlan invariants.
AllocationPlan make_plan(double pW_kpi, double pD_kpi, int n,
                         const PolicyVariant& variant,
                         std::span<const std::pair<std::string, double>> categories);

}  // namespace okg
