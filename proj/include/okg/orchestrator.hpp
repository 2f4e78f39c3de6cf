#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "okg/allocation.hpp"
#include "okg/domain.hpp"
#include "okg/memory.hpp"
#include "okg/simulator.hpp"
#include "okg/tools.hpp"

namespace okg {

// Rendered prompt sections, assembled deterministically: identical inputs
// yield a byte-identical prompt.
struct GenerationPrompt {
    std::string system_preamble;
    std::array<std::string, 5> plan_phases;
    std::string context_block;
    std::string memory_block;
    std::string allocation_block;
    std::string output_schema_instructions;

    std::string render() const;
};

// Category -> keyword strings, in model output order.
struct ParsedGeneration {
    std::vector<std::pair<std::string, std::vector<std::string>>> by_category;

    std::size_t keyword_count() const;
};

struct Toolset {
    std::shared_ptr<ChatModel> model;
    std::shared_ptr<SearchProvider> search;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<MemoryStore> memory;
    std::shared_ptr<KpiSource> kpi_source;
    std::shared_ptr<TransportAudit> audit;  // set when remote tools are in play
    PolicyVariant policy = PolicyVariant::full_adaptive();
    int memory_top_k = 20;
    int search_max_results = 8;
};

// Extracts the first well-formed JSON object from model output, tolerating
// surrounding prose and code fences. Throws ParseError when no object is
// found, SchemaError when the object is not {category: [keyword, ...]}.
ParsedGeneration parse_generation_response(const std::string& text);

struct EnforcementResult {
    std::vector<Keyword> accepted;
    int deficit = 0;
};

// Tags parsed keywords wider/deeper by category novelty, drops duplicates of
// the cumulative set, and applies the plan: new categories are admitted whole
// in output order while they fit wider_count; deeper keywords consume their
// category's quota. deficit = n - |accepted|.
EnforcementResult enforce_plan(const ParsedGeneration& parsed, const AllocationPlan& plan,
                               const CampaignState& state);

GenerationPrompt build_generation_prompt(const CampaignState& state,
                                         const SearchContext& context,
                                         const std::vector<MemoryStore::Hit>& memory_hits,
                                         const AllocationPlan& plan);

// Prompts for the seed keyword set: exactly initial_count keywords spanning
// at least two categories when initial_count >= 2, all origin = initial.
KeywordSet init_keywords(const CampaignConfig& config, ChatModel& model,
                         SearchProvider& search);

// Seed phase: init_keywords + KPI observation + memory seeding, recorded as
// the step-0 outcome.
CampaignState init_campaign(const CampaignConfig& config, Toolset& tools);

struct StepResult {
    StepOutcome outcome;
    AllocationPlan plan;
    std::vector<std::string> warnings;
};

// One closed-loop step: search, memory retrieval, split computation, guarded
// generation with deficit retries, KPI observation, memory write-back.
// Transactional: on failure the input state is returned unchanged (the
// function throws and `state` is untouched).
std::pair<CampaignState, StepResult> run_step(const CampaignState& state, Toolset& tools);

struct CampaignReport {
    CampaignConfig config;
    std::string policy;
    std::vector<StepResult> steps;  // step 0 has a zero plan
    double objective_total = 0.0;   // sum of selected KPI over steps 1..T
    std::vector<std::string> warnings;
    std::vector<TransportAudit::Entry> audit;

    nlohmann::ordered_json to_json() const;
};

// Thrown when a step fails beyond retries; carries the progress so far.
class CampaignAborted : public ToolFailure {
public:
    CampaignAborted(const std::string& msg, CampaignReport partial)
        : ToolFailure(msg, false), partial_(std::move(partial)) {}
    const CampaignReport& partial_report() const { return partial_; }

private:
    CampaignReport partial_;
};

CampaignReport run_campaign(const CampaignConfig& config, Toolset& tools);

}  // namespace okg
