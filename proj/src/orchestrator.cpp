#include "okg/orchestrator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "okg/unicode.hpp"

namespace okg {

using nlohmann::ordered_json;

std::string GenerationPrompt::render() const {
    std::ostringstream out;
    out << system_preamble << "\n\nPlan:\n";
    for (std::size_t i = 0; i < plan_phases.size(); ++i) {
        out << (i + 1) << ". " << plan_phases[i] << "\n";
    }
    out << "\n" << context_block << "\n\n" << memory_block << "\n\n"
        << allocation_block << "\n\n" << output_schema_instructions << "\n";
    return out.str();
}

std::size_t ParsedGeneration::keyword_count() const {
    std::size_t n = 0;
    for (const auto& [category, keywords] : by_category) n += keywords.size();
    return n;
}

namespace {

// Locates the span of the first candidate JSON object, honoring string
// literals and escapes while counting braces.
std::optional<std::string_view> object_span(std::string_view text, std::size_t from) {
    const std::size_t start = text.find('{', from);
    if (start == std::string_view::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            if (--depth == 0) return text.substr(start, i - start + 1);
        }
    }
    return std::nullopt;  // unbalanced
}

std::string trim_spaces(std::string_view text) {
    std::u32string cps = utf8_decode(text);
    std::u32string out;
    bool pending = false;
    for (char32_t cp : cps) {
        if (is_unicode_whitespace(cp)) {
            pending = !out.empty();
            continue;
        }
        if (pending) out.push_back(U' ');
        pending = false;
        out.push_back(cp);
    }
    return utf8_encode(out);
}

}  // namespace

ParsedGeneration parse_generation_response(const std::string& text) {
    ordered_json doc;
    bool found = false;
    std::size_t from = 0;
    while (!found) {
        auto span = object_span(text, from);
        if (!span) throw ParseError("no JSON object found in model output");
        doc = ordered_json::parse(*span, nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded()) {
            from = static_cast<std::size_t>(span->data() - text.data()) + 1;
            continue;
        }
        found = true;
    }
    if (!doc.is_object()) throw SchemaError("model output is not a JSON object");

    ParsedGeneration parsed;
    for (const auto& [category, value] : doc.items()) {
        if (trim_spaces(category).empty()) {
            throw SchemaError("empty category name in model output");
        }
        if (!value.is_array()) {
            throw SchemaError("category '" + category + "' does not map to an array");
        }
        std::vector<std::string> keywords;
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw SchemaError("non-string keyword under category '" + category + "'");
            }
            std::string kw = trim_spaces(item.get<std::string>());
            if (kw.empty() || fold_text(kw).empty()) continue;  // drop blank entries
            keywords.push_back(std::move(kw));
        }
        parsed.by_category.emplace_back(trim_spaces(category), std::move(keywords));
    }
    return parsed;
}

EnforcementResult enforce_plan(const ParsedGeneration& parsed, const AllocationPlan& plan,
                               const CampaignState& state) {
    const int step = state.t + 1;
    std::map<std::string, int> quota;
    for (const auto& [category, q] : plan.deeper_quotas) quota[category] = q;

    EnforcementResult result;
    std::set<std::string> accepted_norms;
    int wider_used = 0;

    for (const auto& [category, keywords] : parsed.by_category) {
        // Dedup first: against the cumulative ledger and this response.
        std::vector<Keyword> fresh;
        for (const auto& raw : keywords) {
            Keyword kw = Keyword::make(raw, category,
                                       state.has_category(category) ? Origin::deeper
                                                                    : Origin::wider,
                                       step);
            if (state.contains(kw.normalized)) continue;
            if (accepted_norms.count(kw.normalized)) continue;
            if (std::any_of(fresh.begin(), fresh.end(), [&](const Keyword& f) {
                    return f.normalized == kw.normalized;
                })) {
                continue;
            }
            fresh.push_back(std::move(kw));
        }
        if (fresh.empty()) continue;

        if (state.has_category(category)) {
            auto it = quota.find(category);
            int budget = it == quota.end() ? 0 : it->second;
            for (auto& kw : fresh) {
                if (budget <= 0) break;
                --budget;
                accepted_norms.insert(kw.normalized);
                result.accepted.push_back(std::move(kw));
            }
            if (it != quota.end()) it->second = budget;
        } else {
            // New categories come in whole, in output order, while the wider
            // budget has room for all of their keywords.
            if (wider_used + static_cast<int>(fresh.size()) > plan.wider_count) continue;
            wider_used += static_cast<int>(fresh.size());
            for (auto& kw : fresh) {
                accepted_norms.insert(kw.normalized);
                result.accepted.push_back(std::move(kw));
            }
        }
    }

    result.deficit = plan.n - static_cast<int>(result.accepted.size());
    return result;
}

namespace {

std::string render_context_block(const SearchContext& context) {
    std::ostringstream out;
    if (context.snippets.empty()) {
        out << "Live search: no results found for query \"" << context.query << "\".";
        return out.str();
    }
    out << "Live search results for query \"" << context.query << "\":";
    for (const auto& snippet : context.snippets) {
        out << "\n- ";
        if (!snippet.source_id.empty()) out << "[" << snippet.source_id << "] ";
        out << snippet.text;
    }
    return out.str();
}

std::string render_memory_block(const std::vector<MemoryStore::Hit>& hits) {
    if (hits.empty()) return "Keyword history: none yet.";
    std::ostringstream out;
    out << "Keyword history (most relevant first):";
    for (const auto& hit : hits) {
        const MemoryRecord& r = *hit.record;
        out << "\n- " << r.keyword.surface << " [" << r.keyword.category
            << "] clicks=" << r.kpis.clicks << " volume=" << r.kpis.search_volume
            << " cpc=" << r.kpis.cpc;
    }
    return out.str();
}

std::string render_allocation_block(const AllocationPlan& plan) {
    std::ostringstream out;
    out << "Allocation directive: generate exactly " << plan.n << " new keywords in total. "
        << "Open " << plan.wider_count << " keyword slots in new categories not listed below"
        << " (wider growth). Add the remaining " << plan.deeper_count
        << " keywords to existing categories (deeper growth) with these exact counts:";
    for (const auto& [category, count] : plan.deeper_quotas) {
        out << "\n- " << category << ": " << count;
    }
    out << "\nNever repeat a keyword already in the campaign.";
    return out.str();
}

const char* kOutputSchema =
    "Respond with a single JSON object mapping each category name to an array of "
    "keyword strings, e.g. {\"Category A\": [\"keyword one\", \"keyword two\"]}. "
    "Output the JSON object only.";

std::array<std::string, 5> plan_phases_for(const std::string& product) {
    return {
        "Gather current market data: review the live search findings below for "
        "up-to-date attributes, prices, discounts, and search habits around " + product + ".",
        "Benchmark against effective keyword practice: favor relevant, specific, "
        "brand-aligned phrasings over generic ones.",
        "Analyze current keyword performance: study the keyword history below and "
        "note which categories earn the strongest KPIs.",
        "Decide keyword counts: follow the allocation directive below exactly — it "
        "fixes how many keywords go to new categories and to each existing category.",
        "Generate and deliver the new keywords grouped by category in the required "
        "output format.",
    };
}

}  // namespace

GenerationPrompt build_generation_prompt(const CampaignState& state,
                                         const SearchContext& context,
                                         const std::vector<MemoryStore::Hit>& memory_hits,
                                         const AllocationPlan& plan) {
    plan.validate();
    GenerationPrompt prompt;
    prompt.system_preamble =
        "You are the expert in setting Japanese SSA keywords for " + state.config.product + ".";
    prompt.plan_phases = plan_phases_for(state.config.product);
    prompt.context_block = render_context_block(context);
    prompt.memory_block = render_memory_block(memory_hits);
    prompt.allocation_block = render_allocation_block(plan);
    prompt.output_schema_instructions = kOutputSchema;
    return prompt;
}

namespace {

struct InitSelection {
    std::vector<Keyword> keywords;
    std::size_t categories = 0;
};

InitSelection select_initial(const ParsedGeneration& parsed, int initial_count) {
    InitSelection sel;
    std::set<std::string> seen;
    std::set<std::string> categories;
    for (const auto& [category, keywords] : parsed.by_category) {
        for (const auto& raw : keywords) {
            if (static_cast<int>(sel.keywords.size()) >= initial_count) break;
            Keyword kw = Keyword::make(raw, category, Origin::initial, 0);
            if (!seen.insert(kw.normalized).second) continue;
            categories.insert(category);
            sel.keywords.push_back(std::move(kw));
        }
    }
    sel.categories = categories.size();
    return sel;
}

}  // namespace

KeywordSet init_keywords(const CampaignConfig& config, ChatModel& model,
                         SearchProvider& search) {
    config.validate();
    const SearchContext context = search.search(config.product, 8);

    std::ostringstream base;
    base << "You are the expert in setting Japanese SSA keywords for " << config.product
         << ".\n\n" << render_context_block(context) << "\n\n"
         << "Propose exactly " << config.initial_count << " seed keywords for "
         << config.product << ", each reflecting a distinct product attribute";
    if (config.initial_count >= 2) {
        base << ", spread across at least 2 distinct categories";
    }
    base << ".\n\n" << kOutputSchema;

    std::string prompt = base.str();
    std::string last_problem;
    for (int attempt = 0; attempt <= config.retry_limit; ++attempt) {
        std::string request = prompt;
        if (attempt > 0) {
            request += "\n\nThe previous response was unusable (" + last_problem +
                       "). Follow the instructions exactly.";
        }
        const std::string response = model.complete(request, config.temperature);
        try {
            const ParsedGeneration parsed = parse_generation_response(response);
            const InitSelection sel = select_initial(parsed, config.initial_count);
            if (static_cast<int>(sel.keywords.size()) != config.initial_count) {
                last_problem = "expected " + std::to_string(config.initial_count) +
                               " keywords, usable " + std::to_string(sel.keywords.size());
                continue;
            }
            if (config.initial_count >= 2 && sel.categories < 2) {
                last_problem = "needs at least 2 distinct categories";
                continue;
            }
            KeywordSet set;
            set.step = 0;
            set.keywords = sel.keywords;
            set.validate();
            return set;
        } catch (const ParseError& e) {
            last_problem = e.what();
        } catch (const SchemaError& e) {
            last_problem = e.what();
        }
    }
    throw GenerationFailure("initial keyword generation failed after " +
                            std::to_string(config.retry_limit + 1) + " attempts: " +
                            last_problem);
}

namespace {

void write_memory(Toolset& tools, const std::vector<Keyword>& keywords,
                  const std::map<std::string, KpiRecord>& kpis, int step) {
    if (keywords.empty()) return;
    std::vector<std::string> texts;
    texts.reserve(keywords.size());
    for (const auto& kw : keywords) texts.push_back(kw.surface);
    const auto embeddings = tools.embedder->embed(texts);
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        MemoryRecord record;
        record.keyword = keywords[i];
        auto it = kpis.find(keywords[i].normalized);
        if (it != kpis.end()) record.kpis = it->second;
        record.step = step;
        record.embedding = embeddings[i];
        tools.memory->add(std::move(record));
    }
}

std::string compose_query(const CampaignConfig& config, const MemoryStore& memory) {
    // Product descriptor plus the top-3 best-KPI keywords seen so far.
    std::vector<std::size_t> ids(memory.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        const double ka = selected_kpi(memory.record(a).kpis, config.kpi_metric);
        const double kb = selected_kpi(memory.record(b).kpis, config.kpi_metric);
        if (ka != kb) return ka > kb;
        return a < b;
    });
    std::string query = config.product;
    const std::size_t take = std::min<std::size_t>(3, ids.size());
    for (std::size_t i = 0; i < take; ++i) {
        query += ", " + memory.record(ids[i]).keyword.surface;
    }
    return query;
}

void check_toolset(const Toolset& tools) {
    if (!tools.model || !tools.search || !tools.embedder || !tools.memory ||
        !tools.kpi_source) {
        throw InvalidInput("toolset is missing a component");
    }
}

}  // namespace

CampaignState init_campaign(const CampaignConfig& config, Toolset& tools) {
    check_toolset(tools);
    config.validate();

    CampaignState state;
    state.config = config;

    StepOutcome outcome;
    outcome.step = 0;
    outcome.keyword_set = init_keywords(config, *tools.model, *tools.search);
    outcome.observed_kpis = tools.kpi_source->observe(outcome.keyword_set.keywords);
    // Initial keywords belong to neither KPI group.
    outcome.group_kpi_wider = 0.0;
    outcome.group_kpi_deeper = 0.0;

    state.record_outcome(outcome);
    write_memory(tools, outcome.keyword_set.keywords, outcome.observed_kpis, 0);
    return state;
}

std::pair<CampaignState, StepResult> run_step(const CampaignState& state, Toolset& tools) {
    check_toolset(tools);
    const CampaignConfig& config = state.config;
    if (state.t >= config.horizon_T) {
        throw InvalidInput("campaign horizon exhausted (t = " + std::to_string(state.t) + ")");
    }
    if (state.history().empty()) {
        throw InvalidInput("run_step requires an initialized campaign");
    }
    const int step = state.t + 1;

    // 1. Live context.
    const std::string query = compose_query(config, *tools.memory);
    const SearchContext context = tools.search->search(query, tools.search_max_results);

    // 2. Memory retrieval.
    std::vector<MemoryStore::Hit> hits;
    if (tools.memory->size() > 0) {
        const auto query_vec = tools.embedder->embed_one(query);
        hits = tools.memory->query_top_k(query_vec,
                                         static_cast<std::size_t>(tools.memory_top_k));
    }

    // 3. Previous-step group KPIs drive the split.
    const auto [wider_kpi, deeper_kpi] =
        aggregate_group_kpi(state.history().back(), config.kpi_metric);
    const auto categories = state.category_kpis();
    const AllocationPlan plan =
        make_plan(wider_kpi, deeper_kpi, config.per_step_n, tools.policy, categories);

    // 4. Guarded generation with deficit retries.
    const GenerationPrompt prompt = build_generation_prompt(state, context, hits, plan);
    const std::string rendered = prompt.render();

    StepResult result;
    result.plan = plan;

    EnforcementResult best;
    best.deficit = plan.n + 1;  // worse than any real outcome
    int last_deficit = plan.n;
    std::string last_problem;
    for (int attempt = 0; attempt <= config.retry_limit; ++attempt) {
        std::string request = rendered;
        if (attempt > 0) {
            request += "\nThe previous response fell short by " + std::to_string(last_deficit) +
                       " keyword(s) after deduplication and budget enforcement";
            if (!last_problem.empty()) request += " (" + last_problem + ")";
            request += ". Provide a fresh full set following the allocation directive exactly.";
        }
        const std::string response = tools.model->complete(request, config.temperature);
        last_problem.clear();
        EnforcementResult attempt_result;
        try {
            attempt_result = enforce_plan(parse_generation_response(response), plan, state);
        } catch (const ParseError& e) {
            attempt_result.deficit = plan.n;
            last_problem = e.what();
        } catch (const SchemaError& e) {
            attempt_result.deficit = plan.n;
            last_problem = e.what();
        }
        last_deficit = attempt_result.deficit;
        if (attempt_result.deficit < best.deficit) best = std::move(attempt_result);
        if (best.deficit == 0) break;
    }
    if (best.deficit > plan.n) best = EnforcementResult{{}, plan.n};
    if (best.deficit > 0) {
        result.warnings.push_back(
            "step " + std::to_string(step) + ": accepted " +
            std::to_string(best.accepted.size()) + " of " + std::to_string(plan.n) +
            " keywords (deficit " + std::to_string(best.deficit) + ")");
    }

    // 5. Observe KPIs for the accepted keywords.
    StepOutcome outcome;
    outcome.step = step;
    outcome.keyword_set.step = step;
    outcome.keyword_set.keywords = best.accepted;
    outcome.observed_kpis = tools.kpi_source->observe(best.accepted);
    std::tie(outcome.group_kpi_wider, outcome.group_kpi_deeper) =
        aggregate_group_kpi(outcome, config.kpi_metric);

    // 6+7. Commit: nothing above mutated shared state; memory writes last.
    CampaignState next = state;
    next.record_outcome(outcome);
    write_memory(tools, outcome.keyword_set.keywords, outcome.observed_kpis, step);

    result.outcome = std::move(outcome);
    return {std::move(next), std::move(result)};
}

CampaignReport run_campaign(const CampaignConfig& config, Toolset& tools) {
    config.validate();
    CampaignReport report;
    report.config = config;
    report.policy = tools.policy.name();

    auto attach_audit = [&] {
        if (tools.audit) {
            std::scoped_lock lock(tools.audit->mu);
            report.audit = tools.audit->entries;
        }
    };

    CampaignState state;
    try {
        state = init_campaign(config, tools);
    } catch (const ToolFailure& e) {
        attach_audit();
        throw CampaignAborted(std::string("campaign aborted during init: ") + e.what(), report);
    } catch (const GenerationFailure& e) {
        attach_audit();
        throw CampaignAborted(std::string("campaign aborted during init: ") + e.what(), report);
    }

    StepResult seed;
    seed.outcome = state.history().front();
    seed.plan.n = 0;
    report.steps.push_back(std::move(seed));

    for (int t = 1; t <= config.horizon_T; ++t) {
        try {
            auto [next, step_result] = run_step(state, tools);
            state = std::move(next);
            report.warnings.insert(report.warnings.end(), step_result.warnings.begin(),
                                   step_result.warnings.end());
            report.objective_total +=
                step_result.outcome.group_kpi_wider + step_result.outcome.group_kpi_deeper;
            report.steps.push_back(std::move(step_result));
        } catch (const ToolFailure& e) {
            attach_audit();
            throw CampaignAborted("campaign aborted at step " + std::to_string(t) + ": " +
                                      e.what(),
                                  report);
        }
    }
    attach_audit();
    return report;
}

namespace {

ordered_json keyword_to_json(const Keyword& kw) {
    return ordered_json{{"surface", kw.surface},
                        {"category", kw.category},
                        {"origin", std::string(to_string(kw.origin))}};
}

ordered_json kpis_to_json(const std::map<std::string, KpiRecord>& kpis) {
    ordered_json out = ordered_json::object();
    for (const auto& [normalized, record] : kpis) {
        out[normalized] = ordered_json{{"clicks", record.clicks},
                                       {"search_volume", record.search_volume},
                                       {"cpc", record.cpc},
                                       {"competitor_score", record.competitor_score},
                                       {"conversions", record.conversions}};
    }
    return out;
}

ordered_json plan_to_json(const AllocationPlan& plan) {
    ordered_json quotas = ordered_json::object();
    for (const auto& [category, quota] : plan.deeper_quotas) quotas[category] = quota;
    return ordered_json{{"n", plan.n},
                        {"wider_count", plan.wider_count},
                        {"deeper_count", plan.deeper_count},
                        {"p_wider", plan.p_wider},
                        {"p_deeper", plan.p_deeper},
                        {"deeper_quotas", std::move(quotas)}};
}

}  // namespace

ordered_json CampaignReport::to_json() const {
    ordered_json doc;
    doc["config"] = ordered_json{{"product", config.product},
                                 {"horizon_T", config.horizon_T},
                                 {"per_step_n", config.per_step_n},
                                 {"initial_count", config.initial_count},
                                 {"kpi_metric", std::string(to_string(config.kpi_metric))},
                                 {"temperature", config.temperature},
                                 {"retry_limit", config.retry_limit},
                                 {"seed", config.seed}};
    doc["policy"] = policy;
    doc["steps"] = ordered_json::array();
    for (const auto& step : steps) {
        ordered_json entry;
        entry["step"] = step.outcome.step;
        if (step.outcome.step > 0) entry["allocation"] = plan_to_json(step.plan);
        entry["keywords"] = ordered_json::array();
        for (const auto& kw : step.outcome.keyword_set.keywords) {
            entry["keywords"].push_back(keyword_to_json(kw));
        }
        entry["kpis"] = kpis_to_json(step.outcome.observed_kpis);
        entry["group_kpi_wider"] = step.outcome.group_kpi_wider;
        entry["group_kpi_deeper"] = step.outcome.group_kpi_deeper;
        doc["steps"].push_back(std::move(entry));
    }
    doc["objective_total"] = objective_total;
    doc["warnings"] = warnings;
    if (!audit.empty()) {
        ordered_json entries = ordered_json::array();
        for (const auto& entry : audit) {
            entries.push_back(ordered_json{{"tool", entry.tool},
                                           {"request_digest", entry.request_digest},
                                           {"response_digest", entry.response_digest}});
        }
        doc["audit"] = std::move(entries);
    }
    return doc;
}

}  // namespace okg
