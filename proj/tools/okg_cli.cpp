#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "okg/config.hpp"
#include "okg/metrics.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitToolFailure = 3;

struct GlobalOptions {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw okg::Error("cannot open output path: " + path.string());
    out << content;
    if (!out.good()) throw okg::Error("failed writing output: " + path.string());
}

std::filesystem::path report_target(const okg::RunConfig& config, const GlobalOptions& global) {
    if (!global.out_path.empty()) return global.out_path;
    if (!config.output_path.empty()) return config.output_path;
    return "report.json";
}

okg::RunConfig load_run_config(const GlobalOptions& global, bool require_hermetic) {
    if (global.config_path.empty()) {
        throw okg::ConfigError("--config is required for this command", "config");
    }
    okg::RunConfig config = okg::RunConfig::load(global.config_path);
    if (global.seed) config.campaign.seed = *global.seed;
    config.validate(require_hermetic);
    return config;
}

int cmd_run(const GlobalOptions& global, bool require_hermetic) {
    const okg::RunConfig config = load_run_config(global, require_hermetic);
    okg::Toolset tools = okg::build_toolset(config);
    const std::filesystem::path target = report_target(config, global);

    try {
        const okg::CampaignReport report = okg::run_campaign(config.campaign, tools);
        write_text_file(target, report.to_json().dump(2) + "\n");
        if (!config.memory_snapshot.empty()) tools.memory->snapshot(config.memory_snapshot);
        if (!global.quiet) {
            std::cout << "report written to " << target.string()
                      << " (objective_total=" << report.objective_total << ")\n";
            for (const auto& warning : report.warnings) {
                std::cout << "warning: " << warning << "\n";
            }
        }
        return kExitOk;
    } catch (const okg::CampaignAborted& aborted) {
        write_text_file(target, aborted.partial_report().to_json().dump(2) + "\n");
        std::cerr << "error: " << aborted.what() << " (partial report written to "
                  << target.string() << ")\n";
        return kExitToolFailure;
    }
}

std::vector<std::string> read_keyword_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw okg::ValidationError("cannot open keyword list: " + path.string());
    std::vector<std::string> keywords;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        const auto begin = trimmed.find_first_not_of(" \t");
        if (begin == std::string::npos) continue;
        const auto end = trimmed.find_last_not_of(" \t");
        trimmed = trimmed.substr(begin, end - begin + 1);
        if (!trimmed.empty()) keywords.push_back(trimmed);
    }
    return keywords;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw okg::ValidationError("cannot open references file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::ordered_json evaluate_list(const std::string& name,
                                     const std::vector<std::string>& generated,
                                     const std::filesystem::path& dataset_path,
                                     const std::string& references_text,
                                     std::string* human_out) {
    auto embedder = std::make_shared<okg::HashEmbedder>(256);
    auto rows = okg::load_dataset(dataset_path);
    if (rows.empty()) throw okg::ValidationError("dataset has no rows");
    okg::ReplayKpiSource replay(rows, embedder);

    std::vector<okg::Keyword> keywords;
    for (const auto& kw : generated) {
        keywords.push_back(okg::Keyword::make(kw, "generated", okg::Origin::initial, 0));
    }

    const okg::KpiAggregate aggregate = okg::aggregate_matches(keywords, replay);
    const okg::NormalizedKpiTable kpi_table = okg::normalize_kpi_table({{name, aggregate}});

    const okg::TokenizedText candidate_tokens = okg::tokenize_keyword_list(generated);
    const okg::TokenizedText reference_tokens = okg::tokenize(references_text);
    if (candidate_tokens.empty()) throw okg::ValidationError("generated list is empty");
    if (reference_tokens.empty()) throw okg::ValidationError("references text is empty");

    std::vector<std::string> offline;
    for (const auto& row : rows) offline.push_back(row.keyword);

    okg::MethodEval eval;
    eval.method = name;
    eval.relevance_bleu2 = okg::bleu2(candidate_tokens, reference_tokens);
    eval.relevance_rouge1 = okg::rouge1_recall(candidate_tokens, reference_tokens);
    eval.relevance_bertscore =
        okg::greedy_embed_f1(candidate_tokens.tokens, reference_tokens.tokens, *embedder).f1;
    eval.offline_jaccard = okg::jaccard(generated, offline);
    eval.offline_cosine = okg::set_cosine(generated, offline, *embedder);
    eval.offline_bertscore = okg::greedy_embed_f1(generated, offline, *embedder).f1;

    const okg::RenderedComparison comparison = okg::render_comparison({eval});

    nlohmann::ordered_json doc;
    doc["kpi"] = {{"methods", kpi_table.methods},
                  {"clicks", kpi_table.clicks},
                  {"search_volume", kpi_table.search_volume},
                  {"cpc", kpi_table.cpc},
                  {"competitor_score", kpi_table.competitor}};
    doc["comparison"] = comparison.machine;

    if (human_out) {
        std::ostringstream text;
        text << "KPI (normalized, vs. dataset):\n"
             << "  clicks=" << kpi_table.clicks[0] << " search_volume=" << kpi_table.search_volume[0]
             << " cpc=" << kpi_table.cpc[0] << " competitor_score=" << kpi_table.competitor[0]
             << "\n\n" << comparison.text;
        *human_out = text.str();
    }
    return doc;
}

int cmd_evaluate(const GlobalOptions& global, const std::string& generated_path,
                 const std::string& dataset_path, const std::string& references_path,
                 const std::string& name) {
    const std::vector<std::string> generated = read_keyword_lines(generated_path);
    if (generated.empty()) throw okg::ValidationError("generated list is empty");
    const std::string references_text = read_text_file(references_path);

    std::string human;
    nlohmann::ordered_json doc =
        evaluate_list(name, generated, dataset_path, references_text, &human);

    if (!global.out_path.empty()) {
        write_text_file(global.out_path, doc.dump(2) + "\n");
        if (!global.quiet) std::cout << human;
    } else {
        if (!global.quiet) std::cout << human << "\n";
        std::cout << doc.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_ablate(const GlobalOptions& global, const std::vector<std::string>& variant_names) {
    if (variant_names.size() < 2) {
        throw okg::ConfigError("ablate needs at least 2 policy variants", "variants");
    }
    std::vector<okg::PolicyVariant> variants;
    std::set<std::string> seen;
    for (const auto& name : variant_names) {
        okg::PolicyVariant variant = okg::PolicyVariant::parse(name);
        if (!seen.insert(variant.name()).second) {
            std::cerr << "warning: duplicate variant " << variant.name() << " ignored\n";
            continue;
        }
        variants.push_back(variant);
    }
    if (variants.size() < 2) {
        throw okg::ConfigError("ablate needs at least 2 distinct policy variants", "variants");
    }

    const okg::RunConfig base = load_run_config(global, /*require_hermetic=*/false);

    auto shared_embedder = std::make_shared<okg::HashEmbedder>(base.embedder_dim);
    auto offline_rows = okg::load_dataset(base.dataset_path, base.dataset_product_filter,
                                          base.dataset_columns.empty()
                                              ? okg::ColumnMap::identity()
                                              : okg::ColumnMap::from_file(base.dataset_columns));
    std::vector<std::string> offline;
    for (const auto& row : offline_rows) offline.push_back(row.keyword);

    nlohmann::ordered_json doc;
    doc["variants"] = nlohmann::ordered_json::array();
    std::ostringstream table;
    table << "variant            clicks      bertscore  jaccard  cosine\n";

    for (const auto& variant : variants) {
        okg::RunConfig config = base;
        config.policy = variant;
        okg::Toolset tools = okg::build_toolset(config);
        const okg::CampaignReport report = okg::run_campaign(config.campaign, tools);

        std::vector<std::string> cumulative;
        for (const auto& step : report.steps) {
            for (const auto& kw : step.outcome.keyword_set.keywords) {
                cumulative.push_back(kw.surface);
            }
        }

        double bertscore = 0.0, jac = 0.0, cos = 0.0;
        if (!cumulative.empty() && !offline.empty()) {
            bertscore = okg::greedy_embed_f1(cumulative, offline, *shared_embedder).f1;
            jac = okg::jaccard(cumulative, offline);
            cos = okg::set_cosine(cumulative, offline, *shared_embedder);
        }

        nlohmann::ordered_json entry;
        entry["variant"] = variant.name();
        entry["objective_total"] = report.objective_total;
        entry["cumulative_keywords"] = cumulative.size();
        entry["bertscore"] = bertscore;
        entry["jaccard"] = jac;
        entry["cosine"] = cos;
        doc["variants"].push_back(std::move(entry));

        table << variant.name() << std::string(std::max<int>(1, 19 - static_cast<int>(variant.name().size())), ' ')
              << report.objective_total << "      " << okg::round_half_even(bertscore, 2)
              << "       " << okg::round_half_even(jac, 2) << "     "
              << okg::round_half_even(cos, 2) << "\n";
    }

    if (!global.out_path.empty()) {
        write_text_file(global.out_path, doc.dump(2) + "\n");
        if (!global.quiet) std::cout << table.str();
    } else {
        if (!global.quiet) std::cout << table.str() << "\n";
        std::cout << doc.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_dataset_validate(const std::string& path) {
    std::vector<okg::ValidationError> errors;
    try {
        errors = okg::validate_dataset(path);
    } catch (const okg::ValidationError& e) {
        std::cerr << "line " << e.line() << ": " << e.what() << "\n";
        return kExitValidation;
    }
    if (errors.empty()) {
        std::cout << "dataset ok\n";
        return kExitOk;
    }
    const std::size_t shown = std::min<std::size_t>(errors.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
        std::cerr << "line " << errors[i].line() << ": " << errors[i].what() << "\n";
    }
    if (errors.size() > shown) {
        std::cerr << "... and " << errors.size() - shown << " more\n";
    }
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop keyword generation for sponsored search"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "Run configuration file");
    app.add_option("--out", global.out_path, "Output path (overrides config)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Seed override");
    app.add_flag("--quiet", global.quiet, "Suppress human-readable output");

    auto* run = app.add_subcommand("run", "Run a campaign from a config file");
    run->fallthrough();
    auto* simulate =
        app.add_subcommand("simulate", "Run a campaign with mock tools enforced");
    simulate->fallthrough();
    auto* ablate = app.add_subcommand("ablate", "Run one campaign per policy variant");
    ablate->fallthrough();
    std::vector<std::string> variant_names;
    ablate->add_option("--variants", variant_names,
                       "Policy variants (e.g. full_adaptive fixed_growth:0.5 wide_only)")
        ->expected(-1);

    auto* evaluate = app.add_subcommand("evaluate", "Score a keyword list");
    evaluate->fallthrough();
    std::string generated_path, dataset_path, references_path, method_name = "generated";
    evaluate->add_option("generated", generated_path, "Keyword list, one per line")->required();
    evaluate->add_option("dataset", dataset_path, "Keyword-KPI dataset CSV")->required();
    evaluate->add_option("references", references_path, "Reference text file")->required();
    evaluate->add_option("--name", method_name, "Row label for the tables");

    auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
    dataset->fallthrough();
    dataset->require_subcommand(1);
    auto* validate = dataset->add_subcommand("validate", "Validate a dataset CSV");
    validate->fallthrough();
    std::string validate_path;
    validate->add_option("path", validate_path, "Dataset CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }
    if (seed_opt->count() > 0) global.seed = seed_value;

    try {
        if (run->parsed()) return cmd_run(global, /*require_hermetic=*/false);
        if (simulate->parsed()) return cmd_run(global, /*require_hermetic=*/true);
        if (ablate->parsed()) return cmd_ablate(global, variant_names);
        if (evaluate->parsed()) {
            return cmd_evaluate(global, generated_path, dataset_path, references_path,
                                method_name);
        }
        if (dataset->parsed() && validate->parsed()) {
            return cmd_dataset_validate(validate_path);
        }
    } catch (const okg::CampaignAborted& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitToolFailure;
    } catch (const okg::AuthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitToolFailure;
    } catch (const okg::ToolFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitToolFailure;
    } catch (const okg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return kExitValidation;
}
