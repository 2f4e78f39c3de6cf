#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "okg/orchestrator.hpp"

namespace okg {

// Archivable run description: `key = value` lines, `#` comments, dotted keys
// for the tool-choice level (model.kind, search.corpus, ...).
struct RunConfig {
    CampaignConfig campaign;
    PolicyVariant policy = PolicyVariant::full_adaptive();

    std::string model_kind = "mock";     // mock | remote
    std::filesystem::path model_script;  // mock
    RemoteEndpoint model_endpoint;       // remote
    std::string model_name;

    std::string search_kind = "fixture";  // fixture | remote
    std::filesystem::path search_corpus;
    RemoteEndpoint search_endpoint;

    std::string embedder_kind = "hash";  // hash | remote
    int embedder_dim = 256;
    RemoteEndpoint embedder_endpoint;

    std::filesystem::path dataset_path;
    std::optional<std::string> dataset_product_filter;
    std::filesystem::path dataset_columns;  // optional column-map JSON

    std::optional<double> kpi_noise_sigma;

    std::filesystem::path memory_snapshot;  // optional save target
    std::filesystem::path output_path;      // report target

    int memory_top_k = 20;
    int search_max_results = 8;

    bool hermetic() const;

    // Parses and validates; throws ConfigError naming the offending field.
    // Relative paths resolve against the config file's directory.
    static RunConfig load(const std::filesystem::path& path);

    // Walks the declared tool choices; throws ConfigError for a missing file
    // or an invalid combination. `require_hermetic` rejects remote choices.
    void validate(bool require_hermetic = false) const;
};

// Instantiates the toolset a config describes. Hermetic configs construct
// only offline tools (no sockets are ever opened).
Toolset build_toolset(const RunConfig& config);

}  // namespace okg
