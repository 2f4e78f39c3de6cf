#include "okg/config.hpp"

#include <charconv>
#include <fstream>

namespace okg {

namespace {

std::string strip(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

class KeyValueFile {
public:
    explicit KeyValueFile(const std::filesystem::path& path) : dir_(path.parent_path()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string stripped = strip(line);
            if (stripped.empty() || stripped.front() == '#') continue;
            const auto eq = stripped.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) +
                                  " is not `key = value`: " + stripped);
            }
            const std::string key = strip(stripped.substr(0, eq));
            const std::string value = strip(stripped.substr(eq + 1));
            if (key.empty()) {
                throw ConfigError("empty key at line " + std::to_string(line_no));
            }
            values_[key] = value;
        }
    }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    std::string require(const std::string& key) const {
        auto v = get(key);
        if (!v || v->empty()) throw ConfigError("missing required key: " + key, key);
        return *v;
    }

    std::filesystem::path resolve(const std::string& value) const {
        std::filesystem::path p(value);
        return p.is_absolute() ? p : dir_ / p;
    }

    template <typename T>
    T number(const std::string& key, T fallback) const {
        auto v = get(key);
        if (!v || v->empty()) return fallback;
        T out{};
        auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc{} || ptr != v->data() + v->size()) {
            throw ConfigError("key " + key + " is not a number: " + *v, key);
        }
        return out;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> values_;
};

RemoteEndpoint endpoint_from(const KeyValueFile& file, const std::string& prefix,
                             const std::string& default_key_env) {
    RemoteEndpoint ep;
    ep.base_url = file.get(prefix + ".endpoint").value_or("");
    ep.path = file.get(prefix + ".path").value_or("");
    ep.api_key_env = file.get(prefix + ".api_key_env").value_or(default_key_env);
    ep.timeout_ms = file.number<int>(prefix + ".timeout_ms", ep.timeout_ms);
    ep.max_attempts = file.number<int>(prefix + ".max_attempts", ep.max_attempts);
    return ep;
}

void require_file(const std::filesystem::path& path, const std::string& field) {
    if (path.empty()) throw ConfigError("missing required path: " + field, field);
    if (!std::filesystem::exists(path)) {
        throw ConfigError(field + " does not exist: " + path.string(), field);
    }
}

}  // namespace

bool RunConfig::hermetic() const {
    return model_kind == "mock" && search_kind == "fixture" && embedder_kind == "hash";
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    KeyValueFile file(path);
    RunConfig config;

    config.campaign.product = file.require("product");
    config.campaign.horizon_T = file.number<int>("horizon_T", 3);
    config.campaign.per_step_n = file.number<int>("per_step_n", 10);
    config.campaign.initial_count = file.number<int>("initial_count", 3);
    if (auto metric = file.get("kpi_metric"); metric && !metric->empty()) {
        try {
            config.campaign.kpi_metric = kpi_metric_from_string(*metric);
        } catch (const InvalidInput& e) {
            throw ConfigError(e.what(), "kpi_metric");
        }
    }
    config.campaign.temperature = file.number<double>("temperature", 0.1);
    config.campaign.retry_limit = file.number<int>("retry_limit", 3);
    config.campaign.seed = file.number<std::uint64_t>("seed", 0);

    if (auto variant = file.get("policy.variant"); variant && !variant->empty()) {
        std::string spec_text = *variant;
        if (auto ratio = file.get("policy.fixed_ratio");
            ratio && !ratio->empty() && spec_text == "fixed_growth") {
            spec_text += ":" + *ratio;
        }
        try {
            config.policy = PolicyVariant::parse(spec_text);
        } catch (const InvalidInput& e) {
            throw ConfigError(e.what(), "policy.variant");
        }
    }

    config.model_kind = file.get("model.kind").value_or("mock");
    if (auto script = file.get("model.script"); script && !script->empty()) {
        config.model_script = file.resolve(*script);
    }
    config.model_endpoint = endpoint_from(file, "model", "OKG_CHAT_API_KEY");
    config.model_name = file.get("model.name").value_or("");

    config.search_kind = file.get("search.kind").value_or("fixture");
    if (auto corpus = file.get("search.corpus"); corpus && !corpus->empty()) {
        config.search_corpus = file.resolve(*corpus);
    }
    config.search_endpoint = endpoint_from(file, "search", "OKG_SEARCH_API_KEY");

    config.embedder_kind = file.get("embedder.kind").value_or("hash");
    config.embedder_dim = file.number<int>("embedder.dim", 256);
    config.embedder_endpoint = endpoint_from(file, "embedder", "OKG_EMBED_API_KEY");

    if (auto dataset = file.get("dataset.path"); dataset && !dataset->empty()) {
        config.dataset_path = file.resolve(*dataset);
    }
    if (auto filter = file.get("dataset.product_filter"); filter && !filter->empty()) {
        config.dataset_product_filter = *filter;
    }
    if (auto columns = file.get("dataset.columns"); columns && !columns->empty()) {
        config.dataset_columns = file.resolve(*columns);
    }
    if (auto sigma = file.get("kpi_noise.sigma"); sigma && !sigma->empty()) {
        config.kpi_noise_sigma = file.number<double>("kpi_noise.sigma", 0.0);
    }
    if (auto snapshot = file.get("memory.snapshot"); snapshot && !snapshot->empty()) {
        config.memory_snapshot = file.resolve(*snapshot);
    }
    if (auto output = file.get("output"); output && !output->empty()) {
        config.output_path = file.resolve(*output);
    }
    config.memory_top_k = file.number<int>("memory.top_k", 20);
    config.search_max_results = file.number<int>("search.max_results", 8);

    return config;
}

void RunConfig::validate(bool require_hermetic) const {
    campaign.validate();

    if (model_kind == "mock") {
        require_file(model_script, "model.script");
    } else if (model_kind == "remote") {
        if (model_endpoint.base_url.empty()) {
            throw ConfigError("model.endpoint required for remote model", "model.endpoint");
        }
    } else {
        throw ConfigError("model.kind must be mock or remote", "model.kind");
    }

    if (search_kind == "fixture") {
        require_file(search_corpus, "search.corpus");
    } else if (search_kind == "remote") {
        if (search_endpoint.base_url.empty()) {
            throw ConfigError("search.endpoint required for remote search", "search.endpoint");
        }
    } else {
        throw ConfigError("search.kind must be fixture or remote", "search.kind");
    }

    if (embedder_kind == "hash") {
        if (embedder_dim < 8) throw ConfigError("embedder.dim must be >= 8", "embedder.dim");
    } else if (embedder_kind == "remote") {
        if (embedder_endpoint.base_url.empty()) {
            throw ConfigError("embedder.endpoint required for remote embedder",
                              "embedder.endpoint");
        }
    } else {
        throw ConfigError("embedder.kind must be hash or remote", "embedder.kind");
    }

    require_file(dataset_path, "dataset.path");
    if (!dataset_columns.empty()) require_file(dataset_columns, "dataset.columns");
    if (kpi_noise_sigma && *kpi_noise_sigma < 0.0) {
        throw ConfigError("kpi_noise.sigma must be >= 0", "kpi_noise.sigma");
    }
    if (memory_top_k < 1) throw ConfigError("memory.top_k must be >= 1", "memory.top_k");
    if (search_max_results < 1) {
        throw ConfigError("search.max_results must be >= 1", "search.max_results");
    }

    if (require_hermetic && !hermetic()) {
        throw ConfigError("simulate requires mock/fixture/hash tool choices", "model.kind");
    }
}

Toolset build_toolset(const RunConfig& config) {
    Toolset tools;
    tools.policy = config.policy;
    tools.memory_top_k = config.memory_top_k;
    tools.search_max_results = config.search_max_results;

    const bool any_remote = !config.hermetic();
    if (any_remote) tools.audit = std::make_shared<TransportAudit>();

    if (config.model_kind == "mock") {
        tools.model = std::make_shared<ScriptedChatModel>(
            ScriptedChatModel::from_file(config.model_script));
    } else {
        tools.model = std::make_shared<RemoteChatModel>(config.model_endpoint,
                                                        config.model_name, tools.audit);
    }

    if (config.search_kind == "fixture") {
        tools.search = std::make_shared<FixtureSearchProvider>(
            FixtureSearchProvider::from_file(config.search_corpus));
    } else {
        tools.search = std::make_shared<RemoteSearchProvider>(config.search_endpoint, tools.audit);
    }

    if (config.embedder_kind == "hash") {
        tools.embedder = std::make_shared<HashEmbedder>(config.embedder_dim);
    } else {
        tools.embedder = std::make_shared<RemoteEmbedder>(config.embedder_endpoint,
                                                          config.embedder_dim, tools.audit);
    }

    tools.memory = std::make_shared<MemoryStore>(config.embedder_dim);

    ColumnMap columns = config.dataset_columns.empty()
                            ? ColumnMap::identity()
                            : ColumnMap::from_file(config.dataset_columns);
    auto rows = load_dataset(config.dataset_path, config.dataset_product_filter, columns);
    auto replay = std::make_shared<ReplayKpiSource>(std::move(rows), tools.embedder);
    if (config.kpi_noise_sigma && *config.kpi_noise_sigma > 0.0) {
        replay->enable_noise(*config.kpi_noise_sigma, config.campaign.seed);
    }
    tools.kpi_source = std::move(replay);

    return tools;
}

}  // namespace okg
