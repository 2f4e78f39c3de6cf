#include "okg/tools.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "okg/unicode.hpp"

namespace okg {

std::vector<float> Embedder::embed_one(const std::string& text) {
    auto vectors = embed({text});
    if (vectors.size() != 1) throw ToolFailure("embedder returned wrong batch size");
    return std::move(vectors.front());
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

void add_gram(std::vector<double>& acc, std::string_view gram, int d) {
    const std::uint64_t h = fnv1a(gram);
    const auto bucket = static_cast<size_t>(h % static_cast<std::uint64_t>(d));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    acc[bucket] += sign;
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(data)));
    return buf;
}

std::vector<float> hash_embed(std::string_view text, int d) {
    if (d < 8) throw InvalidInput("embedding dimension must be >= 8");
    const std::string folded = fold_text(text);
    if (folded.empty()) throw InvalidInput("cannot embed empty text");

    // Sentinels give every non-empty text at least one 2-gram and one 3-gram.
    std::u32string cps;
    cps.push_back(U'\x02');
    for (char32_t cp : utf8_decode(folded)) cps.push_back(cp);
    cps.push_back(U'\x03');

    std::vector<double> acc(static_cast<size_t>(d), 0.0);
    std::string gram;
    for (size_t i = 0; i + 1 < cps.size(); ++i) {
        gram.clear();
        utf8_append(gram, cps[i]);
        utf8_append(gram, cps[i + 1]);
        add_gram(acc, gram, d);
        if (i + 2 < cps.size()) {
            utf8_append(gram, cps[i + 2]);
            add_gram(acc, gram, d);
        }
    }

    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    if (norm_sq == 0.0) {
        throw InvalidInput("hash embedding collapsed to the zero vector");
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    std::vector<float> out(static_cast<size_t>(d));
    for (size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<float>(acc[i] * inv);
    }
    return out;
}

HashEmbedder::HashEmbedder(int d) : d_(d) {
    if (d < 8) throw InvalidInput("embedding dimension must be >= 8");
}

std::vector<std::vector<float>> HashEmbedder::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) out.push_back(hash_embed(text, d_));
    return out;
}

ScriptedChatModel::ScriptedChatModel(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

ScriptedChatModel ScriptedChatModel::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ToolFailure("cannot open chat script: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ToolFailure("malformed chat script " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw ToolFailure("chat script must be a JSON array of strings");
    std::vector<std::string> responses;
    for (const auto& item : doc) {
        if (!item.is_string()) throw ToolFailure("chat script entries must be strings");
        responses.push_back(item.get<std::string>());
    }
    return ScriptedChatModel(std::move(responses));
}

std::string ScriptedChatModel::complete(const std::string& /*prompt*/, double /*temperature*/) {
    if (next_ >= responses_.size()) {
        throw ToolFailure("chat script exhausted after " +
                          std::to_string(responses_.size()) + " responses");
    }
    return responses_[next_++];
}

FixtureSearchProvider::FixtureSearchProvider(std::map<std::string, std::vector<Snippet>> corpus)
    : corpus_(std::move(corpus)) {}

FixtureSearchProvider FixtureSearchProvider::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ToolFailure("cannot open search corpus: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ToolFailure("malformed search corpus " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw ToolFailure("search corpus must map query tokens to snippet lists");
    std::map<std::string, std::vector<Snippet>> corpus;
    for (const auto& [token, list] : doc.items()) {
        if (!list.is_array()) throw ToolFailure("corpus entry for '" + token + "' must be an array");
        std::vector<Snippet> snippets;
        for (const auto& item : list) {
            Snippet s;
            s.source_id = item.value("source_id", "");
            s.text = item.value("text", "");
            s.retrieved_at = item.value("retrieved_at", std::int64_t{0});
            if (s.text.empty()) throw ToolFailure("corpus snippet with empty text under '" + token + "'");
            snippets.push_back(std::move(s));
        }
        corpus[fold_text(token)] = std::move(snippets);
    }
    return FixtureSearchProvider(std::move(corpus));
}

SearchContext FixtureSearchProvider::search(const std::string& query, int max_results) {
    SearchContext ctx;
    ctx.query = query;
    if (max_results <= 0) return ctx;

    std::istringstream words(fold_text(query));
    std::set<std::pair<std::string, std::string>> seen;
    std::string token;
    while (words >> token) {
        // Composed queries carry commas; corpus keys are bare tokens.
        const auto begin = token.find_first_not_of(",.;:!?\"'()[]");
        const auto end = token.find_last_not_of(",.;:!?\"'()[]");
        if (begin == std::string::npos) continue;
        token = token.substr(begin, end - begin + 1);
        auto it = corpus_.find(token);
        if (it == corpus_.end()) continue;
        for (const auto& snippet : it->second) {
            if (static_cast<int>(ctx.snippets.size()) >= max_results) return ctx;
            if (seen.emplace(snippet.source_id, snippet.text).second) {
                ctx.snippets.push_back(snippet);
            }
        }
    }
    return ctx;
}

}  // namespace okg
