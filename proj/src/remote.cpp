#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "okg/tools.hpp"

namespace okg {

namespace {

using nlohmann::json;

// Token bucket shared by all remote clients of one endpoint instance.
class TokenBucket {
public:
    TokenBucket(double capacity, double refill_per_sec)
        : capacity_(capacity), tokens_(capacity), refill_per_sec_(refill_per_sec),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        std::unique_lock lock(mu_);
        for (;;) {
            auto now = std::chrono::steady_clock::now();
            const double elapsed = std::chrono::duration<double>(now - last_).count();
            tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_sec_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const double wait_s = (1.0 - tokens_) / refill_per_sec_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

private:
    std::mutex mu_;
    double capacity_;
    double tokens_;
    double refill_per_sec_;
    std::chrono::steady_clock::time_point last_;
};

TokenBucket& bucket_for(const std::string& base_url) {
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<TokenBucket>> buckets;
    std::scoped_lock lock(mu);
    auto& slot = buckets[base_url];
    if (!slot) slot = std::make_unique<TokenBucket>(5.0, 10.0);
    return *slot;
}

std::string bearer_token(const RemoteEndpoint& endpoint) {
    if (endpoint.api_key_env.empty()) return {};
    const char* value = std::getenv(endpoint.api_key_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw AuthError("credential env var not set: " + endpoint.api_key_env);
    }
    return value;
}

json post_json(const RemoteEndpoint& endpoint, const json& body,
               const char* tool_name, const std::shared_ptr<TransportAudit>& audit) {
    const std::string token = bearer_token(endpoint);
    const std::string payload = body.dump();

    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000LL);
    client.set_read_timeout(endpoint.timeout_ms / 1000, (endpoint.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    std::string last_error;
    for (int attempt = 0; attempt < std::max(1, endpoint.max_attempts); ++attempt) {
        if (attempt > 0) {
            const auto delay = endpoint.backoff_initial_ms * (1LL << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        bucket_for(endpoint.base_url).acquire();

        auto res = client.Post(endpoint.path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection error: " + httplib::to_string(res.error());
            continue;  // transport failures are retriable
        }
        if (res->status == 401 || res->status == 403) {
            throw AuthError(std::string(tool_name) + ": authentication rejected (HTTP " +
                            std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw ToolFailure(std::string(tool_name) + ": HTTP " + std::to_string(res->status),
                              /*retriable=*/false);
        }
        if (audit) {
            std::scoped_lock lock(audit->mu);
            audit->entries.push_back(
                {tool_name, fnv1a_hex(payload), fnv1a_hex(res->body)});
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw ToolFailure(std::string(tool_name) + ": response is not JSON: " + e.what(),
                              /*retriable=*/false);
        }
    }
    throw ToolFailure(std::string(tool_name) + ": giving up after " +
                      std::to_string(endpoint.max_attempts) + " attempts (" + last_error + ")",
                      /*retriable=*/true);
}

[[noreturn]] void schema_mismatch(const char* tool_name, const std::string& detail) {
    throw ToolFailure(std::string(tool_name) + ": schema mismatch: " + detail,
                      /*retriable=*/false);
}

}  // namespace

RemoteChatModel::RemoteChatModel(RemoteEndpoint endpoint, std::string model_name,
                                 std::shared_ptr<TransportAudit> audit)
    : endpoint_(std::move(endpoint)), model_name_(std::move(model_name)),
      audit_(std::move(audit)) {}

std::string RemoteChatModel::complete(const std::string& prompt, double temperature) {
    json request = {
        {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
        {"temperature", temperature},
    };
    if (!model_name_.empty()) request["model"] = model_name_;

    json reply = post_json(endpoint_, request, "chat", audit_);
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        schema_mismatch("chat", "missing choices[0]");
    }
    const json& first = reply["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        schema_mismatch("chat", "missing choices[0].message.content");
    }
    return first["message"]["content"].get<std::string>();
}

RemoteSearchProvider::RemoteSearchProvider(RemoteEndpoint endpoint,
                                           std::shared_ptr<TransportAudit> audit)
    : endpoint_(std::move(endpoint)), audit_(std::move(audit)) {}

SearchContext RemoteSearchProvider::search(const std::string& query, int max_results) {
    json request = {{"query", query}, {"max_results", max_results}};
    json reply = post_json(endpoint_, request, "search", audit_);
    if (!reply.contains("results") || !reply["results"].is_array()) {
        schema_mismatch("search", "missing results array");
    }
    SearchContext ctx;
    ctx.query = query;
    for (const auto& item : reply["results"]) {
        if (static_cast<int>(ctx.snippets.size()) >= max_results) break;
        if (!item.contains("text") || !item["text"].is_string()) {
            schema_mismatch("search", "result without text");
        }
        Snippet s;
        s.source_id = item.value("source_id", "");
        s.text = item["text"].get<std::string>();
        s.retrieved_at = item.value("retrieved_at", std::int64_t{0});
        if (!s.text.empty()) ctx.snippets.push_back(std::move(s));
    }
    return ctx;
}

RemoteEmbedder::RemoteEmbedder(RemoteEndpoint endpoint, int dim,
                               std::shared_ptr<TransportAudit> audit)
    : endpoint_(std::move(endpoint)), dim_(dim), audit_(std::move(audit)) {}

std::vector<std::vector<float>> RemoteEmbedder::embed(const std::vector<std::string>& texts) {
    json request = {{"input", texts}};
    json reply = post_json(endpoint_, request, "embed", audit_);
    if (!reply.contains("data") || !reply["data"].is_array() ||
        reply["data"].size() != texts.size()) {
        schema_mismatch("embed", "data array missing or wrong length");
    }
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& item : reply["data"]) {
        if (!item.contains("embedding") || !item["embedding"].is_array()) {
            schema_mismatch("embed", "entry without embedding array");
        }
        const auto& raw = item["embedding"];
        if (static_cast<int>(raw.size()) != dim_) {
            schema_mismatch("embed", "embedding dimension " + std::to_string(raw.size()) +
                                        " != configured " + std::to_string(dim_));
        }
        std::vector<float> v(raw.size());
        double norm_sq = 0.0;
        for (size_t i = 0; i < raw.size(); ++i) {
            if (!raw[i].is_number()) schema_mismatch("embed", "non-numeric component");
            const double x = raw[i].get<double>();
            v[i] = static_cast<float>(x);
            norm_sq += x * x;
        }
        if (norm_sq == 0.0) schema_mismatch("embed", "zero vector");
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& x : v) x = static_cast<float>(x * inv);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace okg
