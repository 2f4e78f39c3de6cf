#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "okg/domain.hpp"

namespace okg {

struct ChatModel {
    virtual ~ChatModel() = default;
    virtual std::string complete(const std::string& prompt, double temperature) = 0;
};

struct SearchProvider {
    virtual ~SearchProvider() = default;
    virtual SearchContext search(const std::string& query, int max_results) = 0;
};

struct Embedder {
    virtual ~Embedder() = default;
    virtual int dim() const = 0;
    // One unit-L2 vector per input text, deterministic per text.
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;

    std::vector<float> embed_one(const std::string& text);
};

// Feature-hashes character 2- and 3-grams (with boundary sentinels) of the
// folded text into d signed buckets, then L2-normalizes. Hermetic substitute
// for a remote embedding service.
std::vector<float> hash_embed(std::string_view text, int d);

class HashEmbedder final : public Embedder {
public:
    explicit HashEmbedder(int d = 256);
    int dim() const override { return d_; }
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

private:
    int d_;
};

// Replays a fixed list of responses in call order; a pure function of the
// call index. Exhausting the script is a ToolFailure.
class ScriptedChatModel final : public ChatModel {
public:
    explicit ScriptedChatModel(std::vector<std::string> responses);
    static ScriptedChatModel from_file(const std::filesystem::path& path);

    std::string complete(const std::string& prompt, double temperature) override;
    size_t calls() const { return next_; }

private:
    std::vector<std::string> responses_;
    size_t next_ = 0;
};

// Serves snippets from a fixture corpus keyed by query token. A query matches
// the union of its tokens' snippet lists, deduplicated, capped at max_results.
class FixtureSearchProvider final : public SearchProvider {
public:
    explicit FixtureSearchProvider(std::map<std::string, std::vector<Snippet>> corpus);
    static FixtureSearchProvider from_file(const std::filesystem::path& path);

    SearchContext search(const std::string& query, int max_results) override;

private:
    std::map<std::string, std::vector<Snippet>> corpus_;
};

// --- remote adapters ------------------------------------------------------

struct RemoteEndpoint {
    std::string base_url;       // e.g. "http://api.example.com:8080"
    std::string path;           // e.g. "/v1/chat/completions"
    std::string api_key_env;    // env var holding the bearer token
    int timeout_ms = 30000;
    int max_attempts = 3;       // retries only on 429/5xx
    int backoff_initial_ms = 250;
};

// FNV-1a digests of request/response bodies, for run audit trails.
struct TransportAudit {
    struct Entry {
        std::string tool;
        std::string request_digest;
        std::string response_digest;
    };
    std::mutex mu;
    std::vector<Entry> entries;
};

std::string fnv1a_hex(std::string_view data);

class RemoteChatModel final : public ChatModel {
public:
    RemoteChatModel(RemoteEndpoint endpoint, std::string model_name = {},
                    std::shared_ptr<TransportAudit> audit = nullptr);
    std::string complete(const std::string& prompt, double temperature) override;

private:
    RemoteEndpoint endpoint_;
    std::string model_name_;
    std::shared_ptr<TransportAudit> audit_;
};

class RemoteSearchProvider final : public SearchProvider {
public:
    explicit RemoteSearchProvider(RemoteEndpoint endpoint,
                                  std::shared_ptr<TransportAudit> audit = nullptr);
    SearchContext search(const std::string& query, int max_results) override;

private:
    RemoteEndpoint endpoint_;
    std::shared_ptr<TransportAudit> audit_;
};

class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(RemoteEndpoint endpoint, int dim,
                   std::shared_ptr<TransportAudit> audit = nullptr);
    int dim() const override { return dim_; }
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

private:
    RemoteEndpoint endpoint_;
    int dim_;
    std::shared_ptr<TransportAudit> audit_;
};

}  // namespace okg
