#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "okg/tools.hpp"

namespace okg {

struct TokenizedText {
    std::vector<std::string> tokens;

    bool empty() const { return tokens.empty(); }
};

// Folds the text (NFKC, lowercase, whitespace collapse), splits on whitespace,
// then splits contiguous CJK runs per character. Japanese keyword data is
// whitespace-free, so per-character CJK tokens are the usable unit.
TokenizedText tokenize(std::string_view text);

// Joins keyword list entries into one token sequence in list order.
TokenizedText tokenize_keyword_list(const std::vector<std::string>& keywords);

// Geometric mean of modified unigram and bigram precision with brevity
// penalty. When the raw bigram match count is zero, bigram precision is
// smoothed add-one; single-token candidates use unigram precision only.
double bleu2(const TokenizedText& candidate, const TokenizedText& reference);

// Clipped unigram overlap divided by reference length.
double rouge1_recall(const TokenizedText& candidate, const TokenizedText& reference);

struct PrecisionRecallF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Embedding greedy-match score: precision averages each candidate token's
// best cosine against the reference tokens; recall is symmetric. No baseline
// rescaling.
PrecisionRecallF1 greedy_embed_f1(const std::vector<std::string>& candidate_tokens,
                                  const std::vector<std::string>& reference_tokens,
                                  Embedder& embedder);

// |a ∩ b| / |a ∪ b| over normalized keyword forms; two empty sets count as
// identical (1.0).
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Cosine between the L2-normalized means of the two sets' keyword embeddings.
double set_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b,
                  Embedder& embedder);

struct MethodEval {
    std::string method;
    // Relevance vs. search-result text.
    double relevance_bertscore = 0.0;
    double relevance_bleu2 = 0.0;
    double relevance_rouge1 = 0.0;
    // Similarity vs. offline keyword sets.
    double offline_bertscore = 0.0;
    double offline_jaccard = 0.0;
    double offline_cosine = 0.0;
};

struct RenderedComparison {
    std::string text;               // aligned table, 2 decimals, half-even
    nlohmann::ordered_json machine; // raw values
};

// Rows in input order; columns fixed as
// BERTScore, BLEU-2, ROUGE-1 | BERTScore, Jaccard, Cosine.
RenderedComparison render_comparison(const std::vector<MethodEval>& reports);

// Banker's rounding to `digits` decimal places.
double round_half_even(double value, int digits);

}  // namespace okg
