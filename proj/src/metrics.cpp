#include "okg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "okg/memory.hpp"
#include "okg/unicode.hpp"

namespace okg {

TokenizedText tokenize(std::string_view text) {
    const std::string folded = fold_text(text);
    TokenizedText out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            out.tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (char32_t cp : utf8_decode(folded)) {
        if (cp == U' ') {
            flush();
        } else if (is_cjk(cp)) {
            flush();
            std::string single;
            utf8_append(single, cp);
            out.tokens.push_back(std::move(single));
        } else {
            utf8_append(current, cp);
        }
    }
    flush();
    return out;
}

TokenizedText tokenize_keyword_list(const std::vector<std::string>& keywords) {
    TokenizedText out;
    for (const auto& kw : keywords) {
        TokenizedText part = tokenize(kw);
        out.tokens.insert(out.tokens.end(), part.tokens.begin(), part.tokens.end());
    }
    return out;
}

namespace {

std::map<std::string, int> unigram_counts(const std::vector<std::string>& tokens) {
    std::map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

std::map<std::pair<std::string, std::string>, int> bigram_counts(
    const std::vector<std::string>& tokens) {
    std::map<std::pair<std::string, std::string>, int> counts;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        ++counts[{tokens[i], tokens[i + 1]}];
    }
    return counts;
}

template <typename Counts>
int clipped_overlap(const Counts& candidate, const Counts& reference) {
    int overlap = 0;
    for (const auto& [gram, count] : candidate) {
        auto it = reference.find(gram);
        if (it != reference.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

double brevity_penalty(std::size_t candidate_len, std::size_t reference_len) {
    if (candidate_len >= reference_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(reference_len) / static_cast<double>(candidate_len));
}

}  // namespace

double bleu2(const TokenizedText& candidate, const TokenizedText& reference) {
    if (candidate.empty() || reference.empty()) {
        throw InvalidInput("bleu2 requires non-empty candidate and reference");
    }
    const auto& cand = candidate.tokens;
    const auto& ref = reference.tokens;

    const int uni_overlap = clipped_overlap(unigram_counts(cand), unigram_counts(ref));
    const double p1 = static_cast<double>(uni_overlap) / static_cast<double>(cand.size());
    const double bp = brevity_penalty(cand.size(), ref.size());

    if (cand.size() == 1) return bp * p1;

    const int bi_total = static_cast<int>(cand.size()) - 1;
    const int bi_overlap = clipped_overlap(bigram_counts(cand), bigram_counts(ref));
    const double p2 = bi_overlap > 0
                          ? static_cast<double>(bi_overlap) / bi_total
                          : (bi_overlap + 1.0) / (bi_total + 1.0);
    if (p1 == 0.0) return 0.0;
    return bp * std::sqrt(p1 * p2);
}

double rouge1_recall(const TokenizedText& candidate, const TokenizedText& reference) {
    if (reference.empty()) throw InvalidInput("rouge1 requires a non-empty reference");
    const int overlap =
        clipped_overlap(unigram_counts(candidate.tokens), unigram_counts(reference.tokens));
    return static_cast<double>(overlap) / static_cast<double>(reference.tokens.size());
}

PrecisionRecallF1 greedy_embed_f1(const std::vector<std::string>& candidate_tokens,
                                  const std::vector<std::string>& reference_tokens,
                                  Embedder& embedder) {
    if (candidate_tokens.empty() || reference_tokens.empty()) {
        throw InvalidInput("greedy_embed_f1 requires non-empty token lists");
    }
    std::vector<std::string> all = candidate_tokens;
    all.insert(all.end(), reference_tokens.begin(), reference_tokens.end());
    const auto vectors = embedder.embed(all);

    const std::size_t nc = candidate_tokens.size();
    const std::size_t nr = reference_tokens.size();

    PrecisionRecallF1 out;
    for (std::size_t i = 0; i < nc; ++i) {
        double best = -1.0;
        for (std::size_t j = 0; j < nr; ++j) {
            best = std::max(best, cosine(vectors[i], vectors[nc + j]));
        }
        out.precision += best;
    }
    out.precision /= static_cast<double>(nc);

    for (std::size_t j = 0; j < nr; ++j) {
        double best = -1.0;
        for (std::size_t i = 0; i < nc; ++i) {
            best = std::max(best, cosine(vectors[nc + j], vectors[i]));
        }
        out.recall += best;
    }
    out.recall /= static_cast<double>(nr);

    const double sum = out.precision + out.recall;
    out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
    return out;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::set<std::string> sa, sb;
    for (const auto& kw : a) sa.insert(normalize_keyword(kw));
    for (const auto& kw : b) sb.insert(normalize_keyword(kw));
    if (sa.empty() && sb.empty()) return 1.0;

    std::size_t intersection = 0;
    for (const auto& kw : sa) intersection += sb.count(kw);
    const std::size_t unified = sa.size() + sb.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unified);
}

double set_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b,
                  Embedder& embedder) {
    if (a.empty() || b.empty()) throw InvalidInput("set_cosine requires non-empty sets");

    auto mean_vector = [&](const std::vector<std::string>& keywords) {
        const auto vectors = embedder.embed(keywords);
        std::vector<double> mean(static_cast<std::size_t>(embedder.dim()), 0.0);
        for (const auto& v : vectors) {
            for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
        }
        for (auto& x : mean) x /= static_cast<double>(vectors.size());
        return mean;
    };

    const auto ma = mean_vector(a);
    const auto mb = mean_vector(b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
        dot += ma[i] * mb[i];
        na += ma[i] * ma[i];
        nb += mb[i] * mb[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

double round_half_even(double value, int digits) {
    // printf in round-to-nearest mode ties to even against the exact binary
    // value, which is the rounding the rendered tables use.
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return std::strtod(buf, nullptr);
}

namespace {

std::string format2(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

}  // namespace

RenderedComparison render_comparison(const std::vector<MethodEval>& reports) {
    if (reports.empty()) throw InvalidInput("render_comparison needs at least one report");

    const std::vector<std::string> columns = {"BERTScore", "BLEU-2", "ROUGE-1",
                                              "BERTScore", "Jaccard", "Cosine"};
    std::size_t name_width = std::string("Method").size();
    for (const auto& r : reports) name_width = std::max(name_width, r.method.size());

    std::ostringstream text;
    text << std::string(name_width, ' ') << "  | Relevance                    | Offline similarity\n";
    text << "Method" << std::string(name_width - 6, ' ')
         << "  | BERTScore  BLEU-2  ROUGE-1   | BERTScore  Jaccard  Cosine\n";
    for (const auto& r : reports) {
        text << r.method << std::string(name_width - r.method.size(), ' ') << "  | "
             << format2(r.relevance_bertscore) << "       " << format2(r.relevance_bleu2)
             << "    " << format2(r.relevance_rouge1) << "     | "
             << format2(r.offline_bertscore) << "       " << format2(r.offline_jaccard)
             << "     " << format2(r.offline_cosine) << "\n";
    }

    nlohmann::ordered_json machine;
    machine["methods"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) machine["methods"].push_back(r.method);
    nlohmann::ordered_json metrics;
    auto column = [&](auto getter) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& r : reports) arr.push_back(getter(r));
        return arr;
    };
    metrics["bertscore_relevance"] = column([](const MethodEval& r) { return r.relevance_bertscore; });
    metrics["bleu2"] = column([](const MethodEval& r) { return r.relevance_bleu2; });
    metrics["rouge1"] = column([](const MethodEval& r) { return r.relevance_rouge1; });
    metrics["bertscore_offline"] = column([](const MethodEval& r) { return r.offline_bertscore; });
    metrics["jaccard"] = column([](const MethodEval& r) { return r.offline_jaccard; });
    metrics["cosine"] = column([](const MethodEval& r) { return r.offline_cosine; });
    machine["metrics"] = std::move(metrics);

    return {text.str(), std::move(machine)};
}

}  // namespace okg
