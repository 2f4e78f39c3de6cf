#include "okg/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"
#include "okg/memory.hpp"
#include "okg/unicode.hpp"

namespace okg {

KpiRecord DatasetRow::kpis() const {
    KpiRecord r;
    r.clicks = clicks;
    r.search_volume = search_volume;
    r.cpc = cpc;
    r.competitor_score = competitor_score;
    r.conversions = conversions;
    return r;
}

ColumnMap ColumnMap::identity() {
    return ColumnMap{{
        {"product", "product"},
        {"keyword", "keyword"},
        {"search_volume", "search_volume"},
        {"clicks", "clicks"},
        {"cpc", "cpc"},
        {"competitor_score", "competitor_score"},
    }};
}

ColumnMap ColumnMap::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open column map: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed column map: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw ValidationError("column map must be a JSON object");
    ColumnMap map = identity();
    for (const auto& [canonical, actual] : doc.items()) {
        if (!actual.is_string()) throw ValidationError("column map values must be strings");
        if (map.names.count(canonical) == 0 && canonical != "conversions") {
            throw ValidationError("unknown canonical column: " + canonical);
        }
        map.names[canonical] = actual.get<std::string>();
    }
    return map;
}

std::string ColumnMap::column_for(const std::string& canonical) const {
    auto it = names.find(canonical);
    return it == names.end() ? std::string{} : it->second;
}

namespace {

// RFC-4180-ish: quoted fields, doubled quotes, CRLF tolerant. One record per
// line (fixture data carries no embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' && i + 1 == line.size()) {
            // trailing CR from CRLF
        } else {
            field.push_back(c);
        }
    }
    if (in_quotes) throw ValidationError("unterminated quoted field", line_no);
    fields.push_back(std::move(field));
    return fields;
}

std::int64_t parse_count(const std::string& text, const std::string& column, std::size_t line_no) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError(column + " is not an integer: '" + text + "'", line_no);
    }
    if (value < 0) throw ValidationError(column + " is negative: " + text, line_no);
    return value;
}

double parse_real(const std::string& text, const std::string& column, std::size_t line_no) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ValidationError(column + " is not a number: '" + text + "'", line_no);
    }
    if (value < 0.0) throw ValidationError(column + " is negative: " + text, line_no);
    return value;
}

struct ParsedDataset {
    std::vector<DatasetRow> rows;
    std::vector<ValidationError> errors;
};

ParsedDataset parse_dataset(const std::filesystem::path& path,
                            const std::optional<std::string>& product_filter,
                            const ColumnMap& columns, bool fail_fast) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset: " + path.string());

    ParsedDataset out;
    auto report = [&](ValidationError err) {
        if (fail_fast) throw err;
        out.errors.push_back(std::move(err));
    };

    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("dataset is empty (missing header)", 1);
    }
    // Strip a UTF-8 BOM if present.
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

    const std::vector<std::string> header = split_csv_line(line, 1);
    std::map<std::string, std::size_t> header_index;
    for (std::size_t i = 0; i < header.size(); ++i) header_index.emplace(header[i], i);

    const std::vector<std::string> required = {"product", "keyword", "search_volume",
                                               "clicks", "cpc", "competitor_score"};
    std::map<std::string, std::size_t> col;
    for (const auto& canonical : required) {
        const std::string actual = columns.column_for(canonical);
        auto it = header_index.find(actual);
        if (it == header_index.end()) {
            throw ValidationError("missing column '" + actual + "' (for " + canonical + ")", 1);
        }
        col[canonical] = it->second;
    }
    std::optional<std::size_t> conversions_col;
    const std::string conv_name = columns.column_for("conversions");
    if (!conv_name.empty()) {
        auto it = header_index.find(conv_name);
        if (it != header_index.end()) conversions_col = it->second;
    }

    std::optional<std::string> filter_normalized;
    if (product_filter) filter_normalized = fold_text(*product_filter);

    std::set<std::pair<std::string, std::string>> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            const std::vector<std::string> fields = split_csv_line(line, line_no);
            if (fields.size() < header.size()) {
                throw ValidationError("row has " + std::to_string(fields.size()) +
                                          " fields, header has " + std::to_string(header.size()),
                                      line_no);
            }
            DatasetRow row;
            row.line_no = line_no;
            row.product = fields[col["product"]];
            row.keyword = fields[col["keyword"]];
            if (row.keyword.empty() || fold_text(row.keyword).empty()) {
                throw ValidationError("keyword is empty", line_no);
            }
            row.search_volume = parse_count(fields[col["search_volume"]], "search_volume", line_no);
            row.clicks = parse_count(fields[col["clicks"]], "clicks", line_no);
            row.cpc = parse_real(fields[col["cpc"]], "cpc", line_no);
            row.competitor_score = parse_real(fields[col["competitor_score"]], "competitor_score", line_no);
            if (row.competitor_score > 100.0) {
                throw ValidationError("competitor_score exceeds 100: " +
                                          std::to_string(row.competitor_score),
                                      line_no);
            }
            if (conversions_col) {
                row.conversions = parse_count(fields[*conversions_col], "conversions", line_no);
            }
            auto key = std::make_pair(fold_text(row.product), normalize_keyword(row.keyword));
            if (!seen.insert(key).second) {
                throw ValidationError("duplicate (product, keyword) pair: '" + row.product +
                                          "', '" + row.keyword + "'",
                                      line_no);
            }
            if (filter_normalized && key.first != *filter_normalized) continue;
            out.rows.push_back(std::move(row));
        } catch (ValidationError& err) {
            report(std::move(err));
        }
    }
    return out;
}

}  // namespace

std::vector<DatasetRow> load_dataset(const std::filesystem::path& path,
                                     const std::optional<std::string>& product_filter,
                                     const ColumnMap& columns) {
    return parse_dataset(path, product_filter, columns, /*fail_fast=*/true).rows;
}

std::vector<ValidationError> validate_dataset(const std::filesystem::path& path,
                                              const ColumnMap& columns) {
    return parse_dataset(path, std::nullopt, columns, /*fail_fast=*/false).errors;
}

ReplayKpiSource::ReplayKpiSource(std::vector<DatasetRow> rows,
                                 std::shared_ptr<Embedder> embedder)
    : rows_(std::move(rows)), embedder_(std::move(embedder)) {
    if (!embedder_) throw InvalidInput("replay source needs an embedder");
    std::vector<std::string> texts;
    texts.reserve(rows_.size());
    for (const auto& row : rows_) texts.push_back(row.keyword);
    if (!texts.empty()) row_embeddings_ = embedder_->embed(texts);
}

std::optional<ReplayKpiSource::Match> ReplayKpiSource::match(const Keyword& keyword) const {
    if (rows_.empty()) return std::nullopt;
    const std::vector<float> probe = embedder_->embed_one(keyword.surface);
    std::optional<Match> best;
    for (std::size_t i = 0; i < row_embeddings_.size(); ++i) {
        const double cos = cosine(probe, row_embeddings_[i]);
        if (!best || cos > best->cosine) best = Match{i, cos};
    }
    if (best && best->cosine > threshold_) return best;
    return std::nullopt;
}

std::map<std::string, KpiRecord> ReplayKpiSource::observe(const std::vector<Keyword>& keywords) {
    std::map<std::string, KpiRecord> out;
    for (const auto& kw : keywords) {
        KpiRecord record;  // zero unless matched
        if (auto m = match(kw)) record = rows_[m->row_index].kpis();
        if (noise_enabled_ && !record.is_zero()) {
            // Per-keyword deterministic noise: stream seeded by (seed, keyword).
            std::seed_seq seq{noise_seed_,
                              static_cast<std::uint64_t>(std::hash<std::string>{}(kw.normalized))};
            std::mt19937_64 rng(seq);
            std::lognormal_distribution<double> factor(0.0, noise_sigma_);
            const double f = factor(rng);
            record.clicks = static_cast<std::int64_t>(std::llround(record.clicks * f));
            record.search_volume = static_cast<std::int64_t>(std::llround(record.search_volume * f));
        }
        out[kw.normalized] = record;
    }
    return out;
}

void ReplayKpiSource::enable_noise(double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw InvalidInput("noise sigma must be >= 0");
    noise_enabled_ = sigma > 0.0;
    noise_sigma_ = sigma;
    noise_seed_ = seed;
}

KpiAggregate aggregate_matches(const std::vector<Keyword>& keywords,
                               const ReplayKpiSource& source) {
    KpiAggregate agg;
    std::size_t matched = 0;
    for (const auto& kw : keywords) {
        auto m = source.match(kw);
        if (!m) continue;
        const DatasetRow& row = source.rows()[m->row_index];
        agg.clicks += static_cast<double>(row.clicks);
        agg.search_volume += static_cast<double>(row.search_volume);
        agg.cpc += row.cpc;
        agg.competitor_score += row.competitor_score;
        ++matched;
    }
    if (matched > 0) {
        agg.cpc /= static_cast<double>(matched);
        agg.competitor_score /= static_cast<double>(matched);
    }
    return agg;
}

NormalizedKpiTable normalize_kpi_table(
    const std::vector<std::pair<std::string, KpiAggregate>>& groups) {
    if (groups.empty()) throw InvalidInput("normalize_kpi_table needs at least one group");

    NormalizedKpiTable table;
    double max_clicks = 0.0, max_volume = 0.0, max_cpc = 0.0;
    for (const auto& [name, agg] : groups) {
        table.methods.push_back(name);
        max_clicks = std::max(max_clicks, agg.clicks);
        max_volume = std::max(max_volume, agg.search_volume);
        max_cpc = std::max(max_cpc, agg.cpc);
    }
    for (const auto& [name, agg] : groups) {
        table.clicks.push_back(max_clicks > 0.0 ? agg.clicks / max_clicks * 100.0 : 0.0);
        table.search_volume.push_back(max_volume > 0.0 ? agg.search_volume / max_volume * 100.0 : 0.0);
        table.cpc.push_back(max_cpc > 0.0 ? agg.cpc / max_cpc : 0.0);
        table.competitor.push_back(agg.competitor_score);
    }
    return table;
}

}  // namespace okg
