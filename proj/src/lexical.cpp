#include "deltarank/lexical.hpp"

#include "deltarank/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <json.hpp>

namespace deltarank {

namespace {

constexpr std::array<Field, 3> kFields = {Field::title, Field::abstract, Field::text};

std::int64_t find_count(const std::unordered_map<std::string, std::int64_t>& map, std::string_view word)
{
    // unordered_map<std::string> has no heterogeneous lookup before C++20 libraries catch up.
    auto it = map.find(std::string(word));
    return it == map.end() ? 0 : it->second;
}

std::vector<std::string> unique_sorted(const TokenSequence& tokens)
{
    std::vector<std::string> out(tokens.begin(), tokens.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::string> bigrams(const TokenSequence& tokens)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        out.push_back(tokens[i] + ' ' + tokens[i + 1]);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Query-side quantities shared by every field.
struct QueryTerms {
    std::vector<std::string> words;
    std::vector<std::string> bigrams;
    std::vector<double> idfs;
    double idf_total = 0.0;
};

QueryTerms query_terms(const Query& query, const CorpusStats& stats)
{
    QueryTerms q;
    q.words = unique_sorted(query.tokens);
    q.bigrams = bigrams(query.tokens);
    for (const auto& w : q.words) {
        q.idfs.push_back(idf(w, stats));
        q.idf_total += q.idfs.back();
    }
    return q;
}

/// Word proportion, bigram proportion, Jaccard, IDF proportion, IDF Jaccard.
std::array<double, 5> overlap_features(const QueryTerms& q, const TokenSequence& field, const CorpusStats& stats)
{
    std::array<double, 5> f{};
    if (field.empty() || q.words.empty()) {
        return f;
    }
    const std::unordered_set<std::string> field_words(field.begin(), field.end());

    std::size_t matched = 0;
    double matched_idf = 0.0;
    for (std::size_t i = 0; i < q.words.size(); ++i) {
        if (field_words.contains(q.words[i])) {
            ++matched;
            matched_idf += q.idfs[i];
        }
    }

    // Field words outside the query, in sorted order for a reproducible sum.
    std::vector<std::string> extra;
    for (const auto& w : field_words) {
        if (!std::binary_search(q.words.begin(), q.words.end(), w)) {
            extra.push_back(w);
        }
    }
    std::sort(extra.begin(), extra.end());
    double union_idf = q.idf_total;
    for (const auto& w : extra) {
        union_idf += idf(w, stats);
    }

    f[0] = static_cast<double>(matched) / static_cast<double>(q.words.size());
    if (!q.bigrams.empty()) {
        const auto field_bigrams = bigrams(field);
        std::size_t bigram_hits = 0;
        for (const auto& b : q.bigrams) {
            bigram_hits += std::binary_search(field_bigrams.begin(), field_bigrams.end(), b) ? 1 : 0;
        }
        f[1] = static_cast<double>(bigram_hits) / static_cast<double>(q.bigrams.size());
    }
    f[2] = static_cast<double>(matched) / static_cast<double>(q.words.size() + extra.size());
    f[3] = q.idf_total > 0.0 ? matched_idf / q.idf_total : 0.0;
    f[4] = union_idf > 0.0 ? matched_idf / union_idf : 0.0;
    return f;
}

}  // namespace

std::string_view field_name(Field f) noexcept
{
    switch (f) {
    case Field::title:
        return "title";
    case Field::abstract:
        return "abstract";
    case Field::text:
        return "text";
    }
    return "?";
}

std::int64_t CorpusStats::document_frequency(std::string_view word, Field f) const
{
    return find_count(df_[index(f)], word);
}

std::int64_t CorpusStats::collection_frequency(std::string_view word, Field f) const
{
    return find_count(cf_[index(f)], word);
}

double CorpusStats::average_length(Field f) const noexcept
{
    return n_docs_ > 0 ? static_cast<double>(total_terms_[index(f)]) / static_cast<double>(n_docs_) : 0.0;
}

void CorpusStats::save(const std::filesystem::path& path) const
{
    using nlohmann::json;
    json j;
    j["n_docs"] = n_docs_;
    for (Field f : kFields) {
        const std::string name(field_name(f));
        j["avg_len"][name] = average_length(f);
        j["total_terms"][name] = total_terms_[index(f)];
        j["df"][name] = json::object();
        j["cf"][name] = json::object();
        for (const auto& [w, c] : df_[index(f)]) {
            j["df"][name][w] = c;
        }
        for (const auto& [w, c] : cf_[index(f)]) {
            j["cf"][name][w] = c;
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump() << '\n';
}

CorpusStats CorpusStats::load(const std::filesystem::path& path)
{
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    CorpusStats stats;
    try {
        const json j = json::parse(in);
        stats.n_docs_ = j.at("n_docs").get<std::int64_t>();
        for (Field f : kFields) {
            const std::string name(field_name(f));
            stats.total_terms_[index(f)] = j.at("total_terms").at(name).get<std::int64_t>();
            for (const auto& [w, c] : j.at("df").at(name).items()) {
                stats.df_[index(f)].emplace(w, c.get<std::int64_t>());
            }
            for (const auto& [w, c] : j.at("cf").at(name).items()) {
                stats.cf_[index(f)].emplace(w, c.get<std::int64_t>());
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 1, e.what());
    }
    if (stats.n_docs_ <= 0) {
        throw ValidationError(path.string() + ": n_docs must be positive");
    }
    return stats;
}

void StatsBuilder::add(const Document& doc)
{
    const TokenSequence text = document_text(doc);
    const std::array<const TokenSequence*, 3> fields = {&doc.title, &doc.abstract, &text};
    for (std::size_t f = 0; f < 3; ++f) {
        const auto& tokens = *fields[f];
        stats_.total_terms_[f] += static_cast<std::int64_t>(tokens.size());
        for (const auto& w : tokens) {
            ++stats_.cf_[f][w];
        }
        for (const auto& w : unique_sorted(tokens)) {
            ++stats_.df_[f][w];
        }
    }
    ++stats_.n_docs_;
}

CorpusStats StatsBuilder::finish() &&
{
    if (stats_.n_docs_ == 0) {
        throw ValidationError("cannot build statistics from an empty corpus");
    }
    return std::move(stats_);
}

CorpusStats build_stats(std::span<const Document> corpus)
{
    StatsBuilder builder;
    for (const auto& doc : corpus) {
        builder.add(doc);
    }
    return std::move(builder).finish();
}

double idf(std::string_view word, const CorpusStats& stats, Field field)
{
    const double n = static_cast<double>(stats.n_docs());
    const double df = static_cast<double>(stats.document_frequency(word, field));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25(const TokenSequence& query, const TokenSequence& field_tokens, const CorpusStats& stats, Field field,
            Bm25Params params)
{
    if (field_tokens.empty()) {
        return 0.0;
    }
    const double avg = stats.average_length(field);
    const double len_ratio = avg > 0.0 ? static_cast<double>(field_tokens.size()) / avg : 1.0;
    const double norm = params.k1 * (1.0 - params.b + params.b * len_ratio);
    double score = 0.0;
    for (const auto& w : unique_sorted(query)) {
        const auto tf = static_cast<double>(std::count(field_tokens.begin(), field_tokens.end(), w));
        if (tf == 0.0) {
            continue;
        }
        score += idf(w, stats, field) * tf * (params.k1 + 1.0) / (tf + norm);
    }
    return score;
}

LexicalFeatureVector lexical_features(const Query& query, const Document& doc, const CorpusStats& stats)
{
    if (query.tokens.empty()) {
        throw std::invalid_argument("lexical_features: empty query");
    }
    const QueryTerms q = query_terms(query, stats);
    const TokenSequence text = document_text(doc);

    LexicalFeatureVector v;
    const auto put = [&v](std::size_t first, const std::array<double, 5>& f) {
        for (std::size_t k = 0; k < 5; ++k) {
            v[first + k] = f[k];
        }
    };
    put(1, overlap_features(q, text, stats));
    v[6] = bm25(query.tokens, doc.title, stats, Field::title);
    v[7] = bm25(query.tokens, doc.abstract, stats, Field::abstract);
    v[8] = bm25(query.tokens, text, stats, Field::text);
    put(9, overlap_features(q, doc.title, stats));
    put(14, overlap_features(q, doc.abstract, stats));
    return v;
}

std::vector<double> select_lexical(const LexicalFeatureVector& features, std::size_t count)
{
    switch (count) {
    case 0:
        return {};
    case 3: {
        const auto l3 = features.lex3();
        return {l3.begin(), l3.end()};
    }
    case kLexicalFeatureCount:
        return {features.values().begin(), features.values().end()};
    default:
        throw std::invalid_argument("lexical feature subset must have 0, 3 or 18 entries");
    }
}

std::vector<double> lexical_inputs(const Query& query, const Document& doc, const CorpusStats& stats,
                                   std::size_t count)
{
    if (count != 3) {
        return count == 0 ? std::vector<double>{} : select_lexical(lexical_features(query, doc, stats), count);
    }
    const QueryTerms q = query_terms(query, stats);
    const auto title = overlap_features(q, doc.title, stats);
    return {bm25(query.tokens, doc.abstract, stats, Field::abstract), title[4], title[3]};
}

}  // namespace deltarank
