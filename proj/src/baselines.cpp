#include "deltarank/baselines.hpp"

#include "deltarank/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace deltarank {

double uqlm_score(const TokenSequence& query, const TokenSequence& field_tokens, const CorpusStats& stats,
                  Field field, double mu)
{
    if (mu < 0.0 || (mu == 0.0 && field_tokens.empty())) {
        throw std::invalid_argument("uqlm_score: needs mu > 0 or a non-empty field");
    }
    const double total = static_cast<double>(stats.total_terms(field));
    const double length = static_cast<double>(field_tokens.size());
    double score = 0.0;
    for (const auto& word : query) {
        const auto cf = stats.collection_frequency(word, field);
        const double p_collection = cf > 0 ? static_cast<double>(cf) / total : 1.0 / (total + 1.0);
        const double tf = static_cast<double>(std::count(field_tokens.begin(), field_tokens.end(), word));
        score += std::log((tf + mu * p_collection) / (length + mu));
    }
    return score;
}

WordBag WordBag::from_tokens(const TokenSequence& tokens)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tokens) {
        ++counts[t];
    }
    WordBag bag;
    for (const auto& [word, count] : counts) {
        bag.words.push_back(word);
        bag.weights.push_back(static_cast<double>(count) / static_cast<double>(tokens.size()));
    }
    return bag;
}

double wmd(const WordBag& a, const WordBag& b, const EmbeddingTable& table)
{
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("wmd: empty word bag");
    }
    TransportationProblem problem{a.weights, b.weights, Matrix(a.words.size(), b.words.size())};
    for (std::size_t i = 0; i < a.words.size(); ++i) {
        const auto u = table.lookup(a.words[i]);
        for (std::size_t j = 0; j < b.words.size(); ++j) {
            const auto v = table.lookup(b.words[j]);
            double sq = 0.0;
            for (std::size_t k = 0; k < u.size(); ++k) {
                const double d = u[k] - v[k];
                sq += d * d;
            }
            problem.cost(i, j) = std::sqrt(sq);
        }
    }
    return std::max(0.0, solve_transportation(problem).cost);
}

std::string_view to_string(BaselineMethod method) noexcept
{
    switch (method) {
    case BaselineMethod::bm25_title:
        return "bm25-title";
    case BaselineMethod::uqlm_title:
        return "uqlm-title";
    case BaselineMethod::wmd_title:
        return "wmd-title";
    }
    return "?";
}

BaselineMethod baseline_method_from_string(std::string_view name)
{
    for (auto m : {BaselineMethod::bm25_title, BaselineMethod::uqlm_title, BaselineMethod::wmd_title}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown baseline method '" + std::string(name) + "'");
}

double baseline_score(BaselineMethod method, const Query& query, const Document& doc, const CorpusStats* stats,
                      const EmbeddingTable* table, const BaselineOptions& options)
{
    if (method == BaselineMethod::wmd_title) {
        if (table == nullptr) {
            throw std::invalid_argument("wmd-title needs embeddings");
        }
        return -wmd(WordBag::from_tokens(query.tokens), WordBag::from_tokens(doc.title), *table);
    }
    if (stats == nullptr) {
        throw std::invalid_argument(std::string(to_string(method)) + " needs corpus statistics");
    }
    if (method == BaselineMethod::bm25_title) {
        return bm25(query.tokens, doc.title, *stats, Field::title, options.bm25);
    }
    return uqlm_score(query.tokens, doc.title, *stats, Field::title, options.mu);
}

RankedList baseline_rank(BaselineMethod method, const Query& query, std::span<const Document> docs,
                         const CorpusStats* stats, const EmbeddingTable* table, const BaselineOptions& options,
                         std::size_t threads)
{
    std::vector<ScoredDoc> scored(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        scored[i] = {docs[i].doc_id, baseline_score(method, query, docs[i], stats, table, options)};
    });
    return rank(query.query_id, std::move(scored));
}

}  // namespace deltarank
