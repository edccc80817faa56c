#pragma once

#include "deltarank/embeddings.hpp"
#include "deltarank/evaluation.hpp"
#include "deltarank/lexical.hpp"
#include "deltarank/matrix.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deltarank {

inline constexpr double kDefaultDirichletMu = 2000.0;

/// Dirichlet-smoothed query log-likelihood of `field_tokens`. Words unseen in
/// the collection get probability 1 / (total_terms + 1).
double uqlm_score(const TokenSequence& query, const TokenSequence& field_tokens, const CorpusStats& stats,
                  Field field = Field::title, double mu = kDefaultDirichletMu);

struct TransportationProblem {
    std::vector<double> supply;  // m
    std::vector<double> demand;  // n
    Matrix cost;                 // m x n, non-negative
};

struct TransportationSolution {
    double cost = 0.0;
    Matrix flow;
};

/// Exact minimum-cost transportation by the transportation simplex method
/// (northwest-corner start, u-v potentials, Bland's pivoting rule).
/// Throws std::invalid_argument for unbalanced or malformed problems.
TransportationSolution solve_transportation(const TransportationProblem& problem);

/// Unique words with normalized term frequencies (nBOW).
struct WordBag {
    std::vector<std::string> words;  // sorted
    std::vector<double> weights;     // > 0, sum 1

    static WordBag from_tokens(const TokenSequence& tokens);
    bool empty() const noexcept { return words.empty(); }
};

/// Word Mover's Distance with Euclidean word-vector costs. Throws
/// std::invalid_argument for an empty bag.
double wmd(const WordBag& a, const WordBag& b, const EmbeddingTable& table);

enum class BaselineMethod { bm25_title, uqlm_title, wmd_title };

std::string_view to_string(BaselineMethod method) noexcept;
BaselineMethod baseline_method_from_string(std::string_view name);

struct BaselineOptions {
    Bm25Params bm25;
    double mu = kDefaultDirichletMu;
};

/// Title score for one document; larger is better. WMD is returned negated.
/// `stats` is needed by bm25/uqlm, `table` by wmd.
double baseline_score(BaselineMethod method, const Query& query, const Document& doc, const CorpusStats* stats,
                      const EmbeddingTable* table, const BaselineOptions& options = {});

RankedList baseline_rank(BaselineMethod method, const Query& query, std::span<const Document> docs,
                         const CorpusStats* stats, const EmbeddingTable* table,
                         const BaselineOptions& options = {}, std::size_t threads = 1);

}  // namespace deltarank
