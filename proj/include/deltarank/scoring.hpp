#pragma once

#include "deltarank/embeddings.hpp"
#include "deltarank/evaluation.hpp"
#include "deltarank/lexical.hpp"
#include "deltarank/network.hpp"

#include <span>
#include <vector>

namespace deltarank {

/// Network input for one query/document pair: projected Delta rows for the
/// document's first min(len, N) words plus the lexical feature subset.
struct PreparedPair {
    Matrix input;
    std::vector<double> lex;
};

/// Embeds a query for neural scoring. Throws ValidationError unless
/// 1 <= words <= config.query_width.
EmbeddedText embed_query(const Query& query, const EmbeddingTable& table, const ModelConfig& config);

/// `stats` may be null only when the model uses no lexical features.
PreparedPair prepare_pair(const Query& query, const EmbeddedText& query_vectors, const Document& doc,
                          const EmbeddingTable& table, const CorpusStats* stats, const ModelConfig& config);

/// End-to-end Delta scorer: tokens -> embeddings -> Delta matrix -> network.
class DeltaScorer {
public:
    DeltaScorer(ModelConfig config, ModelParameters params, const EmbeddingTable& table,
                const CorpusStats* stats);

    const ModelConfig& config() const noexcept { return config_; }

    double score(const Query& query, const Document& doc) const;
    std::vector<double> score_all(const Query& query, std::span<const Document> docs,
                                  std::size_t threads = 1) const;
    RankedList rank(const Query& query, std::span<const Document> docs, std::size_t threads = 1) const;

private:
    ModelConfig config_;
    ModelParameters params_;
    const EmbeddingTable* table_;
    const CorpusStats* stats_;
};

}  // namespace deltarank
