#include "deltarank/scoring.hpp"

#include "deltarank/errors.hpp"
#include "deltarank/parallel.hpp"

namespace deltarank {

EmbeddedText embed_query(const Query& query, const EmbeddingTable& table, const ModelConfig& config)
{
    if (query.tokens.empty() || query.tokens.size() > config.query_width) {
        throw ValidationError("query '" + query.query_id + "' has " + std::to_string(query.tokens.size()) +
                              " words; the model accepts 1 to " + std::to_string(config.query_width));
    }
    return embed_sequence(query.tokens, table, config.query_width);
}

PreparedPair prepare_pair(const Query& query, const EmbeddedText& query_vectors, const Document& doc,
                          const EmbeddingTable& table, const CorpusStats* stats, const ModelConfig& config)
{
    const TokenSequence text = document_text(doc);
    const EmbeddedText doc_vectors = embed_sequence(text, table, config.doc_width);
    PreparedPair pair;
    pair.input = project_input(delta_matrix(doc_vectors, query_vectors), config);
    if (config.lexical_features > 0) {
        if (stats == nullptr) {
            throw std::invalid_argument("prepare_pair: lexical features need corpus statistics");
        }
        pair.lex = lexical_inputs(query, doc, *stats, config.lexical_features);
    }
    return pair;
}

DeltaScorer::DeltaScorer(ModelConfig config, ModelParameters params, const EmbeddingTable& table,
                         const CorpusStats* stats)
    : config_(std::move(config)), params_(std::move(params)), table_(&table), stats_(stats)
{
    config_.validate();
    if (table.dimension() != config_.embedding_dim) {
        throw ValidationError("embeddings have V=" + std::to_string(table.dimension()) + ", model expects V=" +
                              std::to_string(config_.embedding_dim));
    }
    if (config_.lexical_features > 0 && stats == nullptr) {
        throw ValidationError("model uses lexical features; corpus statistics are required");
    }
}

double DeltaScorer::score(const Query& query, const Document& doc) const
{
    const EmbeddedText q = embed_query(query, *table_, config_);
    const PreparedPair pair = prepare_pair(query, q, doc, *table_, stats_, config_);
    return forward(pair.input, pair.input.rows(), pair.lex, params_, config_, Mode::eval);
}

std::vector<double> DeltaScorer::score_all(const Query& query, std::span<const Document> docs,
                                           std::size_t threads) const
{
    const EmbeddedText q = embed_query(query, *table_, config_);
    std::vector<double> scores(docs.size());
    parallel_for(docs.size(), threads, [&](std::size_t i) {
        const PreparedPair pair = prepare_pair(query, q, docs[i], *table_, stats_, config_);
        scores[i] = forward(pair.input, pair.input.rows(), pair.lex, params_, config_, Mode::eval);
    });
    return scores;
}

RankedList DeltaScorer::rank(const Query& query, std::span<const Document> docs, std::size_t threads) const
{
    const auto scores = score_all(query, docs, threads);
    std::vector<ScoredDoc> scored;
    scored.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        scored.push_back({docs[i].doc_id, scores[i]});
    }
    return deltarank::rank(query.query_id, std::move(scored));
}

}  // namespace deltarank
