#pragma once

#include "deltarank/click_relevance.hpp"
#include "deltarank/embeddings.hpp"
#include "deltarank/text.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace deltarank {

/// Sizes of the planted-relevance dataset.
struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t train_queries = 200;
    std::size_t validation_queries = 50;
    std::size_t test_queries = 50;
    std::size_t docs_per_query = 40;
    std::size_t dimension = 50;
    std::size_t concepts = 40;

    void validate() const;
};

/// Each query names some terms of a latent concept. Per query list:
///  - relevant docs mention the concept through its terms, their synonyms
///    (near-duplicate vectors) and related context words; their click counts,
///    hence srel, grow with the number of generic "quality" words they carry;
///  - paraphrases are relevant docs that avoid every exact query term;
///  - confounders put all query terms in the title within another concept's
///    context and are never clicked;
///  - the remaining docs belong to other concepts.
/// One concept term in six has no embedding and maps to UNK.
struct SynthDataset {
    std::vector<RawJudgedList> train;
    std::vector<RawJudgedList> validation;
    std::vector<RawJudgedList> test;
    std::vector<ClickRecord> clicks;
    EmbeddingTable embeddings;
};

SynthDataset generate_synth_dataset(const SynthConfig& config);

std::vector<JudgedList> tokenize_lists(const std::vector<RawJudgedList>& lists);

/// Every distinct document of the dataset, in first-seen order.
std::vector<Document> synth_corpus(const SynthDataset& dataset);

/// Writes corpus.jsonl, train.jsonl, val.jsonl, test.jsonl, clicks.tsv and
/// embeddings.txt into `dir`.
void write_synth_dataset(const SynthDataset& dataset, const std::filesystem::path& dir);

/// One query with `docs` random candidates (long enough to fill every
/// document row) and `dimension`-sized random embeddings, for timing.
struct BenchFixture {
    Query query;
    std::vector<Document> docs;
    EmbeddingTable embeddings;
};

BenchFixture generate_bench_fixture(std::size_t docs, std::size_t dimension, std::uint64_t seed);

}  // namespace deltarank
