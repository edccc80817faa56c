#pragma once

#include "deltarank/text.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace deltarank {

enum class Field { title = 0, abstract = 1, text = 2 };

std::string_view field_name(Field f) noexcept;

/// Collection statistics per field: document frequencies, collection term
/// frequencies and lengths. Immutable once built.
class CorpusStats {
public:
    std::int64_t n_docs() const noexcept { return n_docs_; }
    std::int64_t document_frequency(std::string_view word, Field f) const;
    std::int64_t collection_frequency(std::string_view word, Field f) const;
    std::int64_t total_terms(Field f) const noexcept { return total_terms_[index(f)]; }
    double average_length(Field f) const noexcept;

    void save(const std::filesystem::path& path) const;
    static CorpusStats load(const std::filesystem::path& path);

    bool operator==(const CorpusStats&) const = default;

private:
    friend class StatsBuilder;
    static std::size_t index(Field f) noexcept { return static_cast<std::size_t>(f); }

    std::int64_t n_docs_ = 0;
    std::array<std::unordered_map<std::string, std::int64_t>, 3> df_;
    std::array<std::unordered_map<std::string, std::int64_t>, 3> cf_;
    std::array<std::int64_t, 3> total_terms_{};
};

class StatsBuilder {
public:
    void add(const Document& doc);
    /// Throws ValidationError for an empty corpus.
    CorpusStats finish() &&;

private:
    CorpusStats stats_;
};

CorpusStats build_stats(std::span<const Document> corpus);

/// ln(1 + (N - df + 0.5) / (df + 0.5)); positive and decreasing in df.
double idf(std::string_view word, const CorpusStats& stats, Field field = Field::text);

struct Bm25Params {
    double k1 = 2.0;
    double b = 0.75;
};

/// Okapi BM25 over the unique query terms, using `field`'s df and average length.
double bm25(const TokenSequence& query, const TokenSequence& field_tokens, const CorpusStats& stats,
            Field field, Bm25Params params = {});

inline constexpr std::size_t kLexicalFeatureCount = 18;

/// The 18 query/document lexical match features. Access is 1-based to match
/// the conventional numbering:
///   1-5   Text:     word prop., bigram prop., Jaccard, IDF word prop., IDF Jaccard
///   6-8   BM25 on Title, Abstract, Text
///   9-13  Title:    same five as Text
///   14-18 Abstract: same five as Text
class LexicalFeatureVector {
public:
    double operator[](std::size_t feature) const { return values_.at(feature - 1); }
    double& operator[](std::size_t feature) { return values_.at(feature - 1); }
    const std::array<double, kLexicalFeatureCount>& values() const noexcept { return values_; }

    /// BM25 on Abstract, IDF-weighted Jaccard on Title, IDF-weighted proportion on Title.
    std::array<double, 3> lex3() const noexcept { return {values_[6], values_[12], values_[11]}; }

private:
    std::array<double, kLexicalFeatureCount> values_{};
};

LexicalFeatureVector lexical_features(const Query& query, const Document& doc, const CorpusStats& stats);

/// Model input subset: 0 -> none, 3 -> Lex3, 18 -> all features.
std::vector<double> select_lexical(const LexicalFeatureVector& features, std::size_t count);

/// Computes only what the chosen subset needs.
std::vector<double> lexical_inputs(const Query& query, const Document& doc, const CorpusStats& stats,
                                   std::size_t count);

}  // namespace deltarank
