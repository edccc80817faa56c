#pragma once

#include "deltarank/matrix.hpp"
#include "deltarank/random.hpp"
#include "deltarank/text.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace deltarank {

/// Range of the shared UNK vector's components.
inline constexpr double kUnknownInitRange = 0.25;

/// Frozen word vectors indexed by vocabulary id. Row 0 (padding) is zero,
/// row 1 holds the shared UNK vector.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    /// `vectors` must have one row per vocabulary id.
    EmbeddingTable(Vocabulary vocab, Matrix vectors);

    std::size_t dimension() const noexcept { return vectors_.cols(); }
    /// Number of real words, excluding padding and UNK.
    std::size_t word_count() const noexcept { return vocab_.size() - 2; }
    const Vocabulary& vocabulary() const noexcept { return vocab_; }

    std::span<const double> vector(WordId id) const { return vectors_.row(id); }
    /// UNK vector for out-of-vocabulary words.
    std::span<const double> lookup(std::string_view word) const { return vectors_.row(vocab_.lookup(word)); }
    std::span<const double> unknown() const { return vectors_.row(Vocabulary::kUnknown); }

private:
    Vocabulary vocab_;
    Matrix vectors_;
};

/// Fills row 1 of `vectors` with U[-0.25, 0.25] draws from `seed`.
void initialize_unknown(Matrix& vectors, std::uint64_t seed);

/// Text format: header "W V", then W lines "word v1 ... vV".
EmbeddingTable load_embeddings(const std::filesystem::path& path, std::uint64_t unk_seed = 0);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// L x V word vectors for a text padded (or truncated) to L rows; rows at or
/// beyond `length` are exactly zero.
struct EmbeddedText {
    Matrix values;
    std::size_t length = 0;

    std::size_t width() const noexcept { return values.rows(); }
    bool is_word(std::size_t row) const noexcept { return row < length; }
    std::vector<bool> mask() const;
};

EmbeddedText embed_sequence(const TokenSequence& tokens, const EmbeddingTable& table, std::size_t max_len);

std::vector<double> random_unit_vector(std::size_t dim, Rng& rng);

/// Unit vector whose cosine with the unit vector `center` is exactly `cosine`.
std::vector<double> unit_vector_at_cosine(std::span<const double> center, double cosine, Rng& rng);

/// Cosine between every member of a synonym group and the group centroid.
inline constexpr double kSynonymCentroidCosine = 0.975;

/// Random unit vectors for every vocabulary word. Words in the same synonym
/// group sit at cosine 0.975 from a shared centroid, so any two of them have
/// cosine >= 0.9.
EmbeddingTable generate_synthetic_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                             const std::vector<std::vector<std::string>>& synonym_groups = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace deltarank
