#pragma once

#include "deltarank/embeddings.hpp"
#include "deltarank/matrix.hpp"

#include <iosfwd>
#include <span>

namespace deltarank {

/// N x (V + 3) matrix: for each document word, the difference to its nearest
/// query word followed by cosine, Euclidean distance and normalized proximity.
/// Rows at or beyond `length` are zero.
struct DeltaMatrix {
    Matrix rows;
    std::size_t length = 0;

    std::size_t embedding_dim() const noexcept { return rows.cols() - 3; }
    std::vector<bool> mask() const;
};

struct DeltaFeatures {
    double cosine = 0.0;
    double distance = 0.0;
    double proximity = 0.0;
};

/// Index of the unmasked query row closest (Euclidean) to `d`; lowest index on ties.
std::size_t nearest_query_word(std::span<const double> d, const EmbeddedText& query);

/// cosine is 0 when either norm is 0; proximity 1 - |d-q| / (|d| + |q|) is 0
/// when both norms are 0.
DeltaFeatures delta_features(std::span<const double> d, std::span<const double> q) noexcept;

DeltaMatrix delta_matrix(const EmbeddedText& doc, const EmbeddedText& query);

/// CSV dump, one row per document position, for debugging.
void write_delta_csv(const DeltaMatrix& delta, std::ostream& out);

}  // namespace deltarank
