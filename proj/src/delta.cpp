#include "deltarank/delta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace deltarank {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept
{
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        sum += diff * diff;
    }
    return sum;
}

}  // namespace

std::vector<bool> DeltaMatrix::mask() const
{
    std::vector<bool> m(rows.rows(), false);
    for (std::size_t i = 0; i < length; ++i) {
        m[i] = true;
    }
    return m;
}

std::size_t nearest_query_word(std::span<const double> d, const EmbeddedText& query)
{
    if (query.length == 0) {
        throw std::invalid_argument("nearest_query_word: query has no words");
    }
    std::size_t best = 0;
    double best_dist = squared_distance(d, query.values.row(0));
    for (std::size_t j = 1; j < query.length; ++j) {
        const double dist = squared_distance(d, query.values.row(j));
        if (dist < best_dist) {
            best = j;
            best_dist = dist;
        }
    }
    return best;
}

DeltaFeatures delta_features(std::span<const double> d, std::span<const double> q) noexcept
{
    double dot = 0.0;
    double dd = 0.0;
    double qq = 0.0;
    double diff2 = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        dot += d[k] * q[k];
        dd += d[k] * d[k];
        qq += q[k] * q[k];
        const double diff = d[k] - q[k];
        diff2 += diff * diff;
    }
    const double norm_d = std::sqrt(dd);
    const double norm_q = std::sqrt(qq);
    DeltaFeatures f;
    f.distance = std::sqrt(diff2);
    f.cosine = (norm_d > 0.0 && norm_q > 0.0) ? dot / (norm_d * norm_q) : 0.0;
    f.cosine = std::clamp(f.cosine, -1.0, 1.0);
    f.proximity = (norm_d + norm_q > 0.0) ? 1.0 - f.distance / (norm_d + norm_q) : 0.0;
    return f;
}

DeltaMatrix delta_matrix(const EmbeddedText& doc, const EmbeddedText& query)
{
    if (query.length == 0) {
        throw std::invalid_argument("delta_matrix: query has no words");
    }
    if (doc.length == 0) {
        throw std::invalid_argument("delta_matrix: document has no words");
    }
    const std::size_t dim = doc.values.cols();
    if (query.values.cols() != dim) {
        throw std::invalid_argument("delta_matrix: embedding dimensions differ");
    }
    DeltaMatrix out{Matrix(doc.width(), dim + 3), doc.length};
    for (std::size_t i = 0; i < doc.length; ++i) {
        const auto d = doc.values.row(i);
        const auto q = query.values.row(nearest_query_word(d, query));
        auto row = out.rows.row(i);
        for (std::size_t k = 0; k < dim; ++k) {
            row[k] = d[k] - q[k];
        }
        const DeltaFeatures f = delta_features(d, q);
        row[dim] = f.cosine;
        row[dim + 1] = f.distance;
        row[dim + 2] = f.proximity;
    }
    return out;
}

void write_delta_csv(const DeltaMatrix& delta, std::ostream& out)
{
    const std::size_t dim = delta.embedding_dim();
    out << "row,mask";
    for (std::size_t k = 0; k < dim; ++k) {
        out << ",diff" << k;
    }
    out << ",cosine,distance,proximity\n";
    char buf[32];
    for (std::size_t i = 0; i < delta.rows.rows(); ++i) {
        out << i << ',' << (i < delta.length ? 1 : 0);
        for (double v : delta.rows.row(i)) {
            const int n = std::snprintf(buf, sizeof buf, ",%.17g", v);
            out.write(buf, n);
        }
        out << '\n';
    }
}

}  // namespace deltarank
