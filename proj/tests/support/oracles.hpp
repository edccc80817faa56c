#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include "deltarank/baselines.hpp"
#include "deltarank/embeddings.hpp"
#include "deltarank/evaluation.hpp"
#include "deltarank/matrix.hpp"
#include "deltarank/network.hpp"
#include "deltarank/random.hpp"
#include "deltarank/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace oracle {

using deltarank::Matrix;

inline std::vector<double> random_vector(std::size_t n, deltarank::Rng& rng, double lo = -1.0, double hi = 1.0)
{
    std::vector<double> v(n);
    for (double& x : v) {
        x = rng.uniform(lo, hi);
    }
    return v;
}

inline deltarank::EmbeddedText random_text(std::size_t width, std::size_t length, std::size_t dim,
                                           deltarank::Rng& rng)
{
    deltarank::EmbeddedText t{Matrix(width, dim), length};
    for (std::size_t r = 0; r < length; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            t.values(r, c) = rng.uniform(-1.0, 1.0);
        }
    }
    return t;
}

/// Row-by-row Delta composition: exhaustive nearest scan, then the three features.
inline Matrix delta_matrix(const deltarank::EmbeddedText& doc, const deltarank::EmbeddedText& query)
{
    const std::size_t dim = doc.values.cols();
    Matrix out(doc.width(), dim + 3);
    for (std::size_t i = 0; i < doc.length; ++i) {
        std::size_t best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < query.length; ++j) {
            double sq = 0.0;
            for (std::size_t c = 0; c < dim; ++c) {
                sq += (doc.values(i, c) - query.values(j, c)) * (doc.values(i, c) - query.values(j, c));
            }
            if (std::sqrt(sq) < best_dist) {
                best_dist = std::sqrt(sq);
                best = j;
            }
        }
        double dot = 0.0;
        double nd = 0.0;
        double nq = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double d = doc.values(i, c);
            const double q = query.values(best, c);
            out(i, c) = d - q;
            dot += d * q;
            nd += d * d;
            nq += q * q;
        }
        nd = std::sqrt(nd);
        nq = std::sqrt(nq);
        out(i, dim) = (nd == 0.0 || nq == 0.0) ? 0.0 : dot / (nd * nq);
        out(i, dim + 1) = best_dist;
        out(i, dim + 2) = (nd + nq == 0.0) ? 0.0 : 1.0 - best_dist / (nd + nq);
    }
    return out;
}

/// Direct triple loop; rows at or beyond `length` are zero in and out.
inline Matrix conv1d(const Matrix& input, std::size_t length, const std::vector<double>& filters,
                     const std::vector<double>& bias, std::size_t k)
{
    const std::size_t channels = input.cols();
    const std::size_t n_f = bias.size();
    const long half = static_cast<long>(k / 2);
    Matrix out(input.rows(), n_f);
    for (std::size_t r = 0; r < length; ++r) {
        for (std::size_t f = 0; f < n_f; ++f) {
            double acc = bias[f];
            for (std::size_t t = 0; t < k; ++t) {
                const long src = static_cast<long>(r) + static_cast<long>(t) - half;
                if (src < 0 || src >= static_cast<long>(length)) {
                    continue;
                }
                for (std::size_t c = 0; c < channels; ++c) {
                    acc += filters[(t * channels + c) * n_f + f] * input(static_cast<std::size_t>(src), c);
                }
            }
            out(r, f) = acc;
        }
    }
    return out;
}

inline double dcg(const std::vector<double>& srels, std::size_t n)
{
    double total = 0.0;
    for (std::size_t i = 0; i < std::min(n, srels.size()); ++i) {
        total += (std::pow(2.0, srels[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return total;
}

/// NDCG normalized by the best DCG over every permutation of the list.
inline double ndcg_by_enumeration(std::vector<double> srels_in_rank_order, std::size_t n)
{
    const double actual = dcg(srels_in_rank_order, n);
    std::vector<double> perm = srels_in_rank_order;
    std::sort(perm.begin(), perm.end());
    double best = 0.0;
    do {
        best = std::max(best, dcg(perm, n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best == 0.0 ? 0.0 : actual / best;
}

/// Mean over relevant documents of (relevant within top k) / k at their rank k.
inline std::optional<double> average_precision(const std::vector<double>& srels_in_rank_order)
{
    double sum = 0.0;
    std::size_t relevant = 0;
    for (std::size_t k = 0; k < srels_in_rank_order.size(); ++k) {
        if (srels_in_rank_order[k] <= 0.0) {
            continue;
        }
        std::size_t in_top = 0;
        for (std::size_t i = 0; i <= k; ++i) {
            in_top += srels_in_rank_order[i] > 0.0 ? 1 : 0;
        }
        sum += static_cast<double>(in_top) / static_cast<double>(k + 1);
        ++relevant;
    }
    if (relevant == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(relevant);
}

/// Solves the square system A x = b by Gaussian elimination with partial
/// pivoting; nullopt when singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<std::vector<double>> a, std::vector<double> b)
{
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot][col]) < 1e-12) {
            return std::nullopt;
        }
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) {
                continue;
            }
            const double factor = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = b[i] / a[i][i];
    }
    return x;
}

/// Minimum transportation cost by enumerating every basic solution of the
/// equality constraints (all row sums and all but one column sum).
inline double transportation_by_vertex_enumeration(const deltarank::TransportationProblem& p)
{
    const std::size_t m = p.supply.size();
    const std::size_t n = p.demand.size();
    const std::size_t vars = m * n;
    const std::size_t rank = m + n - 1;
    std::vector<std::vector<double>> constraints(rank, std::vector<double>(vars, 0.0));
    std::vector<double> rhs(rank);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            constraints[i][i * n + j] = 1.0;
        }
        rhs[i] = p.supply[i];
    }
    for (std::size_t j = 0; j + 1 < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            constraints[m + j][i * n + j] = 1.0;
        }
        rhs[m + j] = p.demand[j];
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> choose(vars, false);
    std::fill(choose.begin(), choose.begin() + static_cast<long>(rank), true);
    do {
        std::vector<std::size_t> basis;
        for (std::size_t v = 0; v < vars; ++v) {
            if (choose[v]) {
                basis.push_back(v);
            }
        }
        std::vector<std::vector<double>> a(rank, std::vector<double>(rank));
        for (std::size_t r = 0; r < rank; ++r) {
            for (std::size_t c = 0; c < rank; ++c) {
                a[r][c] = constraints[r][basis[c]];
            }
        }
        const auto x = solve_linear(a, rhs);
        if (!x || std::any_of(x->begin(), x->end(), [](double v) { return v < -1e-12; })) {
            continue;
        }
        double cost = 0.0;
        for (std::size_t c = 0; c < rank; ++c) {
            cost += (*x)[c] * p.cost(basis[c] / n, basis[c] % n);
        }
        best = std::min(best, cost);
    } while (std::prev_permutation(choose.begin(), choose.end()));
    return best;
}

inline deltarank::TransportationProblem random_transportation(std::size_t m, std::size_t n, deltarank::Rng& rng)
{
    deltarank::TransportationProblem p{random_vector(m, rng, 0.05, 1.0), random_vector(n, rng, 0.05, 1.0),
                                       Matrix(m, n)};
    const double s = std::accumulate(p.supply.begin(), p.supply.end(), 0.0);
    const double d = std::accumulate(p.demand.begin(), p.demand.end(), 0.0);
    for (double& x : p.supply) {
        x /= s;
    }
    for (double& x : p.demand) {
        x /= d;
    }
    for (double& c : p.cost.values()) {
        c = rng.uniform(0.0, 2.0);
    }
    return p;
}

struct GradientCheck {
    double worst_relative_error = 0.0;
    std::string worst_tensor;
};

/// Compares backward() with central differences of the eval-mode score, per
/// tensor: ||analytic - numeric|| / max(||analytic||, ||numeric||).
inline GradientCheck check_gradients(const Matrix& input, std::size_t length, const std::vector<double>& lex,
                                     const deltarank::ModelParameters& params,
                                     const deltarank::ModelConfig& config, double eps = 1e-4)
{
    using namespace deltarank;
    ForwardCache cache;
    forward(input, length, lex, params, config, Mode::train, 0, &cache);
    const ModelParameters analytic = backward(cache, params, config, 1.0);

    GradientCheck result;
    ModelParameters probe = params;
    for (std::size_t t = 0; t < probe.tensors().size(); ++t) {
        auto& values = probe.tensors()[t].values;
        double diff_sq = 0.0;
        double a_sq = 0.0;
        double n_sq = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            const double saved = values[k];
            values[k] = saved + eps;
            const double plus = forward(input, length, lex, probe, config, Mode::eval);
            values[k] = saved - eps;
            const double minus = forward(input, length, lex, probe, config, Mode::eval);
            values[k] = saved;
            const double numeric = (plus - minus) / (2.0 * eps);
            const double a = analytic.tensors()[t].values[k];
            diff_sq += (a - numeric) * (a - numeric);
            a_sq += a * a;
            n_sq += numeric * numeric;
        }
        const double scale = std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-12});
        const double rel = std::sqrt(diff_sq) / scale;
        if (rel > result.worst_relative_error || result.worst_tensor.empty()) {
            result.worst_relative_error = rel;
            result.worst_tensor = probe.tensors()[t].name;
        }
    }
    return result;
}

/// The small configuration used for gradient checks.
inline deltarank::ModelConfig small_config()
{
    deltarank::ModelConfig c;
    c.doc_width = 8;
    c.query_width = 4;
    c.embedding_dim = 6;
    c.filters = 4;
    c.hidden = {8, 4, 1};
    c.lexical_features = 3;
    return c;
}

/// Random parameters with non-zero biases so every path carries signal.
inline deltarank::ModelParameters random_params(const deltarank::ModelConfig& config, std::uint64_t seed)
{
    deltarank::ModelParameters p = deltarank::init_params(config, seed);
    deltarank::Rng rng(deltarank::mix_seed(seed, 77));
    for (auto& t : p.tensors()) {
        if (t.is_bias) {
            for (double& v : t.values) {
                v = rng.uniform(-0.2, 0.2);
            }
        }
    }
    return p;
}

}  // namespace oracle
