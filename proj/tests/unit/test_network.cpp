#include "deltarank/delta.hpp"
#include "deltarank/network.hpp"
#include "deltarank/random.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace deltarank;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng)
{
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = rng.uniform(-1.0, 1.0);
    }
    return m;
}

}  // namespace

TEST_CASE("leaky_relu")
{
    CHECK(leaky_relu(2.0) == 2.0);
    CHECK(leaky_relu(-1.0) == doctest::Approx(-0.3));
    CHECK(leaky_relu(0.0) == 0.0);
}

TEST_CASE("config validation and shapes")
{
    ModelConfig c;
    c.validate();
    CHECK(c.input_channels() == 303);
    const ModelParameters p = init_params(c, 1);
    CHECK(p.conv_weight(0).shape == std::vector<std::size_t>{3, 303, 32});
    CHECK(p.conv_weight(1).shape == std::vector<std::size_t>{3, 32, 32});
    CHECK(p.ff_weight(0).shape == std::vector<std::size_t>{35, 32});
    CHECK(p.ff_weight(2).shape == std::vector<std::size_t>{16, 1});
    c.lexical_features = 0;
    CHECK(c.ff_input_width() == 32);
    c.lexical_features = 3;
    CHECK(c.ff_input_width() == 35);

    ModelConfig bad = c;
    bad.hidden = {32, 2};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.kernel_width = 4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.leaky_slope = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.lexical_features = 5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    c.input = DeltaInput::no_difference;
    CHECK(c.input_channels() == 3);
    c.input = DeltaInput::no_features;
    CHECK(c.input_channels() == 300);
    CHECK(delta_input_from_string(to_string(DeltaInput::no_difference)) == DeltaInput::no_difference);
    CHECK_THROWS_AS(delta_input_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("init_params is seeded and biases start at zero")
{
    const ModelConfig c = oracle::small_config();
    CHECK(init_params(c, 4) == init_params(c, 4));
    CHECK_FALSE(init_params(c, 4) == init_params(c, 5));
    const ModelParameters p = init_params(c, 4);
    for (const auto& t : p.tensors()) {
        if (t.is_bias) {
            for (double v : t.values) {
                CHECK(v == 0.0);
            }
        }
    }
}

TEST_CASE("conv1d_same examples and oracle")
{
    Rng rng(31);
    const Matrix input = random_matrix(5, 2, rng);
    std::vector<double> identity(3 * 2 * 1, 0.0);
    identity[(1 * 2 + 1) * 1 + 0] = 1.0;
    const Matrix copied = conv1d_same(input, 5, identity, std::vector<double>{0.0}, 3);
    for (std::size_t r = 0; r < 5; ++r) {
        CHECK(copied(r, 0) == input(r, 1));
    }
    const Matrix none = conv1d_same(input, 0, identity, std::vector<double>{0.5}, 3);
    for (double v : none.values()) {
        CHECK(v == 0.0);
    }

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t rows = 1 + rng.below(7);
        const std::size_t length = rng.below(rows + 1);
        const std::size_t channels = 1 + rng.below(4);
        const std::size_t n_f = 1 + rng.below(3);
        const std::size_t k = 1 + 2 * rng.below(3);
        Matrix x = random_matrix(rows, channels, rng);
        for (std::size_t r = length; r < rows; ++r) {
            for (double& v : x.row(r)) {
                v = 0.0;
            }
        }
        const auto w = oracle::random_vector(k * channels * n_f, rng);
        const auto b = oracle::random_vector(n_f, rng);
        const Matrix got = conv1d_same(x, length, w, b, k);
        const Matrix want = oracle::conv1d(x, length, w, b, k);
        for (std::size_t i = 0; i < got.values().size(); ++i) {
            CHECK(got.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("masked_max_pool")
{
    Matrix m(3, 2);
    m(0, 0) = -2.0;
    m(1, 0) = -1.0;
    m(0, 1) = 4.0;
    m(1, 1) = 4.0;
    std::vector<std::size_t> argmax;
    const auto pooled = masked_max_pool(m, 2, &argmax);
    CHECK(pooled[0] == -1.0);
    CHECK(pooled[1] == 4.0);
    CHECK(argmax == std::vector<std::size_t>{1, 0});
    CHECK(masked_max_pool(m, 1) == std::vector<double>{-2.0, 4.0});
    CHECK_THROWS_AS(masked_max_pool(m, 0), std::invalid_argument);

    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix x = random_matrix(6, 3, rng);
        const std::size_t length = 1 + rng.below(6);
        const auto got = masked_max_pool(x, length);
        for (std::size_t c = 0; c < 3; ++c) {
            double best = x(0, c);
            for (std::size_t r = 1; r < length; ++r) {
                best = std::max(best, x(r, c));
            }
            CHECK(got[c] == best);
        }
    }
}

TEST_CASE("forward basics")
{
    const ModelConfig c = oracle::small_config();
    Rng rng(5);
    const Matrix input = random_matrix(c.doc_width, c.input_channels(), rng);
    const std::vector<double> lex{0.2, 0.4, 0.1};
    CHECK(forward(input, 6, lex, ModelParameters(c), c, Mode::eval) == 0.0);

    const ModelParameters p = oracle::random_params(c, 8);
    const double a = forward(input, 6, lex, p, c, Mode::eval);
    CHECK(forward(input, 6, lex, p, c, Mode::eval) == a);
    CHECK(forward(input, 6, lex, p, c, Mode::train, 123) == a);

    ModelConfig with_dropout = c;
    with_dropout.dropout = 0.5;
    CHECK(forward(input, 6, lex, p, with_dropout, Mode::eval) == a);
    CHECK(forward(input, 6, lex, p, with_dropout, Mode::train, 9) ==
          forward(input, 6, lex, p, with_dropout, Mode::train, 9));

    CHECK_THROWS_AS(forward(input, 0, lex, p, c, Mode::eval), std::invalid_argument);
    CHECK_THROWS_AS(forward(input, 6, std::vector<double>{1.0}, p, c, Mode::eval), std::invalid_argument);
}

TEST_CASE("padding invariance of the eval score")
{
    ModelConfig c = oracle::small_config();
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelParameters p = oracle::random_params(c, 100 + trial);
        const std::size_t length = 1 + rng.below(c.doc_width);
        const EmbeddedText doc = oracle::random_text(length, length, c.embedding_dim, rng);
        const EmbeddedText query = oracle::random_text(c.query_width, 2, c.embedding_dim, rng);
        EmbeddedText padded{Matrix(c.doc_width, c.embedding_dim), length};
        for (std::size_t r = 0; r < length; ++r) {
            std::copy(doc.values.row(r).begin(), doc.values.row(r).end(), padded.values.row(r).begin());
        }
        const std::vector<double> lex{0.1, -0.2, 0.3};
        CHECK(forward(delta_matrix(doc, query), lex, p, c, Mode::eval) ==
              forward(delta_matrix(padded, query), lex, p, c, Mode::eval));
    }
}

TEST_CASE("backward matches finite differences")
{
    for (DeltaInput variant : {DeltaInput::full, DeltaInput::no_difference, DeltaInput::no_features}) {
        ModelConfig c = oracle::small_config();
        c.input = variant;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            Rng rng(seed);
            const Matrix input = random_matrix(c.doc_width, c.input_channels(), rng);
            const auto lex = oracle::random_vector(3, rng);
            const auto check = oracle::check_gradients(input, 5 + seed, lex, oracle::random_params(c, seed), c);
            INFO("worst tensor " << check.worst_tensor);
            CHECK(check.worst_relative_error < 1e-4);
        }
    }
}

TEST_CASE("backward edge cases")
{
    const ModelConfig c = oracle::small_config();
    Rng rng(4);
    const Matrix input = random_matrix(c.doc_width, c.input_channels(), rng);
    const std::vector<double> lex{0.3, 0.2, 0.1};
    const ModelParameters p = oracle::random_params(c, 4);
    ForwardCache cache;
    forward(input, 1, lex, p, c, Mode::train, 0, &cache);
    const ModelParameters none = backward(cache, p, c, 0.0);
    for (const auto& t : none.tensors()) {
        for (double v : t.values) {
            CHECK(v == 0.0);
        }
    }
    // A one-word document never reaches the outer filter taps.
    const ModelParameters g = backward(cache, p, c, 1.0);
    for (std::size_t l = 0; l < c.conv_layers; ++l) {
        const auto& w = g.conv_weight(l).values;
        const std::size_t per_tap = w.size() / 3;
        for (std::size_t i = 0; i < per_tap; ++i) {
            CHECK(w[i] == 0.0);
            CHECK(w[2 * per_tap + i] == 0.0);
        }
    }

    ForwardCache stale;
    CHECK_THROWS_AS(backward(stale, p, c, 1.0), std::invalid_argument);
}

TEST_CASE("dropout scales survivors by 1/(1-p)")
{
    ModelConfig c = oracle::small_config();
    c.dropout = 0.25;
    Rng rng(6);
    const Matrix input = random_matrix(c.doc_width, c.input_channels(), rng);
    const std::vector<double> lex{0.3, 0.2, 0.1};
    ForwardCache cache;
    forward(input, c.doc_width, lex, oracle::random_params(c, 6), c, Mode::train, 77, &cache);
    REQUIRE(cache.dropout_scale.size() == c.doc_width * c.filters);
    std::size_t kept = 0;
    for (double s : cache.dropout_scale) {
        CHECK((s == 0.0 || s == doctest::Approx(1.0 / 0.75)));
        kept += s > 0.0 ? 1 : 0;
    }
    CHECK(kept > 0);
    CHECK(kept < cache.dropout_scale.size());
}
