#include "deltarank/embeddings.hpp"
#include "deltarank/errors.hpp"
#include "deltarank/random.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace deltarank;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents)
{
    const auto path = std::filesystem::temp_directory_path() / ("deltarank_emb_" + name);
    std::ofstream(path) << contents;
    return path;
}

EmbeddingTable three_words()
{
    return load_embeddings(temp_file("three.txt", "3 4\n"
                                                  "gene 1 0 0 0\n"
                                                  "cancer 0 1 0 0\n"
                                                  "risk 0.5 0.5 -0.5 2\n"),
                           7);
}

}  // namespace

TEST_CASE("load_embeddings reads the header and every vector")
{
    const EmbeddingTable table = three_words();
    CHECK(table.word_count() == 3);
    CHECK(table.dimension() == 4);
    CHECK(table.lookup("risk")[3] == 2.0);
    for (double v : table.vector(Vocabulary::kPadding)) {
        CHECK(v == 0.0);
    }
    for (double v : table.unknown()) {
        CHECK(std::abs(v) <= kUnknownInitRange);
    }
}

TEST_CASE("load_embeddings rejects malformed files")
{
    const auto short_line = temp_file("short.txt", "2 3\ngene 1 2 3\ncancer 1 2\n");
    try {
        load_embeddings(short_line);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(load_embeddings(temp_file("dup.txt", "2 1\ngene 1\ngene 2\n")), ParseError);
    CHECK_THROWS_AS(load_embeddings(temp_file("nan.txt", "1 1\ngene nan\n")), ParseError);
    CHECK_THROWS_AS(load_embeddings(temp_file("header.txt", "x\n")), ParseError);
}

TEST_CASE("UNK vector is fixed by its seed")
{
    const auto path = temp_file("unk.txt", "1 5\na 1 2 3 4 5\n");
    const auto a = load_embeddings(path, 3);
    const auto b = load_embeddings(path, 3);
    const auto c = load_embeddings(path, 4);
    CHECK(std::vector<double>(a.unknown().begin(), a.unknown().end()) ==
          std::vector<double>(b.unknown().begin(), b.unknown().end()));
    CHECK(std::vector<double>(a.unknown().begin(), a.unknown().end()) !=
          std::vector<double>(c.unknown().begin(), c.unknown().end()));
}

TEST_CASE("save and load round-trip exactly")
{
    const EmbeddingTable table = three_words();
    const auto path = std::filesystem::temp_directory_path() / "deltarank_emb_roundtrip.txt";
    save_embeddings(table, path);
    const EmbeddingTable back = load_embeddings(path, 7);
    REQUIRE(back.word_count() == table.word_count());
    for (WordId id = 0; id < table.vocabulary().size(); ++id) {
        const auto x = table.vector(id);
        const auto y = back.vector(id);
        CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
    }
}

TEST_CASE("embed_sequence pads, masks and truncates")
{
    const EmbeddingTable table = three_words();
    const EmbeddedText two = embed_sequence({"gene", "cancer"}, table, 5);
    CHECK(two.mask() == std::vector<bool>{true, true, false, false, false});
    for (std::size_t r = 2; r < 5; ++r) {
        for (double v : two.values.row(r)) {
            CHECK(v == 0.0);
        }
    }
    CHECK(two.values(1, 1) == 1.0);

    const TokenSequence sixty(60, "risk");
    const EmbeddedText truncated = embed_sequence(sixty, table, 50);
    CHECK(truncated.length == 50);
    CHECK(truncated.width() == 50);

    const EmbeddedText oov = embed_sequence({"nonexistent"}, table, 2);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(oov.values(0, c) == table.unknown()[c]);
    }
    CHECK_THROWS_AS(embed_sequence({"gene"}, table, 0), std::invalid_argument);
}

TEST_CASE("embedding ignores everything beyond max_len")
{
    const EmbeddingTable table = three_words();
    const TokenSequence base{"gene", "risk", "cancer"};
    TokenSequence longer = base;
    longer.insert(longer.end(), {"gene", "zzz"});
    CHECK(embed_sequence(base, table, 3).values == embed_sequence(longer, table, 3).values);
    CHECK(embed_sequence(base, table, 2).values == embed_sequence(longer, table, 2).values);
}

TEST_CASE("synthetic embeddings")
{
    Vocabulary vocab;
    for (int i = 0; i < 1200; ++i) {
        vocab.add("w" + std::to_string(i));
    }
    const std::vector<std::vector<std::string>> groups{{"w0", "w1", "w2"}, {"w10", "w11"}};
    const EmbeddingTable a = generate_synthetic_embeddings(vocab, 50, 9, groups);
    const EmbeddingTable b = generate_synthetic_embeddings(vocab, 50, 9, groups);
    for (WordId id = 0; id < vocab.size(); ++id) {
        const auto x = a.vector(id);
        const auto y = b.vector(id);
        CHECK(std::equal(x.begin(), x.end(), y.begin(), y.end()));
    }
    for (WordId id = 2; id < vocab.size(); ++id) {
        double norm = 0.0;
        for (double v : a.vector(id)) {
            norm += v * v;
        }
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(cosine_similarity(a.lookup("w0"), a.lookup("w1")) >= 0.9);
    CHECK(cosine_similarity(a.lookup("w1"), a.lookup("w2")) >= 0.9);
    CHECK(cosine_similarity(a.lookup("w10"), a.lookup("w11")) >= 0.9);

    double total = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.lookup("w" + std::to_string(100 + i));
        const auto y = a.lookup("w" + std::to_string(101 + i));
        total += std::abs(cosine_similarity(x, y));
    }
    CHECK(total / 1000.0 < 0.2);
}

TEST_CASE("unit_vector_at_cosine hits the requested angle")
{
    Rng rng(3);
    for (double target : {0.975, 0.55, 0.0, -0.4}) {
        const auto center = random_unit_vector(20, rng);
        const auto v = unit_vector_at_cosine(center, target, rng);
        CHECK(cosine_similarity(center, v) == doctest::Approx(target).epsilon(1e-12));
    }
}
