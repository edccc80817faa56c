#include "deltarank/errors.hpp"
#include "deltarank/lexical.hpp"
#include "deltarank/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace deltarank;

namespace {

// Toy corpus: doc 1 has title length 4 with "gene" twice, doc 2 has title length 2.
std::vector<Document> toy_corpus()
{
    return {{1, {"gene", "x", "gene", "y"}, {"alpha", "beta"}}, {2, {"cancer", "risk"}, {}}};
}

double set_jaccard(const TokenSequence& a, const TokenSequence& b)
{
    const std::set<std::string> sa(a.begin(), a.end());
    const std::set<std::string> sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (const auto& w : sa) {
        inter += sb.count(w);
    }
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

TokenSequence random_tokens(Rng& rng, std::size_t max_len, std::size_t alphabet)
{
    TokenSequence t;
    const std::size_t len = rng.below(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
        t.push_back("w" + std::to_string(rng.below(alphabet)));
    }
    return t;
}

}  // namespace

TEST_CASE("corpus statistics")
{
    const std::vector<Document> docs{{1, {"gene", "a"}, {"x"}}, {2, {"gene", "b", "gene"}, {}}, {3, {"c", "d", "e", "f"}, {}}};
    const CorpusStats stats = build_stats(docs);
    CHECK(stats.n_docs() == 3);
    CHECK(stats.document_frequency("gene", Field::title) == 2);
    CHECK(stats.collection_frequency("gene", Field::title) == 3);
    CHECK(stats.document_frequency("absent", Field::title) == 0);
    CHECK(stats.average_length(Field::title) == doctest::Approx(3.0));
    CHECK(stats.document_frequency("x", Field::text) == 1);
    CHECK(stats.total_terms(Field::text) == 10);
    CHECK_THROWS_AS(build_stats(std::vector<Document>{}), ValidationError);

    const auto path = std::filesystem::temp_directory_path() / "deltarank_stats.json";
    stats.save(path);
    CHECK(CorpusStats::load(path) == stats);
}

TEST_CASE("idf hand values")
{
    const CorpusStats two = build_stats(toy_corpus());
    CHECK(std::abs(idf("gene", two, Field::title) - std::log(2.0)) < 1e-9);
    const CorpusStats one = build_stats(std::vector<Document>{{1, {"a"}, {}}});
    CHECK(std::abs(idf("zzz", one, Field::title) - std::log(4.0)) < 1e-9);

    std::vector<Document> many;
    for (DocId i = 0; i < 1000; ++i) {
        many.push_back({i, {"common"}, {}});
    }
    const CorpusStats big = build_stats(many);
    CHECK(idf("common", big, Field::title) > 0.0);
    CHECK(idf("common", big, Field::title) < 1e-3);

    double previous = std::numeric_limits<double>::infinity();
    for (DocId df = 0; df <= 10; ++df) {
        std::vector<Document> docs;
        for (DocId i = 0; i < 10; ++i) {
            docs.push_back({i, {i < df ? "w" : "v"}, {}});
        }
        const double value = idf("w", build_stats(docs), Field::title);
        CHECK(value > 0.0);
        CHECK(value < previous);
        previous = value;
    }
}

TEST_CASE("bm25 hand values")
{
    const CorpusStats stats = build_stats(toy_corpus());
    const auto docs = toy_corpus();
    CHECK(bm25({"zzz"}, docs[0].title, stats, Field::title) == 0.0);
    const double expected = std::log(2.0) * 2.0 * 3.0 / (2.0 + 2.0 * (0.25 + 0.75 * 4.0 / 3.0));
    CHECK(std::abs(bm25({"gene"}, docs[0].title, stats, Field::title) - expected) < 1e-9);
    CHECK(std::abs(expected - std::log(2.0) * 6.0 / 4.5) < 1e-12);
    // Repeated query words count once.
    CHECK(bm25({"gene", "gene"}, docs[0].title, stats, Field::title) ==
          bm25({"gene"}, docs[0].title, stats, Field::title));

    // tf = 1 and len = avglen reduces to idf.
    const std::vector<Document> even{{1, {"a", "b"}, {}}, {2, {"c", "d"}, {}}};
    const CorpusStats es = build_stats(even);
    CHECK(std::abs(bm25({"a"}, even[0].title, es, Field::title) - idf("a", es, Field::title)) < 1e-12);
}

TEST_CASE("lexical feature examples")
{
    const CorpusStats stats = build_stats(toy_corpus());
    const Query q{"q", {"gene", "x"}};
    const LexicalFeatureVector same = lexical_features(q, {9, {"gene", "x"}, {}}, stats);
    for (std::size_t f : {9, 11, 12, 13}) {
        CHECK(same[f] == doctest::Approx(1.0));
    }
    for (std::size_t f = 14; f <= 18; ++f) {
        CHECK(same[f] == 0.0);
    }
    const LexicalFeatureVector single = lexical_features({"q", {"gene"}}, {9, {"gene"}, {"gene"}}, stats);
    CHECK(single[2] == 0.0);
    CHECK(single[10] == 0.0);
    CHECK(single[15] == 0.0);

    const LexicalFeatureVector ab = lexical_features({"q", {"a", "b"}}, {9, {"a", "c"}, {}}, stats);
    CHECK(ab[9] == doctest::Approx(0.5));
    CHECK(ab[11] == doctest::Approx(1.0 / 3.0));

    const auto l3 = same.lex3();
    CHECK(l3[0] == same[7]);
    CHECK(l3[1] == same[13]);
    CHECK(l3[2] == same[12]);
    CHECK(select_lexical(same, 0).empty());
    CHECK(select_lexical(same, 18).size() == 18);
    CHECK_THROWS_AS(select_lexical(same, 5), std::invalid_argument);
}

TEST_CASE("lexical feature properties on random inputs")
{
    Rng rng(21);
    std::vector<Document> corpus;
    for (DocId i = 0; i < 40; ++i) {
        corpus.push_back({i, random_tokens(rng, 8, 15), random_tokens(rng, 20, 15)});
    }
    const CorpusStats stats = build_stats(corpus);

    std::vector<Document> flat_corpus;
    for (DocId i = 0; i < 5; ++i) {
        flat_corpus.push_back({i, {"w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7"}, {}});
    }
    const CorpusStats flat = build_stats(flat_corpus);

    for (int trial = 0; trial < 300; ++trial) {
        TokenSequence qt = random_tokens(rng, 5, 15);
        if (qt.empty()) {
            qt.push_back("w0");
        }
        const Query q{"q", qt};
        const Document d{1, random_tokens(rng, 8, 15), random_tokens(rng, 20, 15)};
        const LexicalFeatureVector f = lexical_features(q, d, stats);
        for (std::size_t k = 1; k <= 18; ++k) {
            if (k >= 6 && k <= 8) {
                CHECK(f[k] >= 0.0);
            } else {
                CHECK(f[k] >= 0.0);
                CHECK(f[k] <= 1.0 + 1e-12);
            }
        }
        CHECK(f[11] == doctest::Approx(set_jaccard(q.tokens, d.title)).epsilon(1e-12));
        CHECK(f[3] == doctest::Approx(set_jaccard(q.tokens, document_text(d))).epsilon(1e-12));
        CHECK(lexical_inputs(q, d, stats, 3) == select_lexical(f, 3));

        const Document title_only{2, d.title, {}};
        const LexicalFeatureVector t = lexical_features(q, title_only, stats);
        for (std::size_t k = 1; k <= 5; ++k) {
            CHECK(t[k] == doctest::Approx(t[k + 8]).epsilon(1e-12));
        }

        Document grown_title = d;
        grown_title.title.push_back(q.tokens[rng.below(q.tokens.size())]);
        const LexicalFeatureVector gt = lexical_features(q, grown_title, stats);
        for (std::size_t k = 9; k <= 13; ++k) {
            CHECK(gt[k] >= f[k] - 1e-12);
        }
        Document grown_abstract = d;
        grown_abstract.abstract.push_back(q.tokens[rng.below(q.tokens.size())]);
        const LexicalFeatureVector ga = lexical_features(q, grown_abstract, stats);
        for (std::size_t k : {1, 2, 3, 4, 5, 14, 15, 16, 17, 18}) {
            CHECK(ga[k] >= f[k] - 1e-12);
        }

        // Every word of the flat corpus has the same df, hence the same IDF.
        Query fq{"q", {}};
        for (const auto& w : q.tokens) {
            fq.tokens.push_back("w" + std::to_string(std::stoi(w.substr(1)) % 8));
        }
        Document fd = d;
        for (auto* field : {&fd.title, &fd.abstract}) {
            for (auto& w : *field) {
                w = "w" + std::to_string(std::stoi(w.substr(1)) % 8);
            }
        }
        const LexicalFeatureVector e = lexical_features(fq, fd, flat);
        CHECK(std::abs(e[4] - e[1]) < 1e-12);
        CHECK(std::abs(e[5] - e[3]) < 1e-12);
    }
}
