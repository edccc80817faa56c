#include "deltarank/embeddings.hpp"

#include "deltarank/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace deltarank {

EmbeddingTable::EmbeddingTable(Vocabulary vocab, Matrix vectors)
    : vocab_(std::move(vocab)), vectors_(std::move(vectors))
{
    if (vectors_.rows() != vocab_.size()) {
        throw ValidationError("embedding matrix has " + std::to_string(vectors_.rows()) +
                              " rows for a vocabulary of " + std::to_string(vocab_.size()));
    }
    if (vectors_.cols() == 0) {
        throw ValidationError("embedding dimension must be positive");
    }
    for (double v : vectors_.row(Vocabulary::kPadding)) {
        if (v != 0.0) {
            throw ValidationError("padding vector must be zero");
        }
    }
    for (double v : vectors_.values()) {
        if (!std::isfinite(v)) {
            throw ValidationError("embedding contains a non-finite value");
        }
    }
}

void initialize_unknown(Matrix& vectors, std::uint64_t seed)
{
    Rng rng(mix_seed(seed, 0x554e4bULL));
    for (double& v : vectors.row(Vocabulary::kUnknown)) {
        v = rng.uniform(-kUnknownInitRange, kUnknownInitRange);
    }
}

namespace {

double parse_double(std::string_view field, const std::string& source, std::size_t line_no)
{
    // std::from_chars for double is available in libstdc++ 11.
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(source, line_no, "not a number: '" + std::string(field) + "'");
    }
    if (!std::isfinite(value)) {
        throw ParseError(source, line_no, "non-finite value");
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') {
            ++j;
        }
        if (j > i) {
            fields.push_back(line.substr(i, j - i));
        }
        i = j;
    }
    return fields;
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::uint64_t unk_seed)
{
    const std::string source = path.string();
    std::ifstream in(path);
    if (!in) {
        throw ParseError(source, 0, "cannot open file");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "missing 'W V' header");
    }
    const auto header = split_fields(line);
    std::size_t word_count = 0;
    std::size_t dim = 0;
    if (header.size() != 2 ||
        std::from_chars(header[0].data(), header[0].data() + header[0].size(), word_count).ec != std::errc() ||
        std::from_chars(header[1].data(), header[1].data() + header[1].size(), dim).ec != std::errc() ||
        dim == 0) {
        throw ParseError(source, 1, "header must be 'W V' with V >= 1");
    }

    Vocabulary vocab;
    std::vector<double> rows(2 * dim, 0.0);
    rows.reserve((word_count + 2) * dim);
    std::size_t line_no = 1;
    std::size_t read = 0;
    while (read < word_count && std::getline(in, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != dim + 1) {
            throw ParseError(source, line_no,
                             "expected " + std::to_string(dim) + " values, found " +
                                 std::to_string(fields.size() - 1));
        }
        const std::string word(fields[0]);
        if (vocab.contains(word) || word == Vocabulary::kUnknownSurface) {
            throw ParseError(source, line_no, "duplicate word '" + word + "'");
        }
        vocab.add(word);
        for (std::size_t k = 0; k < dim; ++k) {
            rows.push_back(parse_double(fields[k + 1], source, line_no));
        }
        ++read;
    }
    if (read != word_count) {
        throw ParseError(source, line_no,
                         "header promises " + std::to_string(word_count) + " words, found " + std::to_string(read));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!split_fields(line).empty()) {
            throw ParseError(source, line_no, "more words than the header declares");
        }
    }

    Matrix vectors(vocab.size(), dim);
    std::copy(rows.begin(), rows.end(), vectors.values().begin());
    initialize_unknown(vectors, unk_seed);
    return EmbeddingTable(std::move(vocab), std::move(vectors));
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    const auto& vocab = table.vocabulary();
    out << table.word_count() << ' ' << table.dimension() << '\n';
    char buf[32];
    for (WordId id = 2; id < vocab.size(); ++id) {
        out << vocab.word(id);
        for (double v : table.vector(id)) {
            const int n = std::snprintf(buf, sizeof buf, " %.17g", v);
            out.write(buf, n);
        }
        out << '\n';
    }
}

std::vector<bool> EmbeddedText::mask() const
{
    std::vector<bool> m(values.rows(), false);
    for (std::size_t i = 0; i < length; ++i) {
        m[i] = true;
    }
    return m;
}

EmbeddedText embed_sequence(const TokenSequence& tokens, const EmbeddingTable& table, std::size_t max_len)
{
    if (max_len == 0) {
        throw std::invalid_argument("embed_sequence: max_len must be >= 1");
    }
    EmbeddedText out{Matrix(max_len, table.dimension()), std::min(tokens.size(), max_len)};
    for (std::size_t i = 0; i < out.length; ++i) {
        const auto src = table.lookup(tokens[i]);
        std::copy(src.begin(), src.end(), out.values.row(i).begin());
    }
    return out;
}

std::vector<double> random_unit_vector(std::size_t dim, Rng& rng)
{
    std::vector<double> v(dim);
    double norm = 0.0;
    while (norm < 1e-12) {
        for (double& x : v) {
            x = rng.normal();
        }
        norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    }
    for (double& x : v) {
        x /= norm;
    }
    return v;
}

std::vector<double> unit_vector_at_cosine(std::span<const double> center, double cosine, Rng& rng)
{
    const std::size_t dim = center.size();
    if (dim == 1) {
        return {cosine >= 0 ? center[0] : -center[0]};
    }
    // Gram-Schmidt a random direction against the center.
    std::vector<double> ortho;
    double norm = 0.0;
    while (norm < 1e-9) {
        ortho = random_unit_vector(dim, rng);
        const double proj = std::inner_product(ortho.begin(), ortho.end(), center.begin(), 0.0);
        for (std::size_t k = 0; k < dim; ++k) {
            ortho[k] -= proj * center[k];
        }
        norm = std::sqrt(std::inner_product(ortho.begin(), ortho.end(), ortho.begin(), 0.0));
    }
    const double sine = std::sqrt(std::max(0.0, 1.0 - cosine * cosine));
    std::vector<double> out(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        out[k] = cosine * center[k] + sine * ortho[k] / norm;
    }
    return out;
}

EmbeddingTable generate_synthetic_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed,
                                             const std::vector<std::vector<std::string>>& synonym_groups)
{
    if (dim == 0) {
        throw std::invalid_argument("embedding dimension must be >= 1");
    }
    Rng rng(seed);
    Matrix vectors(vocab.size(), dim);
    for (WordId id = 2; id < vocab.size(); ++id) {
        const auto v = random_unit_vector(dim, rng);
        std::copy(v.begin(), v.end(), vectors.row(id).begin());
    }
    for (const auto& group : synonym_groups) {
        const auto centroid = random_unit_vector(dim, rng);
        for (const auto& word : group) {
            const WordId id = vocab.lookup(word);
            if (id == Vocabulary::kUnknown) {
                throw ValidationError("synonym '" + word + "' is not in the vocabulary");
            }
            const auto v = unit_vector_at_cosine(centroid, kSynonymCentroidCosine, rng);
            std::copy(v.begin(), v.end(), vectors.row(id).begin());
        }
    }
    initialize_unknown(vectors, seed);
    return EmbeddingTable(vocab, std::move(vectors));
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) noexcept
{
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace deltarank
