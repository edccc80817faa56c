#include "deltarank/synth.hpp"

#include "deltarank/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

namespace deltarank {

void SynthConfig::validate() const
{
    if (train_queries == 0 || validation_queries == 0 || test_queries == 0) {
        throw std::invalid_argument("synth: every split needs at least one query");
    }
    if (docs_per_query < 32) {
        throw std::invalid_argument("synth: at least 32 documents per query are required");
    }
    if (dimension < 2 || concepts < 2) {
        throw std::invalid_argument("synth: dimension and topic count must be >= 2");
    }
}

namespace {

constexpr std::size_t kTermsPerTopic = 6;
constexpr std::size_t kSynonymsPerTerm = 2;
constexpr std::size_t kContextPerTopic = 12;
constexpr std::size_t kQualityWords = 8;
constexpr std::size_t kFillerWords = 400;
constexpr std::size_t kOovTerm = kTermsPerTopic - 1;

constexpr double kTermGroupCosine = 0.55;
constexpr double kContextCosine = 0.6;
constexpr double kQualityCosine = 0.9;

// Pronounceable, letter-only surfaces that survive tokenization unchanged.
std::string pseudo_word(std::size_t index)
{
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    const std::size_t syllables = consonants.size() * vowels.size();
    std::string word;
    for (int s = 0; s < 3; ++s) {
        const std::size_t syl = index % syllables;
        index /= syllables;
        word += consonants[syl / vowels.size()];
        word += vowels[syl % vowels.size()];
    }
    return word;
}

struct Topic {
    std::vector<std::string> terms;
    std::vector<std::vector<std::string>> synonyms;  // per term
    std::vector<std::string> context;
};

struct Lexicon {
    std::vector<Topic> topics;
    std::vector<std::string> quality;
    std::vector<std::string> filler;
    EmbeddingTable embeddings;
};

void set_row(Matrix& m, WordId id, const std::vector<double>& v)
{
    std::copy(v.begin(), v.end(), m.row(id).begin());
}

Lexicon make_lexicon(const SynthConfig& config)
{
    Rng rng(mix_seed(config.seed, 0x4c4558));
    std::size_t next_word = 0;
    const auto fresh = [&] { return pseudo_word(next_word++); };

    Lexicon lex;
    Vocabulary vocab;
    for (std::size_t c = 0; c < config.concepts; ++c) {
        Topic topic;
        for (std::size_t t = 0; t < kTermsPerTopic; ++t) {
            topic.terms.push_back(fresh());
            topic.synonyms.emplace_back();
            for (std::size_t s = 0; s < kSynonymsPerTerm; ++s) {
                topic.synonyms.back().push_back(fresh());
            }
        }
        for (std::size_t w = 0; w < kContextPerTopic; ++w) {
            topic.context.push_back(fresh());
        }
        lex.topics.push_back(std::move(topic));
    }
    for (std::size_t w = 0; w < kQualityWords; ++w) {
        lex.quality.push_back(fresh());
    }
    for (std::size_t w = 0; w < kFillerWords; ++w) {
        lex.filler.push_back(fresh());
    }

    for (const auto& topic : lex.topics) {
        for (std::size_t t = 0; t < kTermsPerTopic; ++t) {
            if (t != kOovTerm) {
                vocab.add(topic.terms[t]);
            }
            for (const auto& s : topic.synonyms[t]) {
                vocab.add(s);
            }
        }
        for (const auto& w : topic.context) {
            vocab.add(w);
        }
    }
    for (const auto& w : lex.quality) {
        vocab.add(w);
    }
    for (const auto& w : lex.filler) {
        vocab.add(w);
    }

    const std::size_t dim = config.dimension;
    Matrix vectors(vocab.size(), dim);
    for (const auto& topic : lex.topics) {
        const auto center = random_unit_vector(dim, rng);
        for (std::size_t t = 0; t < kTermsPerTopic; ++t) {
            const auto group = unit_vector_at_cosine(center, kTermGroupCosine, rng);
            if (t != kOovTerm) {
                set_row(vectors, vocab.lookup(topic.terms[t]), unit_vector_at_cosine(group, kSynonymCentroidCosine, rng));
            }
            for (const auto& s : topic.synonyms[t]) {
                set_row(vectors, vocab.lookup(s), unit_vector_at_cosine(group, kSynonymCentroidCosine, rng));
            }
        }
        for (const auto& w : topic.context) {
            set_row(vectors, vocab.lookup(w), unit_vector_at_cosine(center, kContextCosine, rng));
        }
    }
    const auto quality_direction = random_unit_vector(dim, rng);
    for (const auto& w : lex.quality) {
        set_row(vectors, vocab.lookup(w), unit_vector_at_cosine(quality_direction, kQualityCosine, rng));
    }
    for (const auto& w : lex.filler) {
        set_row(vectors, vocab.lookup(w), random_unit_vector(dim, rng));
    }
    initialize_unknown(vectors, config.seed);
    lex.embeddings = EmbeddingTable(std::move(vocab), std::move(vectors));
    return lex;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng)
{
    return items[rng.below(items.size())];
}

std::string join(const std::vector<std::string>& words)
{
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) {
            out += ' ';
        }
        out += w;
    }
    return out;
}

class ListBuilder {
public:
    ListBuilder(const Lexicon& lex, Rng& rng) : lex_(lex), rng_(rng) {}

    void add(std::vector<std::string>& words, const std::vector<std::string>& from, std::size_t count)
    {
        for (std::size_t i = 0; i < count; ++i) {
            words.push_back(pick(from, rng_));
        }
    }

    std::size_t other_topic(std::size_t topic)
    {
        std::size_t o = rng_.below(lex_.topics.size() - 1);
        return o >= topic ? o + 1 : o;
    }

    const std::string& synonym(std::size_t topic, std::size_t term)
    {
        return pick(lex_.topics[topic].synonyms[term], rng_);
    }

    std::string surface(std::size_t topic, std::size_t term, bool paraphrase)
    {
        if (!paraphrase && rng_.bernoulli(0.6)) {
            return lex_.topics[topic].terms[term];
        }
        return synonym(topic, term);
    }

    // Off-topic abstract built around topic `o`.
    std::vector<std::string> background_abstract(std::size_t o)
    {
        const Topic& other = lex_.topics[o];
        std::vector<std::string> words;
        add(words, other.context, 4 + rng_.below(6));
        add(words, other.terms, 1 + rng_.below(3));
        if (rng_.bernoulli(0.5)) {
            add(words, lex_.quality, 1 + rng_.below(3));
        }
        const std::size_t length = 30 + rng_.below(50);
        while (words.size() < length) {
            words.push_back(pick(lex_.filler, rng_));
        }
        rng_.shuffle(words);
        return words;
    }

    struct Generated {
        std::vector<std::string> title;
        std::vector<std::string> abstract;
        std::int64_t clicks = 0;
    };

    Generated relevant(std::size_t topic, const std::vector<std::size_t>& query_terms)
    {
        const Topic& c = lex_.topics[topic];
        const bool paraphrase = rng_.bernoulli(0.3);
        Generated g;
        for (std::size_t t : query_terms) {
            g.title.push_back(surface(topic, t, paraphrase));
        }
        add(g.title, c.context, 1 + rng_.below(3));
        add(g.title, lex_.filler, rng_.below(3));
        rng_.shuffle(g.title);

        // Quality words stay near the front; a late tail may repeat exact terms.
        const std::size_t quality = rng_.below(5);
        std::vector<std::string> head;
        add(head, lex_.quality, quality);
        add(head, c.context, 3 + rng_.below(4));
        add(head, lex_.filler, 14 + rng_.below(8));
        rng_.shuffle(head);
        std::vector<std::string> tail;
        add(tail, c.context, 2 + rng_.below(4));
        for (std::size_t t : query_terms) {
            if (rng_.bernoulli(0.5)) {
                tail.push_back(surface(topic, t, paraphrase));
            }
        }
        add(tail, lex_.filler, 20 + rng_.below(30));
        rng_.shuffle(tail);
        if (!paraphrase && rng_.bernoulli(0.5)) {
            for (std::size_t t : query_terms) {
                tail.push_back(c.terms[t]);
            }
        }
        g.abstract = std::move(head);
        g.abstract.insert(g.abstract.end(), tail.begin(), tail.end());
        g.clicks = std::llround((2.0 + 3.0 * static_cast<double>(quality)) * rng_.uniform(0.8, 1.25));
        return g;
    }

    Generated confounder(std::size_t topic, const std::vector<std::size_t>& query_terms)
    {
        const std::size_t o = other_topic(topic);
        Generated g;
        for (std::size_t t : query_terms) {
            g.title.push_back(lex_.topics[topic].terms[t]);
        }
        add(g.title, lex_.topics[o].context, 1 + rng_.below(3));
        add(g.title, lex_.filler, rng_.below(3));
        rng_.shuffle(g.title);
        g.abstract = background_abstract(o);
        return g;
    }

    Generated unrelated(std::size_t topic, const std::vector<std::size_t>& query_terms)
    {
        const std::size_t o = other_topic(topic);
        const Topic& other = lex_.topics[o];
        Generated g;
        const std::size_t terms = 1 + rng_.below(3);
        for (std::size_t i = 0; i < terms; ++i) {
            const std::size_t t = rng_.below(kTermsPerTopic);
            g.title.push_back(rng_.bernoulli(0.5) ? other.terms[t] : synonym(o, t));
        }
        if (rng_.bernoulli(0.3)) {
            g.title.push_back(lex_.topics[topic].terms[pick(query_terms, rng_)]);
        }
        add(g.title, other.context, 1 + rng_.below(3));
        add(g.title, lex_.filler, rng_.below(3));
        rng_.shuffle(g.title);
        g.abstract = background_abstract(o);
        return g;
    }

private:
    const Lexicon& lex_;
    Rng& rng_;
};

}  // namespace

SynthDataset generate_synth_dataset(const SynthConfig& config)
{
    config.validate();
    Lexicon lex = make_lexicon(config);
    SynthDataset data;
    const std::size_t total = config.train_queries + config.validation_queries + config.test_queries;
    DocId next_doc = 1;

    for (std::size_t q = 0; q < total; ++q) {
        Rng rng(mix_seed(config.seed, 0x51000000ULL + q));
        ListBuilder build(lex, rng);
        const std::size_t topic = rng.below(config.concepts);
        std::vector<std::size_t> terms(kTermsPerTopic);
        for (std::size_t t = 0; t < terms.size(); ++t) {
            terms[t] = t;
        }
        rng.shuffle(terms);
        terms.resize(2 + rng.below(3));

        std::vector<std::string> query_words;
        for (std::size_t t : terms) {
            query_words.push_back(lex.topics[topic].terms[t]);
        }

        const std::size_t n_relevant = 3 + rng.below(4);
        const std::size_t n_confounders = 8 + rng.below(17);
        std::vector<ListBuilder::Generated> docs;
        for (std::size_t i = 0; i < config.docs_per_query; ++i) {
            if (i < n_relevant) {
                docs.push_back(build.relevant(topic, terms));
            } else if (i < n_relevant + n_confounders) {
                docs.push_back(build.confounder(topic, terms));
            } else {
                docs.push_back(build.unrelated(topic, terms));
            }
        }
        rng.shuffle(docs);

        RawJudgedList list;
        list.query_id = "q" + std::to_string(q + 1);
        list.query = join(query_words);
        std::vector<ClickRecord> records;
        for (const auto& g : docs) {
            ClickRecord rec;
            rec.query_id = list.query_id;
            rec.doc_id = next_doc++;
            rec.clicks = g.clicks;
            rec.full_text_available = g.clicks > 0 && rng.bernoulli(0.5) ? 1 : 0;
            rec.full_text_clicks =
                rec.full_text_available ? std::llround(static_cast<double>(g.clicks) * rng.uniform(0.0, 0.5)) : 0;
            records.push_back(rec);
            list.docs.push_back({{rec.doc_id, join(g.title), join(g.abstract)}, 0.0});
        }
        const auto srel = derive_srel(records);
        for (std::size_t i = 0; i < srel.size(); ++i) {
            list.docs[i].srel = srel[i].srel;
        }
        data.clicks.insert(data.clicks.end(), records.begin(), records.end());

        if (q < config.train_queries) {
            data.train.push_back(std::move(list));
        } else if (q < config.train_queries + config.validation_queries) {
            data.validation.push_back(std::move(list));
        } else {
            data.test.push_back(std::move(list));
        }
    }
    data.embeddings = std::move(lex.embeddings);
    return data;
}

std::vector<JudgedList> tokenize_lists(const std::vector<RawJudgedList>& lists)
{
    std::vector<JudgedList> out;
    out.reserve(lists.size());
    for (const auto& raw : lists) {
        JudgedList list{{raw.query_id, tokenize(raw.query)}, {}};
        for (const auto& jd : raw.docs) {
            list.docs.push_back({{jd.doc.doc_id, tokenize(jd.doc.title), tokenize(jd.doc.abstract)}, jd.srel});
        }
        validate(list);
        out.push_back(std::move(list));
    }
    return out;
}

std::vector<Document> synth_corpus(const SynthDataset& dataset)
{
    std::vector<Document> corpus;
    std::unordered_set<DocId> seen;
    for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test}) {
        for (const auto& list : *split) {
            for (const auto& jd : list.docs) {
                if (seen.insert(jd.doc.doc_id).second) {
                    corpus.push_back({jd.doc.doc_id, tokenize(jd.doc.title), tokenize(jd.doc.abstract)});
                }
            }
        }
    }
    return corpus;
}

void write_synth_dataset(const SynthDataset& dataset, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<RawDocument> corpus;
    for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test}) {
        for (const auto& list : *split) {
            for (const auto& jd : list.docs) {
                corpus.push_back(jd.doc);
            }
        }
    }
    write_corpus(dir / "corpus.jsonl", corpus);
    write_judged_lists(dir / "train.jsonl", dataset.train);
    write_judged_lists(dir / "val.jsonl", dataset.validation);
    write_judged_lists(dir / "test.jsonl", dataset.test);
    save_embeddings(dataset.embeddings, dir / "embeddings.txt");

    std::ofstream clicks(dir / "clicks.tsv");
    if (!clicks) {
        throw std::runtime_error("cannot write " + (dir / "clicks.tsv").string());
    }
    clicks << "query_id\tdoc_id\tclicks\tft_available\tft_clicks\n";
    for (const auto& r : dataset.clicks) {
        clicks << r.query_id << '\t' << r.doc_id << '\t' << r.clicks << '\t' << r.full_text_available << '\t'
               << r.full_text_clicks << '\n';
    }
}

BenchFixture generate_bench_fixture(std::size_t docs, std::size_t dimension, std::uint64_t seed)
{
    constexpr std::size_t kWords = 5000;
    Rng rng(mix_seed(seed, 0x42454e4348ULL));
    Vocabulary vocab;
    std::vector<std::string> words;
    for (std::size_t i = 0; i < kWords; ++i) {
        words.push_back(pseudo_word(i));
        vocab.add(words.back());
    }
    BenchFixture fx;
    fx.embeddings = generate_synthetic_embeddings(vocab, dimension, seed);
    fx.query = {"bench", {pick(words, rng), pick(words, rng), pick(words, rng)}};
    for (std::size_t d = 0; d < docs; ++d) {
        Document doc;
        doc.doc_id = static_cast<DocId>(d + 1);
        for (std::size_t i = 0; i < 10; ++i) {
            doc.title.push_back(rng.bernoulli(0.1) ? pick(fx.query.tokens, rng) : pick(words, rng));
        }
        for (std::size_t i = 0; i < 150; ++i) {
            doc.abstract.push_back(rng.bernoulli(0.02) ? pick(fx.query.tokens, rng) : pick(words, rng));
        }
        fx.docs.push_back(std::move(doc));
    }
    return fx;
}

}  // namespace deltarank
