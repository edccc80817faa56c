#include "deltarank/trainer.hpp"

#include "deltarank/errors.hpp"
#include "deltarank/evaluation.hpp"
#include "deltarank/log.hpp"
#include "deltarank/parallel.hpp"
#include "deltarank/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace deltarank {

std::string_view to_string(PairMode mode) noexcept
{
    return mode == PairMode::all_unequal ? "all-unequal" : "relevant-vs-nonrelevant";
}

PairMode pair_mode_from_string(std::string_view name)
{
    if (name == "all-unequal") {
        return PairMode::all_unequal;
    }
    if (name == "relevant-vs-nonrelevant") {
        return PairMode::relevant_vs_nonrelevant;
    }
    throw std::invalid_argument("unknown pair mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0) || !(adagrad_epsilon > 0.0)) {
        throw std::invalid_argument("train config: learning rate and epsilon must be positive");
    }
    if (batch_size == 0 || max_epochs == 0 || patience == 0) {
        throw std::invalid_argument("train config: batch size, epochs and patience must be >= 1");
    }
    if (l2_conv < 0.0 || l2_ff < 0.0) {
        throw std::invalid_argument("train config: L2 coefficients must be non-negative");
    }
}

nlohmann::json train_config_to_json(const TrainConfig& c)
{
    return nlohmann::json{{"learning_rate", c.learning_rate},
                          {"adagrad_epsilon", c.adagrad_epsilon},
                          {"batch_size", c.batch_size},
                          {"l2_conv", c.l2_conv},
                          {"l2_ff", c.l2_ff},
                          {"max_epochs", c.max_epochs},
                          {"patience", c.patience},
                          {"seed", c.seed},
                          {"pairs", std::string(to_string(c.pairs))}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c)
{
    const auto take = [&j](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end()) {
            it->get_to(field);
        }
    };
    take("learning_rate", c.learning_rate);
    take("adagrad_epsilon", c.adagrad_epsilon);
    take("batch_size", c.batch_size);
    take("l2_conv", c.l2_conv);
    take("l2_ff", c.l2_ff);
    take("max_epochs", c.max_epochs);
    take("patience", c.patience);
    take("seed", c.seed);
    take("threads", c.threads);
    if (auto it = j.find("pairs"); it != j.end()) {
        c.pairs = pair_mode_from_string(it->get<std::string>());
    }
    return c;
}

std::optional<JudgedList> downsample_balanced(const JudgedList& list, std::uint64_t seed)
{
    std::vector<std::size_t> relevant;
    std::vector<std::size_t> nonrelevant;
    for (std::size_t i = 0; i < list.docs.size(); ++i) {
        (list.docs[i].srel > 0.0 ? relevant : nonrelevant).push_back(i);
    }
    if (relevant.empty() || nonrelevant.empty()) {
        log_warning("query '" + list.query.query_id + "' lacks relevant or non-relevant documents; skipped");
        return std::nullopt;
    }
    auto& larger = relevant.size() > nonrelevant.size() ? relevant : nonrelevant;
    const std::size_t keep = std::min(relevant.size(), nonrelevant.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < keep; ++i) {
        std::swap(larger[i], larger[i + rng.below(larger.size() - i)]);
    }
    larger.resize(keep);

    std::vector<std::size_t> kept = relevant;
    kept.insert(kept.end(), nonrelevant.begin(), nonrelevant.end());
    std::sort(kept.begin(), kept.end());
    JudgedList out{list.query, {}};
    for (std::size_t i : kept) {
        out.docs.push_back(list.docs[i]);
    }
    return out;
}

std::vector<TrainingTriple> make_triples(const JudgedList& list, PairMode mode, std::size_t query_index)
{
    std::vector<TrainingTriple> triples;
    for (std::size_t i = 0; i < list.docs.size(); ++i) {
        for (std::size_t j = 0; j < list.docs.size(); ++j) {
            const double hi = list.docs[i].srel;
            const double lo = list.docs[j].srel;
            if (!(hi > lo)) {
                continue;
            }
            if (mode == PairMode::relevant_vs_nonrelevant && lo != 0.0) {
                continue;
            }
            triples.push_back({query_index, i, j, std::sqrt(hi - lo)});
        }
    }
    return triples;
}

HingeLoss hinge_loss(double s_positive, double s_negative, double weight)
{
    const double margin = 1.0 - s_positive + s_negative;
    if (margin > 0.0) {
        return {weight * margin, -weight, weight};
    }
    return {};
}

void adagrad_step(ModelParameters& params, const ModelParameters& grads, ModelParameters& accumulators,
                  const TrainConfig& config)
{
    auto& p = params.tensors();
    const auto& g = grads.tensors();
    auto& acc = accumulators.tensors();
    if (g.size() != p.size() || acc.size() != p.size()) {
        throw InvariantError("adagrad_step: parameter layouts differ");
    }
    const auto l2 = [&](const Tensor& t) {
        if (t.is_bias) {
            return 0.0;
        }
        return t.stage == Stage::convolution ? config.l2_conv : config.l2_ff;
    };
    for (std::size_t t = 0; t < p.size(); ++t) {
        if (g[t].values.size() != p[t].values.size() || acc[t].values.size() != p[t].values.size()) {
            throw InvariantError("adagrad_step: shape mismatch in " + p[t].name);
        }
        for (double v : g[t].values) {
            if (!std::isfinite(v)) {
                throw InvariantError("adagrad_step: non-finite gradient in " + p[t].name);
            }
        }
    }
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double lambda = l2(p[t]);
        auto& w = p[t].values;
        auto& a = acc[t].values;
        const auto& gv = g[t].values;
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double grad = gv[k] + lambda * w[k];
            a[k] += grad * grad;
            w[k] -= config.learning_rate * grad / (std::sqrt(a[k]) + config.adagrad_epsilon);
        }
    }
}

PreparedLists::PreparedLists(const std::vector<JudgedList>& lists, const EmbeddingTable& table,
                             const CorpusStats* stats, const ModelConfig& config, std::size_t threads)
{
    for (const auto& list : lists) {
        if (list.query.tokens.empty() || list.query.tokens.size() > config.query_width) {
            log_warning("query '" + list.query.query_id + "' has " + std::to_string(list.query.tokens.size()) +
                        " words; outside the model's 1.." + std::to_string(config.query_width) + ", skipped");
            continue;
        }
        lists_.push_back(list);
    }
    pairs_.resize(lists_.size());
    parallel_for(lists_.size(), threads, [&](std::size_t q) {
        const auto& list = lists_[q];
        const EmbeddedText query_vectors = embed_query(list.query, table, config);
        pairs_[q].reserve(list.docs.size());
        for (const auto& jd : list.docs) {
            pairs_[q].push_back(prepare_pair(list.query, query_vectors, jd.doc, table, stats, config));
        }
    });
}

std::vector<std::vector<double>> PreparedLists::score(const ModelParameters& params, const ModelConfig& config,
                                                      std::size_t threads) const
{
    std::vector<std::vector<double>> scores(lists_.size());
    parallel_for(lists_.size(), threads, [&](std::size_t q) {
        scores[q].resize(pairs_[q].size());
        for (std::size_t d = 0; d < pairs_[q].size(); ++d) {
            const auto& pp = pairs_[q][d];
            scores[q][d] = forward(pp.input, pp.input.rows(), pp.lex, params, config, Mode::eval);
        }
    });
    return scores;
}

double total_loss(const PreparedLists& data, const std::vector<TrainingTriple>& triples,
                  const ModelParameters& params, const ModelConfig& config)
{
    const auto scores = data.score(params, config);
    double loss = 0.0;
    for (const auto& t : triples) {
        loss += hinge_loss(scores[t.query][t.positive], scores[t.query][t.negative], t.weight).loss;
    }
    return loss;
}

namespace {

// Gradients are accumulated in a fixed number of contiguous chunks and summed
// in chunk order, so results do not depend on the worker count.
constexpr std::size_t kGradientChunks = 8;

struct ChunkState {
    ModelParameters grads;
    ForwardCache positive_cache;
    ForwardCache negative_cache;
    double loss = 0.0;
};

}  // namespace

TrainResult train(const std::vector<JudgedList>& train_lists, const std::vector<JudgedList>& validation_lists,
                  const EmbeddingTable& table, const CorpusStats* stats, const ModelConfig& model_config,
                  const TrainConfig& train_config, const ValidationHook& validation_hook)
{
    model_config.validate();
    train_config.validate();
    const std::size_t threads = train_config.threads == 0 ? default_thread_count() : train_config.threads;

    std::vector<JudgedList> balanced;
    for (std::size_t q = 0; q < train_lists.size(); ++q) {
        if (auto list = downsample_balanced(train_lists[q], mix_seed(train_config.seed, q))) {
            balanced.push_back(std::move(*list));
        }
    }
    const PreparedLists train_data(balanced, table, stats, model_config, threads);
    std::vector<TrainingTriple> triples;
    for (std::size_t q = 0; q < train_data.size(); ++q) {
        const auto more = make_triples(train_data.lists()[q], train_config.pairs, q);
        triples.insert(triples.end(), more.begin(), more.end());
    }
    if (triples.empty()) {
        throw ValidationError("train: no training triples could be formed");
    }

    std::optional<PreparedLists> validation_data;
    if (!validation_hook) {
        validation_data.emplace(validation_lists, table, stats, model_config, threads);
        if (validation_data->size() == 0) {
            throw ValidationError("train: validation set is empty");
        }
    }
    const auto validate = [&](const ModelParameters& params, std::size_t epoch) {
        if (validation_hook) {
            return validation_hook(params, epoch);
        }
        return mean_ndcg(validation_data->lists(), validation_data->score(params, model_config, threads), 20);
    };

    ModelParameters params = init_params(model_config, train_config.seed);
    ModelParameters accumulators = params.zeros_like();

    TrainResult result;
    result.history.push_back({0, total_loss(train_data, triples, params, model_config), validate(params, 0)});
    result.best = {model_config, params, accumulators};
    double best_score = -1.0;
    std::size_t epochs_without_gain = 0;

    std::vector<ChunkState> chunks(kGradientChunks);
    for (auto& c : chunks) {
        c.grads = params.zeros_like();
    }
    ModelParameters batch_grads = params.zeros_like();
    std::vector<std::size_t> order(triples.size());

    for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        Rng shuffle_rng(mix_seed(train_config.seed, 0x5348554646ULL + epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
            const std::size_t end = std::min(order.size(), start + train_config.batch_size);
            const std::size_t batch = end - start;
            const std::size_t per_chunk = (batch + kGradientChunks - 1) / kGradientChunks;

            parallel_for(kGradientChunks, threads, [&](std::size_t c) {
                ChunkState& state = chunks[c];
                state.grads.fill(0.0);
                state.loss = 0.0;
                const std::size_t lo = start + c * per_chunk;
                const std::size_t hi = std::min(end, lo + per_chunk);
                for (std::size_t pos = lo; pos < hi; ++pos) {
                    const TrainingTriple& t = triples[order[pos]];
                    const auto& pp = train_data.pair(t.query, t.positive);
                    const auto& pn = train_data.pair(t.query, t.negative);
                    const std::uint64_t dropout_seed = mix_seed(train_config.seed, epoch * 0x100000000ULL + pos);
                    const double s_pos = forward(pp.input, pp.input.rows(), pp.lex, params, model_config, Mode::train,
                                                 mix_seed(dropout_seed, 1), &state.positive_cache);
                    const double s_neg = forward(pn.input, pn.input.rows(), pn.lex, params, model_config, Mode::train,
                                                 mix_seed(dropout_seed, 2), &state.negative_cache);
                    const HingeLoss h = hinge_loss(s_pos, s_neg, t.weight);
                    state.loss += h.loss;
                    if (h.loss > 0.0) {
                        backward(state.positive_cache, params, model_config, h.d_positive, state.grads);
                        backward(state.negative_cache, params, model_config, h.d_negative, state.grads);
                    }
                }
            });

            batch_grads.fill(0.0);
            for (const auto& state : chunks) {
                batch_grads.add_scaled(state.grads, 1.0);
                epoch_loss += state.loss;
            }
            for (auto& t : batch_grads.tensors()) {
                for (double& v : t.values) {
                    v /= static_cast<double>(batch);
                }
            }
            adagrad_step(params, batch_grads, accumulators, train_config);
        }

        const double val = validate(params, epoch);
        result.history.push_back({epoch, epoch_loss, val});
        log_info("epoch " + std::to_string(epoch) + ": loss " + std::to_string(epoch_loss) + ", val NDCG.20 " +
                 std::to_string(val));
        if (val > best_score) {
            best_score = val;
            result.best = {model_config, params, accumulators};
            result.best_epoch = epoch;
            epochs_without_gain = 0;
        } else if (++epochs_without_gain >= train_config.patience) {
            break;
        }
    }
    return result;
}

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out)
{
    out << "epoch,loss,val_ndcg20\n";
    char buf[96];
    for (const auto& r : history) {
        const int n = std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.loss, r.val_ndcg20);
        out.write(buf, n);
    }
}

}  // namespace deltarank
