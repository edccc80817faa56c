#pragma once

#include "deltarank/checkpoint.hpp"
#include "deltarank/embeddings.hpp"
#include "deltarank/lexical.hpp"
#include "deltarank/network.hpp"
#include "deltarank/scoring.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace deltarank {

/// Which (D+, D-) pairs become training triples.
enum class PairMode {
    all_unequal,              // every pair with srel(D+) > srel(D-)
    relevant_vs_nonrelevant,  // srel(D+) > 0 and srel(D-) = 0 only
};

std::string_view to_string(PairMode mode) noexcept;
PairMode pair_mode_from_string(std::string_view name);

/// Indices refer to a list and to documents within it.
struct TrainingTriple {
    std::size_t query = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
    double weight = 1.0;  // sqrt(srel+ - srel-)
};

struct TrainConfig {
    double learning_rate = 0.01;
    double adagrad_epsilon = 1e-8;
    std::size_t batch_size = 256;
    double l2_conv = 0.0;
    double l2_ff = 0.0;
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::uint64_t seed = 1;
    PairMode pairs = PairMode::all_unequal;
    std::size_t threads = 0;  // 0: default_thread_count()

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Subsamples the larger of the relevant (srel > 0) and non-relevant classes
/// down to the size of the smaller one. Returns nullopt, with a warning, when
/// either class is empty.
std::optional<JudgedList> downsample_balanced(const JudgedList& list, std::uint64_t seed);

std::vector<TrainingTriple> make_triples(const JudgedList& list, PairMode mode = PairMode::all_unequal,
                                         std::size_t query_index = 0);

struct HingeLoss {
    double loss = 0.0;
    double d_positive = 0.0;
    double d_negative = 0.0;
};

/// weight * max(0, 1 - s+ + s-); zero subgradient at the kink.
HingeLoss hinge_loss(double s_positive, double s_negative, double weight);

/// acc += g^2; w -= lr * g / (sqrt(acc) + eps), where g includes the L2 term
/// (lambda * w) for weight tensors. Throws InvariantError on non-finite
/// gradients without modifying anything.
void adagrad_step(ModelParameters& params, const ModelParameters& grads, ModelParameters& accumulators,
                  const TrainConfig& config);

/// Lists with every document prepared as network input.
class PreparedLists {
public:
    PreparedLists(const std::vector<JudgedList>& lists, const EmbeddingTable& table, const CorpusStats* stats,
                  const ModelConfig& config, std::size_t threads = 1);

    const std::vector<JudgedList>& lists() const noexcept { return lists_; }
    const PreparedPair& pair(std::size_t list, std::size_t doc) const { return pairs_[list][doc]; }
    std::size_t size() const noexcept { return lists_.size(); }

    /// Eval-mode scores for every document.
    std::vector<std::vector<double>> score(const ModelParameters& params, const ModelConfig& config,
                                           std::size_t threads = 1) const;

private:
    std::vector<JudgedList> lists_;  // only lists the model can score
    std::vector<std::vector<PreparedPair>> pairs_;
};

/// Sum of weighted hinge losses over `triples` with eval-mode scores.
double total_loss(const PreparedLists& data, const std::vector<TrainingTriple>& triples,
                  const ModelParameters& params, const ModelConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;  // summed over the epoch's triples
    double val_ndcg20 = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::size_t best_epoch = 0;
    std::vector<EpochRecord> history;  // entry 0 is the untrained model
};

/// Replaces the validation NDCG.20 computation (used by tests).
using ValidationHook = std::function<double(const ModelParameters&, std::size_t epoch)>;

/// Adagrad on shuffled mini-batches of weighted hinge-loss triples built from
/// the downsampled training lists, validating NDCG.20 on the full validation
/// lists after every epoch and stopping after `patience` epochs without
/// improvement. Returns the best epoch's checkpoint.
TrainResult train(const std::vector<JudgedList>& train_lists, const std::vector<JudgedList>& validation_lists,
                  const EmbeddingTable& table, const CorpusStats* stats, const ModelConfig& model_config,
                  const TrainConfig& train_config, const ValidationHook& validation_hook = {});

void write_history_csv(const std::vector<EpochRecord>& history, std::ostream& out);

}  // namespace deltarank
