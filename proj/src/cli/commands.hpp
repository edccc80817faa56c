#pragma once

#include "deltarank/network.hpp"
#include "deltarank/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace deltarank::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 1, kInvariantError = 2 };

using Path = std::filesystem::path;

struct BuildIdfOptions {
    Path corpus;
    Path out;
};
void cmd_build_idf(const BuildIdfOptions& opts);

struct DeriveLabelsOptions {
    Path clicks;
    Path out;
    double mu = 0.333;
    double lambda = 0.067;
};
void cmd_derive_labels(const DeriveLabelsOptions& opts);

struct TrainOptions {
    Path train;
    Path validation;
    Path embeddings;
    Path stats;  // required when the model uses lexical features
    Path out;
    Path history;  // default: <out>.history.csv
    std::optional<Path> config;
    std::uint64_t unk_seed = 0;
    // Overrides applied on top of the config file.
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> patience;
    std::optional<std::size_t> filters;
    std::optional<std::size_t> lexical;
    std::optional<std::string> input;
    std::optional<std::string> pairs;
    std::optional<double> learning_rate;
    std::optional<double> dropout;
    std::optional<std::size_t> threads;
};
void cmd_train(const TrainOptions& opts);

struct RankOptions {
    std::string method = "delta";
    std::optional<Path> model;
    std::optional<Path> embeddings;
    std::optional<Path> stats;
    Path candidates;
    Path out;
    std::optional<Path> dump_delta;  // directory for per-pair CSV files
    std::uint64_t unk_seed = 0;
    double mu = 2000.0;
    double k1 = 2.0;
    double b = 0.75;
    std::size_t threads = 0;
};
void cmd_rank(const RankOptions& opts);

struct EvalOptions {
    Path runs;
    Path judgments;
    std::string metrics = "ndcg20,map,p5";
    std::optional<Path> compare;
    std::optional<Path> out;  // writes <out>.csv and <out>.json
};
void cmd_eval(const EvalOptions& opts, std::ostream& report);

struct FeaturesOptions {
    std::string query;
    std::string doc;  // JSON object, or a path to a file holding one
    Path stats;
};
void cmd_features(const FeaturesOptions& opts, std::ostream& out);

struct BenchOptions {
    std::optional<Path> model;
    std::size_t docs = 500;
    std::size_t repetitions = 5;
    std::size_t threads = 1;
    std::optional<std::size_t> filters;  // only without --model
    std::uint64_t seed = 1;
    std::optional<Path> out;
};

struct BenchReport {
    std::size_t docs = 0;
    std::size_t threads = 1;
    std::vector<double> samples;  // seconds per repetition
    double median = 0.0;
    double p95 = 0.0;
    double queries_per_second = 0.0;

    nlohmann::json to_json() const;
};

/// Times tokenize -> embed -> Delta -> forward (+ lexical features) for one
/// query over `docs` candidates.
BenchReport run_bench(const BenchOptions& opts);
void cmd_bench(const BenchOptions& opts, std::ostream& report);

struct SynthOptions {
    Path out;
    std::uint64_t seed = 1;
    std::size_t train = 200;
    std::size_t validation = 50;
    std::size_t test = 50;
    std::size_t docs = 40;
    std::size_t dimension = 50;
};
void cmd_synth(const SynthOptions& opts);

/// Model and training configuration from an optional JSON file with
/// "model" and "train" sections.
std::pair<ModelConfig, TrainConfig> load_train_config(const std::optional<Path>& path);

}  // namespace deltarank::cli
