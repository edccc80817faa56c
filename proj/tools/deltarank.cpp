#include "cli/commands.hpp"

#include "deltarank/errors.hpp"
#include "deltarank/log.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace cli = deltarank::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Delta relevance model: training, re-ranking and evaluation"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    cli::BuildIdfOptions idf;
    auto* build_idf = app.add_subcommand("build-idf", "Collect corpus statistics for BM25 and IDF features");
    build_idf->add_option("--corpus", idf.corpus, "Corpus JSONL")->required();
    build_idf->add_option("--out", idf.out, "Statistics JSON")->required();

    cli::DeriveLabelsOptions labels;
    auto* derive = app.add_subcommand("derive-labels", "Turn click counts into scaled relevance labels");
    derive->add_option("--clicks", labels.clicks, "Click-count TSV")->required();
    derive->add_option("--out", labels.out, "Label TSV")->required();
    derive->add_option("--mu", labels.mu, "Summary-click coefficient")->capture_default_str();
    derive->add_option("--lambda", labels.lambda, "No-full-text bonus")->capture_default_str();

    cli::TrainOptions tr;
    std::string history;
    auto* train = app.add_subcommand("train", "Train a Delta model");
    train->add_option("--train", tr.train, "Training judged lists")->required();
    train->add_option("--val", tr.validation, "Validation judged lists")->required();
    train->add_option("--embeddings", tr.embeddings, "Word vectors")->required();
    train->add_option("--stats", tr.stats, "Corpus statistics (for lexical features)");
    train->add_option("--config", tr.config, "JSON with \"model\" and \"train\" sections");
    train->add_option("--out", tr.out, "Checkpoint path")->required();
    train->add_option("--history", history, "History CSV (default <out>.history.csv)");
    train->add_option("--unk-seed", tr.unk_seed, "Seed of the UNK vector")->capture_default_str();
    train->add_option("--seed", tr.seed, "Training seed");
    train->add_option("--epochs", tr.epochs, "Maximum epochs");
    train->add_option("--patience", tr.patience, "Early-stopping patience");
    train->add_option("--filters", tr.filters, "Convolution filters n_f");
    train->add_option("--lexical", tr.lexical, "Lexical inputs: 0, 3 or 18");
    train->add_option("--input", tr.input, "full | no-difference | no-features");
    train->add_option("--pairs", tr.pairs, "all-unequal | relevant-vs-nonrelevant");
    train->add_option("--lr", tr.learning_rate, "Adagrad learning rate");
    train->add_option("--dropout", tr.dropout, "Dropout probability before pooling");
    train->add_option("--threads", tr.threads, "Worker threads");

    cli::RankOptions rk;
    auto* rank = app.add_subcommand("rank", "Re-rank candidate lists");
    rank->add_option("--method", rk.method, "delta | bm25-title | uqlm-title | wmd-title")->capture_default_str();
    rank->add_option("--model", rk.model, "Checkpoint (method delta)");
    rank->add_option("--embeddings", rk.embeddings, "Word vectors (delta, wmd-title)");
    rank->add_option("--stats", rk.stats, "Corpus statistics");
    rank->add_option("--candidates", rk.candidates, "Candidate lists (judged-list JSONL, srel optional)")->required();
    rank->add_option("--out", rk.out, "Ranked lists JSONL")->required();
    rank->add_option("--dump-delta", rk.dump_delta, "Directory for Delta matrix CSV dumps");
    rank->add_option("--unk-seed", rk.unk_seed, "Seed of the UNK vector")->capture_default_str();
    rank->add_option("--mu", rk.mu, "Dirichlet prior for uqlm-title")->capture_default_str();
    rank->add_option("--k1", rk.k1, "BM25 k1")->capture_default_str();
    rank->add_option("--b", rk.b, "BM25 b")->capture_default_str();
    rank->add_option("--threads", rk.threads, "Worker threads (0: automatic)");

    cli::EvalOptions ev;
    auto* eval = app.add_subcommand("eval", "Score ranked lists against judgments");
    eval->add_option("--runs", ev.runs, "Ranked lists JSONL")->required();
    eval->add_option("--judgments", ev.judgments, "Judged lists JSONL")->required();
    eval->add_option("--metrics", ev.metrics, "Comma-separated ndcgN, map, pN")->capture_default_str();
    eval->add_option("--compare", ev.compare, "Second run for a paired t-test");
    eval->add_option("--out", ev.out, "Write <out>.csv and <out>.json");

    cli::FeaturesOptions ft;
    auto* features = app.add_subcommand("features", "Print the 18 lexical features of one pair");
    features->add_option("--query", ft.query, "Query text")->required();
    features->add_option("--doc", ft.doc, "Document JSON object or file")->required();
    features->add_option("--stats", ft.stats, "Corpus statistics")->required();

    cli::BenchOptions bn;
    auto* bench = app.add_subcommand("bench", "Time end-to-end scoring of one query's candidates");
    bench->add_option("--model", bn.model, "Checkpoint (default: random weights, V=300)");
    bench->add_option("--docs", bn.docs, "Candidates per query")->capture_default_str();
    bench->add_option("--repetitions", bn.repetitions, "Timed repetitions")->capture_default_str();
    bench->add_option("--threads", bn.threads, "Worker threads")->capture_default_str();
    bench->add_option("--filters", bn.filters, "Convolution filters without --model");
    bench->add_option("--seed", bn.seed, "Fixture seed")->capture_default_str();
    bench->add_option("--out", bn.out, "Report JSON");

    cli::SynthOptions sy;
    auto* synth = app.add_subcommand("synth", "Generate a planted-relevance dataset");
    synth->add_option("--out", sy.out, "Output directory")->required();
    synth->add_option("--seed", sy.seed, "Seed")->capture_default_str();
    synth->add_option("--train", sy.train, "Training queries")->capture_default_str();
    synth->add_option("--val", sy.validation, "Validation queries")->capture_default_str();
    synth->add_option("--test", sy.test, "Test queries")->capture_default_str();
    synth->add_option("--docs", sy.docs, "Documents per query")->capture_default_str();
    synth->add_option("--dim", sy.dimension, "Embedding dimension")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kSuccess : cli::kInputError;
    }
    if (quiet) {
        deltarank::set_log_level(deltarank::LogLevel::warning);
    }

    try {
        if (*build_idf) {
            cli::cmd_build_idf(idf);
        } else if (*derive) {
            cli::cmd_derive_labels(labels);
        } else if (*train) {
            tr.history = history;
            cli::cmd_train(tr);
        } else if (*rank) {
            cli::cmd_rank(rk);
        } else if (*eval) {
            cli::cmd_eval(ev, std::cout);
        } else if (*features) {
            cli::cmd_features(ft, std::cout);
        } else if (*bench) {
            cli::cmd_bench(bn, std::cout);
        } else if (*synth) {
            cli::cmd_synth(sy);
        }
    } catch (const std::logic_error& e) {
        // InvariantError, and std::invalid_argument from option values.
        if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::kInputError;
        }
        std::cerr << "internal error: " << e.what() << '\n';
        return cli::kInvariantError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kInputError;
    }
    return cli::kSuccess;
}
