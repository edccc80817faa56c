#include "cli/commands.hpp"

#include "cli/manifest.hpp"
#include "deltarank/baselines.hpp"
#include "deltarank/checkpoint.hpp"
#include "deltarank/click_relevance.hpp"
#include "deltarank/delta.hpp"
#include "deltarank/errors.hpp"
#include "deltarank/evaluation.hpp"
#include "deltarank/lexical.hpp"
#include "deltarank/log.hpp"
#include "deltarank/parallel.hpp"
#include "deltarank/scoring.hpp"
#include "deltarank/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace deltarank::cli {
namespace {

using nlohmann::json;

std::ofstream open_output(const Path& path)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

json read_json_file(const Path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t resolve_threads(std::size_t requested)
{
    return requested == 0 ? default_thread_count() : requested;
}

}  // namespace

void cmd_build_idf(const BuildIdfOptions& opts)
{
    RunManifest manifest("build-idf", json{{"corpus", opts.corpus.string()}});
    manifest.add_input(opts.corpus);
    StatsBuilder builder;
    for_each_document(opts.corpus, [&](Document&& doc) { builder.add(doc); });
    const CorpusStats stats = std::move(builder).finish();
    stats.save(opts.out);
    manifest.mark("total");
    manifest.write_for(opts.out);
    log_info("indexed " + std::to_string(stats.n_docs()) + " documents");
}

void cmd_derive_labels(const DeriveLabelsOptions& opts)
{
    const RelevanceCoefficients coef{opts.mu, opts.lambda};
    RunManifest manifest("derive-labels", json{{"mu", opts.mu}, {"lambda", opts.lambda}});
    manifest.add_input(opts.clicks);
    const auto records = load_click_counts(opts.clicks);

    // Group by query, keeping first-seen query order and record order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<ClickRecord>> by_query;
    for (const auto& r : records) {
        auto [it, inserted] = by_query.try_emplace(r.query_id);
        if (inserted) {
            order.push_back(r.query_id);
        }
        it->second.push_back(r);
    }

    auto out = open_output(opts.out);
    out << "query_id\tdoc_id\tweighted_clicks\trel\tsrel\n";
    for (const auto& q : order) {
        std::vector<ScaledRelevance> labels;
        try {
            labels = derive_srel(by_query[q], coef);
        } catch (const ValidationError& e) {
            log_warning("query '" + q + "' skipped: " + e.what());
            continue;
        }
        for (const auto& l : labels) {
            out << q << '\t' << l.doc_id << '\t' << format_double(l.weighted_clicks) << '\t' << format_double(l.rel)
                << '\t' << format_double(l.srel) << '\n';
        }
    }
    manifest.mark("total");
    manifest.write_for(opts.out);
}

std::pair<ModelConfig, TrainConfig> load_train_config(const std::optional<Path>& path)
{
    ModelConfig model;
    TrainConfig train;
    if (!path) {
        return {model, train};
    }
    const json j = read_json_file(*path);
    try {
        if (auto it = j.find("model"); it != j.end()) {
            model = config_from_json(*it, model);
        }
        if (auto it = j.find("train"); it != j.end()) {
            train = train_config_from_json(*it, train);
        }
    } catch (const json::exception& e) {
        throw ValidationError(path->string() + ": " + e.what());
    }
    return {model, train};
}

void cmd_train(const TrainOptions& opts)
{
    auto [model, train] = load_train_config(opts.config);
    if (opts.seed) train.seed = *opts.seed;
    if (opts.epochs) train.max_epochs = *opts.epochs;
    if (opts.patience) train.patience = *opts.patience;
    if (opts.filters) model.filters = *opts.filters;
    if (opts.lexical) model.lexical_features = *opts.lexical;
    if (opts.input) model.input = delta_input_from_string(*opts.input);
    if (opts.pairs) train.pairs = pair_mode_from_string(*opts.pairs);
    if (opts.learning_rate) train.learning_rate = *opts.learning_rate;
    if (opts.dropout) model.dropout = *opts.dropout;
    if (opts.threads) train.threads = *opts.threads;

    const EmbeddingTable table = load_embeddings(opts.embeddings, opts.unk_seed);
    model.embedding_dim = table.dimension();
    model.validate();
    train.validate();

    RunManifest manifest("train", json{{"model", config_to_json(model)}, {"train", train_config_to_json(train)},
                                       {"unk_seed", opts.unk_seed}});
    manifest.set_seed(train.seed);
    manifest.add_input(opts.train);
    manifest.add_input(opts.validation);
    manifest.add_input(opts.embeddings);

    std::optional<CorpusStats> stats;
    if (model.lexical_features > 0) {
        if (opts.stats.empty()) {
            throw ValidationError("--stats is required when the model uses lexical features");
        }
        stats = CorpusStats::load(opts.stats);
        manifest.add_input(opts.stats);
    }
    const auto train_lists = load_judged_lists(opts.train);
    const auto val_lists = load_judged_lists(opts.validation);
    manifest.mark("load");

    const TrainResult result =
        deltarank::train(train_lists, val_lists, table, stats ? &*stats : nullptr, model, train);
    manifest.mark("train");

    save_checkpoint(opts.out, result.best);
    manifest.write_for(opts.out);
    const Path history = opts.history.empty() ? Path(opts.out.string() + ".history.csv") : opts.history;
    auto out = open_output(history);
    write_history_csv(result.history, out);
    manifest.write_for(history);
    log_info("best epoch " + std::to_string(result.best_epoch) + " of " + std::to_string(result.history.size() - 1));
}

void cmd_rank(const RankOptions& opts)
{
    const std::size_t threads = resolve_threads(opts.threads);
    RunManifest manifest("rank", json{{"method", opts.method},
                                      {"mu", opts.mu},
                                      {"k1", opts.k1},
                                      {"b", opts.b},
                                      {"unk_seed", opts.unk_seed}});
    manifest.add_input(opts.candidates);

    std::optional<EmbeddingTable> table;
    if (opts.embeddings) {
        table = load_embeddings(*opts.embeddings, opts.unk_seed);
        manifest.add_input(*opts.embeddings);
    }
    std::optional<CorpusStats> stats;
    if (opts.stats) {
        stats = CorpusStats::load(*opts.stats);
        manifest.add_input(*opts.stats);
    }
    const auto lists = load_judged_lists(opts.candidates, false);

    std::vector<std::string> lines(lists.size());
    if (opts.method == "delta") {
        if (!opts.model) {
            throw ValidationError("--model is required for method delta");
        }
        if (!table) {
            throw ValidationError("--embeddings is required for method delta");
        }
        manifest.add_input(*opts.model);
        Checkpoint ckpt = load_checkpoint(*opts.model);
        const DeltaScorer scorer(ckpt.config, std::move(ckpt.params), *table, stats ? &*stats : nullptr);
        for (std::size_t q = 0; q < lists.size(); ++q) {
            const auto& list = lists[q];
            std::vector<Document> docs;
            for (const auto& jd : list.docs) {
                docs.push_back(jd.doc);
            }
            try {
                const RankedList ranking = scorer.rank(list.query, docs, threads);
                check_ranked(ranking);
                lines[q] = ranking_to_json_line(ranking);
            } catch (const ValidationError& e) {
                log_warning("query '" + list.query.query_id + "': " + e.what());
                lines[q] = json{{"query_id", list.query.query_id}, {"error", e.what()}}.dump();
                continue;
            }
            if (opts.dump_delta) {
                std::filesystem::create_directories(*opts.dump_delta);
                const EmbeddedText qv = embed_query(list.query, *table, scorer.config());
                for (const auto& doc : docs) {
                    const EmbeddedText dv = embed_sequence(document_text(doc), *table, scorer.config().doc_width);
                    auto out = open_output(*opts.dump_delta /
                                           (list.query.query_id + "_" + std::to_string(doc.doc_id) + ".csv"));
                    write_delta_csv(delta_matrix(dv, qv), out);
                }
            }
        }
    } else {
        const BaselineMethod method = baseline_method_from_string(opts.method);
        if (method == BaselineMethod::wmd_title && !table) {
            throw ValidationError("--embeddings is required for method wmd-title");
        }
        if (method != BaselineMethod::wmd_title && !stats) {
            throw ValidationError("--stats is required for method " + opts.method);
        }
        BaselineOptions options;
        options.mu = opts.mu;
        options.bm25 = {opts.k1, opts.b};
        for (std::size_t q = 0; q < lists.size(); ++q) {
            const auto& list = lists[q];
            std::vector<Document> docs;
            for (const auto& jd : list.docs) {
                docs.push_back(jd.doc);
            }
            try {
                const RankedList ranking = baseline_rank(method, list.query, docs, stats ? &*stats : nullptr,
                                                         table ? &*table : nullptr, options, threads);
                check_ranked(ranking);
                lines[q] = ranking_to_json_line(ranking);
            } catch (const std::invalid_argument& e) {
                log_warning("query '" + list.query.query_id + "': " + e.what());
                lines[q] = json{{"query_id", list.query.query_id}, {"error", e.what()}}.dump();
            }
        }
    }

    auto out = open_output(opts.out);
    for (const auto& line : lines) {
        out << line << '\n';
    }
    manifest.mark("total");
    manifest.write_for(opts.out);
}

namespace {

std::vector<std::string> split_metrics(const std::string& spec)
{
    std::vector<std::string> names;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            names.push_back(item);
        }
    }
    return names;
}

struct MetricName {
    std::string label;
    enum Kind { ndcg, map, precision } kind;
    std::size_t depth = 0;
};

MetricName parse_metric(const std::string& name)
{
    const auto depth_of = [&](std::size_t prefix) {
        const std::string digits = name.substr(prefix);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit) || std::stoul(digits) == 0) {
            throw ValidationError("bad metric '" + name + "'");
        }
        return static_cast<std::size_t>(std::stoul(digits));
    };
    if (name == "map") {
        return {name, MetricName::map, 0};
    }
    if (name.rfind("ndcg", 0) == 0) {
        return {name, MetricName::ndcg, depth_of(4)};
    }
    if (name.rfind("p", 0) == 0) {
        return {name, MetricName::precision, depth_of(1)};
    }
    throw ValidationError("unknown metric '" + name + "' (use ndcgN, map, pN)");
}

// Per-query values of one metric, in report order; MAP skips queries
// without relevant documents.
std::map<std::string, double> per_query(const std::vector<JudgedList>& judged, const std::vector<RankedList>& runs,
                                        const MetricName& metric)
{
    std::map<std::string, const RankedList*> by_id;
    for (const auto& r : runs) {
        by_id[r.query_id] = &r;
    }
    std::map<std::string, double> values;
    for (const auto& list : judged) {
        auto it = by_id.find(list.query.query_id);
        if (it == by_id.end()) {
            continue;
        }
        switch (metric.kind) {
        case MetricName::ndcg:
            values[list.query.query_id] = ndcg_at(list, *it->second, metric.depth);
            break;
        case MetricName::precision:
            values[list.query.query_id] = precision_at(list, *it->second, metric.depth);
            break;
        case MetricName::map:
            if (auto ap = average_precision(list, *it->second)) {
                values[list.query.query_id] = *ap;
            }
            break;
        }
    }
    return values;
}

double mean_of(const std::map<std::string, double>& values)
{
    double sum = 0.0;
    for (const auto& [id, v] : values) {
        sum += v;
    }
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

void cmd_eval(const EvalOptions& opts, std::ostream& report)
{
    const auto judged = load_judged_lists(opts.judgments);
    const auto runs = load_rankings(opts.runs);
    std::optional<std::vector<RankedList>> other;
    if (opts.compare) {
        other = load_rankings(*opts.compare);
    }
    RunManifest manifest("eval", json{{"metrics", opts.metrics}});
    manifest.add_input(opts.runs);
    manifest.add_input(opts.judgments);
    if (opts.compare) {
        manifest.add_input(*opts.compare);
    }

    // Logs missing rankings and MAP exclusions.
    const MetricReport base = evaluate(judged, runs);

    json j{{"queries", base.queries.size()}, {"metrics", json::object()}};
    std::ostringstream csv;
    csv << "metric,mean,queries";
    if (other) {
        csv << ",compare_mean,t,p,verdict";
    }
    csv << '\n';
    std::map<std::string, std::map<std::string, double>> per_query_values;
    for (const auto& name : split_metrics(opts.metrics)) {
        const MetricName metric = parse_metric(name);
        const auto a = per_query(judged, runs, metric);
        per_query_values[metric.label] = a;
        json entry{{"mean", mean_of(a)}, {"queries", a.size()}};
        csv << metric.label << ',' << format_double(mean_of(a)) << ',' << a.size();
        if (other) {
            const auto b = per_query(judged, *other, metric);
            std::vector<double> xs;
            std::vector<double> ys;
            for (const auto& [id, v] : a) {
                if (auto it = b.find(id); it != b.end()) {
                    xs.push_back(v);
                    ys.push_back(it->second);
                }
            }
            entry["compare_mean"] = mean_of(b);
            csv << ',' << format_double(mean_of(b));
            if (xs.size() >= 2) {
                const TTestResult t = paired_t_test(xs, ys, 0.99);
                entry["t"] = t.t;
                entry["p"] = t.p;
                entry["verdict"] = std::string(to_string(t.verdict));
                csv << ',' << format_double(t.t) << ',' << format_double(t.p) << ',' << to_string(t.verdict);
            } else {
                log_warning("fewer than two shared queries; no significance test for " + metric.label);
                csv << ",,,";
            }
        }
        csv << '\n';
        j["metrics"][metric.label] = std::move(entry);
    }
    report << csv.str();

    if (opts.out) {
        json per = json::object();
        for (const auto& [label, values] : per_query_values) {
            per[label] = values;
        }
        j["per_query"] = per;
        const Path csv_path = opts.out->string() + ".csv";
        const Path json_path = opts.out->string() + ".json";
        open_output(csv_path) << csv.str();
        open_output(json_path) << j.dump(2) << '\n';
        manifest.mark("total");
        manifest.write_for(csv_path);
        manifest.write_for(json_path);
    }
}

void cmd_features(const FeaturesOptions& opts, std::ostream& out)
{
    json doc_json;
    try {
        doc_json = json::parse(opts.doc);
    } catch (const json::parse_error&) {
        doc_json = read_json_file(opts.doc);
    }
    Document doc;
    try {
        doc.doc_id = doc_json.value("doc_id", DocId{0});
        doc.title = tokenize(doc_json.at("title").get<std::string>());
        doc.abstract = tokenize(doc_json.value("abstract", std::string()));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("document: ") + e.what());
    }
    const CorpusStats stats = CorpusStats::load(opts.stats);
    const Query query{"query", tokenize(opts.query)};
    if (query.tokens.empty()) {
        throw ValidationError("query has no tokens");
    }
    const LexicalFeatureVector f = lexical_features(query, doc, stats);
    for (std::size_t i = 1; i <= kLexicalFeatureCount; ++i) {
        out << i << '\t' << format_double(f[i]) << '\n';
    }
}

json BenchReport::to_json() const
{
    return json{{"docs", docs},
                {"threads", threads},
                {"samples_seconds", samples},
                {"median_seconds", median},
                {"p95_seconds", p95},
                {"queries_per_second", queries_per_second},
                {"reference_gpu_seconds", 0.049}};
}

BenchReport run_bench(const BenchOptions& opts)
{
    if (opts.repetitions == 0 || opts.docs == 0) {
        throw ValidationError("bench: docs and repetitions must be >= 1");
    }
    ModelConfig config;
    ModelParameters params;
    if (opts.model) {
        Checkpoint ckpt = load_checkpoint(*opts.model);
        config = ckpt.config;
        params = std::move(ckpt.params);
    } else {
        if (opts.filters) {
            config.filters = *opts.filters;
            config.hidden.front() = *opts.filters;
        }
        params = init_params(config, opts.seed);
    }
    const BenchFixture fx = generate_bench_fixture(opts.docs, config.embedding_dim, opts.seed);
    const CorpusStats stats = build_stats(fx.docs);

    // Raw text goes through tokenization inside the timed region.
    std::vector<std::string> titles;
    std::vector<std::string> abstracts;
    for (const auto& d : fx.docs) {
        titles.push_back(join_tokens(d.title));
        abstracts.push_back(join_tokens(d.abstract));
    }
    const std::string raw_query = join_tokens(fx.query.tokens);
    const DeltaScorer scorer(config, params, fx.embeddings, &stats);

    BenchReport report;
    report.docs = opts.docs;
    report.threads = resolve_threads(opts.threads);
    double checksum = 0.0;
    for (std::size_t r = 0; r < opts.repetitions; ++r) {
        const auto start = std::chrono::steady_clock::now();
        const Query query{"bench", tokenize(raw_query)};
        std::vector<Document> docs(fx.docs.size());
        parallel_for(docs.size(), report.threads, [&](std::size_t i) {
            docs[i] = {fx.docs[i].doc_id, tokenize(titles[i]), tokenize(abstracts[i])};
        });
        const auto scores = scorer.score_all(query, docs, report.threads);
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        report.samples.push_back(elapsed.count());
        checksum += scores.front();
    }
    if (!std::isfinite(checksum)) {
        throw InvariantError("bench: non-finite scores");
    }
    std::vector<double> sorted = report.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    report.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const std::size_t rank95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    report.p95 = sorted[std::max<std::size_t>(rank95, 1) - 1];
    report.queries_per_second = report.median > 0.0 ? 1.0 / report.median : 0.0;
    return report;
}

void cmd_bench(const BenchOptions& opts, std::ostream& report_out)
{
    RunManifest manifest("bench", json{{"docs", opts.docs},
                                       {"repetitions", opts.repetitions},
                                       {"threads", opts.threads},
                                       {"filters", opts.filters ? json(*opts.filters) : json(nullptr)}});
    manifest.set_seed(opts.seed);
    if (opts.model) {
        manifest.add_input(*opts.model);
    }
    const BenchReport report = run_bench(opts);
    manifest.mark("total");
    const std::string text = report.to_json().dump(2);
    report_out << text << '\n';
    if (opts.out) {
        open_output(*opts.out) << text << '\n';
        manifest.write_for(*opts.out);
    }
}

void cmd_synth(const SynthOptions& opts)
{
    SynthConfig config;
    config.seed = opts.seed;
    config.train_queries = opts.train;
    config.validation_queries = opts.validation;
    config.test_queries = opts.test;
    config.docs_per_query = opts.docs;
    config.dimension = opts.dimension;
    RunManifest manifest("synth", json{{"train", opts.train},
                                       {"validation", opts.validation},
                                       {"test", opts.test},
                                       {"docs", opts.docs},
                                       {"dimension", opts.dimension}});
    manifest.set_seed(opts.seed);
    const SynthDataset data = generate_synth_dataset(config);
    write_synth_dataset(data, opts.out);
    manifest.mark("total");
    for (const char* name : {"corpus.jsonl", "train.jsonl", "val.jsonl", "test.jsonl", "clicks.tsv", "embeddings.txt"}) {
        manifest.write_for(opts.out / name);
    }
}

}  // namespace deltarank::cli
