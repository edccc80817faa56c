#include "cli/commands.hpp"
#include "cli/manifest.hpp"

#include "deltarank/errors.hpp"
#include "deltarank/evaluation.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace deltarank;
namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        out.push_back(line);
    }
    return out;
}

// A small synthetic dataset plus statistics and a one-epoch model, built once.
struct Workspace {
    fs::path dir;
    fs::path model;

    Workspace() : dir(fs::temp_directory_path() / "deltarank_cli_ws")
    {
        fs::remove_all(dir);
        cli::SynthOptions so;
        so.out = dir;
        so.seed = 4;
        so.train = 16;
        so.validation = 4;
        so.test = 4;
        so.docs = 32;
        so.dimension = 12;
        cli::cmd_synth(so);
        cli::cmd_build_idf({dir / "corpus.jsonl", dir / "stats.json"});

        std::ofstream(dir / "config.json") << R"({"model": {"filters": 4, "hidden": [4, 1], "doc_width": 20},
                                                  "train": {"batch_size": 32}})";
        cli::TrainOptions to;
        to.train = dir / "train.jsonl";
        to.validation = dir / "val.jsonl";
        to.embeddings = dir / "embeddings.txt";
        to.stats = dir / "stats.json";
        to.config = dir / "config.json";
        to.out = dir / "model.json";
        to.epochs = 1;
        to.seed = 2;
        cli::cmd_train(to);
        model = to.out;
    }
};

const Workspace& workspace()
{
    static const Workspace ws;
    return ws;
}

cli::RankOptions delta_rank(const fs::path& candidates, const fs::path& out)
{
    const Workspace& ws = workspace();
    cli::RankOptions ro;
    ro.method = "delta";
    ro.model = ws.model;
    ro.embeddings = ws.dir / "embeddings.txt";
    ro.stats = ws.dir / "stats.json";
    ro.candidates = candidates;
    ro.out = out;
    ro.threads = 2;
    return ro;
}

}  // namespace

TEST_CASE("synth writes every file and is reproducible")
{
    const Workspace& ws = workspace();
    for (const char* name : {"corpus.jsonl", "train.jsonl", "val.jsonl", "test.jsonl", "clicks.tsv", "embeddings.txt"}) {
        CHECK(fs::exists(ws.dir / name));
    }
    const fs::path again = fs::temp_directory_path() / "deltarank_cli_synth_again";
    cli::SynthOptions so;
    so.out = again;
    so.seed = 4;
    so.train = 16;
    so.validation = 4;
    so.test = 4;
    so.docs = 32;
    so.dimension = 12;
    cli::cmd_synth(so);
    CHECK(read_all(again / "train.jsonl") == read_all(ws.dir / "train.jsonl"));
    CHECK(read_all(again / "embeddings.txt") == read_all(ws.dir / "embeddings.txt"));
}

TEST_CASE("train writes checkpoint, history and manifest")
{
    const Workspace& ws = workspace();
    CHECK(fs::exists(ws.model));
    const auto history = lines_of(read_all(ws.dir / "model.json.history.csv"));
    REQUIRE(history.size() == 3);
    CHECK(history[0] == "epoch,loss,val_ndcg20");
    const auto manifest = nlohmann::json::parse(read_all(ws.dir / "model.json.manifest.json"));
    CHECK(manifest.at("command") == "train");
    CHECK(manifest.at("seed") == 2);
    CHECK(manifest.at("inputs").size() >= 4);
    CHECK(manifest.at("config").at("model").at("filters") == 4);
}

TEST_CASE("delta ranking is byte-identical across runs and rejects long queries per query")
{
    const Workspace& ws = workspace();
    const fs::path a = ws.dir / "run_a.jsonl";
    const fs::path b = ws.dir / "run_b.jsonl";
    cli::cmd_rank(delta_rank(ws.dir / "test.jsonl", a));
    auto opts_b = delta_rank(ws.dir / "test.jsonl", b);
    opts_b.threads = 1;
    cli::cmd_rank(opts_b);
    CHECK(read_all(a) == read_all(b));
    CHECK(fs::exists(ws.dir / "run_a.jsonl.manifest.json"));
    for (const auto& r : load_rankings(a)) {
        check_ranked(r);
        CHECK(r.entries.size() == 32);
    }

    const fs::path candidates = ws.dir / "mixed.jsonl";
    std::ofstream(candidates)
        << R"({"query_id":"long","query":"one two three four five six seven eight","docs":[{"doc_id":1,"title":"one","abstract":""}]})"
        << "\n"
        << R"({"query_id":"ok","query":"one two","docs":[{"doc_id":1,"title":"one two","abstract":""},{"doc_id":2,"title":"x","abstract":"y"}]})"
        << "\n";
    const fs::path out = ws.dir / "mixed_out.jsonl";
    auto ro = delta_rank(candidates, out);
    ro.dump_delta = ws.dir / "dump";
    cli::cmd_rank(ro);
    const auto lines = lines_of(read_all(out));
    REQUIRE(lines.size() == 2);
    const auto first = nlohmann::json::parse(lines[0]);
    CHECK(first.at("query_id") == "long");
    CHECK(first.contains("error"));
    const auto second = nlohmann::json::parse(lines[1]);
    CHECK(second.at("ranking").size() == 2);
    CHECK(fs::exists(ws.dir / "dump" / "ok_1.csv"));
    CHECK(fs::exists(ws.dir / "dump" / "ok_2.csv"));
}

TEST_CASE("baseline ranking and evaluation")
{
    const Workspace& ws = workspace();
    const fs::path candidates = ws.dir / "three.jsonl";
    std::ofstream(candidates)
        << R"({"query_id":"q","query":"alpha beta","docs":[{"doc_id":1,"title":"gamma","abstract":""},{"doc_id":2,"title":"alpha beta","abstract":""},{"doc_id":3,"title":"beta","abstract":""}]})"
        << "\n";
    cli::RankOptions ro;
    ro.method = "bm25-title";
    ro.stats = ws.dir / "stats.json";
    ro.candidates = candidates;
    ro.out = ws.dir / "three_out.jsonl";
    cli::cmd_rank(ro);
    const auto runs = load_rankings(ro.out);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].entries.front().doc_id == 2);

    ro.method = "wmd-title";
    CHECK_THROWS_AS(cli::cmd_rank(ro), ValidationError);
    ro.method = "delta";
    CHECK_THROWS_AS(cli::cmd_rank(ro), ValidationError);

    const fs::path bm25_run = ws.dir / "bm25_test.jsonl";
    cli::RankOptions bm;
    bm.method = "bm25-title";
    bm.stats = ws.dir / "stats.json";
    bm.candidates = ws.dir / "test.jsonl";
    bm.out = bm25_run;
    cli::cmd_rank(bm);
    const fs::path delta_run = ws.dir / "delta_test.jsonl";
    cli::cmd_rank(delta_rank(ws.dir / "test.jsonl", delta_run));

    cli::EvalOptions eo;
    eo.runs = delta_run;
    eo.judgments = ws.dir / "test.jsonl";
    eo.compare = bm25_run;
    eo.out = ws.dir / "report";
    std::ostringstream report;
    cli::cmd_eval(eo, report);
    const auto csv = lines_of(read_all(ws.dir / "report.csv"));
    REQUIRE(csv.size() == 4);
    CHECK(csv[0] == "metric,mean,queries,compare_mean,t,p,verdict");
    CHECK(csv[1].rfind("ndcg20,", 0) == 0);
    const auto j = nlohmann::json::parse(read_all(ws.dir / "report.json"));
    CHECK(j.at("per_query").at("ndcg20").size() == 4);
    CHECK_FALSE(report.str().empty());

    eo.metrics = "ndcg";
    CHECK_THROWS_AS(cli::cmd_eval(eo, report), ValidationError);
}

TEST_CASE("derive-labels and features")
{
    const Workspace& ws = workspace();
    cli::DeriveLabelsOptions dl;
    dl.clicks = ws.dir / "clicks.tsv";
    dl.out = ws.dir / "labels.tsv";
    cli::cmd_derive_labels(dl);
    const auto rows = lines_of(read_all(dl.out));
    REQUIRE(rows.size() > 1);
    CHECK(rows[0] == "query_id\tdoc_id\tweighted_clicks\trel\tsrel");

    cli::FeaturesOptions fo;
    fo.query = "alpha beta";
    fo.doc = R"({"doc_id": 5, "title": "Alpha beta", "abstract": ""})";
    fo.stats = ws.dir / "stats.json";
    std::ostringstream out;
    cli::cmd_features(fo, out);
    const auto lines = lines_of(out.str());
    REQUIRE(lines.size() == 18);
    CHECK(lines[8] == "9\t1");
}

TEST_CASE("bench report structure")
{
    cli::BenchOptions bo;
    bo.docs = 40;
    bo.repetitions = 5;
    bo.filters = 8;
    const cli::BenchReport r = cli::run_bench(bo);
    CHECK(r.samples.size() == 5);
    CHECK(r.median > 0.0);
    CHECK(r.p95 >= r.median);
    CHECK(r.queries_per_second == doctest::Approx(1.0 / r.median));
    const auto j = r.to_json();
    CHECK(j.at("reference_gpu_seconds") == 0.049);
    CHECK(j.at("samples_seconds").size() == 5);

    cli::BenchOptions small = bo;
    small.docs = 100;
    small.repetitions = 3;
    cli::BenchOptions big = small;
    big.filters = 32;
    CHECK(cli::run_bench(small).median <= cli::run_bench(big).median);
}

TEST_CASE("run manifest")
{
    cli::RunManifest m("rank", nlohmann::json{{"a", 1}});
    m.add_input("x.jsonl");
    m.set_seed(9);
    m.mark("total");
    const auto j = m.to_json();
    CHECK(j.at("command") == "rank");
    CHECK(j.at("seed") == 9);
    CHECK(j.at("inputs").at(0) == "x.jsonl");
    CHECK(j.at("config_hash").get<std::string>().size() == 16);
    CHECK(j.at("timings_seconds").contains("total"));
    cli::RunManifest same("rank", nlohmann::json{{"a", 1}});
    CHECK(same.to_json().at("config_hash") == j.at("config_hash"));
}

TEST_CASE("tool exit codes")
{
    const std::string tool = DELTARANK_TOOL_PATH;
    const auto run = [&](const std::string& args) {
        const int status = std::system((tool + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("--help") == 0);
    CHECK(run("") == 1);
    CHECK(run("rank --candidates /nonexistent.jsonl --out /tmp/x.jsonl --method bm25-title") == 1);
    CHECK(run("bench --docs 0") == 1);
    const Workspace& ws = workspace();
    CHECK(run("-q features --query \"alpha\" --doc '{\"title\":\"alpha\"}' --stats " + (ws.dir / "stats.json").string()) == 0);
}
