#include "deltarank/evaluation.hpp"

#include "deltarank/errors.hpp"
#include "deltarank/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace deltarank {

RankedList rank(std::string query_id, std::vector<ScoredDoc> scored)
{
    std::unordered_set<DocId> seen;
    for (const auto& s : scored) {
        if (!seen.insert(s.doc_id).second) {
            throw ValidationError("rank: duplicate doc_id " + std::to_string(s.doc_id) + " for query '" +
                                  query_id + "'");
        }
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.doc_id > b.doc_id;
    });
    return {std::move(query_id), std::move(scored)};
}

void check_ranked(const RankedList& ranking)
{
    for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
        const auto& prev = ranking.entries[i - 1];
        const auto& cur = ranking.entries[i];
        const bool ordered = prev.score > cur.score || (prev.score == cur.score && prev.doc_id > cur.doc_id);
        if (!ordered) {
            throw InvariantError("ranking for query '" + ranking.query_id + "' breaks the order at position " +
                                 std::to_string(i));
        }
    }
}

double dcg_at(std::span<const double> relevances, std::size_t n)
{
    if (n == 0) {
        throw std::invalid_argument("dcg_at: n must be >= 1");
    }
    double dcg = 0.0;
    const std::size_t depth = std::min(n, relevances.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (relevances[i] < 0.0) {
            throw std::invalid_argument("dcg_at: negative relevance");
        }
        dcg += (std::exp2(relevances[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return dcg;
}

namespace {

/// srel of each ranked document, validating that both sides cover the same documents.
std::vector<double> ranked_relevances(const JudgedList& judged, const RankedList& ranking)
{
    std::unordered_map<DocId, double> srel;
    for (const auto& jd : judged.docs) {
        srel.emplace(jd.doc.doc_id, jd.srel);
    }
    if (ranking.entries.size() != srel.size()) {
        throw ValidationError("query '" + judged.query.query_id + "': ranking has " +
                              std::to_string(ranking.entries.size()) + " docs, judgments have " +
                              std::to_string(srel.size()));
    }
    std::vector<double> rels;
    rels.reserve(srel.size());
    for (const auto& e : ranking.entries) {
        auto it = srel.find(e.doc_id);
        if (it == srel.end()) {
            throw ValidationError("query '" + judged.query.query_id + "': ranked doc " + std::to_string(e.doc_id) +
                                  " is not judged");
        }
        rels.push_back(it->second);
    }
    return rels;
}

}  // namespace

double ndcg_at(const JudgedList& judged, const RankedList& ranking, std::size_t n)
{
    const std::vector<double> rels = ranked_relevances(judged, ranking);
    std::vector<double> ideal = rels;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    const double idcg = dcg_at(ideal, n);
    if (idcg <= 0.0) {
        return 0.0;
    }
    return std::min(1.0, dcg_at(rels, n) / idcg);
}

std::optional<double> average_precision(const JudgedList& judged, const RankedList& ranking)
{
    const std::vector<double> rels = ranked_relevances(judged, ranking);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rels.size(); ++i) {
        if (rels[i] > 0.0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    if (hits == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(hits);
}

double precision_at(const JudgedList& judged, const RankedList& ranking, std::size_t n)
{
    if (n == 0) {
        throw std::invalid_argument("precision_at: n must be >= 1");
    }
    const std::vector<double> rels = ranked_relevances(judged, ranking);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(n, rels.size()); ++i) {
        hits += rels[i] > 0.0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

double beta_continued_fraction(double a, double b, double x)
{
    constexpr int kMaxIterations = 500;
    constexpr double kEpsilon = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEpsilon) {
            break;
        }
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0) || x < 0.0 || x > 1.0) {
        throw std::invalid_argument("regularized_incomplete_beta: invalid arguments");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof)
{
    if (!(dof > 0.0)) {
        throw std::invalid_argument("student_t_two_sided_p: dof must be positive");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

std::string_view to_string(Verdict v) noexcept
{
    switch (v) {
    case Verdict::increase:
        return "increase";
    case Verdict::decrease:
        return "decrease";
    case Verdict::equivalent:
        return "equivalent";
    }
    return "?";
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double confidence)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("paired_t_test: samples differ in length");
    }
    if (a.size() < 2) {
        throw std::invalid_argument("paired_t_test: need at least two pairs");
    }
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean += a[i] - b[i];
    }
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double variance = ss / (n - 1.0);

    TTestResult r;
    if (variance == 0.0) {
        if (mean == 0.0) {
            return r;
        }
        r.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p = 0.0;
    } else {
        r.t = mean / std::sqrt(variance / n);
        r.p = student_t_two_sided_p(r.t, n - 1.0);
    }
    if (r.p < 1.0 - confidence) {
        r.verdict = r.t > 0.0 ? Verdict::increase : Verdict::decrease;
    }
    return r;
}

MetricReport evaluate(const std::vector<JudgedList>& judged, const std::vector<RankedList>& rankings,
                      std::size_t ndcg_depth, std::size_t precision_depth)
{
    std::unordered_map<std::string, const RankedList*> by_query;
    for (const auto& r : rankings) {
        by_query.emplace(r.query_id, &r);
    }
    std::vector<const JudgedList*> ordered;
    for (const auto& j : judged) {
        ordered.push_back(&j);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const JudgedList* x, const JudgedList* y) { return x->query.query_id < y->query.query_id; });

    MetricReport report;
    report.ndcg_depth = ndcg_depth;
    report.precision_depth = precision_depth;
    double ap_sum = 0.0;
    for (const JudgedList* j : ordered) {
        auto it = by_query.find(j->query.query_id);
        if (it == by_query.end()) {
            log_warning("no ranking for query '" + j->query.query_id + "'; skipped");
            continue;
        }
        QueryMetrics m;
        m.query_id = j->query.query_id;
        m.ndcg = ndcg_at(*j, *it->second, ndcg_depth);
        m.average_precision = average_precision(*j, *it->second);
        m.precision = precision_at(*j, *it->second, precision_depth);
        if (m.average_precision) {
            ap_sum += *m.average_precision;
            ++report.map_queries;
        } else {
            log_warning("query '" + m.query_id + "' has no relevant documents; excluded from MAP");
        }
        report.mean_ndcg += m.ndcg;
        report.mean_precision += m.precision;
        report.queries.push_back(std::move(m));
    }
    if (!report.queries.empty()) {
        report.mean_ndcg /= static_cast<double>(report.queries.size());
        report.mean_precision /= static_cast<double>(report.queries.size());
    }
    if (report.map_queries > 0) {
        report.map = ap_sum / static_cast<double>(report.map_queries);
    }
    return report;
}

double mean_ndcg(const std::vector<JudgedList>& judged, const std::vector<std::vector<double>>& scores,
                 std::size_t n)
{
    if (judged.size() != scores.size()) {
        throw std::invalid_argument("mean_ndcg: one score vector per list is required");
    }
    if (judged.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t q = 0; q < judged.size(); ++q) {
        const auto& list = judged[q];
        std::vector<ScoredDoc> scored;
        scored.reserve(list.docs.size());
        for (std::size_t d = 0; d < list.docs.size(); ++d) {
            scored.push_back({list.docs[d].doc.doc_id, scores[q].at(d)});
        }
        total += ndcg_at(list, rank(list.query.query_id, std::move(scored)), n);
    }
    return total / static_cast<double>(judged.size());
}

std::vector<RankedList> load_rankings(const std::filesystem::path& path)
{
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    std::vector<RankedList> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const json j = json::parse(line);
            if (j.contains("error")) {
                continue;
            }
            RankedList r;
            r.query_id = j.at("query_id").get<std::string>();
            for (const auto& e : j.at("ranking")) {
                r.entries.push_back({e.at("doc_id").get<DocId>(), e.at("score").get<double>()});
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return out;
}

std::string ranking_to_json_line(const RankedList& ranking)
{
    using nlohmann::json;
    json entries = json::array();
    for (const auto& e : ranking.entries) {
        entries.push_back({{"doc_id", e.doc_id}, {"score", e.score}});
    }
    return json{{"query_id", ranking.query_id}, {"ranking", std::move(entries)}}.dump();
}

}  // namespace deltarank
