#pragma once

#include "deltarank/text.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace deltarank {

struct ScoredDoc {
    DocId doc_id = 0;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Documents in decreasing score order; equal scores by decreasing doc_id.
struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> entries;

    bool operator==(const RankedList&) const = default;
};

/// Sorts by (score desc, doc_id desc). Throws ValidationError on duplicate doc_ids.
RankedList rank(std::string query_id, std::vector<ScoredDoc> scored);

/// Throws InvariantError if the ordering rule is violated.
void check_ranked(const RankedList& ranking);

/// sum_{i=1..min(n,len)} (2^rel(i) - 1) / log2(i + 1)
double dcg_at(std::span<const double> relevances, std::size_t n);

/// DCG(n) / IDCG(n); 0 when the list has no relevant document.
double ndcg_at(const JudgedList& judged, const RankedList& ranking, std::size_t n);

/// Mean precision at the rank of each relevant (srel > 0) document;
/// nullopt when there are no relevant documents.
std::optional<double> average_precision(const JudgedList& judged, const RankedList& ranking);

double precision_at(const JudgedList& judged, const RankedList& ranking, std::size_t n);

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

enum class Verdict { increase, decrease, equivalent };
std::string_view to_string(Verdict v) noexcept;

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    Verdict verdict = Verdict::equivalent;
};

/// Two-sided paired t-test on a - b at the given confidence level.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double confidence = 0.99);

struct QueryMetrics {
    std::string query_id;
    double ndcg = 0.0;
    std::optional<double> average_precision;
    double precision = 0.0;
};

struct MetricReport {
    std::size_t ndcg_depth = 20;
    std::size_t precision_depth = 5;
    std::vector<QueryMetrics> queries;  // query-id order
    double mean_ndcg = 0.0;
    double map = 0.0;
    double mean_precision = 0.0;
    std::size_t map_queries = 0;  // queries with at least one relevant document
};

/// Scores each judged list against the ranking with the same query_id.
MetricReport evaluate(const std::vector<JudgedList>& judged, const std::vector<RankedList>& rankings,
                      std::size_t ndcg_depth = 20, std::size_t precision_depth = 5);

/// Mean NDCG@n over lists, ranking each list's docs by the given scores.
double mean_ndcg(const std::vector<JudgedList>& judged, const std::vector<std::vector<double>>& scores,
                 std::size_t n = 20);

/// One JSON object per line: {"query_id", "ranking": [{"doc_id", "score"}]}
/// or {"query_id", "error"}.
std::vector<RankedList> load_rankings(const std::filesystem::path& path);
std::string ranking_to_json_line(const RankedList& ranking);

}  // namespace deltarank
