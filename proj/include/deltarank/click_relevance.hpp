#pragma once

#include "deltarank/text.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace deltarank {

/// Aggregated click statistics for one (query, document) pair.
struct ClickRecord {
    std::string query_id;
    DocId doc_id = 0;
    std::int64_t clicks = 0;          // click-throughs to the document summary
    int full_text_available = 0;      // 0 or 1
    std::int64_t full_text_clicks = 0;
};

struct RelevanceCoefficients {
    double mu = 0.333;
    double lambda = 0.067;
};

/// c_w = (mu + (1 - I_ft) * lambda) * c + (1 - mu) * c_ft
double weighted_click_count(const ClickRecord& rec, const RelevanceCoefficients& coef = {});

struct ScaledRelevance {
    DocId doc_id = 0;
    double weighted_clicks = 0.0;
    double rel = 0.0;
    double srel = 0.0;
};

/// Scaled relevance for every record of one query, in input order:
/// rel = c_w / sum(c_w), srel = 1 + 99 * rel when rel > 0, else 0.
/// Throws ValidationError when no record has any weighted clicks.
std::vector<ScaledRelevance> derive_srel(std::span<const ClickRecord> records,
                                         const RelevanceCoefficients& coef = {});

/// TSV with header: query_id, doc_id, clicks, ft_available, ft_clicks.
std::vector<ClickRecord> load_click_counts(const std::filesystem::path& path);

}  // namespace deltarank
