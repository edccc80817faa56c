#include "deltarank/click_relevance.hpp"

#include "deltarank/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace deltarank {

namespace {

void check(const ClickRecord& rec)
{
    if (rec.clicks < 0 || rec.full_text_clicks < 0) {
        throw ValidationError("negative click count for doc " + std::to_string(rec.doc_id));
    }
    if (rec.full_text_available != 0 && rec.full_text_available != 1) {
        throw ValidationError("ft_available must be 0 or 1 for doc " + std::to_string(rec.doc_id));
    }
    if (rec.full_text_available == 0 && rec.full_text_clicks != 0) {
        throw ValidationError("full-text clicks recorded for doc " + std::to_string(rec.doc_id) +
                              " without full text");
    }
}

template <class T>
T parse_int(std::string_view field, const std::string& source, std::size_t line_no)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(source, line_no, "not an integer: '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

double weighted_click_count(const ClickRecord& rec, const RelevanceCoefficients& coef)
{
    check(rec);
    const double summary_weight = coef.mu + (1 - rec.full_text_available) * coef.lambda;
    return summary_weight * static_cast<double>(rec.clicks) +
           (1.0 - coef.mu) * static_cast<double>(rec.full_text_clicks);
}

std::vector<ScaledRelevance> derive_srel(std::span<const ClickRecord> records, const RelevanceCoefficients& coef)
{
    std::vector<ScaledRelevance> out;
    out.reserve(records.size());
    double total = 0.0;
    for (const auto& rec : records) {
        const double cw = weighted_click_count(rec, coef);
        out.push_back({rec.doc_id, cw, 0.0, 0.0});
        total += cw;
    }
    if (!(total > 0.0)) {
        throw ValidationError("no weighted clicks for query" +
                              (records.empty() ? std::string() : " '" + records.front().query_id + "'"));
    }
    for (auto& s : out) {
        s.rel = s.weighted_clicks / total;
        s.srel = s.rel > 0.0 ? 1.0 + 99.0 * s.rel : 0.0;
    }
    return out;
}

std::vector<ClickRecord> load_click_counts(const std::filesystem::path& path)
{
    const std::string source = path.string();
    std::ifstream in(path);
    if (!in) {
        throw ParseError(source, 0, "cannot open file");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "query_id\tdoc_id\tclicks\tft_available\tft_clicks") {
        throw ParseError(source, 1, "header must be query_id, doc_id, clicks, ft_available, ft_clicks");
    }
    std::vector<ClickRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        while (true) {
            const auto tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(tab + 1);
        }
        if (fields.size() != 5) {
            throw ParseError(source, line_no, "expected 5 tab-separated columns");
        }
        ClickRecord rec;
        rec.query_id = std::string(fields[0]);
        rec.doc_id = parse_int<DocId>(fields[1], source, line_no);
        rec.clicks = parse_int<std::int64_t>(fields[2], source, line_no);
        rec.full_text_available = parse_int<int>(fields[3], source, line_no);
        rec.full_text_clicks = parse_int<std::int64_t>(fields[4], source, line_no);
        try {
            check(rec);
        } catch (const ValidationError& e) {
            throw ParseError(source, line_no, e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace deltarank
