#include "deltarank/text.hpp"

#include "deltarank/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace deltarank {

namespace {

constexpr std::array<std::string_view, kNumericClassCount> kMarkers = {
    "<usd>", "<pct>", "<yr19xx>", "<yr20xx>", "<int>", "<frac01>", "<real>"};

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// Bytes of multi-byte UTF-8 sequences are treated as letters so that
// non-ASCII words stay intact.
bool is_word_byte(char c) noexcept
{
    return is_alpha(c) || is_digit(c) || static_cast<unsigned char>(c) >= 0x80;
}

bool is_space(char c) noexcept
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char to_lower(char c) noexcept { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// digits, optionally grouped by '.' or ',' where each separator is followed by a digit.
bool is_number(std::string_view s) noexcept
{
    if (s.empty()) {
        return false;
    }
    bool seen_digit = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (is_digit(c)) {
            seen_digit = true;
        } else if (c == '.' || c == ',') {
            if (i + 1 >= s.size() || !is_digit(s[i + 1])) {
                return false;
            }
            if (c == ',' && !seen_digit) {
                return false;
            }
        } else {
            return false;
        }
    }
    return seen_digit;
}

std::size_t scan_number(std::string_view text, std::size_t i) noexcept
{
    std::size_t j = i;
    if (j < text.size() && text[j] == '.') {
        ++j;
    }
    while (j < text.size()) {
        if (is_digit(text[j])) {
            ++j;
        } else if ((text[j] == '.' || text[j] == ',') && j + 1 < text.size() && is_digit(text[j + 1])) {
            ++j;
        } else {
            break;
        }
    }
    return j;
}

std::size_t scan_word(std::string_view text, std::size_t i) noexcept
{
    std::size_t j = i;
    while (j < text.size()) {
        if (is_word_byte(text[j])) {
            ++j;
        } else if (text[j] == '.' && j > i && j + 1 < text.size() && is_word_byte(text[j + 1])) {
            ++j;
        } else {
            break;
        }
    }
    return j;
}

std::string normalize_word(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c != '.') {
            out.push_back(to_lower(c));
        }
    }
    return out;
}

std::optional<std::string_view> marker_at(std::string_view text, std::size_t i) noexcept
{
    for (std::string_view m : kMarkers) {
        if (text.size() - i < m.size()) {
            continue;
        }
        bool match = true;
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (to_lower(text[i + k]) != m[k]) {
                match = false;
                break;
            }
        }
        const std::size_t end = i + m.size();
        if (match && (end == text.size() || !is_word_byte(text[end]))) {
            return m;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string_view marker(NumericClass cls) noexcept { return kMarkers[static_cast<std::size_t>(cls)]; }

bool is_numeric_marker(std::string_view token) noexcept
{
    return std::find(kMarkers.begin(), kMarkers.end(), token) != kMarkers.end();
}

std::optional<NumericClass> classify_numeric(std::string_view token)
{
    if (token.size() > 1 && token.front() == '$') {
        return is_number(token.substr(1)) ? std::optional(NumericClass::dollar) : std::nullopt;
    }
    if (token.size() > 1 && token.back() == '%') {
        return is_number(token.substr(0, token.size() - 1)) ? std::optional(NumericClass::percent)
                                                             : std::nullopt;
    }
    if (!is_number(token)) {
        return std::nullopt;
    }
    const bool plain_digits = std::all_of(token.begin(), token.end(), is_digit);
    if (plain_digits && token.size() == 4) {
        if (token.starts_with("19")) {
            return NumericClass::year19xx;
        }
        if (token.starts_with("20")) {
            return NumericClass::year20xx;
        }
    }
    const auto periods = std::count(token.begin(), token.end(), '.');
    if (periods == 0) {
        return NumericClass::integer;
    }
    if (periods == 1) {
        std::string digits;
        for (char c : token) {
            if (c != ',') {
                digits.push_back(c);
            }
        }
        const double value = std::strtod(digits.c_str(), nullptr);
        if (value > 0.0 && value < 1.0) {
            return NumericClass::fraction01;
        }
    }
    return NumericClass::real;
}

TokenSequence tokenize(std::string_view text)
{
    TokenSequence tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const char c = text[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (c == '<') {
            if (auto m = marker_at(text, i)) {
                tokens.emplace_back(*m);
                i += m->size();
            } else {
                ++i;
            }
            continue;
        }
        const bool starts_number =
            is_digit(c) || (c == '.' && i + 1 < n && is_digit(text[i + 1]) &&
                            (i == 0 || !is_word_byte(text[i - 1])));
        if (c == '$' && i + 1 < n && (is_digit(text[i + 1]) || text[i + 1] == '.')) {
            const std::size_t j = scan_number(text, i + 1);
            if (j > i + 1 && is_number(text.substr(i + 1, j - i - 1))) {
                tokens.emplace_back(marker(NumericClass::dollar));
                i = j;
                continue;
            }
            ++i;
            continue;
        }
        if (starts_number) {
            const std::size_t j = scan_number(text, i);
            if (j < n && text[j] == '%') {
                tokens.emplace_back(marker(NumericClass::percent));
                i = j + 1;
            } else if (j < n && is_word_byte(text[j])) {
                // ".1a" keeps the alphanumeric part only.
                const std::size_t start = c == '.' ? i + 1 : i;
                const std::size_t k = scan_word(text, start);
                tokens.push_back(normalize_word(text.substr(start, k - start)));
                i = k;
            } else {
                const auto cls = classify_numeric(text.substr(i, j - i));
                tokens.emplace_back(marker(cls.value_or(NumericClass::real)));
                i = j;
            }
            continue;
        }
        if (is_word_byte(c)) {
            const std::size_t k = scan_word(text, i);
            tokens.push_back(normalize_word(text.substr(i, k - i)));
            i = k;
            continue;
        }
        ++i;  // punctuation
    }
    return tokens;
}

std::string join_tokens(const TokenSequence& tokens)
{
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += t;
    }
    return out;
}

Vocabulary::Vocabulary()
{
    words_.emplace_back();
    words_.emplace_back(kUnknownSurface);
    ids_.emplace(std::string(kUnknownSurface), kUnknown);
}

WordId Vocabulary::add(std::string_view word)
{
    if (word.empty()) {
        throw ValidationError("vocabulary words must be non-empty");
    }
    if (auto it = ids_.find(word); it != ids_.end()) {
        return it->second;
    }
    const auto id = static_cast<WordId>(words_.size());
    words_.emplace_back(word);
    ids_.emplace(std::string(word), id);
    return id;
}

WordId Vocabulary::lookup(std::string_view word) const
{
    auto it = ids_.find(word);
    return it == ids_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view word) const
{
    return word != kUnknownSurface && ids_.find(word) != ids_.end();
}

const std::string& Vocabulary::word(WordId id) const { return words_.at(id); }

TokenSequence document_text(const Document& doc)
{
    TokenSequence text;
    text.reserve(doc.title.size() + doc.abstract.size());
    text.insert(text.end(), doc.title.begin(), doc.title.end());
    text.insert(text.end(), doc.abstract.begin(), doc.abstract.end());
    return text;
}

bool valid_srel(double srel) noexcept { return srel == 0.0 || (srel > 1.0 && srel <= 100.0); }

void validate(const JudgedList& list)
{
    if (list.query.tokens.empty()) {
        throw ValidationError("query '" + list.query.query_id + "' has no tokens");
    }
    std::unordered_set<DocId> seen;
    for (const auto& jd : list.docs) {
        if (jd.doc.doc_id <= 0) {
            throw ValidationError("query '" + list.query.query_id + "': doc_id must be positive");
        }
        if (!seen.insert(jd.doc.doc_id).second) {
            throw ValidationError("query '" + list.query.query_id + "': duplicate doc_id " +
                                  std::to_string(jd.doc.doc_id));
        }
        if (!valid_srel(jd.srel)) {
            std::ostringstream msg;
            msg << "query '" << list.query.query_id << "', doc " << jd.doc.doc_id << ": srel "
                << jd.srel << " must be 0 or in (1, 100]";
            throw ValidationError(msg.str());
        }
        if (jd.doc.title.empty()) {
            throw ValidationError("doc " + std::to_string(jd.doc.doc_id) + " has an empty title");
        }
    }
}

namespace {

using nlohmann::json;

template <class Visit>
void for_each_json_line(const std::filesystem::path& path, Visit&& visit)
{
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path.string(), 0, "cannot open file");
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), is_space)) {
            continue;
        }
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        try {
            visit(record, line_no);
        } catch (const json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

Document parse_document(const json& j)
{
    Document doc;
    doc.doc_id = j.at("doc_id").get<DocId>();
    doc.title = tokenize(j.at("title").get<std::string>());
    if (auto it = j.find("abstract"); it != j.end() && !it->is_null()) {
        doc.abstract = tokenize(it->get<std::string>());
    }
    if (doc.doc_id <= 0) {
        throw ValidationError("doc_id must be positive");
    }
    if (doc.title.empty()) {
        throw ValidationError("doc " + std::to_string(doc.doc_id) + " has an empty title");
    }
    return doc;
}

}  // namespace

void for_each_document(const std::filesystem::path& path, const std::function<void(Document&&)>& visit)
{
    std::unordered_set<DocId> seen;
    for_each_json_line(path, [&](const json& record, std::size_t) {
        Document doc = parse_document(record);
        if (!seen.insert(doc.doc_id).second) {
            throw ValidationError("duplicate doc_id " + std::to_string(doc.doc_id));
        }
        visit(std::move(doc));
    });
}

std::vector<Document> load_corpus(const std::filesystem::path& path)
{
    std::vector<Document> docs;
    for_each_document(path, [&](Document&& d) { docs.push_back(std::move(d)); });
    return docs;
}

std::vector<JudgedList> load_judged_lists(const std::filesystem::path& path, bool require_srel)
{
    std::vector<JudgedList> lists;
    for_each_json_line(path, [&](const json& record, std::size_t) {
        JudgedList list;
        list.query.query_id = record.at("query_id").get<std::string>();
        list.query.tokens = tokenize(record.at("query").get<std::string>());
        for (const auto& d : record.at("docs")) {
            JudgedDoc jd;
            jd.doc = parse_document(d);
            if (require_srel || d.contains("srel")) {
                jd.srel = d.at("srel").get<double>();
            }
            list.docs.push_back(std::move(jd));
        }
        validate(list);
        lists.push_back(std::move(list));
    });
    return lists;
}

void write_corpus(const std::filesystem::path& path, const std::vector<RawDocument>& docs)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    for (const auto& d : docs) {
        out << json{{"doc_id", d.doc_id}, {"title", d.title}, {"abstract", d.abstract}}.dump() << '\n';
    }
}

void write_judged_lists(const std::filesystem::path& path, const std::vector<RawJudgedList>& lists)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    for (const auto& l : lists) {
        json docs = json::array();
        for (const auto& jd : l.docs) {
            docs.push_back({{"doc_id", jd.doc.doc_id},
                            {"title", jd.doc.title},
                            {"abstract", jd.doc.abstract},
                            {"srel", jd.srel}});
        }
        out << json{{"query_id", l.query_id}, {"query", l.query}, {"docs", std::move(docs)}}.dump()
            << '\n';
    }
}

std::unordered_set<std::string> query_vocabulary(const std::vector<JudgedList>& lists)
{
    std::unordered_set<std::string> words;
    for (const auto& l : lists) {
        words.insert(l.query.tokens.begin(), l.query.tokens.end());
    }
    return words;
}

TestSubsets slice_test_subsets(const std::vector<JudgedList>& test,
                               const std::unordered_set<std::string>& trainval_query_words)
{
    TestSubsets subsets;
    for (std::size_t q = 0; q < test.size(); ++q) {
        const auto& list = test[q];
        const std::unordered_set<std::string> query_words(list.query.tokens.begin(),
                                                          list.query.tokens.end());

        std::size_t title_matching_negatives = 0;
        for (const auto& jd : list.docs) {
            if (jd.srel != 0.0) {
                continue;
            }
            const std::unordered_set<std::string> title(jd.doc.title.begin(), jd.doc.title.end());
            const bool all_in_title = std::all_of(query_words.begin(), query_words.end(),
                                                  [&](const auto& w) { return title.contains(w); });
            title_matching_negatives += all_in_title ? 1 : 0;
        }
        if (title_matching_negatives >= 20) {
            subsets.neg20_plus.push_back(q);
        }

        std::size_t novel = 0;
        for (const auto& w : query_words) {
            novel += trainval_query_words.contains(w) ? 0 : 1;
        }
        if (novel >= 1) {
            subsets.one_new_word.push_back(q);
        }
        if (!query_words.empty() && novel == query_words.size()) {
            subsets.all_new_words.push_back(q);
        }
    }
    return subsets;
}

}  // namespace deltarank
