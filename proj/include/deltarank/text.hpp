#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace deltarank {

using TokenSequence = std::vector<std::string>;
using DocId = std::int64_t;
using WordId = std::uint32_t;

/// Maximum query length accepted by the neural scorer.
inline constexpr std::size_t kMaxQueryWords = 7;

enum class NumericClass { dollar, percent, year19xx, year20xx, integer, fraction01, real };

inline constexpr std::size_t kNumericClassCount = 7;

/// Reserved token surface for a numeric class, e.g. "<pct>".
std::string_view marker(NumericClass cls) noexcept;

bool is_numeric_marker(std::string_view token) noexcept;

/// Classify a raw numeric surface such as "$30", "25%", "1998", "0.5" or "1,000".
/// Returns nullopt for anything that is not purely numeric.
std::optional<NumericClass> classify_numeric(std::string_view token);

/// Lowercases, splits on whitespace and punctuation and collapses numbers into
/// class markers. Abbreviations ("e.coli") and letter/digit mixtures ("brca1")
/// survive as one token with their periods removed.
TokenSequence tokenize(std::string_view raw_text);

std::string join_tokens(const TokenSequence& tokens);

/// Word to dense id map. Id 0 is padding and has no surface; id 1 is UNK.
class Vocabulary {
public:
    static constexpr WordId kPadding = 0;
    static constexpr WordId kUnknown = 1;
    static constexpr std::string_view kUnknownSurface = "<unk>";

    Vocabulary();

    /// Returns the existing id when the word is already present.
    WordId add(std::string_view word);
    WordId lookup(std::string_view word) const;
    bool contains(std::string_view word) const;
    const std::string& word(WordId id) const;
    std::size_t size() const noexcept { return words_.size(); }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept
        {
            return std::hash<std::string_view>{}(s);
        }
    };

    std::unordered_map<std::string, WordId, Hash, std::equal_to<>> ids_;
    std::vector<std::string> words_;
};

struct Document {
    DocId doc_id = 0;
    TokenSequence title;
    TokenSequence abstract;
};

/// Title followed by abstract, no separators and no truncation.
TokenSequence document_text(const Document& doc);

struct Query {
    std::string query_id;
    TokenSequence tokens;
};

struct JudgedDoc {
    Document doc;
    double srel = 0.0;
};

struct JudgedList {
    Query query;
    std::vector<JudgedDoc> docs;
};

/// srel must be 0 or lie in (1, 100].
bool valid_srel(double srel) noexcept;

/// Throws ValidationError naming the offending record.
void validate(const JudgedList& list);

std::vector<Document> load_corpus(const std::filesystem::path& path);

/// Streams documents one at a time; validates doc_id uniqueness across the file.
void for_each_document(const std::filesystem::path& path,
                       const std::function<void(Document&&)>& visit);

/// Judged lists, one JSON object per line. With `require_srel` false the srel
/// field is optional and defaults to 0 (candidate lists for re-ranking).
std::vector<JudgedList> load_judged_lists(const std::filesystem::path& path,
                                          bool require_srel = true);

struct RawDocument {
    DocId doc_id = 0;
    std::string title;
    std::string abstract;
};

struct RawJudgedDoc {
    RawDocument doc;
    double srel = 0.0;
};

struct RawJudgedList {
    std::string query_id;
    std::string query;
    std::vector<RawJudgedDoc> docs;
};

void write_corpus(const std::filesystem::path& path, const std::vector<RawDocument>& docs);
void write_judged_lists(const std::filesystem::path& path, const std::vector<RawJudgedList>& lists);

struct TestSubsets {
    std::vector<std::size_t> neg20_plus;
    std::vector<std::size_t> one_new_word;
    std::vector<std::size_t> all_new_words;
};

/// Set of every word used by the given queries.
std::unordered_set<std::string> query_vocabulary(const std::vector<JudgedList>& lists);

/// Indices into `test` for the robustness slices.
TestSubsets slice_test_subsets(const std::vector<JudgedList>& test,
                               const std::unordered_set<std::string>& trainval_query_words);

}  // namespace deltarank
