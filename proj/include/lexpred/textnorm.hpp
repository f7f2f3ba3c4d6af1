#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lexpred/corpus.hpp"

namespace lexpred::textnorm {

// Reserved out-of-vocabulary marker. Uppercase on purpose: tokenizer output
// is always lowercase, so the literal can never collide with corpus text.
inline constexpr std::string_view kUnk = "UNK";

// Lowercases and emits maximal runs of alphanumeric characters (non-ASCII
// bytes count as word characters), so punctuation both separates and is
// stripped. Digit runs survive as single tokens.
std::vector<std::string> tokenize(const std::string& text);

struct TokenizedDocument {
    std::string id;
    std::vector<std::string> tokens;
    double label_years = 0.0;

    bool operator==(const TokenizedDocument&) const = default;
};

// The frequency dictionary backing typo correction and space splitting.
// A token is a member iff its corpus frequency reaches min_frequency.
class CorrectionLexicon {
public:
    CorrectionLexicon(std::map<std::string, long long> counts, long long min_frequency);

    bool is_member(const std::string& token) const;
    long long frequency(const std::string& token) const;  // 0 when unseen
    long long min_frequency() const { return min_frequency_; }
    size_t member_count() const { return members_.size(); }

    // Members as (token, frequency), frequency descending then token ascending.
    const std::vector<std::pair<std::string, long long>>& members() const { return members_; }

    void save(const std::string& path) const;
    static CorrectionLexicon load(const std::string& path);

private:
    std::map<std::string, long long> counts_;
    long long min_frequency_;
    std::vector<std::pair<std::string, long long>> members_;
};

// Counts tokens across the whole corpus. Empty corpus -> ValidationError;
// a corpus yielding zero members builds fine (member_count reports it).
CorrectionLexicon build_lexicon(const std::vector<TokenizedDocument>& docs, long long min_frequency);

// Levenshtein distance, unit costs.
int edit_distance(std::string_view a, std::string_view b);

// Exact distance when it is <= limit, nullopt otherwise. Banded DP.
std::optional<int> bounded_edit_distance(std::string_view a, std::string_view b, int limit);

enum class CorrectionKind { keep, replace, unknown, deferred };

struct CorrectionOutcome {
    CorrectionKind kind;
    std::string token;  // the kept or replacement token; empty for unknown

    bool operator==(const CorrectionOutcome&) const = default;
};

// Step 1 of normalization. Members pass through; all-digit non-members become
// UNK; otherwise the nearest member within edit distance < 3 replaces the
// token (ties: higher frequency, then lexicographically smaller member).
// Anything else is deferred to space splitting.
CorrectionOutcome correct_token(const std::string& token, const CorrectionLexicon& lex);

// Step 2. First split position (left to right) where both halves are members.
std::optional<std::pair<std::string, std::string>> split_spaces(const std::string& token,
                                                                const CorrectionLexicon& lex);

// Full per-token pipeline: 1 output token except for successful splits (2).
std::vector<std::string> normalize_token(const std::string& token, const CorrectionLexicon& lex);

TokenizedDocument normalize_document(const TokenizedDocument& doc, const CorrectionLexicon& lex);

// Document corpus -> tokenized corpus over the predictive sections.
std::vector<TokenizedDocument> tokenize_corpus(const std::vector<corpus::CourtDocument>& docs,
                                               double days_per_year = 365.0);

// JSONL: {"id": ..., "label_years": ..., "tokens": [...]}
void save_tokenized_jsonl(const std::vector<TokenizedDocument>& docs, const std::string& path);
std::vector<TokenizedDocument> load_tokenized_jsonl(const std::string& path);

}  // namespace lexpred::textnorm
