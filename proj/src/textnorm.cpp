#include "lexpred/textnorm.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lexpred/errors.hpp"

using nlohmann::json;

namespace lexpred::textnorm {

namespace {

bool is_word_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char to_lower_ascii(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

bool all_digits(const std::string& t) {
    return !t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) {
        return c >= '0' && c <= '9';
    });
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            current += to_lower_ascii(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

CorrectionLexicon::CorrectionLexicon(std::map<std::string, long long> counts, long long min_frequency)
    : counts_(std::move(counts)), min_frequency_(min_frequency) {
    if (min_frequency_ < 1) throw ValidationError("min_frequency must be >= 1");
    for (const auto& [token, count] : counts_) {
        if (token.empty()) throw ValidationError("lexicon tokens must be non-empty");
        if (count >= min_frequency_) members_.emplace_back(token, count);
    }
    std::sort(members_.begin(), members_.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
}

bool CorrectionLexicon::is_member(const std::string& token) const {
    auto it = counts_.find(token);
    return it != counts_.end() && it->second >= min_frequency_;
}

long long CorrectionLexicon::frequency(const std::string& token) const {
    auto it = counts_.find(token);
    return it == counts_.end() ? 0 : it->second;
}

void CorrectionLexicon::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write lexicon file: " + path);
    out << "min_frequency=" << min_frequency_ << "\n";
    std::vector<std::pair<std::string, long long>> rows(counts_.begin(), counts_.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (const auto& [token, count] : rows) out << token << "\t" << count << "\n";
}

CorrectionLexicon CorrectionLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open lexicon file: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("min_frequency=", 0) != 0) {
        throw ValidationError("lexicon file must start with 'min_frequency=<n>': " + path);
    }
    long long min_freq = std::atoll(header.c_str() + 14);
    std::map<std::string, long long> counts;
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("lexicon line needs 'token<TAB>count'", lineno, 1);
        }
        counts[line.substr(0, tab)] = std::atoll(line.c_str() + tab + 1);
    }
    return CorrectionLexicon(std::move(counts), min_freq);
}

CorrectionLexicon build_lexicon(const std::vector<TokenizedDocument>& docs, long long min_frequency) {
    if (docs.empty()) throw ValidationError("cannot build a lexicon from an empty corpus");
    std::map<std::string, long long> counts;
    for (const auto& doc : docs) {
        for (const auto& token : doc.tokens) ++counts[token];
    }
    return CorrectionLexicon(std::move(counts), min_frequency);
}

int edit_distance(std::string_view a, std::string_view b) {
    const size_t n = a.size(), m = b.size();
    if (n == 0) return static_cast<int>(m);
    if (m == 0) return static_cast<int>(n);
    std::vector<int> prev(m + 1), curr(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i) {
        curr[0] = static_cast<int>(i);
        for (size_t j = 1; j <= m; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

std::optional<int> bounded_edit_distance(std::string_view a, std::string_view b, int limit) {
    const long n = static_cast<long>(a.size()), m = static_cast<long>(b.size());
    if (std::labs(n - m) > limit) return std::nullopt;
    if (n == 0) return static_cast<int>(m);
    if (m == 0) return static_cast<int>(n);
    // Band of half-width `limit` around the diagonal.
    const int big = limit + 1;
    std::vector<int> prev(m + 1, big), curr(m + 1, big);
    for (long j = 0; j <= std::min<long>(m, limit); ++j) prev[j] = static_cast<int>(j);
    for (long i = 1; i <= n; ++i) {
        const long jlo = std::max<long>(1, i - limit);
        const long jhi = std::min<long>(m, i + limit);
        curr[jlo - 1] = (i - limit <= 0) ? static_cast<int>(i) : big;
        int row_min = curr[jlo - 1];
        for (long j = jlo; j <= jhi; ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            int del = (j <= i + limit - 1) ? prev[j] + 1 : big;
            int ins = curr[j - 1] + 1;
            curr[j] = std::min({del, ins, sub, big});
            row_min = std::min(row_min, curr[j]);
        }
        if (row_min > limit) return std::nullopt;
        std::swap(prev, curr);
        std::fill(curr.begin(), curr.end(), big);
    }
    if (prev[m] > limit) return std::nullopt;
    return prev[m];
}

CorrectionOutcome correct_token(const std::string& token, const CorrectionLexicon& lex) {
    if (token == kUnk) return {CorrectionKind::keep, token};  // terminal, never re-corrected
    if (lex.is_member(token)) return {CorrectionKind::keep, token};
    if (all_digits(token)) return {CorrectionKind::unknown, ""};

    // Nearest member at distance < 3; ties by frequency desc then token asc.
    // members() is already in that order, so the first strict improvement wins.
    const std::string* best = nullptr;
    int best_dist = 3;
    for (const auto& [member, freq] : lex.members()) {
        (void)freq;
        if (auto d = bounded_edit_distance(token, member, best_dist - 1)) {
            if (*d < best_dist) {
                best_dist = *d;
                best = &member;
                if (best_dist == 1) {
                    // distance 0 is impossible (not a member), so 1 is optimal;
                    // earlier entries in member order already won ties.
                    break;
                }
            }
        }
    }
    if (best) return {CorrectionKind::replace, *best};
    return {CorrectionKind::deferred, token};
}

std::optional<std::pair<std::string, std::string>> split_spaces(const std::string& token,
                                                                const CorrectionLexicon& lex) {
    for (size_t i = 1; i < token.size(); ++i) {
        std::string left = token.substr(0, i);
        std::string right = token.substr(i);
        if (lex.is_member(left) && lex.is_member(right)) {
            return std::make_pair(std::move(left), std::move(right));
        }
    }
    return std::nullopt;
}

std::vector<std::string> normalize_token(const std::string& token, const CorrectionLexicon& lex) {
    CorrectionOutcome outcome = correct_token(token, lex);
    switch (outcome.kind) {
        case CorrectionKind::keep:
            return {token};
        case CorrectionKind::replace:
            return {outcome.token};
        case CorrectionKind::unknown:
            return {std::string(kUnk)};
        case CorrectionKind::deferred:
            if (auto halves = split_spaces(token, lex)) {
                return {halves->first, halves->second};
            }
            return {std::string(kUnk)};
    }
    return {std::string(kUnk)};  // unreachable
}

TokenizedDocument normalize_document(const TokenizedDocument& doc, const CorrectionLexicon& lex) {
    TokenizedDocument out;
    out.id = doc.id;
    out.label_years = doc.label_years;
    out.tokens.reserve(doc.tokens.size());
    for (const auto& token : doc.tokens) {
        for (auto& piece : normalize_token(token, lex)) {
            out.tokens.push_back(std::move(piece));
        }
    }
    return out;
}

std::vector<TokenizedDocument> tokenize_corpus(const std::vector<corpus::CourtDocument>& docs,
                                               double days_per_year) {
    std::vector<TokenizedDocument> out;
    out.reserve(docs.size());
    for (const auto& doc : docs) {
        TokenizedDocument t;
        t.id = doc.id;
        t.tokens = tokenize(corpus::select_sections(doc));
        t.label_years = corpus::days_to_years(doc.punishment_days, days_per_year);
        out.push_back(std::move(t));
    }
    return out;
}

void save_tokenized_jsonl(const std::vector<TokenizedDocument>& docs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write tokenized corpus: " + path);
    for (const auto& doc : docs) {
        json j;
        j["id"] = doc.id;
        j["label_years"] = doc.label_years;
        j["tokens"] = doc.tokens;
        out << j.dump() << "\n";
    }
}

std::vector<TokenizedDocument> load_tokenized_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open tokenized corpus: " + path);
    std::vector<TokenizedDocument> docs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("bad JSON: ") + e.what(), lineno, static_cast<int>(e.byte));
        }
        TokenizedDocument doc;
        doc.id = j.at("id").get<std::string>();
        doc.label_years = j.at("label_years").get<double>();
        doc.tokens = j.at("tokens").get<std::vector<std::string>>();
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace lexpred::textnorm
