#include "lexpred/summarize.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "lexpred/errors.hpp"
#include "lexpred/textnorm.hpp"

namespace lexpred::summarize {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::vector<std::string> sentence_split(const std::string& text) {
    std::vector<std::string> sentences;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        if (is_terminator(text[i]) &&
            (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            std::string s = trim(text.substr(start, i + 1 - start));
            if (!s.empty()) sentences.push_back(std::move(s));
            start = i + 1;
        }
    }
    if (start < text.size()) {
        std::string s = trim(text.substr(start));
        if (!s.empty()) sentences.push_back(std::move(s));
    }
    return sentences;
}

std::vector<std::map<std::string, double>> tfidf_weights(const std::vector<std::string>& sentences) {
    if (sentences.empty()) throw ValidationError("tfidf_weights: no sentence to weigh");
    const double n = static_cast<double>(sentences.size());

    std::vector<std::map<std::string, long long>> tf(sentences.size());
    std::map<std::string, long long> df;
    for (size_t i = 0; i < sentences.size(); ++i) {
        for (const auto& token : textnorm::tokenize(sentences[i])) ++tf[i][token];
        for (const auto& [token, count] : tf[i]) {
            (void)count;
            ++df[token];
        }
    }

    std::vector<std::map<std::string, double>> weights(sentences.size());
    for (size_t i = 0; i < sentences.size(); ++i) {
        for (const auto& [token, count] : tf[i]) {
            double idf = std::log((1.0 + n) / (1.0 + static_cast<double>(df[token]))) + 1.0;
            weights[i][token] = static_cast<double>(count) * idf;
        }
    }
    return weights;
}

std::vector<SentenceScore> score_sentences(const std::vector<std::string>& sentences) {
    auto weights = tfidf_weights(sentences);
    std::vector<SentenceScore> scores(sentences.size());
    for (size_t i = 0; i < sentences.size(); ++i) {
        scores[i].index = i;
        scores[i].sentence = sentences[i];
        double total = 0.0;
        for (const auto& token : textnorm::tokenize(sentences[i])) {
            total += weights[i][token];  // per occurrence
        }
        scores[i].score = total;
    }
    return scores;
}

std::string summarize(const std::string& text, double ratio) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw ValidationError("summary ratio must lie in (0,1], got " + std::to_string(ratio));
    }
    auto sentences = sentence_split(text);
    if (sentences.empty()) return "";

    auto scores = score_sentences(sentences);
    std::vector<size_t> order(scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scores[a].score > scores[b].score;  // stable keeps earlier index on ties
    });

    size_t keep = static_cast<size_t>(
        std::ceil(ratio * static_cast<double>(sentences.size())));
    keep = std::min(keep, sentences.size());
    std::vector<size_t> selected(order.begin(), order.begin() + keep);
    std::sort(selected.begin(), selected.end());

    std::string out;
    for (size_t i = 0; i < selected.size(); ++i) {
        if (i > 0) out += ' ';
        out += sentences[selected[i]];
    }
    return out;
}

}  // namespace lexpred::summarize
