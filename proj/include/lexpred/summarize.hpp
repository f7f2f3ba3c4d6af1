#pragma once

#include <map>
#include <string>
#include <vector>

namespace lexpred::summarize {

struct SentenceScore {
    size_t index = 0;  // original position
    double score = 0.0;
    std::string sentence;
};

// Terminator-based splitting: '.', '!' or '?' followed by whitespace or end
// closes a sentence (terminator kept). Results are trimmed; empties dropped.
std::vector<std::string> sentence_split(const std::string& text);

// Per-sentence term weights: tf(t,s) * (ln((1+N)/(1+df(t))) + 1), raw counts.
// Terms come from textnorm::tokenize. Empty input -> ValidationError.
std::vector<std::map<std::string, double>> tfidf_weights(const std::vector<std::string>& sentences);

// Sentence score: sum of the tf-idf weight of every token occurrence.
std::vector<SentenceScore> score_sentences(const std::vector<std::string>& sentences);

// Keeps the ceil(ratio*N) top-scoring sentences (ties: earlier index), re-emits
// them verbatim in original order joined by single spaces.
std::string summarize(const std::string& text, double ratio);

}  // namespace lexpred::summarize
