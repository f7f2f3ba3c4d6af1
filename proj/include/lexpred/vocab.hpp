#pragma once

#include <map>
#include <string>
#include <vector>

#include "lexpred/textnorm.hpp"

namespace lexpred::vocab {

// Frequency-ranked vocabulary with a top-K% cutoff. UNK is reserved at index
// 0 and excluded from the ranked pool; kept tokens occupy 1..len.
class Vocabulary {
public:
    Vocabulary(std::vector<std::pair<std::string, long long>> ranked_kept, double cutoff_percent,
               size_t total_distinct);

    size_t size() const { return kept_.size() + 1; }  // including UNK
    size_t kept_count() const { return kept_.size(); }
    double cutoff_percent() const { return cutoff_percent_; }
    size_t total_distinct() const { return total_distinct_; }

    // 0 (UNK) for anything not kept.
    size_t index_of(const std::string& token) const;
    const std::string& token_at(size_t index) const;  // "UNK" at 0
    long long frequency_at_rank(size_t rank) const { return kept_[rank].second; }

    std::vector<size_t> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<size_t>& indices) const;

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    std::vector<std::pair<std::string, long long>> kept_;  // rank order
    std::map<std::string, size_t> index_;
    double cutoff_percent_;
    size_t total_distinct_;
};

// Ranks by corpus frequency (ties lexicographically ascending) and keeps
// ceil(cutoff_percent/100 * distinct). Literal UNK tokens in the input are
// ignored. cutoff outside (0,100] or an empty corpus -> ValidationError.
Vocabulary build_vocabulary(const std::vector<textnorm::TokenizedDocument>& docs,
                            double cutoff_percent);

}  // namespace lexpred::vocab
