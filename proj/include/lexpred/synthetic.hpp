#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lexpred/corpus.hpp"
#include "lexpred/rng.hpp"

namespace lexpred::corpus {

// Recipe for a synthetic desk-scale corpus with a planted linear signal:
//   punishment_days = round(base_days + sum_t weight_t * count(t) + N(0, noise_std_days)),
// clipped to >= 1, computed before any corruption.
struct SyntheticSpec {
    size_t n_docs = 0;
    std::vector<std::pair<std::string, double>> signal_tokens;  // token -> weight in days/occurrence
    long long base_days = 0;
    double noise_std_days = 0.0;
    double typo_rate = 0.0;
    double merge_rate = 0.0;
    uint64_t seed = 0;
    size_t vocab_size = 0;   // planted vocabulary incl. signal tokens
    size_t blank_count = 0;  // docs whose predictive sections are blanked

    // Throws ValidationError on rate/range violations or signal tokens closer
    // than edit distance 5 to each other.
    void validate() const;
};

struct CorruptionEntry {
    enum class Kind { typo, merge };
    std::string doc_id;
    size_t position = 0;  // token index in the corrupted predictive-token stream
    Kind kind = Kind::typo;
    std::vector<std::string> original;  // 1 token for typo, 2 for merge
    std::string corrupted;
};

struct CorruptionLog {
    std::vector<CorruptionEntry> entries;

    size_t count(CorruptionEntry::Kind kind) const;
    void save_jsonl(const std::string& path) const;
    static CorruptionLog load_jsonl(const std::string& path);
};

struct SyntheticCorpus {
    std::vector<CourtDocument> docs;
    CorruptionLog log;
    std::vector<std::string> blanked_ids;
    std::vector<std::string> planted_vocabulary;  // signal tokens first, then fillers
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

// One corruption pass over a token stream. A token takes part in at most one
// corruption; tokens containing digits are left alone. section_of (optional,
// same length as tokens) confines merges to section-internal pairs.
struct CorruptionPass {
    std::vector<std::string> tokens;            // corrupted stream
    std::vector<size_t> section_of;             // per corrupted token
    std::vector<CorruptionEntry> entries;       // positions index into `tokens`
};
CorruptionPass corrupt_tokens(const std::vector<std::string>& tokens,
                              const std::vector<size_t>& section_of,
                              double typo_rate, double merge_rate,
                              Rng& rng, const std::string& doc_id);

// key = value form understood by `gen-corpus --spec`.
SyntheticSpec parse_synthetic_spec_file(const std::string& path);

}  // namespace lexpred::corpus
