#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lexpred::embed {

enum class Algorithm { skipgram, cbow };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct EmbeddingConfig {
    Algorithm algorithm = Algorithm::skipgram;
    size_t dim = 100;
    size_t window = 5;
    size_t negatives = 5;
    size_t epochs = 5;
    double learning_rate = 0.025;
    uint64_t seed = 1;
};

struct EmbeddingTable {
    std::vector<double> vectors;      // [vocab_size, dim] row-major, input side
    std::vector<std::string> tokens;  // row-aligned; tokens[0] is UNK
    Algorithm algorithm = Algorithm::skipgram;
    size_t dim = 0;
    size_t window = 0;
    size_t negatives = 0;
    uint64_t seed = 0;

    size_t vocab_size() const { return tokens.size(); }
    const double* row(size_t i) const { return vectors.data() + i * dim; }

    void validate() const;  // row count vs tokens, finiteness
};

struct TrainStats {
    std::vector<double> epoch_mean_loss;  // mean per-pair loss per epoch
    size_t pair_updates = 0;
};

// SGD with negative sampling (noise ~ unigram^0.75, UNK excluded) and a
// linearly decaying learning rate. Training pairs never involve UNK, so a
// corpus with no non-UNK token raises ValidationError. Updates are clipped
// at component magnitude 10 before the learning rate is applied.
// Single-threaded and fully deterministic per seed.
EmbeddingTable train_embeddings(const std::vector<std::vector<size_t>>& corpus,
                                const std::vector<std::string>& tokens,
                                const EmbeddingConfig& config, TrainStats* stats = nullptr);

// Mean of the token rows (UNK rows included); empty sequence -> zero vector.
std::vector<double> doc_vector(const std::vector<size_t>& indices, const EmbeddingTable& table);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// word2vec-style text format; values round-trip bit-exactly.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, std::ostream& out);
EmbeddingTable load_embeddings(std::istream& in);

}  // namespace lexpred::embed
