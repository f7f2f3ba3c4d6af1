#include "lexpred/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lexpred/errors.hpp"
#include "lexpred/kernels.hpp"
#include "lexpred/rng.hpp"

namespace lexpred::embed {

std::string algorithm_name(Algorithm a) {
    return a == Algorithm::skipgram ? "skipgram" : "cbow";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "skipgram") return Algorithm::skipgram;
    if (name == "cbow") return Algorithm::cbow;
    throw ValidationError("unknown embedding algorithm '" + name + "'");
}

void EmbeddingTable::validate() const {
    if (dim == 0) throw ValidationError("embedding table has dim 0");
    if (vectors.size() != tokens.size() * dim) {
        throw ValidationError("embedding table row count disagrees with its token list");
    }
    for (double v : vectors) {
        if (!std::isfinite(v)) throw ValidationError("embedding table contains a non-finite value");
    }
}

namespace {

constexpr double kScoreClamp = 30.0;  // sigmoid saturates well before this
constexpr double kGradClip = 10.0;

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// dst += alpha * clip(g * src, +-kGradClip), componentwise. The unclipped
// fast path keeps the kernel dispatch hot; both paths are deterministic.
void apply_update(double* dst, double g, const double* src, size_t dim, double alpha) {
    double amax = 0.0;
    for (size_t j = 0; j < dim; ++j) amax = std::max(amax, std::fabs(src[j]));
    if (std::fabs(g) * amax <= kGradClip) {
        kernels::axpy(dst, alpha * g, src, dim);
        return;
    }
    for (size_t j = 0; j < dim; ++j) {
        dst[j] += alpha * std::clamp(g * src[j], -kGradClip, kGradClip);
    }
}

class NoiseSampler {
public:
    // unigram^0.75 over non-UNK indices observed in the corpus
    NoiseSampler(const std::vector<long long>& counts) {
        double total = 0.0;
        for (size_t i = 1; i < counts.size(); ++i) {
            if (counts[i] > 0) {
                total += std::pow(static_cast<double>(counts[i]), 0.75);
                indices_.push_back(i);
                cumulative_.push_back(total);
            }
        }
        total_ = total;
    }

    size_t candidates() const { return indices_.size(); }

    size_t draw(Rng& rng) const {
        double u = rng.next_double() * total_;
        size_t k = static_cast<size_t>(
            std::lower_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
        if (k >= indices_.size()) k = indices_.size() - 1;
        return indices_[k];
    }

private:
    std::vector<size_t> indices_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

}  // namespace

EmbeddingTable train_embeddings(const std::vector<std::vector<size_t>>& corpus,
                                const std::vector<std::string>& tokens,
                                const EmbeddingConfig& config, TrainStats* stats) {
    if (corpus.empty()) throw ValidationError("cannot train embeddings on an empty corpus");
    if (config.dim < 1) throw ValidationError("embedding dim must be >= 1");
    if (config.window < 1) throw ValidationError("embedding window must be >= 1");
    if (tokens.empty() || tokens[0] != "UNK") {
        throw ValidationError("embedding token list must start with UNK");
    }
    const size_t vocab = tokens.size();
    const size_t dim = config.dim;

    std::vector<long long> counts(vocab, 0);
    size_t center_positions = 0;
    for (const auto& doc : corpus) {
        for (size_t idx : doc) {
            if (idx >= vocab) throw ValidationError("corpus index exceeds the vocabulary");
            ++counts[idx];
            if (idx != 0) ++center_positions;
        }
    }
    if (center_positions == 0) {
        throw ValidationError("corpus contains no trainable (non-UNK) token");
    }

    Rng rng(config.seed);
    EmbeddingTable table;
    table.tokens = tokens;
    table.algorithm = config.algorithm;
    table.dim = dim;
    table.window = config.window;
    table.negatives = config.negatives;
    table.seed = config.seed;
    table.vectors.resize(vocab * dim);
    const double half = 0.5 / static_cast<double>(dim);
    for (double& v : table.vectors) v = rng.uniform(-half, half);

    std::vector<double> out_vectors(vocab * dim, 0.0);
    NoiseSampler noise(counts);

    const size_t total_centers = std::max<size_t>(1, center_positions * std::max<size_t>(1, config.epochs));
    size_t processed = 0;

    std::vector<double> grad_in(dim);
    std::vector<double> context_mean(dim);
    std::vector<size_t> context;

    auto draw_negative = [&](size_t avoid) -> size_t {
        for (int tries = 0; tries < 100; ++tries) {
            size_t n = noise.draw(rng);
            if (n != avoid) return n;
        }
        return SIZE_MAX;  // single-candidate noise table
    };

    // One (input, output) update with k negatives; returns the pair loss.
    auto train_pair = [&](double* in_vec, size_t target, double alpha) -> double {
        std::fill(grad_in.begin(), grad_in.end(), 0.0);
        double loss = 0.0;
        for (size_t k = 0; k <= config.negatives; ++k) {
            size_t out_idx;
            double label;
            if (k == 0) {
                out_idx = target;
                label = 1.0;
            } else {
                out_idx = draw_negative(target);
                if (out_idx == SIZE_MAX) continue;
                label = 0.0;
            }
            double* out_vec = out_vectors.data() + out_idx * dim;
            double f = std::clamp(kernels::dot(in_vec, out_vec, dim), -kScoreClamp, kScoreClamp);
            double sig = sigmoid(f);
            loss += (label == 1.0) ? -std::log(std::max(sig, 1e-12))
                                   : -std::log(std::max(1.0 - sig, 1e-12));
            double g = label - sig;
            kernels::axpy(grad_in.data(), g, out_vec, dim);
            apply_update(out_vec, g, in_vec, dim, alpha);
        }
        apply_update(in_vec, 1.0, grad_in.data(), dim, alpha);
        return loss;
    };

    if (stats) stats->epoch_mean_loss.clear();

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        size_t epoch_pairs = 0;
        for (const auto& doc : corpus) {
            for (size_t pos = 0; pos < doc.size(); ++pos) {
                const size_t center = doc[pos];
                if (center == 0) continue;
                const double progress =
                    static_cast<double>(processed) / static_cast<double>(total_centers);
                const double alpha = config.learning_rate * std::max(1.0 - progress, 1e-4);
                ++processed;

                const size_t lo = pos >= config.window ? pos - config.window : 0;
                const size_t hi = std::min(doc.size() - 1, pos + config.window);

                if (config.algorithm == Algorithm::skipgram) {
                    double* center_vec = table.vectors.data() + center * dim;
                    for (size_t c = lo; c <= hi; ++c) {
                        if (c == pos || doc[c] == 0) continue;
                        epoch_loss += train_pair(center_vec, doc[c], alpha);
                        ++epoch_pairs;
                    }
                } else {
                    context.clear();
                    for (size_t c = lo; c <= hi; ++c) {
                        if (c != pos && doc[c] != 0) context.push_back(doc[c]);
                    }
                    if (context.empty()) continue;
                    std::fill(context_mean.begin(), context_mean.end(), 0.0);
                    for (size_t idx : context) {
                        kernels::add(context_mean.data(), table.vectors.data() + idx * dim, dim);
                    }
                    kernels::scale(context_mean.data(), 1.0 / static_cast<double>(context.size()),
                                   dim);
                    // train on the averaged context; re-read the input gradient
                    // accumulated by train_pair and spread it over the context.
                    std::vector<double> before(context_mean);
                    epoch_loss += train_pair(context_mean.data(), center, alpha);
                    ++epoch_pairs;
                    for (size_t j = 0; j < dim; ++j) context_mean[j] -= before[j];
                    for (size_t idx : context) {
                        kernels::add(table.vectors.data() + idx * dim, context_mean.data(), dim);
                    }
                }
            }
        }
        if (stats) {
            stats->epoch_mean_loss.push_back(
                epoch_pairs > 0 ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
            stats->pair_updates += epoch_pairs;
        }
    }

    table.validate();
    return table;
}

std::vector<double> doc_vector(const std::vector<size_t>& indices, const EmbeddingTable& table) {
    std::vector<double> out(table.dim, 0.0);
    if (indices.empty()) return out;
    for (size_t idx : indices) {
        if (idx >= table.vocab_size()) throw ValidationError("doc_vector index out of range");
        kernels::add(out.data(), table.row(idx), table.dim);
    }
    kernels::scale(out.data(), 1.0 / static_cast<double>(indices.size()), table.dim);
    return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
    double ab = kernels::dot(a.data(), b.data(), a.size());
    double aa = kernels::dot(a.data(), a.data(), a.size());
    double bb = kernels::dot(b.data(), b.data(), b.size());
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

void save_embeddings(const EmbeddingTable& table, std::ostream& out) {
    table.validate();
    out << table.vocab_size() << " " << table.dim << " " << algorithm_name(table.algorithm) << " "
        << table.window << " " << table.negatives << " " << table.seed << "\n";
    for (size_t i = 0; i < table.vocab_size(); ++i) {
        out << table.tokens[i];
        const double* row = table.row(i);
        for (size_t j = 0; j < table.dim; ++j) out << " " << format_double(row[j]);
        out << "\n";
    }
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write embeddings file: " + path);
    save_embeddings(table, out);
}

EmbeddingTable load_embeddings(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ValidationError("empty embeddings stream");
    EmbeddingTable table;
    size_t vocab = 0;
    {
        std::istringstream hs(header);
        std::string algo;
        if (!(hs >> vocab >> table.dim >> algo >> table.window >> table.negatives >> table.seed)) {
            throw ValidationError("bad embeddings header: " + header);
        }
        table.algorithm = algorithm_from_name(algo);
    }
    table.vectors.reserve(vocab * table.dim);
    std::string line;
    int lineno = 1;
    while (table.tokens.size() < vocab && std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) throw ParseError("bad embeddings row", lineno, 1);
        table.tokens.push_back(token);
        double v;
        size_t got = 0;
        while (ls >> v) {
            table.vectors.push_back(v);
            ++got;
        }
        if (got != table.dim) {
            throw ValidationError("embeddings row for '" + token + "' has " + std::to_string(got) +
                                  " values, expected " + std::to_string(table.dim));
        }
    }
    if (table.tokens.size() != vocab) {
        throw ValidationError("embeddings data declares " + std::to_string(vocab) +
                              " rows but has " + std::to_string(table.tokens.size()));
    }
    table.validate();
    return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open embeddings file: " + path);
    EmbeddingTable table = load_embeddings(in);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            throw ValidationError("embeddings file has trailing rows beyond its declared count: " +
                                  path);
        }
    }
    return table;
}

}  // namespace lexpred::embed
