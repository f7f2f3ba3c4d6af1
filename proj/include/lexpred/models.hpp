#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lexpred/autodiff.hpp"
#include "lexpred/embed.hpp"

namespace lexpred::models {

enum class Architecture {
    cnn,
    cnn_attention,
    lstm,
    lstm_attention,
    bilstm,
    bilstm_attention,
    hybrid_cnn_bilstm,
    hybrid_cnn_bilstm_attention,
    random_forest,
    ridge,
};

std::string architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);
bool is_neural(Architecture a);
const std::vector<Architecture>& neural_architectures();  // the eight, fixed order

struct TrainingConfig {
    size_t epochs = 10;
    size_t batch_size = 32;
    double learning_rate = 1e-3;
    uint64_t seed = 7;
};

struct ModelConfig {
    Architecture architecture = Architecture::hybrid_cnn_bilstm_attention;
    size_t max_sequence_length = 200;
    bool embedding_trainable = true;
    size_t hidden_size = 16;
    std::vector<size_t> filter_widths = {3, 4, 5};
    size_t filters_per_width = 8;
    size_t attention_size = 16;
    TrainingConfig training;

    void validate() const;
};

struct Dataset {
    std::vector<std::vector<size_t>> sequences;  // encoded token indices
    std::vector<double> labels;                  // years
};

// UNK (0) padding, prefix truncation.
std::vector<size_t> prepare_sequence(const std::vector<size_t>& seq, size_t max_len);

// One of the eight sequence regressors, assembled from autodiff layers.
// Construction seeds all parameters from config.training.seed (Xavier-uniform,
// LSTM forget-gate bias 1.0) and copies the embedding rows; training is
// single-threaded and bit-deterministic.
class NeuralModel {
public:
    NeuralModel(ModelConfig cfg, const embed::EmbeddingTable& embedding);

    void train(const Dataset& data);
    std::vector<double> predict(const std::vector<std::vector<size_t>>& sequences) const;

    const ModelConfig& config() const { return cfg_; }
    const std::vector<double>& loss_history() const { return loss_history_; }
    const std::vector<std::string>& tokens() const { return tokens_; }
    size_t embedding_dim() const { return emb_dim_; }
    // dense-head input width implied by the wiring
    size_t feature_width() const;
    const std::map<std::string, ad::Tensor>& parameters() const { return params_; }

    void save(const std::string& path) const;
    static NeuralModel load(const std::string& path);

private:
    NeuralModel() = default;
    ad::Value forward(ad::Tape& tape, const std::map<std::string, ad::Value>& leaves,
                      const std::vector<size_t>& ids, size_t batch) const;

    ModelConfig cfg_;
    size_t emb_dim_ = 0;
    std::vector<std::string> tokens_;
    std::map<std::string, ad::Tensor> params_;
    std::map<std::string, ad::AdamState> opt_;
    std::vector<double> loss_history_;
};

// ---- classical baselines over mean-pooled document vectors ----

struct ForestConfig {
    size_t n_trees = 50;
    size_t max_depth = 10;
    size_t min_leaf = 2;
    double feature_fraction = 0.5;
    uint64_t seed = 7;
};

struct TreeNode {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Forest {
    ForestConfig config;
    std::vector<std::vector<TreeNode>> trees;
};

// CART regression trees on bootstrap samples; variance-reduction splits over
// a per-node random feature subset.
Forest fit_random_forest(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                         const ForestConfig& config);
double predict_tree(const std::vector<TreeNode>& tree, const std::vector<double>& x);
std::vector<double> predict_forest(const Forest& forest,
                                   const std::vector<std::vector<double>>& x);
void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);
void save_forest(const Forest& forest, std::ostream& out);
Forest load_forest(std::istream& in);

struct RidgeModel {
    std::vector<double> weights;
    double intercept = 0.0;
};

// Closed-form solve of (X^T X + lambda I) w = X^T y with an unpenalized
// intercept. A singular system with lambda = 0 raises NumericError.
RidgeModel fit_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                     double lambda);
std::vector<double> predict_ridge(const RidgeModel& model,
                                  const std::vector<std::vector<double>>& x);

}  // namespace lexpred::models
