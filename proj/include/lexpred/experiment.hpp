#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lexpred/config.hpp"

namespace lexpred::eval {

// Everything the five-scenario runner needs; paths point at artifacts from
// the earlier pipeline stages (gen-corpus, normalize, summarize).
struct ExperimentConfig {
    std::string corpus_path;
    std::string corpus_format = "jsonl";
    std::string normalized_path;  // scenario 5
    std::string summarized_path;  // scenario 2
    std::string out_dir = ".";
    uint64_t seed = 42;
    double days_per_year = 365.0;

    // embeddings
    size_t embedding_dim = 32;
    size_t embedding_window = 5;
    size_t embedding_epochs = 5;
    size_t embedding_negatives = 5;
    double embedding_learning_rate = 0.025;

    // neural models (desk-scale defaults)
    size_t max_sequence_length = 160;
    size_t hidden_size = 16;
    size_t filters_per_width = 8;
    size_t attention_size = 16;
    size_t epochs = 10;
    size_t batch_size = 32;
    double learning_rate = 1e-3;
    double holdout_fraction = 0.2;

    // classical models
    size_t kfold = 5;
    size_t forest_trees = 50;
    size_t forest_depth = 10;
    size_t forest_min_leaf = 2;
    double forest_feature_fraction = 0.5;
    double ridge_lambda = 1.0;

    double vocab_cutoff = 100.0;

    // Consumes the runner's keys from cfg; the caller finishes cfg.
    static ExperimentConfig from_config(Config& cfg);
};

struct ExperimentRow {
    int scenario = 0;
    std::string model;
    std::string variant;
    std::string fold;  // "0".."k-1" for CV, "holdout" for the deep split
    double r2 = 0.0;
    uint64_t seed = 0;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    std::vector<std::pair<std::string, double>> timings;  // cell name -> wall seconds
};

// Scenario 1: skipgram vs CBOW under forest and ridge (k-fold CV).
// Scenario 2: full vs summarized text, same classical models.
// Scenario 3: the eight neural architectures at 100% vocabulary (holdout).
// Scenario 4: vocabulary cutoff sweep on the hybrid attention model.
// Scenario 5: hybrid attention with vs without normalization.
ExperimentReport run_experiment(int scenario, const ExperimentConfig& config);

// results.csv (header scenario,model,variant,fold,r2,seconds,seed), report.md,
// timings.json. The csv/markdown bytes are deterministic for a fixed seed:
// the csv seconds column is a fixed 0.000 placeholder, and measured wall
// times go to timings.json.
std::string render_csv(const ExperimentReport& report);
std::string render_markdown(const ExperimentReport& report, int scenario);
void write_report(const ExperimentReport& report, int scenario, const std::string& out_dir);

}  // namespace lexpred::eval
