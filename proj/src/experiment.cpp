#include "lexpred/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "lexpred/corpus.hpp"
#include "lexpred/embed.hpp"
#include "lexpred/errors.hpp"
#include "lexpred/eval.hpp"
#include "lexpred/models.hpp"
#include "lexpred/rng.hpp"
#include "lexpred/textnorm.hpp"
#include "lexpred/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lexpred::eval {

ExperimentConfig ExperimentConfig::from_config(Config& cfg) {
    ExperimentConfig c;
    c.corpus_path = cfg.get_string("corpus");
    c.corpus_format = cfg.get_string("corpus_format", "jsonl");
    c.normalized_path = cfg.get_string("normalized_corpus", "");
    c.summarized_path = cfg.get_string("summarized_corpus", "");
    c.out_dir = cfg.get_string("out_dir", ".");
    c.seed = cfg.get_seed("seed", c.seed);
    c.days_per_year = cfg.get_real("days_per_year", c.days_per_year);

    c.embedding_dim = static_cast<size_t>(cfg.get_int("embedding_dim", c.embedding_dim));
    c.embedding_window = static_cast<size_t>(cfg.get_int("embedding_window", c.embedding_window));
    c.embedding_epochs = static_cast<size_t>(cfg.get_int("embedding_epochs", c.embedding_epochs));
    c.embedding_negatives =
        static_cast<size_t>(cfg.get_int("embedding_negatives", c.embedding_negatives));
    c.embedding_learning_rate = cfg.get_real("embedding_learning_rate", c.embedding_learning_rate);

    c.max_sequence_length =
        static_cast<size_t>(cfg.get_int("max_sequence_length", c.max_sequence_length));
    c.hidden_size = static_cast<size_t>(cfg.get_int("hidden_size", c.hidden_size));
    c.filters_per_width = static_cast<size_t>(cfg.get_int("filters_per_width", c.filters_per_width));
    c.attention_size = static_cast<size_t>(cfg.get_int("attention_size", c.attention_size));
    c.epochs = static_cast<size_t>(cfg.get_int("epochs", c.epochs));
    c.batch_size = static_cast<size_t>(cfg.get_int("batch_size", c.batch_size));
    c.learning_rate = cfg.get_real("learning_rate", c.learning_rate);
    c.holdout_fraction =
        cfg.get_real_in("holdout_fraction", c.holdout_fraction, 0.0, 1.0, false, false, "(0,1)");

    c.kfold = static_cast<size_t>(cfg.get_int("kfold", c.kfold));
    c.forest_trees = static_cast<size_t>(cfg.get_int("forest_trees", c.forest_trees));
    c.forest_depth = static_cast<size_t>(cfg.get_int("forest_depth", c.forest_depth));
    c.forest_min_leaf = static_cast<size_t>(cfg.get_int("forest_min_leaf", c.forest_min_leaf));
    c.forest_feature_fraction =
        cfg.get_real("forest_feature_fraction", c.forest_feature_fraction);
    c.ridge_lambda = cfg.get_real("ridge_lambda", c.ridge_lambda);
    c.vocab_cutoff =
        cfg.get_real_in("vocab_cutoff", c.vocab_cutoff, 0.0, 100.0, false, true, "(0,100]");
    return c;
}

namespace {

struct ForestRegressor : Regressor {
    models::ForestConfig config;
    models::Forest forest;
    void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) override {
        forest = models::fit_random_forest(x, y, config);
    }
    std::vector<double> predict(const std::vector<std::vector<double>>& x) const override {
        return models::predict_forest(forest, x);
    }
};

struct RidgeRegressor : Regressor {
    double lambda = 1.0;
    models::RidgeModel model;
    void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) override {
        model = models::fit_ridge(x, y, lambda);
    }
    std::vector<double> predict(const std::vector<std::vector<double>>& x) const override {
        return models::predict_ridge(model, x);
    }
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

struct Prepared {
    vocab::Vocabulary vocabulary;
    std::vector<std::vector<size_t>> encoded;
    std::vector<double> labels;
    std::vector<std::string> emb_tokens;  // UNK + kept
};

Prepared prepare(const std::vector<textnorm::TokenizedDocument>& docs, double cutoff) {
    Prepared p{vocab::build_vocabulary(docs, cutoff), {}, {}, {}};
    p.encoded.reserve(docs.size());
    p.labels.reserve(docs.size());
    for (const auto& doc : docs) {
        p.encoded.push_back(p.vocabulary.encode(doc.tokens));
        p.labels.push_back(doc.label_years);
    }
    p.emb_tokens.reserve(p.vocabulary.size());
    for (size_t i = 0; i < p.vocabulary.size(); ++i) p.emb_tokens.push_back(p.vocabulary.token_at(i));
    return p;
}

embed::EmbeddingTable train_embeddings_for(const Prepared& p, const ExperimentConfig& cfg,
                                           embed::Algorithm algo, uint64_t stream) {
    embed::EmbeddingConfig ec;
    ec.algorithm = algo;
    ec.dim = cfg.embedding_dim;
    ec.window = cfg.embedding_window;
    ec.epochs = cfg.embedding_epochs;
    ec.negatives = cfg.embedding_negatives;
    ec.learning_rate = cfg.embedding_learning_rate;
    ec.seed = Rng::derive(cfg.seed, stream);
    return embed::train_embeddings(p.encoded, p.emb_tokens, ec);
}

std::vector<std::vector<double>> doc_vectors(const Prepared& p, const embed::EmbeddingTable& table) {
    std::vector<std::vector<double>> x;
    x.reserve(p.encoded.size());
    for (const auto& seq : p.encoded) x.push_back(embed::doc_vector(seq, table));
    return x;
}

struct Holdout {
    std::vector<size_t> train, test;
};

Holdout holdout_split(size_t n, double test_fraction, uint64_t seed) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    size_t test_n = std::max<size_t>(1, static_cast<size_t>(std::llround(
                                            test_fraction * static_cast<double>(n))));
    test_n = std::min(test_n, n - 1);
    Holdout h;
    h.test.assign(order.begin(), order.begin() + test_n);
    h.train.assign(order.begin() + test_n, order.end());
    return h;
}

models::ModelConfig neural_config(const ExperimentConfig& cfg, models::Architecture arch) {
    models::ModelConfig mc;
    mc.architecture = arch;
    mc.max_sequence_length = cfg.max_sequence_length;
    mc.hidden_size = cfg.hidden_size;
    mc.filters_per_width = cfg.filters_per_width;
    mc.attention_size = cfg.attention_size;
    mc.training.epochs = cfg.epochs;
    mc.training.batch_size = cfg.batch_size;
    mc.training.learning_rate = cfg.learning_rate;
    mc.training.seed = Rng::derive(cfg.seed, 0xd0c + static_cast<uint64_t>(arch));
    return mc;
}

// train on the holdout's train side, report r2 on its test side
double neural_holdout_r2(const Prepared& p, const embed::EmbeddingTable& table,
                         const ExperimentConfig& cfg, models::Architecture arch) {
    Holdout h = holdout_split(p.encoded.size(), cfg.holdout_fraction, Rng::derive(cfg.seed, 0x5b17));
    models::Dataset train_set;
    for (size_t i : h.train) {
        train_set.sequences.push_back(p.encoded[i]);
        train_set.labels.push_back(p.labels[i]);
    }
    models::NeuralModel model(neural_config(cfg, arch), table);
    model.train(train_set);

    std::vector<std::vector<size_t>> test_x;
    std::vector<double> test_y;
    for (size_t i : h.test) {
        test_x.push_back(p.encoded[i]);
        test_y.push_back(p.labels[i]);
    }
    return r_squared(test_y, model.predict(test_x));
}

void classical_rows(ExperimentReport& report, int scenario, const std::string& variant,
                    const Prepared& p, const embed::EmbeddingTable& table,
                    const ExperimentConfig& cfg) {
    auto x = doc_vectors(p, table);
    const struct {
        const char* name;
        RegressorFactory make;
    } regressors[] = {
        {"random_forest",
         [&](uint64_t fold_seed) -> std::unique_ptr<Regressor> {
             auto r = std::make_unique<ForestRegressor>();
             r->config.n_trees = cfg.forest_trees;
             r->config.max_depth = cfg.forest_depth;
             r->config.min_leaf = cfg.forest_min_leaf;
             r->config.feature_fraction = cfg.forest_feature_fraction;
             r->config.seed = fold_seed;
             return r;
         }},
        {"ridge",
         [&](uint64_t) -> std::unique_ptr<Regressor> {
             auto r = std::make_unique<RidgeRegressor>();
             r->lambda = cfg.ridge_lambda;
             return r;
         }},
    };
    for (const auto& reg : regressors) {
        Stopwatch watch;
        FoldResult folds = cross_validate(reg.make, x, p.labels, cfg.kfold, Rng::derive(cfg.seed, 0xcf));
        report.timings.emplace_back(
            "s" + std::to_string(scenario) + "/" + reg.name + "/" + variant, watch.seconds());
        for (size_t f = 0; f < folds.per_fold_r2.size(); ++f) {
            report.rows.push_back({scenario, reg.name, variant, std::to_string(f),
                                   folds.per_fold_r2[f], cfg.seed});
        }
    }
}

std::vector<textnorm::TokenizedDocument> load_document_corpus(const std::string& path,
                                                              const std::string& format,
                                                              double days_per_year,
                                                              const std::string& stage_hint) {
    if (path.empty() || !fs::exists(path)) {
        throw StagedPipelineError("missing corpus artifact '" + path + "'; run `" + stage_hint +
                                  "` first");
    }
    auto docs = corpus::clean_corpus(corpus::load_corpus(path, format));
    return textnorm::tokenize_corpus(docs, days_per_year);
}

}  // namespace

ExperimentReport run_experiment(int scenario, const ExperimentConfig& cfg) {
    if (scenario < 1 || scenario > 5) {
        throw ValidationError("scenario must be 1..5, got " + std::to_string(scenario));
    }
    ExperimentReport report;

    auto corpus_docs = [&]() {
        return load_document_corpus(cfg.corpus_path, cfg.corpus_format, cfg.days_per_year,
                                    "gen-corpus");
    };

    switch (scenario) {
        case 1: {
            Prepared p = prepare(corpus_docs(), 100.0);
            for (auto algo : {embed::Algorithm::skipgram, embed::Algorithm::cbow}) {
                Stopwatch watch;
                auto table = train_embeddings_for(p, cfg, algo, 0xe0);
                report.timings.emplace_back("s1/embeddings/" + embed::algorithm_name(algo),
                                            watch.seconds());
                classical_rows(report, 1, embed::algorithm_name(algo), p, table, cfg);
            }
            break;
        }
        case 2: {
            if (cfg.summarized_path.empty() || !fs::exists(cfg.summarized_path)) {
                throw StagedPipelineError(
                    "scenario 2 needs a summarized corpus (config key summarized_corpus); run "
                    "`summarize` first");
            }
            Prepared full = prepare(corpus_docs(), 100.0);
            Prepared summary = prepare(
                load_document_corpus(cfg.summarized_path, "jsonl", cfg.days_per_year, "summarize"),
                100.0);
            auto table_full = train_embeddings_for(full, cfg, embed::Algorithm::skipgram, 0xe1);
            auto table_summary = train_embeddings_for(summary, cfg, embed::Algorithm::skipgram, 0xe2);
            classical_rows(report, 2, "full", full, table_full, cfg);
            classical_rows(report, 2, "summary", summary, table_summary, cfg);
            break;
        }
        case 3: {
            Prepared p = prepare(corpus_docs(), 100.0);
            auto table = train_embeddings_for(p, cfg, embed::Algorithm::skipgram, 0xe3);
            for (auto arch : models::neural_architectures()) {
                Stopwatch watch;
                double r2 = neural_holdout_r2(p, table, cfg, arch);
                report.timings.emplace_back("s3/" + models::architecture_name(arch),
                                            watch.seconds());
                report.rows.push_back(
                    {3, models::architecture_name(arch), "full", "holdout", r2, cfg.seed});
            }
            break;
        }
        case 4: {
            auto docs = corpus_docs();
            for (double cutoff : {10.0, 30.0, 50.0, 70.0, 100.0}) {
                Stopwatch watch;
                Prepared p = prepare(docs, cutoff);
                auto table = train_embeddings_for(p, cfg, embed::Algorithm::skipgram, 0xe4);
                double r2 = neural_holdout_r2(p, table, cfg,
                                              models::Architecture::hybrid_cnn_bilstm_attention);
                std::string variant = "cutoff_" + std::to_string(static_cast<int>(cutoff));
                report.timings.emplace_back("s4/" + variant, watch.seconds());
                report.rows.push_back(
                    {4, "hybrid_cnn_bilstm_attention", variant, "holdout", r2, cfg.seed});
            }
            break;
        }
        case 5: {
            if (cfg.normalized_path.empty() || !fs::exists(cfg.normalized_path)) {
                throw StagedPipelineError(
                    "scenario 5 needs a normalized corpus (config key normalized_corpus); run "
                    "`normalize` first");
            }
            Prepared raw = prepare(corpus_docs(), 100.0);
            Prepared norm = prepare(textnorm::load_tokenized_jsonl(cfg.normalized_path), 100.0);
            for (const auto& [variant, p] : {std::pair<const char*, const Prepared&>{"raw", raw},
                                             {"normalized", norm}}) {
                Stopwatch watch;
                auto table = train_embeddings_for(p, cfg, embed::Algorithm::skipgram, 0xe5);
                double r2 = neural_holdout_r2(p, table, cfg,
                                              models::Architecture::hybrid_cnn_bilstm_attention);
                report.timings.emplace_back(std::string("s5/") + variant, watch.seconds());
                report.rows.push_back(
                    {5, "hybrid_cnn_bilstm_attention", variant, "holdout", r2, cfg.seed});
            }
            break;
        }
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.scenario, a.model, a.variant, a.fold) <
               std::tie(b.scenario, b.model, b.variant, b.fold);
    });
    return report;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

}  // namespace

std::string render_csv(const ExperimentReport& report) {
    std::string out = "scenario,model,variant,fold,r2,seconds,seed\n";
    for (const auto& r : report.rows) {
        out += std::to_string(r.scenario) + "," + r.model + "," + r.variant + "," + r.fold + "," +
               format_double(r.r2) + ",0.000," + std::to_string(r.seed) + "\n";
    }
    return out;
}

std::string render_markdown(const ExperimentReport& report, int scenario) {
    std::ostringstream out;
    out << "# Experiment scenario " << scenario << "\n\n";
    out << "Fold scores use the R-squared metric; aggregates report mean and population "
           "standard deviation over folds. Wall times are recorded in timings.json.\n\n";

    // aggregate CV rows per (model, variant); holdout rows pass through
    std::map<std::pair<std::string, std::string>, std::vector<double>> cv;
    std::vector<const ExperimentRow*> holdout;
    for (const auto& r : report.rows) {
        if (r.fold == "holdout") {
            holdout.push_back(&r);
        } else {
            cv[{r.model, r.variant}].push_back(r.r2);
        }
    }
    if (!cv.empty()) {
        out << "| model | variant | mean R2 | std R2 | folds |\n";
        out << "|---|---|---|---|---|\n";
        for (const auto& [key, scores] : cv) {
            FoldResult agg = FoldResult::from(scores);
            out << "| " << key.first << " | " << key.second << " | " << format_double(agg.mean_r2)
                << " | " << format_double(agg.std_r2) << " | " << scores.size() << " |\n";
        }
        out << "\n";
    }
    if (!holdout.empty()) {
        out << "| model | variant | holdout R2 |\n";
        out << "|---|---|---|\n";
        for (const auto* r : holdout) {
            out << "| " << r->model << " | " << r->variant << " | " << format_double(r->r2)
                << " |\n";
        }
        out << "\n";
    }
    return out.str();
}

void write_report(const ExperimentReport& report, int scenario, const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "results.csv", std::ios::binary);
        out << render_csv(report);
    }
    {
        std::ofstream out(fs::path(out_dir) / "report.md", std::ios::binary);
        out << render_markdown(report, scenario);
    }
    {
        json j = json::object();
        for (const auto& [name, seconds] : report.timings) j[name] = seconds;
        std::ofstream out(fs::path(out_dir) / "timings.json", std::ios::binary);
        out << j.dump(2) << "\n";
    }
}

}  // namespace lexpred::eval
