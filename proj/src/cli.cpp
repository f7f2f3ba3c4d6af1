#include "lexpred/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lexpred/config.hpp"
#include "lexpred/corpus.hpp"
#include "lexpred/embed.hpp"
#include "lexpred/errors.hpp"
#include "lexpred/eval.hpp"
#include "lexpred/experiment.hpp"
#include "lexpred/manifest.hpp"
#include "lexpred/models.hpp"
#include "lexpred/summarize.hpp"
#include "lexpred/synthetic.hpp"
#include "lexpred/textnorm.hpp"
#include "lexpred/vocab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lexpred::cli {

namespace {

RunManifest begin_manifest(const std::string& command, const std::vector<std::string>& argv) {
    RunManifest m;
    m.command = command;
    m.arguments = argv;
    m.started_at = utc_timestamp();
    return m;
}

void finish_manifest(RunManifest& m, const std::string& path) {
    m.finished_at = utc_timestamp();
    m.write(path);
}

void require_distinct(const std::string& in, const std::string& out) {
    if (!in.empty() && !out.empty() && fs::weakly_canonical(in) == fs::weakly_canonical(out)) {
        throw UsageError("output path '" + out + "' would overwrite the input");
    }
}

// Accepts either a document corpus (xml/jsonl) or an already-tokenized corpus
// (jsonl with a "tokens" field), returning tokenized documents.
std::vector<textnorm::TokenizedDocument> load_any_tokenized(const std::string& path,
                                                            const std::string& format,
                                                            double days_per_year) {
    if (format == "jsonl") {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open corpus: " + path);
        std::string first;
        while (std::getline(in, first) && first.empty()) {
        }
        if (!first.empty()) {
            json j = json::parse(first, nullptr, false);
            if (!j.is_discarded() && j.contains("tokens")) {
                return textnorm::load_tokenized_jsonl(path);
            }
        }
    }
    auto docs = corpus::clean_corpus(corpus::load_corpus(path, format));
    return textnorm::tokenize_corpus(docs, days_per_year);
}

// ---- classical model container (forest/ridge + embeddings for doc vectors) ----

struct ClassicalModel {
    models::Architecture architecture = models::Architecture::random_forest;
    models::Forest forest;
    models::RidgeModel ridge;
    double ridge_lambda = 0.0;
    embed::EmbeddingTable embeddings;

    std::vector<double> predict(const std::vector<std::vector<size_t>>& encoded) const {
        std::vector<std::vector<double>> x;
        x.reserve(encoded.size());
        for (const auto& seq : encoded) x.push_back(embed::doc_vector(seq, embeddings));
        return architecture == models::Architecture::random_forest
                   ? models::predict_forest(forest, x)
                   : models::predict_ridge(ridge, x);
    }
};

void save_classical(const ClassicalModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model file: " + path);
    out << "lexpred-classical v1\n";
    out << "architecture = " << models::architecture_name(model.architecture) << "\n";
    if (model.architecture == models::Architecture::ridge) {
        out.precision(17);
        out << "lambda = " << model.ridge_lambda << "\n";
        out << "intercept = " << model.ridge.intercept << "\n";
        out << "weights =";
        for (double w : model.ridge.weights) out << " " << w;
        out << "\n";
    } else {
        models::save_forest(model.forest, out);
    }
    out << "embeddings:\n";
    embed::save_embeddings(model.embeddings, out);
}

ClassicalModel load_classical(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "lexpred-classical v1") {
        throw ValidationError("not a classical model file: " + path);
    }
    ClassicalModel model;
    if (!std::getline(in, line) || line.rfind("architecture = ", 0) != 0) {
        throw ValidationError("classical model missing architecture");
    }
    model.architecture = models::architecture_from_name(line.substr(15));
    if (model.architecture == models::Architecture::ridge) {
        auto value_of = [&](const std::string& key) {
            if (!std::getline(in, line) || line.rfind(key, 0) != 0) {
                throw ValidationError("classical model missing '" + key + "'");
            }
            return line.substr(key.size());
        };
        model.ridge_lambda = std::stod(value_of("lambda = "));
        model.ridge.intercept = std::stod(value_of("intercept = "));
        std::istringstream ws(value_of("weights ="));
        double w;
        while (ws >> w) model.ridge.weights.push_back(w);
    } else {
        model.forest = models::load_forest(in);
    }
    if (!std::getline(in, line) || line != "embeddings:") {
        throw ValidationError("classical model missing its embeddings block");
    }
    model.embeddings = embed::load_embeddings(in);
    return model;
}

std::vector<std::vector<size_t>> encode_with_tokens(
    const std::vector<textnorm::TokenizedDocument>& docs, const std::vector<std::string>& tokens) {
    std::map<std::string, size_t> index;
    for (size_t i = 1; i < tokens.size(); ++i) index[tokens[i]] = i;
    std::vector<std::vector<size_t>> encoded(docs.size());
    for (size_t d = 0; d < docs.size(); ++d) {
        encoded[d].reserve(docs[d].tokens.size());
        for (const auto& t : docs[d].tokens) {
            auto it = index.find(t);
            encoded[d].push_back(it == index.end() ? 0 : it->second);
        }
    }
    return encoded;
}

// ---- subcommand bodies ----

int cmd_gen_corpus(const std::vector<std::string>& argv, const std::string& spec_path,
                   const std::string& out_dir, const std::string& format) {
    auto spec = corpus::parse_synthetic_spec_file(spec_path);
    auto result = corpus::generate_synthetic_corpus(spec);
    fs::create_directories(out_dir);

    RunManifest manifest = begin_manifest("gen-corpus", argv);
    manifest.seed = spec.seed;
    manifest.inputs = {spec_path};

    std::string corpus_out;
    if (format == "xml") {
        corpus_out = (fs::path(out_dir) / "xml").string();
        corpus::save_corpus_xml(result.docs, corpus_out);
    } else {
        corpus_out = (fs::path(out_dir) / "corpus.jsonl").string();
        corpus::save_corpus_jsonl(result.docs, corpus_out);
    }
    const std::string log_out = (fs::path(out_dir) / "corruptions.jsonl").string();
    result.log.save_jsonl(log_out);
    const std::string blank_out = (fs::path(out_dir) / "blanked.txt").string();
    {
        std::ofstream out(blank_out, std::ios::binary);
        for (const auto& id : result.blanked_ids) out << id << "\n";
    }
    manifest.outputs = {corpus_out, log_out, blank_out};
    finish_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());

    std::cout << "generated " << result.docs.size() << " documents (" << result.blanked_ids.size()
              << " blanked), " << result.log.entries.size() << " corruptions -> " << out_dir
              << "\n";
    return 0;
}

int cmd_normalize(const std::vector<std::string>& argv, const std::string& in_path,
                  const std::string& format, const std::string& lexicon_arg, long long min_freq,
                  const std::string& out_path, std::string lexicon_out, double days_per_year) {
    require_distinct(in_path, out_path);
    auto docs = load_any_tokenized(in_path, format, days_per_year);

    RunManifest manifest = begin_manifest("normalize", argv);
    manifest.inputs = {in_path};

    std::unique_ptr<textnorm::CorrectionLexicon> lexicon;
    if (lexicon_arg == "build") {
        lexicon = std::make_unique<textnorm::CorrectionLexicon>(
            textnorm::build_lexicon(docs, min_freq));
        if (lexicon_out.empty()) lexicon_out = out_path + ".lexicon.tsv";
        lexicon->save(lexicon_out);
        manifest.outputs.push_back(lexicon_out);
    } else {
        lexicon = std::make_unique<textnorm::CorrectionLexicon>(
            textnorm::CorrectionLexicon::load(lexicon_arg));
        manifest.inputs.push_back(lexicon_arg);
    }

    std::vector<textnorm::TokenizedDocument> normalized;
    normalized.reserve(docs.size());
    for (const auto& doc : docs) normalized.push_back(textnorm::normalize_document(doc, *lexicon));
    textnorm::save_tokenized_jsonl(normalized, out_path);
    manifest.outputs.insert(manifest.outputs.begin(), out_path);
    finish_manifest(manifest, out_path + ".manifest.json");

    std::cout << "normalized " << normalized.size() << " documents with a lexicon of "
              << lexicon->member_count() << " members (min frequency " << lexicon->min_frequency()
              << ") -> " << out_path << "\n";
    return 0;
}

int cmd_summarize(const std::vector<std::string>& argv, const std::string& in_path,
                  const std::string& format, double ratio, const std::string& out_path) {
    require_distinct(in_path, out_path);
    auto docs = corpus::load_corpus(in_path, format);
    for (auto& doc : docs) {
        const std::string summary = summarize::summarize(corpus::select_sections(doc), ratio);
        for (auto name : corpus::kPredictiveSections) doc.sections[std::string(name)] = "";
        doc.sections["Facts"] = summary;
    }
    corpus::save_corpus_jsonl(docs, out_path);

    RunManifest manifest = begin_manifest("summarize", argv);
    manifest.inputs = {in_path};
    manifest.outputs = {out_path};
    finish_manifest(manifest, out_path + ".manifest.json");

    std::cout << "summarized " << docs.size() << " documents at ratio " << ratio << " -> "
              << out_path << "\n";
    return 0;
}

int cmd_build_vocab(const std::vector<std::string>& argv, const std::string& in_path,
                    const std::string& format, double cutoff, const std::string& out_path,
                    double days_per_year) {
    require_distinct(in_path, out_path);
    auto docs = load_any_tokenized(in_path, format, days_per_year);
    auto vocabulary = vocab::build_vocabulary(docs, cutoff);
    vocabulary.save(out_path);

    RunManifest manifest = begin_manifest("build-vocab", argv);
    manifest.inputs = {in_path};
    manifest.outputs = {out_path};
    finish_manifest(manifest, out_path + ".manifest.json");

    std::cout << "kept " << vocabulary.kept_count() << " of " << vocabulary.total_distinct()
              << " distinct tokens at cutoff " << cutoff << "% -> " << out_path << "\n";
    return 0;
}

int cmd_train_embeddings(const std::vector<std::string>& argv, const std::string& in_path,
                         const std::string& format, const std::string& vocab_path,
                         const std::string& algorithm, size_t dim, size_t window, size_t epochs,
                         size_t negatives, double lr, uint64_t seed, const std::string& out_path,
                         double days_per_year) {
    auto docs = load_any_tokenized(in_path, format, days_per_year);
    auto vocabulary = vocab::Vocabulary::load(vocab_path);

    std::vector<std::vector<size_t>> encoded;
    encoded.reserve(docs.size());
    for (const auto& doc : docs) encoded.push_back(vocabulary.encode(doc.tokens));
    std::vector<std::string> tokens;
    tokens.reserve(vocabulary.size());
    for (size_t i = 0; i < vocabulary.size(); ++i) tokens.push_back(vocabulary.token_at(i));

    embed::EmbeddingConfig config;
    config.algorithm = embed::algorithm_from_name(algorithm);
    config.dim = dim;
    config.window = window;
    config.epochs = epochs;
    config.negatives = negatives;
    config.learning_rate = lr;
    config.seed = seed;

    embed::TrainStats stats;
    auto table = embed::train_embeddings(encoded, tokens, config, &stats);
    embed::save_embeddings(table, out_path);

    RunManifest manifest = begin_manifest("train-embeddings", argv);
    manifest.seed = seed;
    manifest.inputs = {in_path, vocab_path};
    manifest.outputs = {out_path};
    finish_manifest(manifest, out_path + ".manifest.json");

    std::cout << "trained " << algorithm << " embeddings (" << table.vocab_size() << " x " << dim
              << ")";
    if (!stats.epoch_mean_loss.empty()) {
        std::cout << ", mean pair loss " << stats.epoch_mean_loss.front() << " -> "
                  << stats.epoch_mean_loss.back();
    }
    std::cout << " -> " << out_path << "\n";
    return 0;
}

int cmd_train(const std::vector<std::string>& argv, const std::string& arch_name,
              const std::string& config_path) {
    Config cfg = Config::parse_file(config_path);
    const std::string corpus_path = cfg.get_string("corpus");
    const std::string corpus_format = cfg.get_string("corpus_format", "jsonl");
    const std::string vocab_path = cfg.get_string("vocab");
    const std::string emb_path = cfg.get_string("embeddings");
    const std::string out_path = cfg.get_string("out");
    const double days_per_year = cfg.get_real("days_per_year", 365.0);

    models::Architecture arch = models::architecture_from_name(arch_name);

    models::ModelConfig mc;
    mc.architecture = models::is_neural(arch) ? arch : models::Architecture::lstm;
    mc.max_sequence_length =
        static_cast<size_t>(cfg.get_int("max_sequence_length", 200));
    mc.embedding_trainable = cfg.get_bool("embedding_trainable", true);
    mc.hidden_size = static_cast<size_t>(cfg.get_int("hidden_size", 16));
    mc.filters_per_width = static_cast<size_t>(cfg.get_int("filters_per_width", 8));
    mc.attention_size = static_cast<size_t>(cfg.get_int("attention_size", 16));
    mc.training.epochs = static_cast<size_t>(cfg.get_int("epochs", 10));
    mc.training.batch_size = static_cast<size_t>(cfg.get_int("batch_size", 32));
    mc.training.learning_rate = cfg.get_real("learning_rate", 1e-3);
    mc.training.seed = cfg.get_seed("seed", 7);

    models::ForestConfig fc;
    fc.n_trees = static_cast<size_t>(cfg.get_int("forest_trees", 50));
    fc.max_depth = static_cast<size_t>(cfg.get_int("forest_depth", 10));
    fc.min_leaf = static_cast<size_t>(cfg.get_int("forest_min_leaf", 2));
    fc.feature_fraction = cfg.get_real("forest_feature_fraction", 0.5);
    fc.seed = mc.training.seed;
    const double ridge_lambda = cfg.get_real("ridge_lambda", 1.0);
    cfg.finish();

    auto docs = load_any_tokenized(corpus_path, corpus_format, days_per_year);
    auto vocabulary = vocab::Vocabulary::load(vocab_path);
    auto table = embed::load_embeddings(emb_path);
    if (table.vocab_size() != vocabulary.size()) {
        throw ValidationError("embeddings hold " + std::to_string(table.vocab_size()) +
                              " rows but the vocabulary has " + std::to_string(vocabulary.size()) +
                              " entries");
    }
    for (size_t i = 0; i < table.vocab_size(); ++i) {
        if (table.tokens[i] != vocabulary.token_at(i)) {
            throw ValidationError("embeddings row " + std::to_string(i) +
                                  " does not match the vocabulary token");
        }
    }

    models::Dataset dataset;
    for (const auto& doc : docs) {
        dataset.sequences.push_back(vocabulary.encode(doc.tokens));
        dataset.labels.push_back(doc.label_years);
    }

    RunManifest manifest = begin_manifest("train", argv);
    manifest.seed = mc.training.seed;
    manifest.inputs = {config_path, corpus_path, vocab_path, emb_path};
    manifest.outputs = {out_path};

    if (models::is_neural(arch)) {
        models::NeuralModel model(mc, table);
        model.train(dataset);
        model.save(out_path);
        std::cout << "trained " << arch_name << " for " << mc.training.epochs
                  << " epochs, mean loss " << model.loss_history().front() << " -> "
                  << model.loss_history().back() << ", saved " << out_path << "\n";
    } else {
        std::vector<std::vector<double>> x;
        x.reserve(dataset.sequences.size());
        for (const auto& seq : dataset.sequences) x.push_back(embed::doc_vector(seq, table));
        ClassicalModel model;
        model.architecture = arch;
        model.embeddings = table;
        if (arch == models::Architecture::random_forest) {
            model.forest = models::fit_random_forest(x, dataset.labels, fc);
        } else {
            model.ridge_lambda = ridge_lambda;
            model.ridge = models::fit_ridge(x, dataset.labels, ridge_lambda);
        }
        save_classical(model, out_path);
        std::cout << "trained " << arch_name << " on " << x.size() << " documents, saved "
                  << out_path << "\n";
    }
    finish_manifest(manifest, out_path + ".manifest.json");
    return 0;
}

int cmd_evaluate(const std::vector<std::string>& argv, const std::string& model_path,
                 const std::string& test_path, const std::string& format, double days_per_year,
                 std::string out_path) {
    std::string magic;
    {
        std::ifstream in(model_path, std::ios::binary);
        if (!in) throw ValidationError("cannot open model file: " + model_path);
        std::getline(in, magic);
    }
    auto docs = load_any_tokenized(test_path, format, days_per_year);
    std::vector<double> labels;
    labels.reserve(docs.size());
    for (const auto& doc : docs) labels.push_back(doc.label_years);

    std::vector<double> predictions;
    std::string arch_name;
    if (magic == "lexpred-model v1") {
        auto model = models::NeuralModel::load(model_path);
        arch_name = models::architecture_name(model.config().architecture);
        predictions = model.predict(encode_with_tokens(docs, model.tokens()));
    } else if (magic == "lexpred-classical v1") {
        auto model = load_classical(model_path);
        arch_name = models::architecture_name(model.architecture);
        predictions = model.predict(encode_with_tokens(docs, model.embeddings.tokens));
    } else {
        throw ValidationError("unrecognized model file: " + model_path);
    }

    const double r2 = eval::r_squared(labels, predictions);
    std::cout << "r2 = " << r2 << " on " << labels.size() << " documents (" << arch_name << ")\n";

    if (out_path.empty()) out_path = model_path + ".eval.json";
    {
        json j;
        j["model"] = model_path;
        j["test_corpus"] = test_path;
        j["architecture"] = arch_name;
        j["n"] = labels.size();
        j["r2"] = r2;
        std::ofstream out(out_path, std::ios::binary);
        out << j.dump(2) << "\n";
    }
    RunManifest manifest = begin_manifest("evaluate", argv);
    manifest.inputs = {model_path, test_path};
    manifest.outputs = {out_path};
    finish_manifest(manifest, out_path + ".manifest.json");
    return 0;
}

int cmd_experiment(const std::vector<std::string>& argv, int scenario,
                   const std::string& config_path, const std::string& out_override) {
    Config cfg = Config::parse_file(config_path);
    eval::ExperimentConfig ec = eval::ExperimentConfig::from_config(cfg);
    cfg.finish();
    if (!out_override.empty()) ec.out_dir = out_override;

    auto report = eval::run_experiment(scenario, ec);
    eval::write_report(report, scenario, ec.out_dir);

    RunManifest manifest = begin_manifest("experiment", argv);
    manifest.seed = ec.seed;
    manifest.inputs = {config_path, ec.corpus_path};
    if (!ec.normalized_path.empty()) manifest.inputs.push_back(ec.normalized_path);
    if (!ec.summarized_path.empty()) manifest.inputs.push_back(ec.summarized_path);
    for (const char* name : {"results.csv", "report.md", "timings.json"}) {
        manifest.outputs.push_back((fs::path(ec.out_dir) / name).string());
    }
    finish_manifest(manifest, (fs::path(ec.out_dir) / "manifest.json").string());

    for (const auto& row : report.rows) {
        std::cout << "scenario " << row.scenario << "  " << row.model << "  " << row.variant
                  << "  fold " << row.fold << "  r2 " << row.r2 << "\n";
    }
    std::cout << "wrote " << report.rows.size() << " rows -> " << ec.out_dir << "/results.csv\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"lexpred: punishment-duration prediction from court rulings"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("lexpred ") + kToolVersion);

    int exit_code = 0;
    const std::vector<std::string>& argv = args;

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus from a spec file");
    std::string g_spec, g_out, g_format;
    g_format = "jsonl";
    gen->add_option("--spec", g_spec, "synthetic spec (key = value)")->required();
    gen->add_option("--out", g_out, "output directory")->required();
    gen->add_option("--format", g_format, "corpus format: jsonl|xml")
        ->check(CLI::IsMember({"jsonl", "xml"}));
    gen->callback([&]() { exit_code = cmd_gen_corpus(argv, g_spec, g_out, g_format); });

    // normalize
    auto* norm = app.add_subcommand("normalize", "Two-step text normalization");
    std::string n_in, n_format, n_lexicon, n_out, n_lexicon_out;
    long long n_min_freq;
    double n_dpy;
    n_format = "jsonl";
    n_lexicon = "build";
    n_lexicon_out.clear();
    n_min_freq = 10;
    n_dpy = 365.0;
    norm->add_option("--in", n_in, "document or tokenized corpus")->required();
    norm->add_option("--format", n_format, "input format: jsonl|xml")
        ->check(CLI::IsMember({"jsonl", "xml"}));
    norm->add_option("--lexicon", n_lexicon, "lexicon file, or 'build' to derive one");
    norm->add_option("--min-freq", n_min_freq, "membership threshold when building");
    norm->add_option("--out", n_out, "normalized corpus (tokens JSONL)")->required();
    norm->add_option("--lexicon-out", n_lexicon_out, "where to save a built lexicon");
    norm->add_option("--days-per-year", n_dpy, "label conversion factor");
    norm->callback([&]() {
        exit_code = cmd_normalize(argv, n_in, n_format, n_lexicon, n_min_freq, n_out, n_lexicon_out,
                                  n_dpy);
    });

    // summarize
    auto* summ = app.add_subcommand("summarize", "TF-IDF extractive summarization");
    std::string s_in, s_format, s_out;
    double s_ratio;
    s_format = "jsonl";
    s_ratio = 0.3;
    summ->add_option("--in", s_in, "document corpus")->required();
    summ->add_option("--format", s_format, "input format: jsonl|xml")
        ->check(CLI::IsMember({"jsonl", "xml"}));
    summ->add_option("--ratio", s_ratio, "fraction of sentences to keep, in (0,1]");
    summ->add_option("--out", s_out, "summarized document corpus (JSONL)")->required();
    summ->callback([&]() { exit_code = cmd_summarize(argv, s_in, s_format, s_ratio, s_out); });

    // build-vocab
    auto* bv = app.add_subcommand("build-vocab", "Frequency-ranked vocabulary with a cutoff");
    std::string v_in, v_format, v_out;
    double v_cutoff, v_dpy;
    v_format = "jsonl";
    v_cutoff = 30.0;
    v_dpy = 365.0;
    bv->add_option("--in", v_in, "document or tokenized corpus")->required();
    bv->add_option("--format", v_format, "input format: jsonl|xml")
        ->check(CLI::IsMember({"jsonl", "xml"}));
    bv->add_option("--cutoff", v_cutoff, "kept percentage in (0,100]");
    bv->add_option("--out", v_out, "vocabulary file")->required();
    bv->add_option("--days-per-year", v_dpy, "label conversion factor");
    bv->callback([&]() { exit_code = cmd_build_vocab(argv, v_in, v_format, v_cutoff, v_out, v_dpy); });

    // train-embeddings
    auto* te = app.add_subcommand("train-embeddings", "Train skipgram or CBOW embeddings");
    std::string e_in, e_format, e_vocab, e_algo, e_out;
    size_t e_dim, e_window, e_epochs, e_negatives;
    double e_lr, e_dpy;
    uint64_t e_seed;
    e_format = "jsonl";
    e_algo = "skipgram";
    e_dim = 100;
    e_window = 5;
    e_epochs = 5;
    e_negatives = 5;
    e_lr = 0.025;
    e_dpy = 365.0;
    e_seed = 1;
    te->add_option("--in", e_in, "document or tokenized corpus")->required();
    te->add_option("--format", e_format, "input format: jsonl|xml")
        ->check(CLI::IsMember({"jsonl", "xml"}));
    te->add_option("--vocab", e_vocab, "vocabulary file")->required();
    te->add_option("--algorithm", e_algo, "skipgram|cbow")
        ->check(CLI::IsMember({"skipgram", "cbow"}));
    te->add_option("--dim", e_dim, "vector dimensionality");
    te->add_option("--window", e_window, "context window");
    te->add_option("--epochs", e_epochs, "training epochs");
    te->add_option("--negatives", e_negatives, "negative samples per pair");
    te->add_option("--lr", e_lr, "initial learning rate");
    te->add_option("--seed", e_seed, "RNG seed");
    te->add_option("--out", e_out, "embeddings file")->required();
    te->add_option("--days-per-year", e_dpy, "label conversion factor");
    te->callback([&]() {
        exit_code = cmd_train_embeddings(argv, e_in, e_format, e_vocab, e_algo, e_dim, e_window,
                                         e_epochs, e_negatives, e_lr, e_seed, e_out, e_dpy);
    });

    // train
    auto* tr = app.add_subcommand("train", "Train a regression model");
    std::string t_arch, t_config;
    tr->add_option("--arch", t_arch, "architecture name")->required();
    tr->add_option("--config", t_config, "training config file")->required();
    tr->callback([&]() { exit_code = cmd_train(argv, t_arch, t_config); });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a trained model (R-squared)");
    std::string ev_model, ev_test, ev_format, ev_out;
    double ev_dpy;
    ev_format = "jsonl";
    ev_dpy = 365.0;
    ev_out.clear();
    ev->add_option("--model", ev_model, "model file")->required();
    ev->add_option("--test", ev_test, "test corpus")->required();
    ev->add_option("--format", ev_format, "corpus format: jsonl|xml")
        ->check(CLI::IsMember({"jsonl", "xml"}));
    ev->add_option("--days-per-year", ev_dpy, "label conversion factor");
    ev->add_option("--out", ev_out, "evaluation JSON path");
    ev->callback([&]() {
        exit_code = cmd_evaluate(argv, ev_model, ev_test, ev_format, ev_dpy, ev_out);
    });

    // experiment
    auto* ex = app.add_subcommand("experiment", "Run one of the five experiment scenarios");
    int x_scenario;
    std::string x_config, x_out;
    x_scenario = 0;
    x_out.clear();
    ex->add_option("--scenario", x_scenario, "scenario number 1..5")
        ->required()
        ->check(CLI::Range(1, 5));
    ex->add_option("--config", x_config, "experiment config file")->required();
    ex->add_option("--out", x_out, "output directory (overrides config out_dir)");
    ex->callback([&]() { exit_code = cmd_experiment(argv, x_scenario, x_config, x_out); });

    try {
        std::vector<const char*> cargv;
        cargv.push_back("lexpred");
        for (const auto& a : args) cargv.push_back(a.c_str());
        app.parse(static_cast<int>(cargv.size()), cargv.data());
        return exit_code;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the usage error
        return code == 0 ? 0 : 1;
    } catch (const ConfigValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::usage:
                return 1;
            case ErrorKind::data:
                return 2;
            case ErrorKind::numeric:
                return 3;
        }
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace lexpred::cli
