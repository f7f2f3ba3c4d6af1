#include "lexpred/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lexpred/rng.hpp"

namespace lexpred::models {

namespace {

const std::vector<std::pair<Architecture, const char*>> kArchNames = {
    {Architecture::cnn, "cnn"},
    {Architecture::cnn_attention, "cnn_attention"},
    {Architecture::lstm, "lstm"},
    {Architecture::lstm_attention, "lstm_attention"},
    {Architecture::bilstm, "bilstm"},
    {Architecture::bilstm_attention, "bilstm_attention"},
    {Architecture::hybrid_cnn_bilstm, "hybrid_cnn_bilstm"},
    {Architecture::hybrid_cnn_bilstm_attention, "hybrid_cnn_bilstm_attention"},
    {Architecture::random_forest, "random_forest"},
    {Architecture::ridge, "ridge"},
};

}  // namespace

std::string architecture_name(Architecture a) {
    for (const auto& [arch, name] : kArchNames) {
        if (arch == a) return name;
    }
    throw ValidationError("unknown architecture");
}

Architecture architecture_from_name(const std::string& name) {
    for (const auto& [arch, arch_name] : kArchNames) {
        if (name == arch_name) return arch;
    }
    throw ValidationError("unknown architecture '" + name + "'");
}

bool is_neural(Architecture a) {
    return a != Architecture::random_forest && a != Architecture::ridge;
}

const std::vector<Architecture>& neural_architectures() {
    static const std::vector<Architecture> archs = {
        Architecture::cnn,
        Architecture::cnn_attention,
        Architecture::lstm,
        Architecture::lstm_attention,
        Architecture::bilstm,
        Architecture::bilstm_attention,
        Architecture::hybrid_cnn_bilstm,
        Architecture::hybrid_cnn_bilstm_attention,
    };
    return archs;
}

namespace {

bool uses_cnn(Architecture a) {
    return a == Architecture::cnn || a == Architecture::cnn_attention ||
           a == Architecture::hybrid_cnn_bilstm || a == Architecture::hybrid_cnn_bilstm_attention;
}

bool uses_bilstm(Architecture a) {
    return a == Architecture::bilstm || a == Architecture::bilstm_attention ||
           a == Architecture::hybrid_cnn_bilstm || a == Architecture::hybrid_cnn_bilstm_attention;
}

bool uses_lstm(Architecture a) {
    return a == Architecture::lstm || a == Architecture::lstm_attention || uses_bilstm(a);
}

// attention over the recurrent states (not the per-width CNN attention)
bool uses_seq_attention(Architecture a) {
    return a == Architecture::lstm_attention || a == Architecture::bilstm_attention ||
           a == Architecture::hybrid_cnn_bilstm_attention;
}

}  // namespace

void ModelConfig::validate() const {
    if (!is_neural(architecture)) {
        throw ValidationError("ModelConfig is for the neural architectures");
    }
    if (max_sequence_length == 0) throw ValidationError("max_sequence_length must be positive");
    if (hidden_size == 0 && uses_lstm(architecture)) {
        throw ValidationError("hidden_size must be positive");
    }
    if (uses_cnn(architecture)) {
        if (filter_widths.empty() || filters_per_width == 0) {
            throw ValidationError("CNN architectures need filter widths and a filter count");
        }
        size_t widest = *std::max_element(filter_widths.begin(), filter_widths.end());
        if (max_sequence_length < widest) {
            throw ValidationError("max_sequence_length " + std::to_string(max_sequence_length) +
                                  " is smaller than the widest filter " + std::to_string(widest));
        }
    }
    if (attention_size == 0 &&
        (uses_seq_attention(architecture) || architecture == Architecture::cnn_attention)) {
        throw ValidationError("attention_size must be positive");
    }
    if (training.batch_size == 0) throw ValidationError("batch_size must be positive");
}

std::vector<size_t> prepare_sequence(const std::vector<size_t>& seq, size_t max_len) {
    std::vector<size_t> out(max_len, 0);
    const size_t n = std::min(seq.size(), max_len);
    std::copy_n(seq.begin(), n, out.begin());
    return out;
}

NeuralModel::NeuralModel(ModelConfig cfg, const embed::EmbeddingTable& embedding)
    : cfg_(std::move(cfg)), emb_dim_(embedding.dim), tokens_(embedding.tokens) {
    cfg_.validate();
    embedding.validate();

    Rng rng(cfg_.training.seed);
    auto xavier = [&rng](std::vector<size_t> shape, size_t fan_in, size_t fan_out) {
        ad::Tensor t(std::move(shape));
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : t.data) v = rng.uniform(-limit, limit);
        return t;
    };

    params_["embedding"] =
        ad::Tensor::from({embedding.vocab_size(), emb_dim_}, embedding.vectors);

    const size_t h = cfg_.hidden_size;
    const size_t f = cfg_.filters_per_width;
    const size_t a = cfg_.attention_size;
    const Architecture arch = cfg_.architecture;

    if (uses_cnn(arch)) {
        for (size_t w : cfg_.filter_widths) {
            const std::string tag = "conv" + std::to_string(w);
            params_[tag + "_w"] = xavier({f, w * emb_dim_}, w * emb_dim_, f);
            params_[tag + "_b"] = ad::Tensor({f});
        }
        if (arch == Architecture::cnn_attention) {
            for (size_t w : cfg_.filter_widths) {
                const std::string tag = "att" + std::to_string(w);
                params_[tag + "_w"] = xavier({f, a}, f, a);
                params_[tag + "_b"] = ad::Tensor({a});
                params_[tag + "_v"] = xavier({a}, a, 1);
            }
        }
    }
    if (uses_lstm(arch)) {
        auto lstm_params = [&](const std::string& prefix) {
            params_[prefix + "_wx"] = xavier({emb_dim_, 4 * h}, emb_dim_, h);
            params_[prefix + "_wh"] = xavier({h, 4 * h}, h, h);
            ad::Tensor bias({4 * h});
            for (size_t k = 0; k < h; ++k) bias.data[h + k] = 1.0;  // forget gate
            params_[prefix + "_b"] = std::move(bias);
        };
        lstm_params("lstm");
        if (uses_bilstm(arch)) lstm_params("lstm_bwd");
    }
    if (uses_seq_attention(arch)) {
        const size_t d = uses_bilstm(arch) ? 2 * h : h;
        params_["att_w"] = xavier({d, a}, d, a);
        params_["att_b"] = ad::Tensor({a});
        params_["att_v"] = xavier({a}, a, 1);
    }
    const size_t k = feature_width();
    params_["dense_w"] = xavier({k, 1}, k, 1);
    params_["dense_b"] = ad::Tensor({1});
}

size_t NeuralModel::feature_width() const {
    const size_t h = cfg_.hidden_size;
    const size_t cnn_w = cfg_.filter_widths.size() * cfg_.filters_per_width;
    switch (cfg_.architecture) {
        case Architecture::cnn:
        case Architecture::cnn_attention:
            return cnn_w;
        case Architecture::lstm:
        case Architecture::lstm_attention:
            return h;
        case Architecture::bilstm:
        case Architecture::bilstm_attention:
            return 2 * h;
        case Architecture::hybrid_cnn_bilstm:
        case Architecture::hybrid_cnn_bilstm_attention:
            return cnn_w + 2 * h;
        default:
            throw ValidationError("feature_width: not a neural architecture");
    }
}

ad::Value NeuralModel::forward(ad::Tape& tape, const std::map<std::string, ad::Value>& leaves,
                               const std::vector<size_t>& ids, size_t batch) const {
    const size_t len = cfg_.max_sequence_length;
    auto leaf = [&](const std::string& name) { return leaves.at(name); };

    ad::Value emb = tape.embedding_rows(leaf("embedding"), ids, batch, len);

    auto cnn_branch = [&]() -> ad::Value {
        std::vector<ad::Value> pooled;
        for (size_t w : cfg_.filter_widths) {
            const std::string tag = "conv" + std::to_string(w);
            ad::Value c = tape.conv1d(emb, leaf(tag + "_w"), leaf(tag + "_b"), w);
            ad::Value r = tape.relu(c);
            if (cfg_.architecture == Architecture::cnn_attention) {
                const std::string att = "att" + std::to_string(w);
                pooled.push_back(
                    tape.attention(r, leaf(att + "_w"), leaf(att + "_b"), leaf(att + "_v")).context);
            } else {
                pooled.push_back(tape.global_max_pool(r));
            }
        }
        return pooled.size() == 1 ? pooled[0] : tape.concat_last(pooled);
    };

    auto recurrent_states = [&]() -> ad::Value {
        if (uses_bilstm(cfg_.architecture)) {
            return ad::bilstm(tape, emb, leaf("lstm_wx"), leaf("lstm_wh"), leaf("lstm_b"),
                              leaf("lstm_bwd_wx"), leaf("lstm_bwd_wh"), leaf("lstm_bwd_b"));
        }
        return tape.lstm(emb, leaf("lstm_wx"), leaf("lstm_wh"), leaf("lstm_b"));
    };

    auto recurrent_feature = [&]() -> ad::Value {
        if (uses_seq_attention(cfg_.architecture)) {
            ad::Value states = recurrent_states();
            return tape.attention(states, leaf("att_w"), leaf("att_b"), leaf("att_v")).context;
        }
        if (uses_bilstm(cfg_.architecture)) {
            // last forward hidden ++ last backward hidden
            ad::Value fwd = tape.lstm(emb, leaf("lstm_wx"), leaf("lstm_wh"), leaf("lstm_b"));
            ad::Value rev = tape.reverse_time(emb);
            ad::Value bwd = tape.lstm(rev, leaf("lstm_bwd_wx"), leaf("lstm_bwd_wh"), leaf("lstm_bwd_b"));
            return tape.concat_last(
                {tape.take_timestep(fwd, len - 1), tape.take_timestep(bwd, len - 1)});
        }
        ad::Value states = recurrent_states();
        return tape.take_timestep(states, len - 1);
    };

    ad::Value feature{};
    switch (cfg_.architecture) {
        case Architecture::cnn:
        case Architecture::cnn_attention:
            feature = cnn_branch();
            break;
        case Architecture::lstm:
        case Architecture::lstm_attention:
        case Architecture::bilstm:
        case Architecture::bilstm_attention:
            feature = recurrent_feature();
            break;
        case Architecture::hybrid_cnn_bilstm:
        case Architecture::hybrid_cnn_bilstm_attention:
            feature = tape.concat_last({cnn_branch(), recurrent_feature()});
            break;
        default:
            throw ValidationError("forward: not a neural architecture");
    }
    ad::Value out = tape.dense(feature, leaf("dense_w"), leaf("dense_b"));
    return tape.reshape(out, {batch});
}

void NeuralModel::train(const Dataset& data) {
    if (data.sequences.empty() || data.sequences.size() != data.labels.size()) {
        throw ValidationError("train: dataset is empty or misaligned");
    }
    const size_t n = data.sequences.size();
    const size_t len = cfg_.max_sequence_length;

    std::vector<std::vector<size_t>> prepared(n);
    for (size_t i = 0; i < n; ++i) prepared[i] = prepare_sequence(data.sequences[i], len);

    Rng shuffle_rng(Rng::derive(cfg_.training.seed, 0x5f0e));
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    loss_history_.clear();
    for (size_t epoch = 0; epoch < cfg_.training.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t start = 0; start < n; start += cfg_.training.batch_size) {
            const size_t batch = std::min(cfg_.training.batch_size, n - start);
            std::vector<size_t> ids(batch * len);
            ad::Tensor target({batch});
            for (size_t i = 0; i < batch; ++i) {
                const size_t src = order[start + i];
                std::copy_n(prepared[src].begin(), len, ids.begin() + i * len);
                target.data[i] = data.labels[src];
            }

            ad::Tape tape;
            std::map<std::string, ad::Value> leaves;
            for (const auto& [name, tensor] : params_) {
                leaves[name] = tape.leaf(tensor, true);
            }
            ad::Value pred = forward(tape, leaves, ids, batch);
            ad::Value loss = tape.mse(pred, target);
            const double loss_v = tape.val(loss).data[0];
            if (!std::isfinite(loss_v)) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch + 1));
            }
            loss_sum += loss_v * static_cast<double>(batch);
            tape.backward(loss);

            for (auto& [name, tensor] : params_) {
                if (name == "embedding" && !cfg_.embedding_trainable) continue;
                const ad::Tensor& g = tape.grad(leaves.at(name));
                ad::adam_step(std::span<double>(tensor.data),
                              std::span<const double>(g.data), opt_[name],
                              cfg_.training.learning_rate);
            }
        }
        loss_history_.push_back(loss_sum / static_cast<double>(n));
    }
}

std::vector<double> NeuralModel::predict(const std::vector<std::vector<size_t>>& sequences) const {
    const size_t len = cfg_.max_sequence_length;
    std::vector<double> out;
    out.reserve(sequences.size());
    for (size_t start = 0; start < sequences.size(); start += cfg_.training.batch_size) {
        const size_t batch = std::min(cfg_.training.batch_size, sequences.size() - start);
        std::vector<size_t> ids(batch * len);
        for (size_t i = 0; i < batch; ++i) {
            auto prepared = prepare_sequence(sequences[start + i], len);
            std::copy_n(prepared.begin(), len, ids.begin() + i * len);
        }
        ad::Tape tape;
        std::map<std::string, ad::Value> leaves;
        for (const auto& [name, tensor] : params_) {
            leaves[name] = tape.leaf(tensor, false);
        }
        ad::Value pred = forward(tape, leaves, ids, batch);
        const ad::Tensor& p = tape.val(pred);
        out.insert(out.end(), p.data.begin(), p.data.end());
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

std::string join_sizes(const std::vector<size_t>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<size_t> split_sizes(const std::string& s) {
    std::vector<size_t> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(static_cast<size_t>(std::stoull(item)));
    }
    return out;
}

}  // namespace

void NeuralModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write model file: " + path);
    out << "lexpred-model v1\n";
    out << "architecture = " << architecture_name(cfg_.architecture) << "\n";
    out << "max_sequence_length = " << cfg_.max_sequence_length << "\n";
    out << "embedding_trainable = " << (cfg_.embedding_trainable ? "true" : "false") << "\n";
    out << "hidden_size = " << cfg_.hidden_size << "\n";
    out << "filter_widths = " << join_sizes(cfg_.filter_widths) << "\n";
    out << "filters_per_width = " << cfg_.filters_per_width << "\n";
    out << "attention_size = " << cfg_.attention_size << "\n";
    out << "embedding_dim = " << emb_dim_ << "\n";
    out << "epochs = " << cfg_.training.epochs << "\n";
    out << "batch_size = " << cfg_.training.batch_size << "\n";
    out << "learning_rate = " << format_double(cfg_.training.learning_rate) << "\n";
    out << "seed = " << cfg_.training.seed << "\n";
    out << "loss_history =";
    for (double v : loss_history_) out << " " << format_double(v);
    out << "\n";
    out << "tokens = " << tokens_.size() << "\n";
    for (const auto& t : tokens_) out << t << "\n";
    out << "params = " << params_.size() << "\n";
    size_t offset = 0;
    for (const auto& [name, tensor] : params_) {
        out << name << " " << tensor.rank();
        for (size_t d : tensor.shape) out << " " << d;
        out << " " << offset << "\n";
        offset += tensor.size();
    }
    out << "blob = " << offset << "\n";
    for (const auto& [name, tensor] : params_) {
        (void)name;
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    }
    if (!out) throw ValidationError("failed writing model file: " + path);
}

NeuralModel NeuralModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "lexpred-model v1") {
        throw ValidationError("not a model file: " + path);
    }

    NeuralModel model;
    std::map<std::string, std::string> header;
    auto read_kv = [&](const std::string& l) {
        size_t eq = l.find('=');
        if (eq == std::string::npos) throw ValidationError("bad model header line: " + l);
        std::string key = l.substr(0, eq);
        std::string value = l.substr(eq + 1);
        auto strip = [](std::string& s) {
            while (!s.empty() && s.back() == ' ') s.pop_back();
            while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        };
        strip(key);
        strip(value);
        header[key] = value;
    };
    size_t token_count = 0;
    while (std::getline(in, line)) {
        if (line.rfind("tokens = ", 0) == 0) {
            token_count = std::stoull(line.substr(9));
            break;
        }
        read_kv(line);
    }
    model.cfg_.architecture = architecture_from_name(header.at("architecture"));
    model.cfg_.max_sequence_length = std::stoull(header.at("max_sequence_length"));
    model.cfg_.embedding_trainable = header.at("embedding_trainable") == "true";
    model.cfg_.hidden_size = std::stoull(header.at("hidden_size"));
    model.cfg_.filter_widths = split_sizes(header.at("filter_widths"));
    model.cfg_.filters_per_width = std::stoull(header.at("filters_per_width"));
    model.cfg_.attention_size = std::stoull(header.at("attention_size"));
    model.emb_dim_ = std::stoull(header.at("embedding_dim"));
    model.cfg_.training.epochs = std::stoull(header.at("epochs"));
    model.cfg_.training.batch_size = std::stoull(header.at("batch_size"));
    model.cfg_.training.learning_rate = std::stod(header.at("learning_rate"));
    model.cfg_.training.seed = std::stoull(header.at("seed"));
    {
        std::istringstream ls(header.at("loss_history"));
        double v;
        while (ls >> v) model.loss_history_.push_back(v);
    }
    model.tokens_.reserve(token_count);
    for (size_t i = 0; i < token_count; ++i) {
        if (!std::getline(in, line)) throw ValidationError("model file truncated in token list");
        model.tokens_.push_back(line);
    }
    if (!std::getline(in, line) || line.rfind("params = ", 0) != 0) {
        throw ValidationError("model file missing params header");
    }
    const size_t param_count = std::stoull(line.substr(9));
    struct ParamMeta {
        std::string name;
        std::vector<size_t> shape;
        size_t offset;
    };
    std::vector<ParamMeta> metas;
    for (size_t i = 0; i < param_count; ++i) {
        if (!std::getline(in, line)) throw ValidationError("model file truncated in param list");
        std::istringstream ls(line);
        ParamMeta m;
        size_t rank;
        ls >> m.name >> rank;
        m.shape.resize(rank);
        for (size_t r = 0; r < rank; ++r) ls >> m.shape[r];
        ls >> m.offset;
        if (!ls) throw ValidationError("bad param row: " + line);
        metas.push_back(std::move(m));
    }
    if (!std::getline(in, line) || line.rfind("blob = ", 0) != 0) {
        throw ValidationError("model file missing blob header");
    }
    const size_t total = std::stoull(line.substr(7));
    std::vector<double> blob(total);
    in.read(reinterpret_cast<char*>(blob.data()), static_cast<std::streamsize>(total * sizeof(double)));
    if (static_cast<size_t>(in.gcount()) != total * sizeof(double)) {
        throw ValidationError("model file blob truncated");
    }
    for (const auto& m : metas) {
        size_t n = 1;
        for (size_t d : m.shape) n *= d;
        if (m.offset + n > total) throw ValidationError("param '" + m.name + "' overruns the blob");
        ad::Tensor t;
        t.shape = m.shape;
        t.data.assign(blob.begin() + static_cast<long>(m.offset),
                      blob.begin() + static_cast<long>(m.offset + n));
        if (!t.finite()) throw ValidationError("param '" + m.name + "' contains non-finite values");
        model.params_[m.name] = std::move(t);
    }
    model.cfg_.validate();
    return model;
}

}  // namespace lexpred::models
