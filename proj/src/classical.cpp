#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lexpred/models.hpp"
#include "lexpred/rng.hpp"

namespace lexpred::models {

namespace {

double mean_of(const std::vector<double>& y, const std::vector<size_t>& idx) {
    double s = 0.0;
    for (size_t i : idx) s += y[i];
    return s / static_cast<double>(idx.size());
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double sse = 0.0;  // combined children SSE
};

// Best variance-reduction split over the sampled features. Candidates are
// midpoints between consecutive distinct values; both children must hold at
// least min_leaf samples.
SplitChoice best_split(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                       const std::vector<size_t>& idx, const std::vector<size_t>& features,
                       size_t min_leaf) {
    SplitChoice best;
    best.sse = std::numeric_limits<double>::infinity();
    const size_t n = idx.size();

    std::vector<std::pair<double, double>> pairs(n);  // (feature value, label)
    for (size_t f : features) {
        for (size_t i = 0; i < n; ++i) pairs[i] = {x[idx[i]][f], y[idx[i]]};
        std::sort(pairs.begin(), pairs.end());

        double left_sum = 0.0, left_sq = 0.0;
        double right_sum = 0.0, right_sq = 0.0;
        for (const auto& [v, label] : pairs) {
            (void)v;
            right_sum += label;
            right_sq += label * label;
        }
        for (size_t i = 0; i + 1 < n; ++i) {
            const double label = pairs[i].second;
            left_sum += label;
            left_sq += label * label;
            right_sum -= label;
            right_sq -= label * label;
            if (pairs[i].first == pairs[i + 1].first) continue;  // no boundary here
            const size_t nl = i + 1, nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                               (right_sq - right_sum * right_sum / static_cast<double>(nr));
            if (sse < best.sse) {
                best.sse = sse;
                best.feature = static_cast<int>(f);
                best.threshold = (pairs[i].first + pairs[i + 1].first) / 2.0;
            }
        }
    }
    return best;
}

int build_node(std::vector<TreeNode>& tree, const std::vector<std::vector<double>>& x,
               const std::vector<double>& y, std::vector<size_t> idx, size_t depth,
               const ForestConfig& cfg, Rng& rng) {
    const int id = static_cast<int>(tree.size());
    tree.push_back({});
    tree[id].value = mean_of(y, idx);

    if (depth >= cfg.max_depth || idx.size() < 2 * cfg.min_leaf) return id;
    bool constant = std::all_of(idx.begin(), idx.end(),
                                [&](size_t i) { return y[i] == y[idx[0]]; });
    if (constant) return id;

    const size_t dims = x[0].size();
    size_t n_feat = std::max<size_t>(
        1, static_cast<size_t>(std::llround(cfg.feature_fraction * static_cast<double>(dims))));
    n_feat = std::min(n_feat, dims);
    std::vector<size_t> all(dims);
    std::iota(all.begin(), all.end(), 0);
    for (size_t i = 0; i < n_feat; ++i) {  // partial Fisher-Yates
        std::swap(all[i], all[i + rng.below(dims - i)]);
    }
    std::vector<size_t> features(all.begin(), all.begin() + n_feat);
    std::sort(features.begin(), features.end());

    SplitChoice split = best_split(x, y, idx, features, cfg.min_leaf);
    if (split.feature < 0) return id;

    std::vector<size_t> left, right;
    for (size_t i : idx) {
        (x[i][split.feature] <= split.threshold ? left : right).push_back(i);
    }
    if (left.empty() || right.empty()) return id;

    idx.clear();
    idx.shrink_to_fit();
    tree[id].feature = split.feature;
    tree[id].threshold = split.threshold;
    const int l = build_node(tree, x, y, std::move(left), depth + 1, cfg, rng);
    const int r = build_node(tree, x, y, std::move(right), depth + 1, cfg, rng);
    tree[id].left = l;
    tree[id].right = r;
    return id;
}

}  // namespace

Forest fit_random_forest(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                         const ForestConfig& config) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ValidationError("random forest needs at least two aligned samples");
    }
    if (config.n_trees == 0) throw ValidationError("random forest needs at least one tree");
    Forest forest;
    forest.config = config;
    forest.trees.resize(config.n_trees);
    const size_t n = x.size();
    for (size_t t = 0; t < config.n_trees; ++t) {
        Rng rng(Rng::derive(config.seed, t));
        std::vector<size_t> sample(n);
        for (size_t i = 0; i < n; ++i) sample[i] = rng.below(n);  // bootstrap
        build_node(forest.trees[t], x, y, std::move(sample), 0, config, rng);
    }
    return forest;
}

double predict_tree(const std::vector<TreeNode>& tree, const std::vector<double>& x) {
    int id = 0;
    while (tree[id].feature >= 0) {
        id = x[tree[id].feature] <= tree[id].threshold ? tree[id].left : tree[id].right;
    }
    return tree[id].value;
}

std::vector<double> predict_forest(const Forest& forest,
                                   const std::vector<std::vector<double>>& x) {
    std::vector<double> out(x.size(), 0.0);
    for (size_t i = 0; i < x.size(); ++i) {
        double sum = 0.0;
        for (const auto& tree : forest.trees) sum += predict_tree(tree, x[i]);
        out[i] = sum / static_cast<double>(forest.trees.size());
    }
    return out;
}

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

}  // namespace

void save_forest(const Forest& forest, std::ostream& out) {
    out << "lexpred-forest v1\n";
    out << "n_trees = " << forest.config.n_trees << "\n";
    out << "max_depth = " << forest.config.max_depth << "\n";
    out << "min_leaf = " << forest.config.min_leaf << "\n";
    out << "feature_fraction = " << format_double(forest.config.feature_fraction) << "\n";
    out << "seed = " << forest.config.seed << "\n";
    for (const auto& tree : forest.trees) {
        out << "tree " << tree.size() << "\n";
        for (const auto& n : tree) {
            out << n.feature << " " << format_double(n.threshold) << " " << n.left << " " << n.right
                << " " << format_double(n.value) << "\n";
        }
    }
}

void save_forest(const Forest& forest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write forest file: " + path);
    save_forest(forest, out);
}

Forest load_forest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "lexpred-forest v1") {
        throw ValidationError("stream does not hold a forest model");
    }
    Forest forest;
    auto read_value = [&](const std::string& key) {
        if (!std::getline(in, line) || line.rfind(key + " = ", 0) != 0) {
            throw ValidationError("forest file missing '" + key + "'");
        }
        return line.substr(key.size() + 3);
    };
    forest.config.n_trees = std::stoull(read_value("n_trees"));
    forest.config.max_depth = std::stoull(read_value("max_depth"));
    forest.config.min_leaf = std::stoull(read_value("min_leaf"));
    forest.config.feature_fraction = std::stod(read_value("feature_fraction"));
    forest.config.seed = std::stoull(read_value("seed"));
    while (forest.trees.size() < forest.config.n_trees && std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.rfind("tree ", 0) != 0) throw ValidationError("bad forest row: " + line);
        size_t count = std::stoull(line.substr(5));
        std::vector<TreeNode> tree(count);
        for (size_t i = 0; i < count; ++i) {
            if (!std::getline(in, line)) throw ValidationError("forest data truncated");
            std::istringstream ls(line);
            if (!(ls >> tree[i].feature >> tree[i].threshold >> tree[i].left >> tree[i].right >>
                  tree[i].value)) {
                throw ValidationError("bad tree node: " + line);
            }
        }
        forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.size() != forest.config.n_trees) {
        throw ValidationError("forest data tree count mismatch");
    }
    return forest;
}

Forest load_forest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open forest file: " + path);
    return load_forest(in);
}

RidgeModel fit_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                     double lambda) {
    if (x.size() != y.size() || x.empty()) {
        throw ValidationError("ridge needs aligned non-empty samples");
    }
    if (lambda < 0.0) throw ValidationError("ridge lambda must be non-negative");
    const size_t n = x.size(), d = x[0].size();
    const size_t m = d + 1;  // intercept column appended, unpenalized

    // normal equations A w = rhs with A = X'X + lambda*diag(1...1,0)
    std::vector<std::vector<double>> a(m, std::vector<double>(m, 0.0));
    std::vector<double> rhs(m, 0.0);
    for (size_t i = 0; i < n; ++i) {
        if (x[i].size() != d) throw ValidationError("ridge rows have inconsistent widths");
        for (size_t p = 0; p < m; ++p) {
            const double xp = p < d ? x[i][p] : 1.0;
            rhs[p] += xp * y[i];
            for (size_t q = p; q < m; ++q) {
                a[p][q] += xp * (q < d ? x[i][q] : 1.0);
            }
        }
    }
    for (size_t p = 0; p < m; ++p) {
        for (size_t q = 0; q < p; ++q) a[p][q] = a[q][p];
        if (p < d) a[p][p] += lambda;
    }

    // Gaussian elimination with partial pivoting
    double scale = 0.0;
    for (size_t p = 0; p < m; ++p) scale = std::max(scale, std::fabs(a[p][p]));
    for (size_t col = 0; col < m; ++col) {
        size_t pivot = col;
        for (size_t r = col + 1; r < m; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        }
        if (std::fabs(a[pivot][col]) <= 1e-12 * std::max(scale, 1.0)) {
            throw NumericError(
                "ridge system is singular; use a regularization strength lambda > 0");
        }
        std::swap(a[col], a[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (size_t r = col + 1; r < m; ++r) {
            const double factor = a[r][col] / a[col][col];
            if (factor == 0.0) continue;
            for (size_t q = col; q < m; ++q) a[r][q] -= factor * a[col][q];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::vector<double> w(m);
    for (size_t col = m; col-- > 0;) {
        double s = rhs[col];
        for (size_t q = col + 1; q < m; ++q) s -= a[col][q] * w[q];
        w[col] = s / a[col][col];
    }

    RidgeModel model;
    model.weights.assign(w.begin(), w.begin() + static_cast<long>(d));
    model.intercept = w[d];
    return model;
}

std::vector<double> predict_ridge(const RidgeModel& model,
                                  const std::vector<std::vector<double>>& x) {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != model.weights.size()) {
            throw ValidationError("ridge prediction rows have the wrong width");
        }
        double s = model.intercept;
        for (size_t j = 0; j < model.weights.size(); ++j) s += model.weights[j] * x[i][j];
        out[i] = s;
    }
    return out;
}

}  // namespace lexpred::models
