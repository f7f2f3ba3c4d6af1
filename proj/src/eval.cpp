#include "lexpred/eval.hpp"

#include <cmath>
#include <numeric>

#include "lexpred/errors.hpp"
#include "lexpred/rng.hpp"

namespace lexpred::eval {

double r_squared(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.size() != y_hat.size()) {
        throw ValidationError("r_squared: " + std::to_string(y.size()) + " observations vs " +
                              std::to_string(y_hat.size()) + " predictions");
    }
    if (y.size() < 2) throw ValidationError("r_squared needs at least two observations");
    const double n = static_cast<double>(y.size());
    double sum = 0.0;
    for (double v : y) sum += v;
    const double y_bar = sum / n;

    double rss = 0.0, tss = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - y_hat[i];
        const double d = y[i] - y_bar;
        rss += e * e;
        tss += d * d;
    }
    if (tss == 0.0) {
        throw NumericError("r_squared is undefined: the observed values have zero variance");
    }
    return 1.0 - rss / tss;
}

std::vector<std::vector<size_t>> kfold_split(size_t n, size_t k, uint64_t seed) {
    if (k < 2 || k > n) {
        throw ValidationError("kfold_split needs 2 <= k <= n, got k=" + std::to_string(k) +
                              ", n=" + std::to_string(n));
    }
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<std::vector<size_t>> folds(k);
    const size_t base = n / k, extra = n % k;
    size_t pos = 0;
    for (size_t f = 0; f < k; ++f) {
        const size_t size = base + (f < extra ? 1 : 0);
        folds[f].assign(order.begin() + pos, order.begin() + pos + size);
        pos += size;
    }
    return folds;
}

FoldResult FoldResult::from(std::vector<double> per_fold) {
    FoldResult r;
    r.per_fold_r2 = std::move(per_fold);
    const double n = static_cast<double>(r.per_fold_r2.size());
    double sum = 0.0;
    for (double v : r.per_fold_r2) sum += v;
    r.mean_r2 = sum / n;
    double sq = 0.0;
    for (double v : r.per_fold_r2) sq += (v - r.mean_r2) * (v - r.mean_r2);
    r.std_r2 = std::sqrt(sq / n);
    return r;
}

FoldResult cross_validate(const RegressorFactory& make_regressor,
                          const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                          size_t k, uint64_t seed) {
    if (x.size() != y.size()) throw ValidationError("cross_validate: misaligned dataset");
    auto folds = kfold_split(x.size(), k, seed);

    std::vector<double> scores;
    scores.reserve(k);
    for (size_t f = 0; f < k; ++f) {
        try {
            std::vector<std::vector<double>> x_train, x_test;
            std::vector<double> y_train, y_test;
            for (size_t g = 0; g < k; ++g) {
                for (size_t i : folds[g]) {
                    if (g == f) {
                        x_test.push_back(x[i]);
                        y_test.push_back(y[i]);
                    } else {
                        x_train.push_back(x[i]);
                        y_train.push_back(y[i]);
                    }
                }
            }
            auto model = make_regressor(Rng::derive(seed, f));
            model->fit(x_train, y_train);
            scores.push_back(r_squared(y_test, model->predict(x_test)));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::numeric) {
                throw NumericError("fold " + std::to_string(f) + ": " + e.what());
            }
            throw ValidationError("fold " + std::to_string(f) + ": " + e.what());
        }
    }
    return FoldResult::from(std::move(scores));
}

}  // namespace lexpred::eval
