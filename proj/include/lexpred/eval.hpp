#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace lexpred::eval {

// Coefficient of determination: 1 - sum((y-yhat)^2) / sum((y-ybar)^2).
// May be negative. Zero target variance -> NumericError (undefined metric).
double r_squared(const std::vector<double>& y, const std::vector<double>& y_hat);

// Seeded shuffle, then contiguous partition; fold sizes differ by at most 1
// (the first n%k folds are one larger). 2 <= k <= n.
std::vector<std::vector<size_t>> kfold_split(size_t n, size_t k, uint64_t seed);

struct FoldResult {
    std::vector<double> per_fold_r2;
    double mean_r2 = 0.0;
    double std_r2 = 0.0;  // population standard deviation

    static FoldResult from(std::vector<double> per_fold);
};

struct Regressor {
    virtual ~Regressor() = default;
    virtual void fit(const std::vector<std::vector<double>>& x, const std::vector<double>& y) = 0;
    virtual std::vector<double> predict(const std::vector<std::vector<double>>& x) const = 0;
};

// Fresh regressor per fold; the factory receives a fold-derived seed.
using RegressorFactory = std::function<std::unique_ptr<Regressor>(uint64_t fold_seed)>;

FoldResult cross_validate(const RegressorFactory& make_regressor,
                          const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                          size_t k, uint64_t seed);

}  // namespace lexpred::eval
