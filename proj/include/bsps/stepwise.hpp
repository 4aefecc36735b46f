#pragma once

#include "bsps/numerics.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bsps {

/// One model of the greedy split allocation. The orthonormal basis of the
/// selected columns stands in for the hat matrix: (I - H) v = v - Q Q^T v.
struct ModelState {
    IndexSet support;  // in order of addition
    bool saturated = false;
    MatrixXd basis;     // n x |support|, orthonormal columns
    VectorXd residual;  // (I - H) y
    double rss = 0.0;
};

ModelState empty_model(const StandardizedDataset& data);

/// (I - H) x_j for the model's current column space.
VectorXd residualize(const ModelState& state, const VectorXd& v);

struct Candidate {
    Index index = -1;
    double rss_decrease = 0.0;
};

/// Candidate with the largest drop in RSS, (x_j'(I-H)y)^2 / x_j'(I-H)x_j.
/// Lowest index wins ties; candidates already in the column space are skipped.
Candidate best_candidate(const ModelState& state, const IndexSet& candidates,
                         const StandardizedDataset& data);

void add_predictor(ModelState& state, Index j, const StandardizedDataset& data);

/// Upper-tail probability of the nested-model F statistic with df (1, n - model_size - 2).
double f_test_pvalue(double rss_before, double rss_decrease, Index n, Index model_size);

struct Addition {
    int model = 0;
    Index predictor = 0;
    double p_value = 0.0;
    double rss_before = 0.0;
    double rss_decrease = 0.0;
    Index model_size = 0;  // support size before the addition
};

struct StepSplitResult {
    std::vector<ModelState> models;
    std::vector<Addition> log;
};

/// Greedy disjoint allocation of predictors to `groups` models.
StepSplitResult step_split_fit(const StandardizedDataset& data, int groups, double gamma);

struct LassoOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    int grid_size = 50;
    double min_ratio = 1e-3;
    std::optional<std::vector<double>> lambda_grid;  // overrides the log-spaced grid
    double tolerance = 1e-11;
    int max_sweeps = 100000;
};

struct LassoFit {
    VectorXd coef;  // one entry per support column
    double lambda = 0.0;
    std::vector<double> grid;
    std::vector<double> cv_mspe;  // empty when the grid has a single value
};

/// Cyclic coordinate descent for (1/2n)||y - X b||^2 + lambda ||b||_1.
VectorXd lasso_coordinate_descent(const MatrixXd& x, const VectorXd& y, double lambda,
                                  VectorXd warm_start, double tolerance = 1e-11,
                                  int max_sweeps = 100000);

std::vector<double> lasso_lambda_grid(const MatrixXd& x, const VectorXd& y, int grid_size,
                                      double min_ratio);

/// Lasso on the support columns with lambda chosen by k-fold CV.
LassoFit lasso_refit(const StandardizedDataset& data, const IndexSet& support,
                     const LassoOptions& options = {});

/// Full initializer: greedy split allocation then per-model Lasso refits.
/// Returns a p x groups coefficient matrix.
MatrixXd step_split_regression(const StandardizedDataset& data, int groups, double gamma,
                               const LassoOptions& options = {});

}  // namespace bsps
