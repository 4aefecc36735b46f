#pragma once

#include "bsps/numerics.hpp"
#include "bsps/psgd.hpp"
#include "bsps/stepwise.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace bsps {

struct SolverOptions {
    double gamma = 0.05;   // Step-SplitReg significance threshold
    double epsilon = 1e-6;
    int searches = 0;
    std::uint64_t seed = 0;
    int lasso_folds = 5;
};

/// Solutions for diversity levels u = 1..max_u, each warm-started from the
/// previous level; level 1 starts from Step-SplitReg. When `caps` is given
/// (length p), level k uses per-predictor budgets min(k, caps[j]).
std::map<int, SplitEnsemble> decrementing_psgd(const StandardizedDataset& data, int groups, int t,
                                               int max_u, const SolverOptions& options = {},
                                               const std::vector<int>* caps = nullptr);

struct CvReport {
    std::vector<std::pair<int, int>> grid;  // (t, u), sorted by t then u
    std::vector<std::vector<double>> fold_mspe;
    std::vector<double> mean_mspe;
    std::pair<int, int> selected{0, 0};
    int folds = 0;
    std::uint64_t seed = 0;
};

struct FittedModel {
    SplitEnsemble ensemble;
    VectorXd ensemble_beta;
    VectorXd col_means;
    VectorXd col_scales;
    double y_mean = 0.0;
    double y_scale = 1.0;
    std::optional<CvReport> cv;

    Index p() const { return ensemble_beta.size(); }
};

FittedModel make_fitted_model(const SplitEnsemble& ensemble, const StandardizedDataset& data);

/// Fit at fixed (t, u) through the diversity warm-start chain. `u` holds one
/// budget per predictor; a uniform vector reproduces the scalar chain.
FittedModel fit_model(const MatrixXd& x, const VectorXd& y, int groups, int t,
                      const std::vector<int>& u, const SolverOptions& options = {});

struct CvOptions {
    int groups = 5;
    std::vector<int> t_grid;
    std::vector<int> u_grid;
    int folds = 5;
    SolverOptions solver;
    int threads = 1;
};

/// Index of the lowest mean MSPE; ties go to the earlier grid entry, which is
/// the smaller t and then the smaller u for a sorted grid.
std::size_t select_cv_pair(const std::vector<double>& mean_mspe);

/// Grid search over (t, u) by k-fold CV on the raw response scale, then a
/// final fit on all rows at the selected pair.
FittedModel cross_validate(const MatrixXd& x, const VectorXd& y, const CvOptions& options);

enum class PredictMode { Ensemble, PerModel };

/// m x G matrix of per-model predictions on the raw response scale.
MatrixXd predict_per_model(const FittedModel& model, const MatrixXd& x_new);

/// Average of the per-model predictions.
VectorXd predict(const FittedModel& model, const MatrixXd& x_new);

/// A_k = predictors used by at least k models, k = 1..G (returned at k-1).
std::vector<IndexSet> importance_sets(const SplitEnsemble& ensemble);

}  // namespace bsps
