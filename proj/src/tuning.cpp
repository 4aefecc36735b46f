#include "bsps/tuning.hpp"

#include "bsps/errors.hpp"
#include "bsps/parallel.hpp"
#include "bsps/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace bsps {

std::map<int, SplitEnsemble> decrementing_psgd(const StandardizedDataset& data, int groups, int t,
                                               int max_u, const SolverOptions& options,
                                               const std::vector<int>* caps) {
    if (max_u < 1 || max_u > groups) {
        throw Error(ErrorKind::InvalidArgument, "diversity levels must lie in [1, G]");
    }
    if (caps && static_cast<Index>(caps->size()) != data.p()) {
        throw Error(ErrorKind::DimensionMismatch, "per-predictor budgets must have length p");
    }
    auto level = [&](int u) {
        Constraints c = Constraints::uniform(groups, t, u, data.p());
        if (caps) {
            for (std::size_t j = 0; j < c.u.size(); ++j) c.u[j] = std::min(u, (*caps)[j]);
        }
        return c;
    };
    validate(level(1), data.n(), data.p());

    LassoOptions lasso;
    lasso.folds = options.lasso_folds;
    lasso.seed = options.seed;
    const MatrixXd init = step_split_regression(data, groups, options.gamma, lasso);

    PsgdOptions psgd;
    psgd.epsilon = options.epsilon;
    psgd.searches = options.searches;
    psgd.seed = options.seed;

    std::map<int, SplitEnsemble> out;
    out.emplace(1, psgd_fit(data, init, level(1), psgd));
    for (int u = 2; u <= max_u; ++u) {
        out.emplace(u, psgd_fit(data, out.at(u - 1).beta, level(u), psgd));
    }
    return out;
}

FittedModel make_fitted_model(const SplitEnsemble& ensemble, const StandardizedDataset& data) {
    FittedModel model;
    model.ensemble = ensemble;
    model.ensemble_beta = ensemble.ensemble_beta();
    model.col_means = data.col_means;
    model.col_scales = data.col_scales;
    model.y_mean = data.y_mean;
    model.y_scale = data.y_scale;
    return model;
}

FittedModel fit_model(const MatrixXd& x, const VectorXd& y, int groups, int t,
                      const std::vector<int>& u, const SolverOptions& options) {
    const StandardizedDataset data = standardize(x, y);
    if (static_cast<Index>(u.size()) != data.p()) {
        throw Error(ErrorKind::DimensionMismatch, "u must have one entry per predictor");
    }
    const int max_u = std::max(1, *std::max_element(u.begin(), u.end()));
    if (max_u > groups) throw Error(ErrorKind::InvalidArgument, "u entries must not exceed G");
    const auto levels = decrementing_psgd(data, groups, t, max_u, options, &u);
    return make_fitted_model(levels.at(max_u), data);
}

namespace {

std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

std::size_t select_cv_pair(const std::vector<double>& mean_mspe) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < mean_mspe.size(); ++k) {
        if (mean_mspe[k] < mean_mspe[best]) best = k;
    }
    return best;
}

FittedModel cross_validate(const MatrixXd& x, const VectorXd& y, const CvOptions& options) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (y.size() != n) throw Error(ErrorKind::DimensionMismatch, "x and y row counts differ");
    if (options.folds < 2) throw Error(ErrorKind::InvalidArgument, "need at least two folds");
    if (options.folds > n) throw Error(ErrorKind::InvalidArgument, "more folds than rows");
    const std::vector<int> t_grid = sorted_unique(options.t_grid);
    const std::vector<int> u_grid = sorted_unique(options.u_grid);
    if (t_grid.empty() || u_grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty tuning grid");
    if (u_grid.front() < 1 || u_grid.back() > options.groups) {
        throw Error(ErrorKind::InvalidArgument, "u grid must lie within [1, G]");
    }
    if (t_grid.front() < 1 || t_grid.back() > p) {
        throw Error(ErrorKind::InvalidArgument, "t grid must lie within [1, p]");
    }

    // Seeded shuffle; row at shuffled position k belongs to fold k mod folds.
    IndexSet order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(derive_seed(options.solver.seed, {static_cast<std::uint64_t>(StreamRole::Folds)}));
    rng.shuffle(order);
    std::vector<IndexSet> train(static_cast<std::size_t>(options.folds));
    std::vector<IndexSet> valid(static_cast<std::size_t>(options.folds));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const std::size_t f = pos % static_cast<std::size_t>(options.folds);
        for (std::size_t h = 0; h < train.size(); ++h) (h == f ? valid[h] : train[h]).push_back(order[pos]);
    }
    for (auto& rows : train) {
        std::sort(rows.begin(), rows.end());
        if (static_cast<Index>(rows.size()) <= t_grid.back() + 2) {
            throw Error(ErrorKind::FoldTooSmall, "training fold of " + std::to_string(rows.size()) +
                                                     " rows is too small for t = " + std::to_string(t_grid.back()));
        }
    }
    for (auto& rows : valid) std::sort(rows.begin(), rows.end());

    const std::size_t n_t = t_grid.size();
    const std::size_t n_u = u_grid.size();
    const auto folds = static_cast<std::size_t>(options.folds);
    // mspe[(ti * n_u + ui) * folds + f]
    std::vector<double> mspe(n_t * n_u * folds, 0.0);

    parallel_for(folds * n_t, options.threads, [&](std::size_t cell) {
        const std::size_t f = cell / n_t;
        const std::size_t ti = cell % n_t;
        const StandardizedDataset data =
            standardize(select_rows(x, train[f]), select_rows(y, train[f]));
        SolverOptions solver = options.solver;
        solver.seed = derive_seed(options.solver.seed,
                                  {static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(t_grid[ti])});
        const auto levels = decrementing_psgd(data, options.groups, t_grid[ti], u_grid.back(), solver);
        const MatrixXd x_valid = select_rows(x, valid[f]);
        const VectorXd y_valid = select_rows(y, valid[f]);
        for (std::size_t ui = 0; ui < n_u; ++ui) {
            const FittedModel model = make_fitted_model(levels.at(u_grid[ui]), data);
            mspe[(ti * n_u + ui) * folds + f] =
                (y_valid - predict(model, x_valid)).squaredNorm() / static_cast<double>(valid[f].size());
        }
    });

    CvReport report;
    report.folds = options.folds;
    report.seed = options.solver.seed;
    for (std::size_t ti = 0; ti < n_t; ++ti) {
        for (std::size_t ui = 0; ui < n_u; ++ui) {
            const std::size_t k = ti * n_u + ui;
            report.grid.emplace_back(t_grid[ti], u_grid[ui]);
            report.fold_mspe.emplace_back(mspe.begin() + static_cast<std::ptrdiff_t>(k * folds),
                                          mspe.begin() + static_cast<std::ptrdiff_t>((k + 1) * folds));
            const auto& fm = report.fold_mspe.back();
            report.mean_mspe.push_back(std::accumulate(fm.begin(), fm.end(), 0.0) / static_cast<double>(folds));
        }
    }
    report.selected = report.grid[select_cv_pair(report.mean_mspe)];

    FittedModel model = fit_model(x, y, options.groups, report.selected.first,
                                  std::vector<int>(static_cast<std::size_t>(p), report.selected.second),
                                  options.solver);
    model.cv = std::move(report);
    return model;
}

MatrixXd predict_per_model(const FittedModel& model, const MatrixXd& x_new) {
    const MatrixXd xs = apply_standardization(x_new, model.col_means, model.col_scales);
    MatrixXd out = xs * model.ensemble.beta;
    out.array() = out.array() * model.y_scale + model.y_mean;
    return out;
}

VectorXd predict(const FittedModel& model, const MatrixXd& x_new) {
    const MatrixXd per_model = predict_per_model(model, x_new);
    return per_model.rowwise().sum() / static_cast<double>(per_model.cols());
}

std::vector<IndexSet> importance_sets(const SplitEnsemble& ensemble) {
    const Index p = ensemble.beta.rows();
    const int groups = ensemble.groups();
    std::vector<int> usage(static_cast<std::size_t>(p), 0);
    for (const auto& support : ensemble.supports) {
        for (Index j : support) ++usage[static_cast<std::size_t>(j)];
    }
    std::vector<IndexSet> sets(static_cast<std::size_t>(groups));
    for (int k = 1; k <= groups; ++k) {
        for (Index j = 0; j < p; ++j) {
            if (usage[static_cast<std::size_t>(j)] >= k) sets[static_cast<std::size_t>(k - 1)].push_back(j);
        }
    }
    return sets;
}

}  // namespace bsps
