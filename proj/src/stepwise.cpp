#include "bsps/stepwise.hpp"

#include "bsps/errors.hpp"
#include "bsps/rng.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bsps {

namespace {

constexpr double kDegenerateNorm = 1e-12;

}  // namespace

ModelState empty_model(const StandardizedDataset& data) {
    ModelState state;
    state.basis.resize(data.n(), 0);
    state.residual = data.y_std;
    state.rss = data.y_std.squaredNorm();
    return state;
}

VectorXd residualize(const ModelState& state, const VectorXd& v) {
    if (state.basis.cols() == 0) return v;
    // Two passes of classical Gram-Schmidt keep the projection accurate.
    VectorXd r = v - state.basis * (state.basis.transpose() * v);
    r -= state.basis * (state.basis.transpose() * r);
    return r;
}

Candidate best_candidate(const ModelState& state, const IndexSet& candidates,
                         const StandardizedDataset& data) {
    if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "no candidates");
    Candidate best;
    double best_score = -1.0;
    for (Index j : candidates) {
        const VectorXd r = residualize(state, data.x_std.col(j));
        const double norm2 = r.squaredNorm();
        if (norm2 <= kDegenerateNorm) continue;
        const double inner = r.dot(state.residual);
        const double score = inner * inner / norm2;
        if (score > best_score || (score == best_score && j < best.index)) {
            best_score = score;
            best = {j, score};
        }
    }
    if (best.index < 0) {
        throw Error(ErrorKind::AllCandidatesDegenerate,
                    "every candidate lies in the current column space");
    }
    return best;
}

void add_predictor(ModelState& state, Index j, const StandardizedDataset& data) {
    VectorXd q = residualize(state, data.x_std.col(j));
    const double norm = q.norm();
    if (!(norm * norm > kDegenerateNorm)) {
        throw Error(ErrorKind::AllCandidatesDegenerate,
                    "predictor " + std::to_string(j) + " lies in the current column space");
    }
    q /= norm;
    state.basis.conservativeResize(Eigen::NoChange, state.basis.cols() + 1);
    state.basis.col(state.basis.cols() - 1) = q;
    state.residual -= q * q.dot(state.residual);
    state.rss = state.residual.squaredNorm();
    state.support.push_back(j);
}

double f_test_pvalue(double rss_before, double rss_decrease, Index n, Index model_size) {
    const Index df2 = n - model_size - 2;
    if (df2 <= 0) {
        throw Error(ErrorKind::InsufficientDf, "n = " + std::to_string(n) + " leaves no residual df for a model of size " +
                                                   std::to_string(model_size + 1));
    }
    if (!(rss_before > 0.0) || rss_decrease < 0.0 || rss_decrease > rss_before) {
        throw Error(ErrorKind::InvalidArgument, "need rss_before > 0 and 0 <= rss_decrease <= rss_before");
    }
    if (rss_decrease == 0.0) return 1.0;
    const double rss_after = rss_before - rss_decrease;
    if (rss_after <= 0.0) return 0.0;
    const double f = rss_decrease / (rss_after / static_cast<double>(df2));
    if (!std::isfinite(f)) return 0.0;
    const boost::math::fisher_f dist(1.0, static_cast<double>(df2));
    return boost::math::cdf(boost::math::complement(dist, f));
}

StepSplitResult step_split_fit(const StandardizedDataset& data, int groups, double gamma) {
    if (groups < 2) throw Error(ErrorKind::InvalidArgument, "need at least two models");
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must lie in (0, 1)");

    const Index n = data.n();
    StepSplitResult result;
    result.models.assign(static_cast<std::size_t>(groups), empty_model(data));

    IndexSet pool(static_cast<std::size_t>(data.p()));
    for (Index j = 0; j < data.p(); ++j) pool[static_cast<std::size_t>(j)] = j;

    struct Proposal {
        Candidate candidate;
        double p_value = 1.0;
    };
    std::vector<Proposal> proposals(static_cast<std::size_t>(groups));

    while (true) {
        for (int g = 0; g < groups; ++g) {
            ModelState& model = result.models[static_cast<std::size_t>(g)];
            if (model.saturated) continue;
            const auto size = static_cast<Index>(model.support.size());
            if (pool.empty() || size >= n - 1 || n - size - 2 <= 0 || !(model.rss > kDegenerateNorm)) {
                model.saturated = true;
                continue;
            }
            Candidate cand;
            try {
                cand = best_candidate(model, pool, data);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::AllCandidatesDegenerate) throw;
                model.saturated = true;
                continue;
            }
            const double decrease = std::min(cand.rss_decrease, model.rss);
            const double pv = f_test_pvalue(model.rss, decrease, n, size);
            proposals[static_cast<std::size_t>(g)] = {cand, pv};
            if (pv >= gamma) model.saturated = true;
        }

        int chosen = -1;
        for (int g = 0; g < groups; ++g) {
            if (result.models[static_cast<std::size_t>(g)].saturated) continue;
            if (chosen < 0 || proposals[static_cast<std::size_t>(g)].p_value <
                                  proposals[static_cast<std::size_t>(chosen)].p_value) {
                chosen = g;
            }
        }
        if (chosen < 0) break;

        ModelState& model = result.models[static_cast<std::size_t>(chosen)];
        const Proposal& prop = proposals[static_cast<std::size_t>(chosen)];
        result.log.push_back({chosen, prop.candidate.index, prop.p_value, model.rss,
                              prop.candidate.rss_decrease, static_cast<Index>(model.support.size())});
        pool.erase(std::find(pool.begin(), pool.end(), prop.candidate.index));
        add_predictor(model, prop.candidate.index, data);
        if (static_cast<Index>(model.support.size()) == n - 1) model.saturated = true;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Lasso refit

VectorXd lasso_coordinate_descent(const MatrixXd& x, const VectorXd& y, double lambda,
                                  VectorXd beta, double tolerance, int max_sweeps) {
    const Index n = x.rows();
    const Index k = x.cols();
    if (beta.size() != k) beta = VectorXd::Zero(k);
    const double inv_n = 1.0 / static_cast<double>(n);
    const VectorXd col_sq = x.colwise().squaredNorm().transpose() * inv_n;

    VectorXd r = y - x * beta;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < k; ++j) {
            if (col_sq[j] <= 0.0) {
                beta[j] = 0.0;
                continue;
            }
            const double old = beta[j];
            const double z = x.col(j).dot(r) * inv_n + col_sq[j] * old;
            const double shrunk = std::max(std::abs(z) - lambda, 0.0);
            const double updated = shrunk == 0.0 ? 0.0 : std::copysign(shrunk, z) / col_sq[j];
            if (updated != old) {
                r -= x.col(j) * (updated - old);
                beta[j] = updated;
                max_change = std::max(max_change, std::abs(updated - old) * std::sqrt(col_sq[j]));
            }
        }
        r = y - x * beta;
        if (max_change <= tolerance) break;
    }
    return beta;
}

std::vector<double> lasso_lambda_grid(const MatrixXd& x, const VectorXd& y, int grid_size,
                                      double min_ratio) {
    // Same arithmetic as the coordinate update at beta = 0, so lambda_max zeroes everything.
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    double lambda_max = 0.0;
    for (Index j = 0; j < x.cols(); ++j) lambda_max = std::max(lambda_max, std::abs(x.col(j).dot(y) * inv_n));
    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    if (grid_size == 1) {
        grid[0] = lambda_max;
        return grid;
    }
    const double log_hi = std::log(lambda_max);
    const double log_lo = std::log(lambda_max * min_ratio);
    for (int i = 0; i < grid_size; ++i) {
        grid[static_cast<std::size_t>(i)] =
            std::exp(log_hi + (log_lo - log_hi) * static_cast<double>(i) / (grid_size - 1));
    }
    grid.front() = lambda_max;
    return grid;
}

namespace {

VectorXd fit_at(const MatrixXd& x, const VectorXd& y, double lambda, const VectorXd& warm,
                const LassoOptions& options) {
    if (lambda == 0.0) return min_norm_least_squares(x, y);
    return lasso_coordinate_descent(x, y, lambda, warm, options.tolerance, options.max_sweeps);
}

}  // namespace

LassoFit lasso_refit(const StandardizedDataset& data, const IndexSet& support,
                     const LassoOptions& options) {
    LassoFit fit;
    if (support.empty()) {
        fit.coef = VectorXd(0);
        return fit;
    }
    if (options.folds < 2) throw Error(ErrorKind::InvalidArgument, "lasso CV needs at least two folds");
    const MatrixXd x = select_columns(data.x_std, support);
    const VectorXd& y = data.y_std;
    const Index n = data.n();
    const Index k = x.cols();

    fit.grid = options.lambda_grid ? *options.lambda_grid
                                   : lasso_lambda_grid(x, y, options.grid_size, options.min_ratio);
    if (fit.grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty lambda grid");

    std::size_t selected = 0;
    if (fit.grid.size() > 1) {
        const int folds = static_cast<int>(std::min<Index>(options.folds, n));
        IndexSet order(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(StreamRole::LassoFolds)}));
        rng.shuffle(order);

        fit.cv_mspe.assign(fit.grid.size(), 0.0);
        for (int f = 0; f < folds; ++f) {
            IndexSet train, valid;
            for (std::size_t pos = 0; pos < order.size(); ++pos) {
                (static_cast<int>(pos % static_cast<std::size_t>(folds)) == f ? valid : train)
                    .push_back(order[pos]);
            }
            const MatrixXd x_train = select_rows(x, train);
            const VectorXd y_train = select_rows(y, train);
            const MatrixXd x_valid = select_rows(x, valid);
            const VectorXd y_valid = select_rows(y, valid);
            VectorXd beta = VectorXd::Zero(k);
            for (std::size_t l = 0; l < fit.grid.size(); ++l) {
                beta = fit_at(x_train, y_train, fit.grid[l], beta, options);
                fit.cv_mspe[l] += (y_valid - x_valid * beta).squaredNorm() /
                                  static_cast<double>(valid.size()) / folds;
            }
        }
        selected = static_cast<std::size_t>(
            std::min_element(fit.cv_mspe.begin(), fit.cv_mspe.end()) - fit.cv_mspe.begin());
    }

    // Warm-started path down to the selected lambda on all rows.
    VectorXd beta = VectorXd::Zero(k);
    for (std::size_t l = 0; l <= selected; ++l) beta = fit_at(x, y, fit.grid[l], beta, options);
    fit.lambda = fit.grid[selected];
    fit.coef = beta;
    return fit;
}

MatrixXd step_split_regression(const StandardizedDataset& data, int groups, double gamma,
                               const LassoOptions& options) {
    const StepSplitResult split = step_split_fit(data, groups, gamma);
    MatrixXd beta = MatrixXd::Zero(data.p(), groups);
    for (int g = 0; g < groups; ++g) {
        const ModelState& model = split.models[static_cast<std::size_t>(g)];
        if (model.support.empty()) continue;
        LassoOptions per_model = options;
        per_model.seed = derive_seed(options.seed, {static_cast<std::uint64_t>(g)});
        const LassoFit fit = lasso_refit(data, model.support, per_model);
        for (std::size_t k = 0; k < model.support.size(); ++k) {
            beta(model.support[k], g) = fit.coef[static_cast<Index>(k)];
        }
    }
    return beta;
}

}  // namespace bsps
