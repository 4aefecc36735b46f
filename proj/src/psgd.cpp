#include "bsps/psgd.hpp"

#include "bsps/errors.hpp"
#include "bsps/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace bsps {

Constraints Constraints::uniform(int groups, int t, int u, Index p) {
    Constraints c;
    c.groups = groups;
    c.t = t;
    c.u.assign(static_cast<std::size_t>(p), u);
    return c;
}

void validate(const Constraints& c, Index n, Index p) {
    if (c.groups < 1) throw Error(ErrorKind::InvalidArgument, "number of models must be positive");
    if (c.t < 1 || c.t > std::min<Index>(n - 1, p)) {
        throw Error(ErrorKind::InvalidArgument, "t = " + std::to_string(c.t) + " outside [1, min(n-1, p)] = [1, " +
                                                    std::to_string(std::min<Index>(n - 1, p)) + "]");
    }
    if (static_cast<Index>(c.u.size()) != p) {
        throw Error(ErrorKind::DimensionMismatch, "u has " + std::to_string(c.u.size()) + " entries, expected " +
                                                      std::to_string(p));
    }
    for (int uj : c.u) {
        if (uj < 0 || uj > c.groups) {
            throw Error(ErrorKind::InvalidArgument, "u entries must lie in [0, G]");
        }
    }
}

VectorXd SplitEnsemble::ensemble_beta() const {
    return beta.rowwise().sum() / static_cast<double>(beta.cols());
}

void refresh(SplitEnsemble& ensemble, const StandardizedDataset& data) {
    ensemble.supports.resize(static_cast<std::size_t>(ensemble.groups()));
    ensemble.objective = 0.0;
    for (int g = 0; g < ensemble.groups(); ++g) {
        ensemble.supports[static_cast<std::size_t>(g)] = support_of(ensemble.beta.col(g));
        ensemble.objective += ls_loss(data.x_std, data.y_std, ensemble.beta.col(g));
    }
}

bool satisfies_constraints(const SplitEnsemble& ensemble) {
    const Constraints& c = ensemble.constraints;
    const Index p = ensemble.beta.rows();
    if (ensemble.groups() != c.groups || static_cast<Index>(c.u.size()) != p ||
        static_cast<int>(ensemble.supports.size()) != ensemble.groups()) {
        return false;
    }
    std::vector<int> usage(static_cast<std::size_t>(p), 0);
    for (int g = 0; g < ensemble.groups(); ++g) {
        const IndexSet nz = support_of(ensemble.beta.col(g));
        if (nz != ensemble.supports[static_cast<std::size_t>(g)]) return false;
        if (static_cast<int>(nz.size()) > c.t) return false;
        for (Index j : nz) ++usage[static_cast<std::size_t>(j)];
    }
    for (Index j = 0; j < p; ++j) {
        if (usage[static_cast<std::size_t>(j)] > c.u[static_cast<std::size_t>(j)]) return false;
    }
    return true;
}

IndexSet allowed_set(const std::vector<IndexSet>& supports, int g, const std::vector<int>& u) {
    std::vector<int> usage(u.size(), 0);
    for (std::size_t h = 0; h < supports.size(); ++h) {
        if (static_cast<int>(h) == g) continue;
        for (Index j : supports[h]) ++usage[static_cast<std::size_t>(j)];
    }
    IndexSet out;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (usage[j] <= u[j] - 1) out.push_back(static_cast<Index>(j));
    }
    return out;
}

VectorXd project_subset(const VectorXd& v, const IndexSet& allowed, int t) {
    if (t < 1) throw Error(ErrorKind::InvalidArgument, "projection budget must be at least 1");
    VectorXd out = VectorXd::Zero(v.size());
    IndexSet order = allowed;
    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(t), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](Index a, Index b) {
                          const double fa = std::abs(v[a]);
                          const double fb = std::abs(v[b]);
                          return fa > fb || (fa == fb && a < b);
                      });
    for (std::size_t k = 0; k < keep; ++k) out[order[k]] = v[order[k]];
    return out;
}

PgdResult pgd_model(const VectorXd& beta_init, const IndexSet& allowed, int t,
                    const StandardizedDataset& data, const PgdOptions& options) {
    if (!(options.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
    PgdResult result;
    result.beta = beta_init;
    if (allowed.empty()) {
        result.beta.setZero();
        result.converged = true;
        result.loss_trace.push_back(ls_loss(data.x_std, data.y_std, result.beta));
        return result;
    }

    const double lipschitz = gradient_lipschitz_bound(select_columns(data.x_std, allowed));
    double loss = ls_loss(data.x_std, data.y_std, result.beta);
    result.loss_trace.push_back(loss);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        const VectorXd step =
            result.beta - ls_gradient(data.x_std, data.y_std, result.beta) / lipschitz;
        VectorXd next = project_subset(step, allowed, t);
        const double next_loss = ls_loss(data.x_std, data.y_std, next);
        result.loss_trace.push_back(next_loss);
        result.beta = std::move(next);
        result.iterations = iter + 1;
        const double decrease = loss - next_loss;
        loss = next_loss;
        if (decrease <= options.epsilon) {
            result.converged = true;
            break;
        }
    }
    return result;
}

MatrixXd repair_feasibility(const MatrixXd& beta, const Constraints& constraints) {
    MatrixXd out = MatrixXd::Zero(beta.rows(), beta.cols());
    std::vector<IndexSet> repaired(static_cast<std::size_t>(beta.cols()));
    for (Index g = 0; g < beta.cols(); ++g) {
        // Only models already repaired count toward usage.
        const IndexSet allowed = allowed_set(repaired, static_cast<int>(g), constraints.u);
        out.col(g) = project_subset(beta.col(g), allowed, constraints.t);
        repaired[static_cast<std::size_t>(g)] = support_of(out.col(g));
    }
    return out;
}

namespace {

struct CycleState {
    MatrixXd beta;
    std::vector<IndexSet> supports;
    std::vector<double> losses;
    std::vector<double> trace;
    bool cap_hit = false;

    double total() const { return std::accumulate(losses.begin(), losses.end(), 0.0); }
};

CycleState start_state(const StandardizedDataset& data, const MatrixXd& beta) {
    CycleState s;
    s.beta = beta;
    for (Index g = 0; g < beta.cols(); ++g) {
        s.supports.push_back(support_of(beta.col(g)));
        s.losses.push_back(ls_loss(data.x_std, data.y_std, beta.col(g)));
    }
    return s;
}

void update_model(CycleState& s, int g, const StandardizedDataset& data,
                  const Constraints& constraints, const PsgdOptions& options, int pass) {
    const auto gi = static_cast<std::size_t>(g);
    const IndexSet allowed = allowed_set(s.supports, g, constraints.u);
    const double others = s.total() - s.losses[gi];

    const PgdResult pgd =
        pgd_model(s.beta.col(g), allowed, constraints.t, data, {options.epsilon, options.max_iter});
    if (!pgd.converged) s.cap_hit = true;
    if (options.on_inner_iteration) {
        for (std::size_t k = 1; k < pgd.loss_trace.size(); ++k) {
            options.on_inner_iteration(pass, others + pgd.loss_trace[k]);
        }
    }

    VectorXd col = pgd.beta;
    const IndexSet support = support_of(col);
    if (!support.empty()) {
        const VectorXd coef = min_norm_least_squares(select_columns(data.x_std, support), data.y_std);
        col.setZero();
        for (std::size_t k = 0; k < support.size(); ++k) col[support[k]] = coef[static_cast<Index>(k)];
    }
    s.beta.col(g) = col;
    s.supports[gi] = support_of(col);
    s.losses[gi] = ls_loss(data.x_std, data.y_std, col);
    if (options.on_inner_iteration) options.on_inner_iteration(pass, s.total());
}

void run_cycles(CycleState& s, const std::vector<int>& order, const StandardizedDataset& data,
                const Constraints& constraints, const PsgdOptions& options, int pass) {
    double previous = s.total();
    for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
        for (int g : order) update_model(s, g, data, constraints, options, pass);
        const double current = s.total();
        s.trace.push_back(current);
        if (previous - current <= options.epsilon) break;
        previous = current;
    }
}

}  // namespace

SplitEnsemble psgd_fit(const StandardizedDataset& data, const MatrixXd& init,
                       const Constraints& constraints, const PsgdOptions& options) {
    validate(constraints, data.n(), data.p());
    if (init.rows() != data.p() || init.cols() != constraints.groups) {
        throw Error(ErrorKind::DimensionMismatch, "initial coefficients must be p x G");
    }
    if (!(options.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
    if (options.searches < 0) throw Error(ErrorKind::InvalidArgument, "searches must be non-negative");

    const MatrixXd start = repair_feasibility(init, constraints);
    std::vector<int> order(static_cast<std::size_t>(constraints.groups));
    std::iota(order.begin(), order.end(), 0);

    CycleState best = start_state(data, start);
    run_cycles(best, order, data, constraints, options, 0);
    bool cap_hit = best.cap_hit;

    Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(StreamRole::Permutation)}));
    for (int search = 1; search <= options.searches; ++search) {
        std::vector<int> permuted = order;
        rng.shuffle(permuted);
        CycleState candidate = start_state(data, start);
        run_cycles(candidate, permuted, data, constraints, options, search);
        cap_hit = cap_hit || candidate.cap_hit;
        if (candidate.total() < best.total()) best = std::move(candidate);
    }

    SplitEnsemble out;
    out.beta = std::move(best.beta);
    out.constraints = constraints;
    out.trace = std::move(best.trace);
    out.iteration_cap_hit = cap_hit;
    refresh(out, data);
    return out;
}

}  // namespace bsps
