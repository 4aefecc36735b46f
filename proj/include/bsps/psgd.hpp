#pragma once

#include "bsps/numerics.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace bsps {

/// Sparsity budget t per model and sharing budget u_j per predictor.
struct Constraints {
    int groups = 2;
    int t = 1;
    std::vector<int> u;  // length p; u_j = 0 excludes predictor j

    static Constraints uniform(int groups, int t, int u, Index p);
};

/// Throws InvalidArgument when the record breaks its invariants for (n, p).
void validate(const Constraints& constraints, Index n, Index p);

/// G sparse models stored as the columns of a p x G matrix.
struct SplitEnsemble {
    MatrixXd beta;
    std::vector<IndexSet> supports;
    Constraints constraints;
    double objective = 0.0;
    std::vector<double> trace;  // total objective after each full cycle
    bool iteration_cap_hit = false;

    int groups() const { return static_cast<int>(beta.cols()); }
    VectorXd ensemble_beta() const;
};

/// Rebuilds supports from the nonzero pattern and recomputes the summed loss.
void refresh(SplitEnsemble& ensemble, const StandardizedDataset& data);

/// Structural check: column l0 <= t, row usage <= u_j, supports match nonzeros.
bool satisfies_constraints(const SplitEnsemble& ensemble);

/// Predictors used by at most u_j - 1 of the models other than g.
IndexSet allowed_set(const std::vector<IndexSet>& supports, int g, const std::vector<int>& u);

/// Keeps the t largest-magnitude entries of v among indices in `allowed`
/// (ties to the lower index) and zeroes the rest.
VectorXd project_subset(const VectorXd& v, const IndexSet& allowed, int t);

struct PgdResult {
    VectorXd beta;
    int iterations = 0;
    bool converged = false;
    std::vector<double> loss_trace;  // loss at the start and after every iteration
};

struct PgdOptions {
    double epsilon = 1e-6;
    int max_iter = 10000;
};

/// Projected gradient descent for one model over the allowed set.
PgdResult pgd_model(const VectorXd& beta_init, const IndexSet& allowed, int t,
                    const StandardizedDataset& data, const PgdOptions& options = {});

struct PsgdOptions {
    double epsilon = 1e-6;
    int searches = 0;
    std::uint64_t seed = 0;
    int max_cycles = 100;
    int max_iter = 10000;
    // Called with (pass, total objective) after every inner gradient iteration
    // and every refit; pass 0 is the main descent, pass k the k-th restart.
    std::function<void(int, double)> on_inner_iteration;
};

/// Projects each model of a warm start onto its allowed set in model order,
/// so the result is feasible. Feasible inputs pass through unchanged.
MatrixXd repair_feasibility(const MatrixXd& beta, const Constraints& constraints);

/// Cyclic projected subsets gradient descent with restricted refits, followed
/// by optional random-order restarts.
SplitEnsemble psgd_fit(const StandardizedDataset& data, const MatrixXd& init,
                       const Constraints& constraints, const PsgdOptions& options = {});

}  // namespace bsps
