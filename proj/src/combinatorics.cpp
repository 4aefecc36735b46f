#include "bsps/combinatorics.hpp"

#include "bsps/errors.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace bsps {

BigCount factorial(unsigned n) {
    BigCount out = 1;
    for (unsigned k = 2; k <= n; ++k) out *= k;
    return out;
}

BigCount binomial(unsigned n, unsigned k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    BigCount out = 1;
    for (unsigned i = 1; i <= k; ++i) {
        out *= n - k + i;
        out /= i;
    }
    return out;
}

BigCount count_subsets(unsigned p, unsigned t) {
    if (t > p) throw Error(ErrorKind::InvalidArgument, "count_subsets needs t <= p");
    BigCount total = 0;
    for (unsigned j = 0; j <= t; ++j) total += binomial(p, j);
    return total;
}

BigCount count_splits(unsigned p, unsigned groups, unsigned t, SplitConvention convention) {
    if (groups < 1 || p < groups) {
        throw Error(ErrorKind::InvalidArgument, "count_splits needs p >= G >= 1");
    }
    const unsigned smallest = convention == SplitConvention::NonEmptyGroups ? 1 : 0;
    if (smallest > t) return 0;

    BigCount total = 0;
    std::vector<unsigned> sizes(groups);
    // Walk non-decreasing size tuples sizes[0] <= ... <= sizes[G-1] <= t.
    std::function<void(unsigned, unsigned, unsigned)> walk = [&](unsigned pos, unsigned lo, unsigned q) {
        if (pos == groups) {
            BigCount term = binomial(p, q) * factorial(q);
            for (unsigned s : sizes) term /= factorial(s);
            // Equal positive sizes are interchangeable groups.
            for (unsigned k = 0; k < groups;) {
                const unsigned value = sizes[k];
                unsigned run = 0;
                for (; k < groups && sizes[k] == value; ++k) ++run;
                if (value >= 1) term /= factorial(run);
            }
            total += term;
            return;
        }
        for (unsigned s = lo; s <= t && q + s <= p; ++s) {
            sizes[pos] = s;
            walk(pos + 1, s, q + s);
        }
    };
    walk(0, smallest, 0);
    return total;
}

namespace {

// All subsets of {0..p-1} with at most t elements, lexicographic in sorted order.
std::vector<IndexSet> enumerate_subsets(Index p, int t) {
    std::vector<IndexSet> out;
    IndexSet current;
    std::function<void(Index)> rec = [&](Index start) {
        out.push_back(current);
        if (static_cast<int>(current.size()) == t) return;
        for (Index j = start; j < p; ++j) {
            current.push_back(j);
            rec(j + 1);
            current.pop_back();
        }
    };
    rec(0);
    return out;
}

}  // namespace

SplitEnsemble exhaustive_bsps(const StandardizedDataset& data, const Constraints& constraints,
                              const ExhaustiveOptions& options) {
    validate(constraints, data.n(), data.p());
    const Index p = data.p();
    const int groups = constraints.groups;

    const BigCount per_model = count_subsets(static_cast<unsigned>(p), static_cast<unsigned>(constraints.t));
    const double estimate = std::pow(per_model.convert_to<double>(), groups);
    if (estimate > options.max_tuples) {
        throw Error(ErrorKind::TooLarge, "enumeration of about " + std::to_string(estimate) +
                                             " support tuples exceeds the cap of " +
                                             std::to_string(options.max_tuples));
    }

    const std::vector<IndexSet> subsets = enumerate_subsets(p, constraints.t);
    std::vector<VectorXd> coefs(subsets.size());
    std::vector<double> losses(subsets.size());
    for (std::size_t s = 0; s < subsets.size(); ++s) {
        if (subsets[s].empty()) {
            coefs[s] = VectorXd(0);
            losses[s] = data.y_std.squaredNorm();
            continue;
        }
        const MatrixXd xs = select_columns(data.x_std, subsets[s]);
        coefs[s] = min_norm_least_squares(xs, data.y_std);
        losses[s] = (data.y_std - xs * coefs[s]).squaredNorm();
    }

    std::vector<int> usage(static_cast<std::size_t>(p), 0);
    std::vector<std::size_t> choice(static_cast<std::size_t>(groups), 0);
    std::vector<std::size_t> best_choice;
    double best = std::numeric_limits<double>::infinity();

    std::function<void(int, double)> rec = [&](int g, double partial) {
        if (g == groups) {
            if (partial < best) {
                best = partial;
                best_choice = choice;
            }
            return;
        }
        for (std::size_t s = 0; s < subsets.size(); ++s) {
            bool ok = true;
            for (Index j : subsets[s]) {
                if (usage[static_cast<std::size_t>(j)] + 1 > constraints.u[static_cast<std::size_t>(j)]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            for (Index j : subsets[s]) ++usage[static_cast<std::size_t>(j)];
            choice[static_cast<std::size_t>(g)] = s;
            rec(g + 1, partial + losses[s]);
            for (Index j : subsets[s]) --usage[static_cast<std::size_t>(j)];
        }
    };
    rec(0, 0.0);

    SplitEnsemble out;
    out.constraints = constraints;
    out.beta = MatrixXd::Zero(p, groups);
    for (int g = 0; g < groups; ++g) {
        const std::size_t s = best_choice[static_cast<std::size_t>(g)];
        for (std::size_t k = 0; k < subsets[s].size(); ++k) {
            out.beta(subsets[s][k], g) = coefs[s][static_cast<Index>(k)];
        }
    }
    refresh(out, data);
    return out;
}

}  // namespace bsps
