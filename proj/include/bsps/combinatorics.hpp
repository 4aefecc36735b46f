#pragma once

#include "bsps/numerics.hpp"
#include "bsps/psgd.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>

namespace bsps {

using BigCount = boost::multiprecision::cpp_int;

BigCount binomial(unsigned n, unsigned k);
BigCount factorial(unsigned n);

/// Number of subsets of at most t out of p predictors, sum_{j<=t} C(p, j).
BigCount count_subsets(unsigned p, unsigned t);

enum class SplitConvention {
    NonEmptyGroups,    // every one of the G groups holds at least one predictor
    AllowEmptyGroups,  // groups may be empty; empty groups are interchangeable
};

/// Number of ways to pick disjoint, unlabeled groups of at most t predictors
/// each out of p, summing over non-decreasing group-size tuples.
BigCount count_splits(unsigned p, unsigned groups, unsigned t,
                      SplitConvention convention = SplitConvention::NonEmptyGroups);

struct ExhaustiveOptions {
    double max_tuples = 1e7;
};

/// Global minimizer of the summed least-squares losses by enumerating every
/// ordered tuple of supports. Throws TooLarge if the enumeration exceeds the cap.
SplitEnsemble exhaustive_bsps(const StandardizedDataset& data, const Constraints& constraints,
                              const ExhaustiveOptions& options = {});

}  // namespace bsps
