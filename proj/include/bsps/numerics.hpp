#pragma once

#include <Eigen/Dense>

#include <vector>

namespace bsps {

using Index = Eigen::Index;
using IndexSet = std::vector<Index>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Centered and scaled copy of (X, y) plus the statistics needed to undo it.
/// Scales use the population (1/n) convention.
struct StandardizedDataset {
    MatrixXd x_std;
    VectorXd y_std;
    VectorXd col_means;
    VectorXd col_scales;
    double y_mean = 0.0;
    double y_scale = 1.0;

    Index n() const { return x_std.rows(); }
    Index p() const { return x_std.cols(); }
};

/// Throws ConstantColumn / ConstantResponse on degenerate input.
StandardizedDataset standardize(const MatrixXd& x, const VectorXd& y);

/// Applies stored column statistics to new raw rows.
MatrixXd apply_standardization(const MatrixXd& x_raw, const VectorXd& col_means,
                               const VectorXd& col_scales);

MatrixXd unstandardize_x(const StandardizedDataset& data);
VectorXd unstandardize_y(const StandardizedDataset& data);

/// Largest eigenvalue of a^T a by power iteration from the all-ones vector.
double gram_spectral_norm(const MatrixXd& a, double rel_tol = 1e-8, int max_iter = 10000);

/// Lipschitz constant of the least-squares gradient restricted to x_sub's columns,
/// 2 * ||x_sub^T x_sub||_2, inflated by 1% so it upper-bounds the true constant.
double gradient_lipschitz_bound(const MatrixXd& x_sub);

/// Minimum-Euclidean-norm minimizer of ||y - x_sub * beta||^2.
VectorXd min_norm_least_squares(const MatrixXd& x_sub, const VectorXd& y);

// Least-squares loss ||y - X beta||^2 and its gradient 2 X^T (X beta - y).
double ls_loss(const MatrixXd& x, const VectorXd& y, const VectorXd& beta);
VectorXd ls_gradient(const MatrixXd& x, const VectorXd& y, const VectorXd& beta);

MatrixXd select_columns(const MatrixXd& x, const IndexSet& cols);
MatrixXd select_rows(const MatrixXd& x, const IndexSet& rows);
VectorXd select_rows(const VectorXd& v, const IndexSet& rows);

/// Indices of nonzero entries, ascending.
IndexSet support_of(const VectorXd& v);

}  // namespace bsps
