#include "bsps/numerics.hpp"

#include "bsps/errors.hpp"

#include <cmath>
#include <string>

namespace bsps {

namespace {

// Population mean and scale of a vector; scale is zero for constant input.
std::pair<double, double> mean_and_scale(const Eigen::Ref<const VectorXd>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = v.sum() / n;
    const double var = (v.array() - mean).square().sum() / n;
    return {mean, std::sqrt(var)};
}

bool is_constant(double mean, double scale) {
    return !(scale > 1e-12 * std::max(1.0, std::abs(mean)));
}

}  // namespace

StandardizedDataset standardize(const MatrixXd& x, const VectorXd& y) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "standardize needs at least two rows");
    if (y.size() != n) {
        throw Error(ErrorKind::DimensionMismatch, "x has " + std::to_string(n) + " rows but y has " +
                                                      std::to_string(y.size()) + " entries");
    }

    StandardizedDataset out;
    out.x_std.resize(n, p);
    out.col_means.resize(p);
    out.col_scales.resize(p);
    for (Index j = 0; j < p; ++j) {
        const auto [mean, scale] = mean_and_scale(x.col(j));
        if (is_constant(mean, scale)) {
            throw Error(ErrorKind::ConstantColumn, "column " + std::to_string(j) + " is constant");
        }
        out.col_means[j] = mean;
        out.col_scales[j] = scale;
        out.x_std.col(j) = (x.col(j).array() - mean) / scale;
    }

    const auto [y_mean, y_scale] = mean_and_scale(y);
    if (is_constant(y_mean, y_scale)) throw Error(ErrorKind::ConstantResponse, "response is constant");
    out.y_mean = y_mean;
    out.y_scale = y_scale;
    out.y_std = (y.array() - y_mean) / y_scale;
    return out;
}

MatrixXd apply_standardization(const MatrixXd& x_raw, const VectorXd& col_means,
                               const VectorXd& col_scales) {
    if (x_raw.cols() != col_means.size()) {
        throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(col_means.size()) +
                                                      " columns, got " + std::to_string(x_raw.cols()));
    }
    MatrixXd out = x_raw;
    for (Index j = 0; j < out.cols(); ++j) {
        out.col(j) = (out.col(j).array() - col_means[j]) / col_scales[j];
    }
    return out;
}

MatrixXd unstandardize_x(const StandardizedDataset& data) {
    MatrixXd out = data.x_std;
    for (Index j = 0; j < out.cols(); ++j) {
        out.col(j) = out.col(j).array() * data.col_scales[j] + data.col_means[j];
    }
    return out;
}

VectorXd unstandardize_y(const StandardizedDataset& data) {
    return (data.y_std.array() * data.y_scale + data.y_mean).matrix();
}

double gram_spectral_norm(const MatrixXd& a, double rel_tol, int max_iter) {
    if (a.cols() == 0 || a.rows() == 0) {
        throw Error(ErrorKind::InvalidArgument, "spectral norm of an empty matrix");
    }
    const Index k = a.cols();

    // All-ones start; fall back to unit vectors only if it lies in the null space.
    VectorXd v = VectorXd::Ones(k) / std::sqrt(static_cast<double>(k));
    VectorXd av = a * v;
    for (Index j = 0; av.squaredNorm() == 0.0 && j < k; ++j) {
        v = VectorXd::Unit(k, j);
        av = a * v;
    }
    if (av.squaredNorm() == 0.0) return 0.0;

    double lambda = av.squaredNorm();
    for (int iter = 0; iter < max_iter; ++iter) {
        VectorXd w = a.transpose() * av;
        v = w / w.norm();
        av = a * v;
        const double next = av.squaredNorm();
        if (std::abs(next - lambda) <= rel_tol * next) return next;
        lambda = next;
    }
    throw Error(ErrorKind::NoConvergence,
                "power iteration did not converge in " + std::to_string(max_iter) + " iterations");
}

double gradient_lipschitz_bound(const MatrixXd& x_sub) {
    return 2.0 * 1.01 * gram_spectral_norm(x_sub);
}

VectorXd min_norm_least_squares(const MatrixXd& x_sub, const VectorXd& y) {
    if (x_sub.cols() == 0) throw Error(ErrorKind::InvalidArgument, "least squares with no columns");
    if (x_sub.rows() != y.size()) {
        throw Error(ErrorKind::DimensionMismatch, "least squares row count mismatch");
    }
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(x_sub);
    return cod.solve(y);
}

double ls_loss(const MatrixXd& x, const VectorXd& y, const VectorXd& beta) {
    return (y - x * beta).squaredNorm();
}

VectorXd ls_gradient(const MatrixXd& x, const VectorXd& y, const VectorXd& beta) {
    return 2.0 * x.transpose() * (x * beta - y);
}

MatrixXd select_columns(const MatrixXd& x, const IndexSet& cols) {
    MatrixXd out(x.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = x.col(cols[k]);
    return out;
}

MatrixXd select_rows(const MatrixXd& x, const IndexSet& rows) {
    MatrixXd out(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
    return out;
}

VectorXd select_rows(const VectorXd& v, const IndexSet& rows) {
    VectorXd out(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out[static_cast<Index>(k)] = v[rows[k]];
    return out;
}

IndexSet support_of(const VectorXd& v) {
    IndexSet out;
    for (Index j = 0; j < v.size(); ++j) {
        if (v[j] != 0.0) out.push_back(j);
    }
    return out;
}

}  // namespace bsps
