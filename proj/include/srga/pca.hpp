#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "srga/error.hpp"
#include "srga/featstore.hpp"

namespace srga {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Mean-centered PCA basis. Columns of `basis` are orthonormal, ordered by
/// descending variance, and signed so that each column's largest-magnitude
/// entry is positive. Coefficients are not whitened.
struct PcaProjection {
    Eigen::VectorXd mean;       ///< length H*W*C
    Eigen::MatrixXd basis;      ///< (H*W*C) x D
    Eigen::VectorXd variances;  ///< per-component variance, (N-1) denominator
    std::string fitted_on;
    std::size_t n_fit = 0;

    std::size_t dim() const { return static_cast<std::size_t>(basis.cols()); }
    std::size_t input_dim() const { return static_cast<std::size_t>(basis.rows()); }
};

/// X = (Y - mean) P, one row per feature tensor.
struct ProjectedFeatures {
    Eigen::MatrixXd coefficients;  ///< N x D, column-major
    std::string projection_id;

    /// set(X): all N*D coefficients pooled.
    std::span<const double> values() const {
        return {coefficients.data(), static_cast<std::size_t>(coefficients.size())};
    }
};

/// Relative eigenvalue cutoff below which a direction counts as null.
inline constexpr double kRankTolerance = 1e-10;

namespace detail {

inline void fix_signs(Eigen::MatrixXd& basis) {
    for (Eigen::Index k = 0; k < basis.cols(); ++k) {
        Eigen::Index arg = 0;
        basis.col(k).cwiseAbs().maxCoeff(&arg);
        if (basis(arg, k) < 0.0) basis.col(k) *= -1.0;
    }
}

inline RowMatrixXd centered(const FlattenedFeatures& y, const Eigen::VectorXd& mean) {
    RowMatrixXd yc(y.rows, y.cols);
    for (std::size_t i = 0; i < y.rows; ++i) {
        const auto row = y.row(i);
        double* dst = yc.row(static_cast<Eigen::Index>(i)).data();
        for (std::size_t j = 0; j < y.cols; ++j) dst[j] = static_cast<double>(row[j]) - mean[j];
    }
    return yc;
}

inline Eigen::VectorXd column_mean(const FlattenedFeatures& y) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(y.cols));
    for (std::size_t i = 0; i < y.rows; ++i) {
        const auto row = y.row(i);
        for (std::size_t j = 0; j < y.cols; ++j) mean[j] += row[j];
    }
    return mean / static_cast<double>(y.rows);
}

inline std::size_t numeric_rank(const Eigen::VectorXd& ascending) {
    const double top = std::max(ascending[ascending.size() - 1], 0.0);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < ascending.size(); ++i)
        if (ascending[i] > kRankTolerance * top) ++r;
    return top > 0.0 ? r : 0;
}

}  // namespace detail

/// Fits a D-component PCA. With fewer rows than columns the N x N Gram matrix
/// (Y - mean)(Y - mean)^T is diagonalized and its eigenvectors are lifted to
/// feature space; otherwise the covariance matrix is diagonalized directly.
inline PcaProjection fit_pca(const FlattenedFeatures& y, std::size_t dim, std::string fitted_on = {}) {
    const std::size_t n = y.rows, m = y.cols;
    if (n < 2) throw ParameterError("PCA needs at least 2 samples, got " + std::to_string(n));
    if (dim == 0 || dim > std::min(n - 1, m)) {
        throw ParameterError("PCA dimension " + std::to_string(dim) + " must be in [1, min(N-1, HWC)] = [1, " +
                             std::to_string(std::min(n - 1, m)) + "]");
    }

    PcaProjection proj;
    proj.fitted_on = std::move(fitted_on);
    proj.n_fit = n;
    proj.mean = detail::column_mean(y);
    const RowMatrixXd yc = detail::centered(y, proj.mean);
    const auto d = static_cast<Eigen::Index>(dim);

    Eigen::VectorXd eig;
    if (n < m) {
        Eigen::MatrixXd gram(n, n);
        gram.setZero();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(yc);
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.info() != Eigen::Success) throw NumericError("Gram eigendecomposition failed");
        eig = es.eigenvalues();
        const std::size_t rank = detail::numeric_rank(eig);
        if (rank < dim) {
            throw RankError("centered features have rank " + std::to_string(rank) + " < requested dimension " +
                                std::to_string(dim),
                            rank);
        }
        // Largest eigenvalues sit at the end; reverse into descending order.
        const Eigen::MatrixXd u = es.eigenvectors().rightCols(d).rowwise().reverse();
        const Eigen::VectorXd lambda = eig.tail(d).reverse();
        proj.basis = yc.transpose() * u;
        for (Eigen::Index k = 0; k < d; ++k) proj.basis.col(k) /= std::sqrt(lambda[k]);
        proj.variances = lambda / static_cast<double>(n - 1);
    } else {
        const Eigen::MatrixXd cov = yc.transpose() * yc;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
        eig = es.eigenvalues();
        const std::size_t rank = detail::numeric_rank(eig);
        if (rank < dim) {
            throw RankError("centered features have rank " + std::to_string(rank) + " < requested dimension " +
                                std::to_string(dim),
                            rank);
        }
        proj.basis = es.eigenvectors().rightCols(d).rowwise().reverse();
        proj.variances = eig.tail(d).reverse() / static_cast<double>(n - 1);
    }
    detail::fix_signs(proj.basis);
    return proj;
}

inline PcaProjection fit_pca(const FeatureSet& set, std::size_t dim) {
    return fit_pca(flatten(set), dim, set.dataset_id);
}

/// Applies a fitted projection to (possibly different) data: X = (Y - mean) P.
inline ProjectedFeatures project(const PcaProjection& proj, const FlattenedFeatures& y) {
    if (y.cols != proj.input_dim()) {
        throw DimensionError("feature dimension " + std::to_string(y.cols) + " does not match projection input " +
                             std::to_string(proj.input_dim()));
    }
    ProjectedFeatures out;
    out.projection_id = proj.fitted_on;
    out.coefficients.resize(static_cast<Eigen::Index>(y.rows), proj.basis.cols());

    // Blocks of rows keep the centered copy small.
    constexpr std::size_t kBlock = 64;
    RowMatrixXd block;
    for (std::size_t start = 0; start < y.rows; start += kBlock) {
        const std::size_t rows = std::min(kBlock, y.rows - start);
        block.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(y.cols));
        for (std::size_t i = 0; i < rows; ++i) {
            const auto row = y.row(start + i);
            double* dst = block.row(static_cast<Eigen::Index>(i)).data();
            for (std::size_t j = 0; j < y.cols; ++j) dst[j] = static_cast<double>(row[j]) - proj.mean[j];
        }
        out.coefficients.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(rows)).noalias() =
            block * proj.basis;
    }
    return out;
}

inline ProjectedFeatures project(const PcaProjection& proj, const FeatureSet& set) {
    return project(proj, flatten(set));
}

}  // namespace srga
