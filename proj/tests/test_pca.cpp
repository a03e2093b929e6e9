#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "srga/pca.hpp"

using namespace srga;

namespace {

FeatureSet matrix_set(std::size_t n, std::size_t m, std::uint64_t seed) {
    FeatureSet s(n, 1, 1, m);
    std::mt19937_64 eng(seed);
    std::normal_distribution<float> d;
    for (auto& v : s.data) v = d(eng);
    return s;
}

std::vector<std::vector<double>> rows(const FeatureSet& s) {
    std::vector<std::vector<double>> y(s.n, std::vector<double>(s.tensor_size()));
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t j = 0; j < s.tensor_size(); ++j) y[i][j] = s.data[i * s.tensor_size() + j];
    return y;
}

double max_coordinate_diff(const ProjectedFeatures& x, const std::vector<std::vector<double>>& o) {
    double worst = 0;
    for (std::size_t i = 0; i < o.size(); ++i)
        for (std::size_t k = 0; k < o[i].size(); ++k)
            worst = std::max(worst, std::abs(x.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) -
                                             o[i][k]));
    return worst;
}

}  // namespace

TEST(Pca, CovarianceRouteMatchesBruteForce) {
    const auto s = matrix_set(10, 5, 1);
    const auto proj = fit_pca(s, 3);
    const auto x = project(proj, s);
    EXPECT_LE(max_coordinate_diff(x, oracle::pca_coordinates(rows(s), 3)), 1e-8);
}

TEST(Pca, GramRouteMatchesBruteForce) {
    for (std::uint64_t seed : {2u, 3u}) {
        const auto s = matrix_set(30, 80, seed);
        const auto x = project(fit_pca(s, 12), s);
        EXPECT_LE(max_coordinate_diff(x, oracle::pca_coordinates(rows(s), 12)), 1e-8);
    }
}

TEST(Pca, BasisIsOrthonormalAndSigned) {
    const auto s = matrix_set(40, 100, 4);
    const auto proj = fit_pca(s, 20);
    const Eigen::MatrixXd g = proj.basis.transpose() * proj.basis;
    EXPECT_LE((g - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-8);
    for (Eigen::Index k = 0; k < proj.basis.cols(); ++k) {
        Eigen::Index arg;
        proj.basis.col(k).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(proj.basis(arg, k), 0.0);
    }
    for (Eigen::Index k = 1; k < proj.variances.size(); ++k) EXPECT_GE(proj.variances[k - 1], proj.variances[k]);
}

TEST(Pca, ProjectedVariancesEqualEigenvalues) {
    const auto s = matrix_set(60, 90, 5);
    const auto proj = fit_pca(s, 15);
    const auto x = project(proj, s);
    const double n = static_cast<double>(s.n);
    for (Eigen::Index k = 0; k < 15; ++k) {
        const double mean = x.coefficients.col(k).mean();
        EXPECT_NEAR(mean, 0.0, 1e-10);
        const double var = x.coefficients.col(k).squaredNorm() / (n - 1);
        EXPECT_NEAR(var, proj.variances[k], 1e-8 * std::max(1.0, proj.variances[k]));
    }
    // Coefficients of different components are uncorrelated on the fit set.
    const Eigen::MatrixXd c = x.coefficients.transpose() * x.coefficients / n;
    Eigen::MatrixXd off = c;
    off.diagonal().setZero();
    EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pca, RankOneDataCapturedByFirstComponent) {
    FeatureSet s(8, 1, 1, 6);
    const float v[6] = {1, -2, 0.5f, 3, 0, 1};
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 6; ++j) s.data[i * 6 + j] = static_cast<float>(i + 1) * v[j];
    const auto proj = fit_pca(s, 1);
    const auto x = project(proj, s);
    const auto y = flatten(s);
    double total = 0;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            const double d = y(i, j) - proj.mean[static_cast<Eigen::Index>(j)];
            total += d * d;
        }
    EXPECT_NEAR(x.coefficients.squaredNorm() / total, 1.0, 1e-12);
    EXPECT_THROW(fit_pca(s, 2), RankError);
}

TEST(Pca, RecoversCoordinatesInOrthonormalSubspace) {
    // Rows live in span(e0, e2) with clearly different variances.
    FeatureSet s(50, 1, 1, 4);
    std::mt19937_64 eng(6);
    std::normal_distribution<float> d;
    std::vector<std::pair<double, double>> coords;
    for (std::size_t i = 0; i < s.n; ++i) {
        const float a = 5 * d(eng), b = d(eng);
        s.data[i * 4 + 0] = a;
        s.data[i * 4 + 2] = b;
        coords.push_back({a, b});
    }
    const auto proj = fit_pca(s, 2);
    const auto x = project(proj, s);
    double ma = 0, mb = 0;
    for (auto [a, b] : coords) {
        ma += a;
        mb += b;
    }
    ma /= 50;
    mb /= 50;
    // The sample covariance of (a, b) is not diagonal, so the basis may rotate
    // inside the plane; the in-plane radius is what must survive.
    for (std::size_t i = 0; i < s.n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double got = std::hypot(x.coefficients(r, 0), x.coefficients(r, 1));
        EXPECT_NEAR(got, std::hypot(coords[i].first - ma, coords[i].second - mb), 1e-5);
    }
}

TEST(Pca, ProjectingTheMeanGivesZero) {
    const auto s = matrix_set(20, 30, 7);
    const auto proj = fit_pca(s, 5);
    FeatureSet m(6, 1, 1, 30);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 30; ++j) m.data[i * 30 + j] = static_cast<float>(proj.mean[static_cast<Eigen::Index>(j)]);
    const auto x = project(proj, m);
    // The mean went through float storage, so allow float rounding.
    EXPECT_LE(x.coefficients.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Pca, OrthogonalityResidualRegression) {
    const auto s = matrix_set(50, 200, 8);
    const auto x = project(fit_pca(s, 30), s);
    Eigen::MatrixXd c = x.coefficients.transpose() * x.coefficients / 50.0;
    c.diagonal().setZero();
    EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pca, Errors) {
    const auto s = matrix_set(10, 20, 9);
    EXPECT_THROW(fit_pca(s, 10), ParameterError);  // D > N-1
    EXPECT_THROW(fit_pca(s, 0), ParameterError);
    EXPECT_THROW(fit_pca(matrix_set(1, 20, 1), 1), ParameterError);
    const auto proj = fit_pca(s, 3);
    EXPECT_THROW(project(proj, matrix_set(4, 21, 2)), DimensionError);

    FeatureSet flat(10, 1, 1, 20);  // all zero: rank 0
    try {
        fit_pca(flat, 2);
        FAIL();
    } catch (const RankError& e) {
        EXPECT_EQ(e.achievable_rank(), 0u);
    }
}

TEST(Pca, DeterministicAcrossCalls) {
    const auto s = matrix_set(25, 60, 10);
    const auto a = fit_pca(s, 8), b = fit_pca(s, 8);
    EXPECT_TRUE(a.basis == b.basis);
    EXPECT_TRUE(a.mean == b.mean);
}
