#include "skelsc/metrics.hpp"
#include "skelsc/tsc.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace skelsc;
using skelsc::testing::random_matrix;
using skelsc::testing::random_nonnegative;

namespace {

Matrix brute_force_laplacian(Index n, Index s) {
    Matrix A = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j && std::abs(i - j) <= s) A(i, j) = 1.0;
    Matrix deg = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) deg(i, i) = A.row(i).sum();
    return deg - A;
}

// Rank-one fit by alternating scalar least-squares updates from a positive start.
double rank_one_relative_error(const Matrix& X) {
    Vector u = Vector::Ones(X.rows());
    Vector v = Vector::Ones(X.cols());
    for (int it = 0; it < 500; ++it) {
        u = X * v / v.squaredNorm();
        v = X.transpose() * u / u.squaredNorm();
    }
    return (X - u * v.transpose()).norm() / X.norm();
}

// Nonnegative factors with block-structured codes: column j uses atom group(j).
Matrix planted_blocks(Index dim, int blocks, int per, std::mt19937_64& rng, std::vector<int>& truth, double noise) {
    const Matrix D0 = random_nonnegative(dim, blocks, rng);
    Matrix Z0 = Matrix::Zero(blocks, static_cast<Index>(blocks) * per);
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    for (int b = 0; b < blocks; ++b)
        for (int p = 0; p < per; ++p) {
            Z0(b, static_cast<Index>(b) * per + p) = amp(rng);
            truth.push_back(b);
        }
    Matrix X = D0 * Z0;
    if (noise > 0.0) X += random_matrix(X.rows(), X.cols(), rng, noise);
    return X;
}

}  // namespace

TEST(TemporalLaplacian, PathGraphThreeNodes) {
    Matrix expected(3, 3);
    expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    EXPECT_EQ(build_temporal_laplacian(3, 1), expected);
}

TEST(TemporalLaplacian, MatchesBruteForceAndAnnihilatesConstants) {
    EXPECT_EQ(build_temporal_laplacian(5, 2), brute_force_laplacian(5, 2));
    for (Index n : {2, 3, 7, 20})
        for (Index s : {1, 2, 3, 10}) {
            const Matrix L = build_temporal_laplacian(n, s);
            EXPECT_EQ(L, brute_force_laplacian(n, s));
            EXPECT_EQ(L * Vector::Ones(n), Vector::Zero(n));
            EXPECT_EQ(L, L.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix> eig(L);
            EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
        }
}

TEST(TemporalLaplacian, QuadraticFormNonnegativeOnNonnegativeCodes) {
    std::mt19937_64 rng(40);
    const Matrix L = build_temporal_laplacian(12, 3);
    for (int t = 0; t < 20; ++t) {
        const Matrix Z = random_nonnegative(4, 12, rng);
        EXPECT_GE((Z * L).cwiseProduct(Z).sum(), 0.0);
    }
}

TEST(TemporalLaplacian, RejectsDegenerateInput) {
    EXPECT_THROW(build_temporal_laplacian(1, 1), ParameterError);
    EXPECT_THROW(build_temporal_laplacian(4, 0), ParameterError);
}

TEST(SolveTsc, RankOneNonnegativeRecovered) {
    std::mt19937_64 rng(41);
    const Vector a = random_nonnegative(8, 1, rng).col(0).array() + 0.1;
    const Vector b = random_nonnegative(15, 1, rng).col(0).array() + 0.1;
    const Matrix X = a * b.transpose();
    ASSERT_LT(rank_one_relative_error(X), 1e-10);
    const TscModel m = solve_tsc(X, {.atoms = 1, .lambda1 = 1e-6, .lambda2 = 0.0});
    EXPECT_LT((X - m.dictionary * m.codes).norm() / X.norm(), 1e-3);
}

TEST(SolveTsc, PlantedFactorsReconstructed) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix D0 = random_nonnegative(12, 3, rng);
        const Matrix Z0 = random_nonnegative(3, 30, rng);
        const Matrix X = D0 * Z0;
        const TscModel m = solve_tsc(X, {.atoms = 3, .lambda1 = 1e-6, .lambda2 = 1e-6, .max_iter = 500,
                                         .rng_seed = static_cast<std::uint64_t>(trial)});
        EXPECT_LT((X - m.dictionary * m.codes).norm() / X.norm(), 1e-2) << "trial " << trial;
    }
}

TEST(SolveTsc, HeavyShrinkageDrivesCodesToZero) {
    std::mt19937_64 rng(43);
    const Matrix X = random_nonnegative(6, 10, rng);
    const TscModel m = solve_tsc(X, {.atoms = 3, .lambda1 = 1e8, .lambda2 = 1.0});
    EXPECT_LT(m.codes.norm(), 1e-6);
    EXPECT_NEAR(m.objective_trace.back(), X.squaredNorm(), 1e-6 * X.squaredNorm());
}

TEST(SolveTsc, ObjectiveNonIncreasingAndFactorsNonnegative) {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix X = random_matrix(5 + trial % 4, 12 + trial, rng);  // has negatives: exercises the shift
        for (DictionaryUpdate upd : {DictionaryUpdate::projected_gradient, DictionaryUpdate::multiplicative}) {
            const TscModel m = solve_tsc(X, {.max_iter = 60, .rng_seed = static_cast<std::uint64_t>(trial),
                                             .dictionary_update = upd});
            ASSERT_FALSE(m.objective_trace.empty());
            for (std::size_t i = 1; i < m.objective_trace.size(); ++i)
                EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] * (1.0 + 1e-8) + 1e-8);
            EXPECT_GE(m.dictionary.minCoeff(), 0.0);
            EXPECT_GE(m.codes.minCoeff(), 0.0);
            EXPECT_LE(m.shift, 0.0);
            for (Index a = 0; a < m.dictionary.cols(); ++a) EXPECT_LE(m.dictionary.col(a).norm(), 1.0 + 1e-12);
        }
    }
}

TEST(SolveTsc, DefaultAtomCount) {
    EXPECT_EQ(TscParams{}.resolved_atoms(10), 3);
    EXPECT_EQ(TscParams{}.resolved_atoms(1000), 50);
    std::mt19937_64 rng(45);
    const TscModel m = solve_tsc(random_nonnegative(4, 10, rng), {.max_iter = 5});
    EXPECT_EQ(m.dictionary.cols(), 3);
    EXPECT_EQ(m.codes.rows(), 3);
    EXPECT_EQ(m.codes.cols(), 10);
}

TEST(SolveTsc, ParameterErrors) {
    std::mt19937_64 rng(46);
    const Matrix X = random_nonnegative(4, 6, rng);
    EXPECT_THROW(solve_tsc(X, {.atoms = 7}), ParameterError);
    EXPECT_THROW(solve_tsc(X, {.atoms = 0}), ParameterError);
    EXPECT_THROW(solve_tsc(X, {.lambda1 = -1.0}), ParameterError);
    EXPECT_THROW(solve_tsc(X, {.neighbor_window = 0}), ParameterError);
    EXPECT_THROW(solve_tsc(X.leftCols(1), {}), ParameterError);
}

TEST(SolveTsc, Deterministic) {
    std::mt19937_64 rng(47);
    const Matrix X = random_nonnegative(6, 16, rng);
    const TscModel a = solve_tsc(X, {.rng_seed = 9});
    const TscModel b = solve_tsc(X, {.rng_seed = 9});
    EXPECT_EQ(a.objective_trace, b.objective_trace);
    EXPECT_EQ(a.codes, b.codes);
}

TEST(TscCluster, RepeatedColumnGroupsSeparate) {
    std::mt19937_64 rng(48);
    const Matrix base = random_nonnegative(6, 2, rng);
    Matrix X(6, 12);
    for (Index j = 0; j < 12; ++j) X.col(j) = base.col(j < 6 ? 0 : 1);
    const auto labels = tsc_cluster(X, {.atoms = 2}, 2);
    for (Index j = 1; j < 6; ++j) EXPECT_EQ(labels.labels[static_cast<std::size_t>(j)], labels.labels[0]);
    for (Index j = 7; j < 12; ++j) EXPECT_EQ(labels.labels[static_cast<std::size_t>(j)], labels.labels[6]);
    EXPECT_NE(labels.labels[0], labels.labels[6]);
}

TEST(TscCluster, PlantedThreeBlocks) {
    std::mt19937_64 rng(49);
    std::vector<int> truth;
    const Matrix X = planted_blocks(15, 3, 20, rng, truth, 0.01);
    const auto labels = tsc_cluster(X, {.atoms = 3}, 3);
    EXPECT_GE(accuracy(labels, truth).accuracy_percent, 95.0);
}

TEST(TscCluster, SingleClusterIsAllZero) {
    std::mt19937_64 rng(50);
    const auto labels = tsc_cluster(random_nonnegative(4, 9, rng), {}, 1);
    EXPECT_EQ(labels.labels, std::vector<int>(9, 0));
}

TEST(TscCluster, InvariantToPositiveScaling) {
    std::mt19937_64 rng(51);
    std::vector<int> truth;
    const Matrix X = planted_blocks(10, 3, 8, rng, truth, 0.0);
    const TscParams p{.atoms = 3, .lambda1 = 0.0, .lambda2 = 0.0};
    const auto a = tsc_cluster(X, p, 3);
    const auto b = tsc_cluster(4.0 * X, p, 3);
    EXPECT_DOUBLE_EQ(accuracy(a.labels, b.labels).accuracy_percent, 100.0);
}
