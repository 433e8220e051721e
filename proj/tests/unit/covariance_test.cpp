#include "skelsc/covariance.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace skelsc;
using skelsc::testing::random_matrix;
using skelsc::testing::random_sequence;

namespace {

// Explicit mean, then explicit outer-product accumulation.
Matrix two_pass_covariance(const Matrix& P) {
    const Index T = P.rows(), d = P.cols();
    std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
    for (Index t = 0; t < T; ++t)
        for (Index i = 0; i < d; ++i) mean[static_cast<std::size_t>(i)] += P(t, i);
    for (auto& m : mean) m /= static_cast<double>(T);
    Matrix out = Matrix::Zero(d, d);
    for (Index t = 0; t < T; ++t)
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j)
                out(i, j) += (P(t, i) - mean[static_cast<std::size_t>(i)]) * (P(t, j) - mean[static_cast<std::size_t>(j)]);
    return out / static_cast<double>(T);
}

}  // namespace

TEST(Covariance, ConstantSequenceIsZero) {
    Matrix f(5, 6);
    for (Index t = 0; t < 5; ++t) f.row(t) << 1, -2, 3, 0.5, 7, 9;
    EXPECT_TRUE(covariance(SkeletonSequence(2, f)).matrix.isZero(0.0));
}

TEST(Covariance, HandEvaluatedTwoFrames) {
    Matrix f(2, 3);
    f << 1, 0, 0, 3, 0, 0;
    const Matrix c = covariance(SkeletonSequence(1, f)).matrix;
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 0) = 1.0;
    EXPECT_EQ(c, expected);
}

TEST(Covariance, MatchesTwoPassOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const auto seq = random_sequence(1 + trial % 5, 1 + (trial * 7) % 30, rng);
        const Matrix oracle = two_pass_covariance(seq.frames());
        const Matrix c = covariance(seq).matrix;
        EXPECT_LE((c - oracle).norm(), 1e-12 * std::max(1.0, oracle.norm()));
    }
}

TEST(Covariance, PermutationInvariantAndScalesQuadratically) {
    std::mt19937_64 rng(22);
    const auto seq = random_sequence(3, 12, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 12, rng);
    const Matrix shuffled = perm * seq.frames();
    const Matrix a = covariance(seq).matrix;
    EXPECT_LE((covariance(SkeletonSequence(3, shuffled)).matrix - a).norm(), 1e-12 * a.norm());
    const Matrix scaled = covariance(SkeletonSequence(3, 2.5 * seq.frames())).matrix;
    EXPECT_LE((scaled - 6.25 * a).norm(), 1e-12 * scaled.norm());
}

TEST(Covariance, SymmetricPsdAndRank) {
    std::mt19937_64 rng(23);
    const auto seq = random_sequence(2, 10, rng);  // d = 6, T >= d + 1
    const Matrix c = covariance(seq).matrix;
    EXPECT_EQ(c, c.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
    const auto single = random_sequence(2, 1, rng);
    EXPECT_TRUE(covariance(single).matrix.isZero(0.0));
}

TEST(FlattenUpper, TwoByTwo) {
    CovarianceDescriptor d{(Matrix(2, 2) << 1.5, -2.0, -2.0, 4.0).finished()};
    EXPECT_EQ(flatten_upper(d), (Vector(3) << 1.5, -2.0, 4.0).finished());
}

TEST(FlattenUpper, IdentityHasOnesOnDiagonalPositions) {
    const Index d = 4;
    const Vector v = flatten_upper({Matrix::Identity(d, d)});
    ASSERT_EQ(v.size(), 10);
    Index k = 0;
    for (Index i = 0; i < d; ++i)
        for (Index j = i; j < d; ++j) EXPECT_EQ(v(k++), i == j ? 1.0 : 0.0);
}

TEST(FlattenUpper, MatchesDoubleLoopOracleOnSpd) {
    std::mt19937_64 rng(24);
    const Matrix a = random_matrix(6, 6, rng);
    const Matrix spd = a * a.transpose() + Matrix::Identity(6, 6);
    const Vector v = flatten_upper({spd});
    ASSERT_EQ(v.size(), 21);
    std::vector<double> oracle;
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j)
            if (j >= i) oracle.push_back(spd(i, j));
    for (std::size_t k = 0; k < oracle.size(); ++k) EXPECT_EQ(v(static_cast<Index>(k)), oracle[k]);
}

TEST(FlattenUpper, InverseIsIdentityOnSymmetric) {
    std::mt19937_64 rng(25);
    for (Index d = 1; d <= 7; ++d) {
        const Matrix a = random_matrix(d, d, rng);
        const Matrix sym = a + a.transpose();
        for (bool w : {false, true}) {
            const Matrix back = unflatten_upper(flatten_upper({sym}, w), w).matrix;
            EXPECT_LE((back - sym).cwiseAbs().maxCoeff(), 1e-15 * (1.0 + sym.cwiseAbs().maxCoeff()));
        }
    }
    EXPECT_THROW(unflatten_upper(Vector::Zero(4)), ParameterError);
}

TEST(FlattenUpper, Sqrt2WeightingPreservesFrobeniusInnerProduct) {
    std::mt19937_64 rng(26);
    const Matrix a = random_matrix(5, 5, rng), b = random_matrix(5, 5, rng);
    const Matrix sa = a + a.transpose(), sb = b + b.transpose();
    const double frob = sa.cwiseProduct(sb).sum();
    EXPECT_NEAR(flatten_upper({sa}, true).dot(flatten_upper({sb}, true)), frob, 1e-10 * std::abs(frob));
}

TEST(Encoders, Shapes) {
    std::mt19937_64 rng(27);
    std::vector<SkeletonSequence> s{random_sequence(2, 5, rng), random_sequence(2, 8, rng)};
    EXPECT_EQ(encode_covariance(s).rows(), 21);
    EXPECT_THROW(encode_raw_stacked(s), ParameterError);
    s[1] = random_sequence(2, 5, rng);
    const Matrix raw = encode_raw_stacked(s);
    EXPECT_EQ(raw.rows(), 30);
    EXPECT_EQ(raw(7, 1), s[1].frames()(1, 1));
}
