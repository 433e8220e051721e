#include "skelsc/metrics.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace skelsc;
using skelsc::testing::brute_force_assignment;

TEST(Hungarian, IdentityFavoringCost) {
    Matrix cost = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
    const auto a = hungarian(cost);
    EXPECT_EQ(a.row_to_col, (std::vector<int>{0, 1, 2, 3}));
    EXPECT_EQ(a.cost, 0.0);
}

TEST(Hungarian, ThreeByThreeEnumerated) {
    Matrix cost(3, 3);
    cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    EXPECT_EQ(brute_force_assignment(cost), 5.0);
    const auto a = hungarian(cost);
    EXPECT_EQ(a.cost, 5.0);
    EXPECT_EQ(a.row_to_col, (std::vector<int>{1, 0, 2}));
}

TEST(Hungarian, ConstantCost) {
    const auto a = hungarian(Matrix::Constant(5, 5, 2.5));
    EXPECT_EQ(a.cost, 12.5);
    std::vector<int> sorted = a.row_to_col;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4}));
}

TEST(Hungarian, RejectsNonFiniteAndNonSquare) {
    Matrix c = Matrix::Zero(2, 2);
    c(0, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(hungarian(c), ParameterError);
    EXPECT_THROW(hungarian(Matrix::Zero(2, 3)), ParameterError);
}

TEST(Hungarian, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> size(1, 7), val(-20, 20);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = size(rng);
        Matrix c(k, k);
        for (Index i = 0; i < c.size(); ++i) c.data()[i] = val(rng);
        const auto a = hungarian(c);
        EXPECT_EQ(a.cost, brute_force_assignment(c));
    }
}

TEST(Accuracy, PerfectAndPermuted) {
    const std::vector<int> truth{0, 0, 1, 1, 2, 2, 2};
    EXPECT_EQ(accuracy(truth, truth).accuracy_percent, 100.0);
    std::vector<int> perm;
    for (int t : truth) perm.push_back((t + 1) % 3);
    const auto r = accuracy(perm, truth);
    EXPECT_EQ(r.accuracy_percent, 100.0);
    EXPECT_EQ(r.matched_labels, truth);
}

TEST(Accuracy, EightyPercentCase) {
    const std::vector<int> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const std::vector<int> pred{1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
    // exhaustive over the two possible mappings
    int best = 0;
    for (int swap = 0; swap < 2; ++swap) {
        int c = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) c += ((swap ? 1 - pred[i] : pred[i]) == truth[i]);
        best = std::max(best, c);
    }
    EXPECT_EQ(best, 8);
    EXPECT_EQ(accuracy(pred, truth).accuracy_percent, 80.0);
}

TEST(Accuracy, PaddingCountsUnmatchedClustersAsWrong) {
    const std::vector<int> truth{0, 0, 1, 1};
    const std::vector<int> pred{0, 2, 1, 1};  // three clusters, two classes
    const auto r = accuracy(pred, truth);
    EXPECT_EQ(r.accuracy_percent, 75.0);
    EXPECT_THROW(accuracy(std::vector<int>{0}, std::vector<int>{0, 1}), ParameterError);
}

TEST(Accuracy, InvariantUnderRelabeling) {
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<int> truth(40), pred(40);
        for (auto& t : truth) t = lab(rng);
        for (auto& p : pred) p = lab(rng);
        std::vector<int> pp{0, 1, 2, 3}, tp{0, 1, 2, 3};
        std::shuffle(pp.begin(), pp.end(), rng);
        std::shuffle(tp.begin(), tp.end(), rng);
        std::vector<int> pred2, truth2;
        for (int p : pred) pred2.push_back(pp[static_cast<std::size_t>(p)]);
        for (int t : truth) truth2.push_back(tp[static_cast<std::size_t>(t)]);
        const double a = accuracy(pred, truth).accuracy_percent;
        EXPECT_EQ(a, accuracy(pred2, truth2).accuracy_percent);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 100.0);
    }
}

TEST(Accuracy, RandomPredictionsNearChance) {
    std::mt19937_64 rng(33);
    std::uniform_int_distribution<int> lab(0, 3);
    std::vector<int> truth(20000), pred(20000);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth[i] = static_cast<int>(i % 4);
        pred[i] = lab(rng);
    }
    EXPECT_NEAR(accuracy(pred, truth).accuracy_percent, 25.0, 1.5);
}
