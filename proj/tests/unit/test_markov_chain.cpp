#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace bsdebm;
using bsdebm::testing::moments;
using bsdebm::testing::symmetric_chain;

TEST(RateMatrix, AcceptsSymmetricGenerator) {
    const auto a = symmetric_chain();
    EXPECT_EQ(a.size(), 2u);
    EXPECT_DOUBLE_EQ(a.rate(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(a.exit_rate(1), 1.0);
}

TEST(RateMatrix, RejectsRateAboveInverseC) {
    Matrix a(2, 2);
    a << -3, 1, 3, -1;
    try {
        RateMatrix::validate(a, 0.5);
        FAIL() << "expected RateMatrixError";
    } catch (const RateMatrixError& e) {
        EXPECT_TRUE(e.has(RateMatrixViolation::OffDiagonalOutOfBounds));
        EXPECT_FALSE(e.has(RateMatrixViolation::ColumnSumNonzero));
    }
}

TEST(RateMatrix, AcceptsAsymmetricRates) {
    Matrix a(2, 2);
    a << -1, 0.9, 1, -0.9;
    EXPECT_NO_THROW(RateMatrix::validate(a, 0.5));
}

TEST(RateMatrix, ReportsEveryViolation) {
    Matrix a(3, 3);
    a << -1, 5, 0.5, 1, -5, 0.5, 0.5, 0, -1;
    try {
        RateMatrix::validate(a, 0.5);
        FAIL();
    } catch (const RateMatrixError& e) {
        EXPECT_TRUE(e.has(RateMatrixViolation::OffDiagonalOutOfBounds));
        EXPECT_TRUE(e.has(RateMatrixViolation::ColumnSumNonzero));
        EXPECT_GE(e.issues().size(), 3u);
    }
    EXPECT_THROW(RateMatrix::validate(Matrix::Zero(2, 3), 0.5), RateMatrixError);
    EXPECT_THROW(RateMatrix::validate(symmetric_chain().matrix(), 1.5), RateMatrixError);
}

TEST(SimulateChain, ZeroHorizonHasNoJumps) {
    Rng rng(3);
    const auto p = simulate_chain(symmetric_chain(), 1, 0.0, rng);
    EXPECT_EQ(p.jumps(), 0u);
    ASSERT_EQ(p.states.size(), 1u);
    EXPECT_EQ(p.states[0], 1u);
}

TEST(SimulateChain, SameSeedSamePath) {
    const auto a = bsdebm::testing::three_state_chain();
    Rng r1(42), r2(42);
    const auto p = simulate_chain(a, 0, 5.0, r1);
    const auto q = simulate_chain(a, 0, 5.0, r2);
    EXPECT_EQ(p.jump_times, q.jump_times);
    EXPECT_EQ(p.states, q.states);
    EXPECT_TRUE(is_valid_path(p, 3));
}

TEST(SimulateChain, MeanJumpCountMatchesCompensator) {
    // E[N_T] = int_0^T (a_21 P(X=e1) + a_12 P(X=e2)) ds = T for the rate-one chain.
    const auto a = symmetric_chain();
    const double horizon = 10.0;
    Rng rng(7);
    std::vector<double> n(100000);
    for (auto& v : n) v = static_cast<double>(simulate_chain(a, 0, horizon, rng).jumps());
    const auto m = moments(n);
    EXPECT_NEAR(m.mean, horizon, 3.0 * m.se);
}

TEST(MartingaleIncrements, NoJumpIsMinusDrift) {
    const auto a = bsdebm::testing::three_state_chain();
    ChainPath p{2.0, 1, {}, {1}};
    const auto dm = martingale_increments(p, a, {0.0, 2.0});
    ASSERT_EQ(dm.size(), 1u);
    EXPECT_LT((dm[0] + 2.0 * a.matrix() * unit_vector(3, 1)).norm(), 1e-14);
}

TEST(MartingaleIncrements, OneJumpInsideInterval) {
    const auto a = symmetric_chain();
    const double tau = 0.3;
    ChainPath p{1.0, 0, {tau}, {0, 1}};
    const auto dm = martingale_increments(p, a, {0.0, 0.5, 1.0});
    const Vector e1 = unit_vector(2, 0), e2 = unit_vector(2, 1);
    const Vector expected = (e2 - e1) - a.matrix() * (e1 * tau + e2 * (0.5 - tau));
    EXPECT_LT((dm[0] - expected).norm(), 1e-14);
    EXPECT_LT((dm[1] + 0.5 * a.matrix() * e2).norm(), 1e-14);
}

TEST(MartingaleIncrements, TerminalMeanIsZero) {
    const auto a = bsdebm::testing::three_state_chain();
    Rng rng(11);
    std::vector<std::vector<double>> comp(3, std::vector<double>(100000));
    for (std::size_t p = 0; p < 100000; ++p) {
        const Vector m = terminal_martingale(simulate_chain(a, 0, 1.0, rng), a);
        for (int j = 0; j < 3; ++j) comp[j][p] = m(j);
    }
    for (const auto& c : comp) {
        const auto m = moments(c);
        EXPECT_NEAR(m.mean, 0.0, 3.0 * m.se);
    }
}

TEST(Psi, SymmetricTwoStateExample) {
    const auto p = psi(symmetric_chain(), 0);
    Matrix expected(2, 2);
    expected << 1, -1, -1, 1;
    EXPECT_LT((p.matrix - expected).norm(), 1e-15);
}

TEST(Psi, ColumnFormulaExamples) {
    const auto a = symmetric_chain();
    EXPECT_LT((psi_column(a, 0, 0) - Vector::Map(std::vector<double>{1, -1}.data(), 2)).norm(), 1e-15);
    EXPECT_LT((psi_column(a, 0, 1) - Vector::Map(std::vector<double>{-1, 1}.data(), 2)).norm(), 1e-15);
}

TEST(Psi, AlgebraOnRandomGenerators) {
    Rng rng(2024);
    std::uniform_int_distribution<std::size_t> dim(2, 6);
    for (int rep = 0; rep < 200; ++rep) {
        const auto a = random_rate_matrix(dim(rng), 0.3, rng);
        const auto n = static_cast<Eigen::Index>(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto p = psi(a, i);
            EXPECT_LT((p.matrix - p.matrix.transpose()).cwiseAbs().maxCoeff(), 1e-12);
            EXPECT_LT((p.matrix * Vector::Ones(n)).cwiseAbs().maxCoeff(), 1e-10);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(p.matrix);
            EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
            for (std::size_t j = 0; j < a.size(); ++j)
                EXPECT_LT((psi_column(a, i, j) - p.matrix.col(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff(), 1e-12);
            const Matrix pi = psi_pinv(p);
            EXPECT_LT((p.matrix * pi * p.matrix - p.matrix).cwiseAbs().maxCoeff(), 1e-10);
            EXPECT_LT((pi * p.matrix * pi - pi).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Seminorm, Examples) {
    const auto p = psi(symmetric_chain(), 0);
    EXPECT_DOUBLE_EQ(seminorm_sq(Vector::Ones(2), p), 0.0);
    EXPECT_DOUBLE_EQ(seminorm_sq(Vector::Zero(2), p), 0.0);
    Vector z(2);
    z << 0, 1;
    EXPECT_NEAR(seminorm_sq(z, p), 1.0, 1e-15);
    EXPECT_THROW(seminorm_sq(Vector::Ones(3), p), Error);
}

TEST(Seminorm, NegativeFormIsRejected) {
    PsiMatrix bad{-Matrix::Identity(2, 2), 0};
    EXPECT_THROW(seminorm_sq(Vector::Ones(2), bad), NegativeBeyondTolerance);
}

TEST(PsiPinv, Examples) {
    const Matrix pi = psi_pinv(psi(symmetric_chain(), 0));
    Matrix expected(2, 2);
    expected << 0.25, -0.25, -0.25, 0.25;
    EXPECT_LT((pi - expected).norm(), 1e-14);
    EXPECT_EQ(psi_pinv(Matrix::Zero(3, 3)), Matrix::Zero(3, 3));
}

TEST(CountJumps, NoJumpPath) {
    const auto a = bsdebm::testing::three_state_chain();
    ChainPath p{1.5, 0, {}, {0}};
    const auto j = count_jumps(p, a);
    EXPECT_EQ(j.counts.sum(), 0);
    for (std::size_t k = 1; k < 3; ++k) EXPECT_DOUBLE_EQ(j.compensators(0, static_cast<Eigen::Index>(k)), a.rate(0, k) * 1.5);
    EXPECT_DOUBLE_EQ(j.compensators(1, 2), 0.0);
}

TEST(CountJumps, CompensatedCountsHaveZeroMean) {
    const auto a = symmetric_chain();
    Rng rng(5);
    std::vector<double> n12(100000), m12(100000), m21(100000);
    for (std::size_t p = 0; p < n12.size(); ++p) {
        const auto j = count_jumps(simulate_chain(a, 0, 1.0, rng), a);
        n12[p] = j.counts(0, 1);
        m12[p] = j.martingale()(0, 1);
        m21[p] = j.martingale()(1, 0);
    }
    const auto mn = moments(n12);
    EXPECT_NEAR(mn.mean, bsdebm::testing::kExpectedJumps12, 3.0 * mn.se);
    EXPECT_NEAR(moments(m12).mean, 0.0, 3.0 * moments(m12).se);
    EXPECT_NEAR(moments(m21).mean, 0.0, 3.0 * moments(m21).se);
}

TEST(Oracle, FrozenConstantsMatchKolmogorovIntegration) {
    const auto k = bsdebm::testing::kolmogorov(symmetric_chain(), 0, 1.0);
    EXPECT_NEAR(k.occupation(0), bsdebm::testing::kExpectedJumps12, 1e-12);
    EXPECT_NEAR(k.distribution(1), bsdebm::testing::kProbSecondState, 1e-12);
}

TEST(IntegratedPsi, MatchesOuterProductOfMartingale) {
    const auto a = bsdebm::testing::three_state_chain();
    Rng rng(9);
    const std::size_t paths = 40000;
    Matrix qv = Matrix::Zero(3, 3), ip = Matrix::Zero(3, 3);
    for (std::size_t p = 0; p < paths; ++p) {
        const auto path = simulate_chain(a, 1, 1.0, rng);
        const Vector m = terminal_martingale(path, a);
        qv += m * m.transpose();
        ip += integrated_psi(path, a);
    }
    qv /= static_cast<double>(paths);
    ip /= static_cast<double>(paths);
    EXPECT_LT((qv - ip).cwiseAbs().maxCoeff(), 0.05);
}
