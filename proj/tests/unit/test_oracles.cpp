#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace bsdebm;
using bsdebm::testing::symmetric_chain;

namespace {

const PathBatch& batch_2state() {
    static const PathBatch b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 20), 40000, 99);
    return b;
}

LinearDriverSpec zero_spec(std::size_t n) {
    ConstantLinearCoefficients k{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                                 std::vector<Vector>(n, Vector::Zero(static_cast<Eigen::Index>(n))),
                                 std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    return k.spec();
}

} // namespace

TEST(SimpleBsdeMc, BrownianClaim) {
    const auto e = simple_bsde_mc([](double, std::size_t) { return 0.0; }, brownian_claim(), batch_2state());
    EXPECT_NEAR(e.y0, 0.0, 3.0 * e.se);
    EXPECT_EQ(e.n_paths, 40000u);
}

TEST(SimpleBsdeMc, StateDependentRunningCost) {
    const double c1 = 1.5, c2 = -0.7;
    const auto e = simple_bsde_mc([&](double, std::size_t s) { return s == 0 ? c1 : c2; }, constant_claim(0.0),
                                  batch_2state());
    const auto k = bsdebm::testing::kolmogorov(symmetric_chain(), 0, 1.0);
    EXPECT_NEAR(e.y0, c1 * k.occupation(0) + c2 * k.occupation(1), 3.0 * e.se);
}

TEST(SimpleBsdeMc, TimeDependentRunningCost) {
    // f(t, e_1) = cos t; E int cos(s) 1{X_s = e_1} ds against the Kolmogorov integral.
    const auto e = simple_bsde_mc([](double t, std::size_t s) { return s == 0 ? std::cos(t) : 0.0; },
                                  constant_claim(0.0), batch_2state());
    double exact = 0.0;
    const std::size_t n = 2000;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
        exact += std::cos(t) * bsdebm::testing::kolmogorov(symmetric_chain(), 0, t, 200).distribution(0) / static_cast<double>(n);
    }
    EXPECT_NEAR(e.y0, exact, 3.0 * e.se + 1e-6);
}

TEST(SimpleBsdeMc, ConstantRunningCostIsExact) {
    const auto e = simple_bsde_mc([](double, std::size_t) { return 1.0; }, constant_claim(0.0), batch_2state());
    EXPECT_NEAR(e.y0, 1.0, 1e-12);
    EXPECT_LT(e.se, 1e-12);
}

TEST(TwoStateClosedForms, MatchKolmogorov) {
    const auto a = symmetric_chain(1.3);
    const auto k = bsdebm::testing::kolmogorov(a, 0, 0.8);
    EXPECT_NEAR(two_state_transition(1.3, 0.8), k.distribution(1), 1e-12);
    EXPECT_NEAR(two_state_occupation(1.3, 0.8), k.occupation(0), 1e-12);
}

TEST(LinearBsdeMc, DegenerateExponential) {
    const auto e = linear_bsde_mc(symmetric_chain(), zero_spec(2), indicator_claim(1), batch_2state());
    EXPECT_NEAR(e.y0, bsdebm::testing::kProbSecondState, 3.0 * e.se);
    EXPECT_TRUE(e.warnings.empty());
}

TEST(LinearBsdeMc, DeterministicDiscount) {
    auto spec = zero_spec(2);
    spec.rho = [](double, std::size_t) { return 0.25; };
    const auto e = linear_bsde_mc(symmetric_chain(), spec, constant_claim(1.0), batch_2state());
    EXPECT_NEAR(e.y0, std::exp(0.25), 1e-10);
}

TEST(LinearBsdeMc, GirsanovDriftOnBrownianClaim) {
    auto spec = zero_spec(2);
    spec.alpha = [](double, std::size_t) { return 0.6; };
    const auto e = linear_bsde_mc(symmetric_chain(), spec, brownian_claim(), batch_2state());
    EXPECT_NEAR(e.y0, 0.6, 3.0 * e.se);
}

TEST(LinearBsdeMc, ForcingWithDiscount) {
    // phi = 1, rho = r: y0 = (e^{rT} - 1) / r.
    auto spec = zero_spec(2);
    spec.rho = [](double, std::size_t) { return 0.5; };
    spec.phi = [](double, double, std::size_t) { return 1.0; };
    const auto e = linear_bsde_mc(symmetric_chain(), spec, constant_claim(0.0), batch_2state());
    EXPECT_NEAR(e.y0, (std::exp(0.5) - 1.0) / 0.5, 1e-9);
}

TEST(LinearBsdeMc, JumpTermEqualsRateChange) {
    // gamma beta z2 with beta summing to zero adds gamma beta_j to the rate i -> j.
    const auto a = symmetric_chain();
    ConstantLinearCoefficients k{{0, 0}, {0, 0}, {0.5, 0.5}, {Vector(2), Vector(2)}, {0, 0}, {0, 0}};
    k.beta[0] << -0.8, 0.8;
    k.beta[1] << 0.6, -0.6;
    Matrix tilted(2, 2);
    tilted << -1.4, 1.3, 1.4, -1.3;
    const auto b = RateMatrix::validate(tilted, 0.5);
    const double exact = bsdebm::testing::kolmogorov(b, 0, 1.0).distribution(1);
    const auto e = linear_bsde_mc(a, k.spec(), indicator_claim(1), batch_2state());
    EXPECT_NEAR(e.y0, exact, 3.0 * e.se);
    EXPECT_TRUE(e.warnings.empty());
    const Problem p{a, 0, 1.0, affine_driver(a, k, 1.0), indicator_claim(1)};
    EXPECT_NEAR(solve_pde(p, {1000, 21}).report.y0, exact, 5e-4);
}

TEST(LinearBsdeMc, WarnsOnNonPositiveJumpFactor) {
    ConstantLinearCoefficients k{{0, 0}, {0, 0}, {5.0, 5.0}, {Vector(2), Vector(2)}, {0, 0}, {0, 0}};
    k.beta[0] << -1.0, 1.0;
    k.beta[1] << -1.0, 1.0;
    // From state 2 the factor is 1 + 5 * (-1) < 0.
    const auto e = linear_bsde_mc(symmetric_chain(), k.spec(), constant_claim(1.0), batch_2state());
    ASSERT_FALSE(e.warnings.empty());
    EXPECT_NE(e.warnings[0].find("NonPositiveJumpFactor"), std::string::npos);
}

TEST(LinearBsdeMc, WarnsWhenBetaLeavesTheRange) {
    ConstantLinearCoefficients k{{0, 0}, {0, 0}, {0.1, 0.1}, {Vector(2), Vector(2)}, {0, 0}, {0, 0}};
    k.beta[0] << 1.0, 1.0;
    k.beta[1] << 1.0, 1.0;
    const auto e = linear_bsde_mc(symmetric_chain(), k.spec(), constant_claim(1.0), batch_2state());
    ASSERT_EQ(e.warnings.size(), 1u);
    EXPECT_NE(e.warnings[0].find("range"), std::string::npos);
}

TEST(DoleansExponential, NoJumpPathIsContinuousExponential) {
    auto spec = zero_spec(2);
    spec.rho = [](double, std::size_t) { return 0.2; };
    spec.alpha = [](double, std::size_t) { return 0.5; };
    JointPath path{{1.0, 0, {}, {0}}, {0.3, -0.1}, 0};
    const auto d = doleans_exponential(symmetric_chain(), spec, path, TimeGrid::uniform(1.0, 2));
    EXPECT_NEAR(d.terminal(), std::exp(0.2 + 0.5 * 0.2 - 0.125), 1e-12);
    EXPECT_TRUE(d.jump_times.empty());
}
