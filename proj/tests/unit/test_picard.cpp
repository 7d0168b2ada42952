#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace bsdebm;
using bsdebm::testing::symmetric_chain;

TEST(Picard, ZeroDriverConvergesAtOnce) {
    PdePicardBackend b({symmetric_chain(), 0, 1.0, zero_driver(), brownian_claim()}, {50, 41});
    const auto r = picard_iterate(b, Staging::FreezeZ, 1e-8, 10);
    EXPECT_EQ(r.iterations, 1u);
    ASSERT_EQ(r.report.picard_deltas.size(), 1u);
    EXPECT_EQ(r.report.picard_deltas[0], 0.0);
}

TEST(Picard, DiscountFixedPointMatchesImplicitScheme) {
    const Problem p{symmetric_chain(), 0, 1.0, discount_driver(0.4, 2), sum(constant_claim(1.0), indicator_claim(1))};
    const PdeConfig cfg{100, 41};
    PdePicardBackend b(p, cfg);
    const auto r = picard_iterate(b, Staging::FreezeY, 1e-11, 50);
    EXPECT_NEAR(r.report.y0, solve_pde(p, cfg).report.y0, 1e-8);
    const auto& ratios = r.report.picard_ratios;
    ASSERT_GE(ratios.size(), 2u);
    for (std::size_t n = 1; n < ratios.size(); ++n) EXPECT_LE(ratios[n], ratios[n - 1] * (1.0 + 1e-6) + 1e-9);
    EXPECT_LT(ratios.back(), 1.0);
}

TEST(Picard, FreezingZContractsForAmbiguity) {
    const auto a = bsdebm::testing::three_state_chain();
    const Problem p{a, 0, 0.5, chain_ambiguity_driver(a, 0.3), sum(brownian_claim(), indicator_claim(1))};
    PdePicardBackend b(p, {100, 81});
    const auto r = picard_iterate(b, Staging::FreezeZ, 1e-8, 20);
    EXPECT_LE(r.iterations, 20u);
    EXPECT_LT(r.report.diagnostics.at("picard_final_ratio"), 1.0);
    EXPECT_NEAR(r.report.y0, solve_pde(p, {100, 81}).report.y0, 1e-6);
}

TEST(Picard, NoConvergenceCarriesLastRatio) {
    PdePicardBackend b({symmetric_chain(), 0, 1.0, discount_driver(0.5, 2), constant_claim(1.0)}, {50, 21});
    try {
        picard_iterate(b, Staging::FreezeY, 1e-14, 3);
        FAIL();
    } catch (const SolverError& e) {
        EXPECT_EQ(e.kind(), SolverError::Kind::NoConvergence);
        EXPECT_GT(e.last_ratio(), 0.0);
        EXPECT_LT(e.last_ratio(), 1.0);
    }
}

TEST(Picard, RejectsMissingStagingAndBadTolerance) {
    PdePicardBackend b({symmetric_chain(), 0, 1.0, zero_driver(), brownian_claim()}, {10, 21});
    EXPECT_THROW(picard_iterate(b, Staging::None, 1e-8, 10), SolverError);
    EXPECT_THROW(picard_iterate(b, Staging::FreezeY, 0.0, 10), SolverError);
}

TEST(Picard, RegressionBackendMatchesDirectSolve) {
    const auto a = symmetric_chain();
    const auto batch = generate_batch(a, 0, TimeGrid::uniform(0.5, 10), 5000, 12);
    const Problem p{a, 0, 0.5, discount_driver(0.4, 2), indicator_claim(1)};
    LsmcPicardBackend b(p, batch, {});
    const auto r = picard_iterate(b, Staging::FreezeY, 1e-10, 50);
    const auto direct = solve_lsmc(p, batch);
    EXPECT_NEAR(r.report.y0, direct.report.y0, 1e-7);
    EXPECT_LT(r.report.picard_ratios.back(), 1.0);
}
