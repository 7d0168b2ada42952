#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace bsdebm;
using bsdebm::testing::symmetric_chain;

namespace {

const PathBatch& shared_batch() {
    static const PathBatch b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 20), 100000, 2718);
    return b;
}

} // namespace

TEST(SolveLsmc, MartingaleClaim) {
    const Problem p{symmetric_chain(), 0, 1.0, zero_driver(), brownian_claim()};
    const auto r = solve_lsmc(p, shared_batch());
    EXPECT_GT(r.report.se, 0.0);
    EXPECT_NEAR(r.report.y0, 0.0, 3.0 * r.report.se);
}

TEST(SolveLsmc, IndicatorMatchesKolmogorov) {
    const Problem p{symmetric_chain(), 0, 1.0, zero_driver(), indicator_claim(1)};
    LsmcConfig cfg;
    cfg.estimate_error = true;
    const auto r = solve_lsmc(p, shared_batch(), cfg);
    EXPECT_NEAR(r.report.y0, bsdebm::testing::kProbSecondState, 3.0 * r.report.se + r.report.error_estimate);
    EXPECT_EQ(r.report.diagnostics.at("n_paths"), 100000.0);
}

TEST(SolveLsmc, DiscountedConstantBothModes) {
    const Problem p{symmetric_chain(), 0, 1.0, discount_driver(0.3, 2), constant_claim(1.0)};
    const auto batch = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 200), 2000, 1);
    for (auto mode : {SolveMode::Implicit, SolveMode::Explicit}) {
        LsmcConfig cfg;
        cfg.mode = mode;
        // Deterministic answer; only the time discretization remains.
        EXPECT_NEAR(solve_lsmc(p, batch, cfg).report.y0, std::exp(0.3), 2e-3) << to_string(mode);
    }
}

TEST(SolveLsmc, AmbiguityNearSolverValue) {
    const Problem p{symmetric_chain(), 0, 1.0, ambiguity_driver(0.2), brownian_claim()};
    LsmcConfig cfg;
    cfg.estimate_error = true;
    const auto r = solve_lsmc(p, shared_batch(), cfg);
    EXPECT_NEAR(r.report.y0, 0.2, 3.0 * r.report.se + r.report.error_estimate + 5e-3);
}

TEST(SolveLsmc, MartingaleResidualsVanishOnAverage) {
    const auto a = bsdebm::testing::three_state_chain();
    const auto batch = generate_batch(a, 0, TimeGrid::uniform(1.0, 10), 20000, 31);
    const Problem p{a, 0, 1.0, chain_ambiguity_driver(a, 0.3), sum(brownian_claim(), indicator_claim(2))};
    LsmcConfig cfg;
    cfg.store_paths = true;
    const auto r = solve_lsmc(p, batch, cfg);
    const auto res = martingale_residuals(r.values, batch, a);
    ASSERT_EQ(res.size(), 10u);
    // The regression makes Y_{k+1} - Y_k + F dt average to zero exactly over
    // each bucket, so the residual mean is minus the sample mean of the
    // stochastic integrals, which fluctuates at their own standard error.
    const auto& v = r.values;
    const auto nodes = node_states(batch);
    for (std::size_t k = 0; k < res.size(); ++k) {
        std::vector<double> mart(batch.size());
        for (std::size_t p = 0; p < batch.size(); ++p) {
            const Vector dm = batch.paths[p].martingale_increments(a, batch.grid)[k];
            const auto z2 = v.z2(k, p);
            double m = v.z1[v.index(k, p, nodes.state_at(k, p))] * batch.paths[p].brownian_increments[k];
            for (std::size_t j = 0; j < 3; ++j) m += z2[j] * dm(static_cast<Eigen::Index>(j));
            mart[p] = m;
        }
        const double se = std::hypot(res[k].se, bsdebm::testing::moments(mart).se);
        EXPECT_NEAR(res[k].mean, 0.0, 4.0 * se) << "step " << k;
    }
    EXPECT_THROW(martingale_residuals(r.values, batch.coarsened(2), a), SolverError);
}

TEST(SolveLsmc, IndependentOfWorkerCount) {
    const auto a = bsdebm::testing::three_state_chain();
    const auto batch = generate_batch(a, 1, TimeGrid::uniform(1.0, 8), 10000, 4);
    const Problem p{a, 1, 1.0, ambiguity_driver(0.3), brownian_squared_claim()};
    LsmcConfig one, many;
    many.workers = 4;
    const auto r1 = solve_lsmc(p, batch, one);
    const auto r4 = solve_lsmc(p, batch, many);
    EXPECT_EQ(r1.report.y0, r4.report.y0);
    EXPECT_EQ(r1.report.se, r4.report.se);
}

TEST(SolveLsmc, SparseBucketsFallBack) {
    const auto a = bsdebm::testing::three_state_chain();
    const auto batch = generate_batch(a, 0, TimeGrid::uniform(0.2, 10), 3, 8);
    const Problem p{a, 0, 0.2, zero_driver(), brownian_claim()};
    const auto r = solve_lsmc(p, batch);
    EXPECT_GT(r.report.diagnostics.at("empty_state_buckets") + r.report.diagnostics.at("singular_regressions"), 0.0);
    EXPECT_FALSE(r.report.notes.empty());
    EXPECT_TRUE(std::isfinite(r.report.y0));
}
