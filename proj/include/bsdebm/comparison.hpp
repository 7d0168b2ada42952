#pragma once

// Numerical comparison harness: verifies the premises on the grid, solves both
// problems with the implicit PDE scheme and reports the worst margin u1 - u2.

#include "bsdebm/driver_checks.hpp"
#include "bsdebm/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace bsdebm {

struct StandardPair {
    Driver driver;
    TerminalClaim claim;
};

struct ComparisonConfig {
    PdeConfig pde;
    std::size_t balanced_samples = 2000;
    std::uint64_t seed = 7;
    double premise_tol = 1e-12;
    double extra_tol = 1e-8;
};

struct ComparisonReport {
    double min_margin = 0.0;
    double tolerance = 0.0;
    double scheme_error = 0.0;
    double y0_first = 0.0, y0_second = 0.0;
    std::size_t worst_k = 0, worst_state = 0;
    double worst_w = 0.0, worst_t = 0.0;
    BalancedReport balanced;

    bool ordered() const noexcept { return min_margin >= -tolerance; }
};

namespace detail {
inline std::string where(double t, std::size_t i, double w) {
    std::ostringstream os;
    os << "t=" << t << " state=" << i << " w=" << w;
    return os.str();
}
} // namespace detail

/// Throws PremiseViolated when (1) Q1 >= Q2, (2) F1 >= F2 at the second
/// solution, or (3) the balanced check for F1 fails; throws
/// ComparisonViolated when the premises hold but u1 < u2 - tol somewhere in the
/// grid interior. The spatial grid is sized from the second claim for both solves.
inline ComparisonReport compare_solutions(const RateMatrix& chain, std::size_t x0, double horizon,
                                          const StandardPair& first, const StandardPair& second,
                                          const ComparisonConfig& cfg = {}) {
    const std::size_t n = chain.size();
    PdeConfig pde = cfg.pde;
    pde.mode = SolveMode::Implicit;
    if (!(pde.half_width > 0.0))
        pde.half_width = default_half_width(horizon, first.claim.scale > second.claim.scale ? first.claim : second.claim);
    const SpaceGrid space(pde.half_width, pde.space_nodes);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < space.size(); ++m) {
            const double d = first.claim(space[m], i) - second.claim(space[m], i);
            if (d < -cfg.premise_tol) throw PremiseViolated(1, detail::where(horizon, i, space[m]));
        }

    const Problem p2{chain, x0, horizon, second.driver, second.claim};
    const Problem p1{chain, x0, horizon, first.driver, first.claim};
    const PdeResult s2 = solve_pde(p2, pde);
    const auto& u2 = s2.surface;
    std::vector<double> z2(n);
    for (std::size_t k = 0; k <= u2.steps(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 1; m + 1 < space.size(); ++m) {
                for (std::size_t j = 0; j < n; ++j) z2[j] = u2.value(k, j, m);
                const double t = u2.times[k];
                const double y = u2.value(k, i, m), g = u2.gradient(k, i, m);
                const double f1 = first.driver(t, space[m], y, g, z2, i);
                const double f2 = second.driver(t, space[m], y, g, z2, i);
                if (f1 < f2 - cfg.premise_tol * (1.0 + std::abs(f2)))
                    throw PremiseViolated(2, detail::where(t, i, space[m]));
            }

    Rng rng = make_stream(cfg.seed, 0, StreamTag::Auxiliary);
    InputSampler sampler{n, horizon};
    ComparisonReport rep;
    rep.balanced = check_balanced(first.driver, chain, sampler, cfg.balanced_samples, rng);
    if (!rep.balanced.passed()) throw PremiseViolated(3, rep.balanced.witness);

    const PdeResult s1 = solve_pde(p1, pde);
    const auto& u1 = s1.surface;
    rep.y0_first = s1.report.y0;
    rep.y0_second = s2.report.y0;
    rep.scheme_error = std::max(pde_error_estimate(p1, pde, rep.y0_first), pde_error_estimate(p2, pde, rep.y0_second));
    rep.tolerance = 2.0 * rep.scheme_error + cfg.extra_tol;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= u1.steps(); ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 1; m + 1 < space.size(); ++m) {
                const double d = u1.value(k, i, m) - u2.value(k, i, m);
                if (d < rep.min_margin) {
                    rep.min_margin = d;
                    rep.worst_k = k;
                    rep.worst_state = i;
                    rep.worst_w = space[m];
                    rep.worst_t = u1.times[k];
                }
            }
    if (!rep.ordered())
        throw ComparisonViolated(rep.min_margin, detail::where(rep.worst_t, rep.worst_state, rep.worst_w));
    return rep;
}

} // namespace bsdebm
