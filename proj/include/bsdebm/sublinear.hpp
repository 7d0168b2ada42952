#pragma once

// Sublinear evaluations given by the backward equation with a sublinear
// driver, two-price quotes, and numerical checks of the axioms.

#include "bsdebm/backend.hpp"
#include "bsdebm/driver_checks.hpp"
#include "bsdebm/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace bsdebm {

/// A driver whose sublinearity flags have been confirmed by sampling.
class SublinearSpec {
public:
    static SublinearSpec verify(Driver d, const RateMatrix& chain, double horizon, double kappa = std::nan(""),
                                std::size_t samples = 2000, std::uint64_t seed = 11) {
        if (!d.sublinear())
            throw Error("SublinearSpec: driver '" + d.name() +
                        "' does not declare subadditive, positively homogeneous and zero at z = 0");
        Rng rng = make_stream(seed, 0, StreamTag::Auxiliary);
        InputSampler sampler{chain.size(), horizon};
        SublinearSpec s(std::move(d), kappa);
        s.flags_ = check_sublinear_flags(s.driver_, sampler, samples, rng);
        if (!s.flags_.subadditive || !s.flags_.positively_homogeneous)
            throw Error("SublinearSpec: declared flags fail sampling: " + s.flags_.witness);
        if (!check_zero_at_zero_z(s.driver_, sampler, samples, rng))
            throw Error("SublinearSpec: F(t, y, 0, 0, x) is not zero");
        s.balanced_ = check_balanced(s.driver_, chain, sampler, samples, rng);
        return s;
    }

    const Driver& driver() const noexcept { return driver_; }
    double kappa() const noexcept { return kappa_; }
    const SublinearReport& flag_report() const noexcept { return flags_; }
    const BalancedReport& balanced_report() const noexcept { return balanced_; }

private:
    SublinearSpec(Driver d, double kappa) : driver_(std::move(d)), kappa_(kappa) {}
    Driver driver_;
    double kappa_;
    SublinearReport flags_;
    BalancedReport balanced_;
};

/// Markovian market data shared by every evaluation: chain, start state, horizon.
struct Market {
    RateMatrix chain;
    std::size_t initial_state = 0;
    double horizon = 1.0;

    Problem problem(const Driver& d, const TerminalClaim& q) const { return {chain, initial_state, horizon, d, q}; }
};

struct Evaluation {
    double time = 0.0;
    double value = 0.0; // at w = 0 and the initial state
    double se = 0.0;
    double scheme_error = 0.0;
    std::vector<std::vector<double>> slice; // per state over the space grid (PDE only)
    std::vector<double> w;
};

/// E(Q | F_t) as u_i(t, .). The LSMC backend supports t = 0 only.
inline Evaluation sublinear_expectation(const SublinearSpec& spec, const Market& mk, const TerminalClaim& claim,
                                        double t, const BackendConfig& cfg) {
    if (t < 0.0 || t > mk.horizon) throw SolverError(SolverError::Kind::InvalidInput, "evaluation time outside [0, T]");
    BackendConfig c = cfg;
    if (c.kind == BackendKind::Pde) c.pde.estimate_error = true;
    else c.lsmc.estimate_error = true;
    if (c.kind == BackendKind::Lsmc && t != 0.0)
        throw SolverError(SolverError::Kind::InvalidInput, "the regression backend evaluates at t = 0 only");
    const auto out = solve(mk.problem(spec.driver(), claim), c);
    Evaluation e;
    e.time = t;
    e.se = out.report.se;
    e.scheme_error = out.report.error_estimate;
    if (out.surface) {
        const auto& s = *out.surface;
        const std::size_t k = s.node_of(t);
        e.time = s.times[k];
        for (std::size_t i = 0; i < s.n_states; ++i) e.slice.push_back(s.slice(k, i));
        for (std::size_t m = 0; m < s.space.size(); ++m) e.w.push_back(s.space[m]);
        e.value = s.value(k, mk.initial_state, s.space.center());
    } else {
        e.value = out.report.y0;
    }
    return e;
}

struct Quote {
    std::string claim;
    std::string spec;
    double kappa = std::nan("");
    double bid = 0.0;
    double ask = 0.0;
    double se = 0.0;         // sum over the two legs
    double scheme_err = 0.0; // sum over the two legs

    double spread() const noexcept { return ask - bid; }
    double tolerance() const noexcept { return 2.0 * (se + scheme_err); }
};

/// ask = E(Q), bid = -E(-Q), both at t = 0 with the same backend settings.
inline Quote quote(const SublinearSpec& spec, const Market& mk, const TerminalClaim& claim, const BackendConfig& cfg) {
    const Evaluation ask = sublinear_expectation(spec, mk, claim, 0.0, cfg);
    const Evaluation neg = sublinear_expectation(spec, mk, negated(claim), 0.0, cfg);
    Quote q;
    q.claim = claim.name;
    q.spec = spec.driver().name();
    q.kappa = spec.kappa();
    q.ask = ask.value;
    q.bid = -neg.value;
    q.se = ask.se + neg.se;
    q.scheme_err = ask.scheme_error + neg.scheme_error;
    return q;
}

struct AxiomCheck {
    int property = 0;
    std::string name;
    std::size_t comparisons = 0;
    double worst_excess = -std::numeric_limits<double>::infinity(); // largest (violation - tolerance)
    std::string witness;

    bool passed() const noexcept { return worst_excess <= 0.0; }
};

struct AxiomReport {
    std::vector<AxiomCheck> checks; // properties 1..6 in order
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed(); });
    }
};

namespace detail {

struct SolvedClaim {
    TerminalClaim claim;
    SolutionSurface surface;
    double err = 0.0;
};

inline void record(AxiomCheck& c, double violation, double tol, const std::string& what) {
    ++c.comparisons;
    if (violation - tol > c.worst_excess) {
        c.worst_excess = violation - tol;
        std::ostringstream os;
        os << what << ": violation " << violation << " vs tolerance " << tol;
        c.witness = os.str();
    }
}

// Largest value of diff(k, i, m) over |w| <= central_width.
template <class Diff>
double worst_over(const SolutionSurface& s, double central_width, Diff&& diff) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= s.steps(); ++k)
        for (std::size_t i = 0; i < s.n_states; ++i)
            for (std::size_t m = 0; m < s.space.size(); ++m)
                if (std::abs(s.space[m]) <= central_width) worst = std::max(worst, diff(k, i, m));
    return worst;
}

} // namespace detail

/// Checks the six defining properties on the PDE backend. Surfaces are compared
/// at every time node on |w| <= 2 sqrt(T) with tolerance
/// 2 (scheme errors of the solves involved) + 10 * inner tolerance.
/// Locality for events {X_s = e_i} reduces, state by state, to the solution
/// with zero terminal value vanishing identically; that is what is checked.
inline AxiomReport axiom_suite(const SublinearSpec& spec, const Market& mk, const std::vector<TerminalClaim>& family,
                               PdeConfig cfg, const std::vector<double>& lambdas = {0.0, 0.5, 1.0, 2.0}) {
    if (family.empty()) throw Error("axiom_suite: empty claim family");
    if (cfg.time_steps % 2 != 0) ++cfg.time_steps;
    cfg.mode = SolveMode::Implicit;
    cfg.estimate_error = true;
    if (!(cfg.half_width > 0.0)) {
        double l = 0.0;
        for (const auto& q : family) l = std::max(l, default_half_width(mk.horizon, q));
        cfg.half_width = l;
    }
    const double floor = 10.0 * cfg.inner_tol;
    const double central = 2.0 * std::sqrt(mk.horizon);
    const SpaceGrid space(cfg.half_width, cfg.space_nodes);
    const std::size_t n = mk.chain.size();

    auto run = [&](const TerminalClaim& q) {
        auto r = solve_pde(mk.problem(spec.driver(), q), cfg);
        return detail::SolvedClaim{q, std::move(r.surface), r.report.error_estimate};
    };
    std::vector<detail::SolvedClaim> base;
    for (const auto& q : family) base.push_back(run(q));

    AxiomReport rep;
    const char* names[] = {"monotonicity",  "constant preservation", "time consistency",
                           "locality",      "subadditivity",         "positive homogeneity"};
    for (int k = 0; k < 6; ++k) {
        AxiomCheck c;
        c.property = k + 1;
        c.name = names[k];
        rep.checks.push_back(c);
    }

    auto dominates = [&](const TerminalClaim& a, const TerminalClaim& b) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t m = 0; m < space.size(); ++m)
                if (a(space[m], i) < b(space[m], i) - 1e-12) return false;
        return true;
    };

    // 1. Monotonicity over ordered pairs of the family and each claim against a raised copy.
    for (std::size_t a = 0; a < base.size(); ++a) {
        const auto up = run(shifted(base[a].claim, 0.1));
        const double v = detail::worst_over(up.surface, central, [&](std::size_t k, std::size_t i, std::size_t m) {
            return base[a].surface.value(k, i, m) - up.surface.value(k, i, m);
        });
        detail::record(rep.checks[0], v, 2.0 * (base[a].err + up.err) + floor, base[a].claim.name + " + 0.1 vs itself");
        for (std::size_t b = 0; b < base.size(); ++b) {
            if (a == b || !dominates(base[a].claim, base[b].claim)) continue;
            const double vb = detail::worst_over(base[a].surface, central, [&](std::size_t k, std::size_t i, std::size_t m) {
                return base[b].surface.value(k, i, m) - base[a].surface.value(k, i, m);
            });
            detail::record(rep.checks[0], vb, 2.0 * (base[a].err + base[b].err) + floor,
                           base[a].claim.name + " >= " + base[b].claim.name);
        }
    }

    // 2. Constants are preserved.
    std::vector<double> constants;
    for (const auto& s : base)
        if (s.claim.deterministic) constants.push_back(s.claim(0.0, 0));
    if (constants.empty()) constants.push_back(1.0);
    for (double c : constants) {
        const auto s = run(constant_claim(c));
        const double v = detail::worst_over(s.surface, central, [&](std::size_t k, std::size_t i, std::size_t m) {
            return std::abs(s.surface.value(k, i, m) - c);
        });
        detail::record(rep.checks[1], v, 2.0 * s.err + floor, "constant " + std::to_string(c));
    }

    // 3. Time consistency through the midpoint, with the split solves on the same nodes.
    {
        PdeConfig half = cfg;
        half.time_steps = cfg.time_steps / 2;
        const std::size_t mid = half.time_steps;
        const double s_mid = base.front().surface.times[mid];
        for (const auto& b : base) {
            const auto late = solve_pde_between(mk.chain, spec.driver(), detail::terminal_values(b.claim, space, n),
                                                s_mid, mk.horizon, space, half);
            std::vector<double> at_mid;
            for (std::size_t i = 0; i < n; ++i) {
                const auto row = late.slice(0, i);
                at_mid.insert(at_mid.end(), row.begin(), row.end());
            }
            const auto early = solve_pde_between(mk.chain, spec.driver(), at_mid, 0.0, s_mid, space, half);
            double v = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t m = 0; m < space.size(); ++m) {
                    if (std::abs(space[m]) > central) continue;
                    v = std::max(v, std::abs(early.value(0, i, m) - b.surface.value(0, i, m)));
                    v = std::max(v, std::abs(late.value(0, i, m) - b.surface.value(mid, i, m)));
                }
            detail::record(rep.checks[2], v, 2.0 * b.err + floor, b.claim.name + " through t=" + std::to_string(s_mid));
        }
    }

    // 4. Locality: zero terminal value gives the zero solution.
    {
        const auto z = run(constant_claim(0.0));
        const double v = detail::worst_over(z.surface, central, [&](std::size_t k, std::size_t i, std::size_t m) {
            return std::abs(z.surface.value(k, i, m));
        });
        detail::record(rep.checks[3], v, 2.0 * z.err + floor, "zero terminal on complement events");
    }

    // 5. Subadditivity over all pairs.
    for (std::size_t a = 0; a < base.size(); ++a)
        for (std::size_t b = a; b < base.size(); ++b) {
            const auto s = run(sum(base[a].claim, base[b].claim));
            const double v = detail::worst_over(s.surface, central, [&](std::size_t k, std::size_t i, std::size_t m) {
                return s.surface.value(k, i, m) - base[a].surface.value(k, i, m) - base[b].surface.value(k, i, m);
            });
            detail::record(rep.checks[4], v, 2.0 * (s.err + base[a].err + base[b].err) + floor,
                           base[a].claim.name + " + " + base[b].claim.name);
        }

    // 6. Positive homogeneity.
    for (const auto& b : base)
        for (double lambda : lambdas) {
            const auto s = run(scaled(b.claim, lambda));
            const double v = detail::worst_over(s.surface, central, [&](std::size_t k, std::size_t i, std::size_t m) {
                return std::abs(s.surface.value(k, i, m) - lambda * b.surface.value(k, i, m));
            });
            detail::record(rep.checks[5], v, 2.0 * (s.err + std::abs(lambda) * b.err) + floor,
                           b.claim.name + " at lambda=" + std::to_string(lambda));
        }
    return rep;
}

struct SupremumReport {
    std::vector<double> thetas;
    std::vector<double> values; // E_theta[Q] by Monte Carlo
    std::vector<double> ses;
    double grid_max = 0.0;
    double best_theta = 0.0;
    double grid_se = 0.0;
    double solver_value = 0.0;
    double solver_error = 0.0;
    double resolution = 0.0;
    double tolerance = 0.0;

    /// The sublinear value dominates every constant drift.
    bool dominates() const noexcept { return solver_value >= grid_max - tolerance; }
    /// Equality, expected when the optimal drift is constant.
    bool agrees() const noexcept { return std::abs(solver_value - grid_max) <= tolerance; }
};

/// Max over theta in an even grid on [-kappa, kappa] of E[q(W_T + theta T, X_T)],
/// compared with the PDE value of the driver kappa |z1|. The tolerance is
/// 3 SE + scheme error + half the largest jump between neighbouring grid values.
inline SupremumReport supremum_crosscheck(double kappa, const TerminalClaim& claim, std::size_t n_drifts,
                                          const Market& mk, std::size_t n_paths, std::uint64_t seed,
                                          const PdeConfig& cfg = {}) {
    if (n_drifts < 2) throw Error("supremum_crosscheck: need at least two drifts");
    SupremumReport rep;
    const auto batch = generate_batch(mk.chain, mk.initial_state, TimeGrid::uniform(mk.horizon, 1), n_paths, seed);
    for (std::size_t d = 0; d < n_drifts; ++d) {
        const double theta = -kappa + 2.0 * kappa * static_cast<double>(d) / static_cast<double>(n_drifts - 1);
        std::vector<double> v(batch.size());
        for (std::size_t p = 0; p < batch.size(); ++p)
            v[p] = claim(batch.paths[p].terminal_brownian() + theta * mk.horizon, batch.paths[p].chain.final_state());
        const auto e = detail::mean_and_se(v);
        rep.thetas.push_back(theta);
        rep.values.push_back(e.y0);
        rep.ses.push_back(e.se);
    }
    const auto best = static_cast<std::size_t>(std::max_element(rep.values.begin(), rep.values.end()) - rep.values.begin());
    rep.grid_max = rep.values[best];
    rep.best_theta = rep.thetas[best];
    rep.grid_se = rep.ses[best];
    for (std::size_t d = 0; d + 1 < n_drifts; ++d)
        rep.resolution = std::max(rep.resolution, 0.5 * std::abs(rep.values[d + 1] - rep.values[d]));
    PdeConfig c = cfg;
    c.estimate_error = true;
    const auto sol = solve_pde(mk.problem(ambiguity_driver(kappa), claim), c);
    rep.solver_value = sol.report.y0;
    rep.solver_error = sol.report.error_estimate;
    rep.tolerance = 3.0 * rep.grid_se + rep.solver_error + rep.resolution;
    return rep;
}

} // namespace bsdebm
