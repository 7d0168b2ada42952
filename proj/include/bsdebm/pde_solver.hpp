#pragma once

// Finite-difference backend. With Y_t = u(t, W_t, X_t), the backward equation
// becomes the coupled parabolic system
//
//   d_t u_i + 1/2 d_ww u_i + sum_j a_ji u_j + F(t, w, u_i, d_w u_i, U, e_i) = 0,
//   u_i(T, w) = q(w, e_i),
//
// where U = (u_1, ..., u_N) is the canonical Z2. Diffusion is implicit in time;
// the chain coupling and the driver enter through a fixed point per step
// (implicit mode) or a single evaluation at the later node (explicit mode).

#include "bsdebm/grid.hpp"
#include "bsdebm/problem.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace bsdebm {

struct PdeConfig {
    std::size_t time_steps = 1000;
    std::size_t space_nodes = 401;
    double half_width = 0.0; // 0 selects 6 sqrt(T) (1 + claim scale)
    SolveMode mode = SolveMode::Implicit;
    double inner_tol = 1e-10;
    std::size_t inner_max_iter = 500;
    bool check_boundary = true;
    bool estimate_error = false;
};

inline double default_half_width(double horizon, const TerminalClaim& claim) {
    return 6.0 * std::sqrt(std::max(horizon, 1e-12)) * (1.0 + claim.scale);
}

/// Per-state value functions on a (time x space) grid.
struct SolutionSurface {
    std::vector<double> times; // absolute times, increasing
    SpaceGrid space;
    std::size_t n_states = 0;
    std::vector<double> values; // [(k * N + i) * M + m]
    std::vector<double> z1;

    std::size_t steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
    std::size_t index(std::size_t k, std::size_t i, std::size_t m) const { return (k * n_states + i) * space.size() + m; }
    double value(std::size_t k, std::size_t i, std::size_t m) const { return values[index(k, i, m)]; }
    double gradient(std::size_t k, std::size_t i, std::size_t m) const { return z1[index(k, i, m)]; }

    /// Z2 representative at a node: the vector of values across states.
    std::vector<double> z2(std::size_t k, std::size_t m) const {
        std::vector<double> u(n_states);
        for (std::size_t i = 0; i < n_states; ++i) u[i] = value(k, i, m);
        return u;
    }

    std::vector<double> slice(std::size_t k, std::size_t i) const {
        auto b = values.begin() + static_cast<std::ptrdiff_t>(index(k, i, 0));
        return {b, b + static_cast<std::ptrdiff_t>(space.size())};
    }

    /// Linear interpolation in w at time node k.
    double at(std::size_t k, std::size_t i, double w) const {
        const double x = (w + space.half_width()) / space.step();
        const double fl = std::clamp(std::floor(x), 0.0, static_cast<double>(space.size() - 2));
        const auto m = static_cast<std::size_t>(fl);
        const double frac = std::clamp(x - fl, 0.0, 1.0);
        return (1.0 - frac) * value(k, i, m) + frac * value(k, i, m + 1);
    }

    /// Time node closest to t.
    std::size_t node_of(double t) const {
        std::size_t best = 0;
        for (std::size_t k = 1; k < times.size(); ++k)
            if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
        return best;
    }
};

struct PdeResult {
    SolutionSurface surface;
    SolveReport report;
};

namespace detail {

// Thomas algorithm; a, b, c are sub-, main and super-diagonal. Overwrites d with the solution.
inline void solve_tridiagonal(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                              std::span<double> d, std::span<double> scratch) {
    const std::size_t n = d.size();
    scratch[0] = c[0] / b[0];
    d[0] = d[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double m = b[i] - a[i] * scratch[i - 1];
        scratch[i] = c[i] / m;
        d[i] = (d[i] - a[i] * d[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= scratch[i] * d[i + 1];
}

struct FrozenArgs {
    const SolutionSurface* surface = nullptr;
    Staging staging = Staging::None;
};

// Backward sweep from terminal values at times.back() to times.front().
inline SolutionSurface pde_backward(const RateMatrix& chain, const Driver& driver, std::vector<double> terminal,
                                    std::vector<double> times, const SpaceGrid& space, const PdeConfig& cfg,
                                    FrozenArgs frozen, SolveReport& report) {
    const std::size_t n = chain.size();
    const std::size_t nm = space.size();
    const std::size_t steps = times.size() - 1;
    const double dw = space.step();
    if (frozen.staging != Staging::None) {
        if (!frozen.surface || frozen.surface->times.size() != times.size() || frozen.surface->space.size() != nm ||
            frozen.surface->n_states != n)
            throw SolverError(SolverError::Kind::InvalidInput, "frozen surface does not match the grid");
    }

    SolutionSurface out;
    out.times = std::move(times);
    out.space = space;
    out.n_states = n;
    out.values.assign((steps + 1) * n * nm, 0.0);
    out.z1.assign((steps + 1) * n * nm, 0.0);

    auto gradient_of = [&](const double* u, double* g) {
        g[0] = (u[1] - u[0]) / dw;
        g[nm - 1] = (u[nm - 1] - u[nm - 2]) / dw;
        for (std::size_t m = 1; m + 1 < nm; ++m) g[m] = (u[m + 1] - u[m - 1]) / (2.0 * dw);
    };

    std::copy(terminal.begin(), terminal.end(), out.values.begin() + static_cast<std::ptrdiff_t>(out.index(steps, 0, 0)));
    for (std::size_t i = 0; i < n; ++i) gradient_of(&out.values[out.index(steps, i, 0)], &out.z1[out.index(steps, i, 0)]);

    const std::size_t ni = nm - 2; // interior unknowns, nodes 1..nm-2
    std::vector<double> lo(ni), di(ni), up(ni), rhs(ni), scratch(ni);
    std::vector<double> iter(n * nm), next(n * nm), grad(n * nm), z2(n);
    double max_inner = 0.0, total_inner = 0.0;

    for (std::size_t k = steps; k-- > 0;) {
        const double dt = out.times[k + 1] - out.times[k];
        const bool implicit = cfg.mode == SolveMode::Implicit;
        const double t_eval = implicit ? out.times[k] : out.times[k + 1];
        const std::size_t k_eval = implicit ? k : k + 1;
        const double s = dt / (2.0 * dw * dw);
        const double* later = &out.values[out.index(k + 1, 0, 0)];
        std::copy(later, later + n * nm, iter.begin());

        std::size_t it = 0;
        for (;; ++it) {
            if (it >= cfg.inner_max_iter)
                throw SolverError(SolverError::Kind::NoConvergence,
                                  "inner fixed point did not converge at time " + std::to_string(out.times[k]));
            for (std::size_t i = 0; i < n; ++i) gradient_of(&iter[i * nm], &grad[i * nm]);
            for (std::size_t i = 0; i < n; ++i) {
                const double exit = chain.exit_rate(i);
                for (std::size_t r = 0; r < ni; ++r) {
                    const std::size_t m = r + 1;
                    double coupling = 0.0;
                    for (std::size_t j = 0; j < n; ++j)
                        if (j != i) coupling += chain.rate(i, j) * iter[j * nm + m];
                    double y = iter[i * nm + m];
                    double z1 = grad[i * nm + m];
                    for (std::size_t j = 0; j < n; ++j) z2[j] = iter[j * nm + m];
                    if (frozen.staging == Staging::FreezeY) {
                        y = frozen.surface->value(k_eval, i, m);
                    } else if (frozen.staging == Staging::FreezeZ) {
                        z1 = frozen.surface->gradient(k_eval, i, m);
                        for (std::size_t j = 0; j < n; ++j) z2[j] = frozen.surface->value(k_eval, j, m);
                    }
                    const double f = driver(t_eval, space[m], y, z1, z2, i);
                    rhs[r] = later[i * nm + m] + dt * (coupling + f);
                    if (r == 0 || r + 1 == ni) {
                        // Linear extrapolation at the boundary removes diffusion here.
                        lo[r] = 0.0;
                        up[r] = 0.0;
                        di[r] = 1.0 + dt * exit;
                    } else {
                        lo[r] = -s;
                        up[r] = -s;
                        di[r] = 1.0 + 2.0 * s + dt * exit;
                    }
                }
                solve_tridiagonal(lo, di, up, rhs, scratch);
                double* u = &next[i * nm];
                std::copy(rhs.begin(), rhs.end(), u + 1);
                u[0] = 2.0 * u[1] - u[2];
                u[nm - 1] = 2.0 * u[nm - 2] - u[nm - 3];
            }
            double delta = 0.0;
            for (std::size_t q = 0; q < n * nm; ++q) delta = std::max(delta, std::abs(next[q] - iter[q]));
            std::swap(iter, next);
            if (!implicit || delta <= cfg.inner_tol * (1.0 + std::abs(iter[nm / 2]))) break;
        }
        max_inner = std::max(max_inner, static_cast<double>(it + 1));
        total_inner += static_cast<double>(it + 1);
        std::copy(iter.begin(), iter.end(), out.values.begin() + static_cast<std::ptrdiff_t>(out.index(k, 0, 0)));
        for (std::size_t i = 0; i < n; ++i) gradient_of(&out.values[out.index(k, i, 0)], &out.z1[out.index(k, i, 0)]);
    }
    report.diagnostics["pde_max_inner_iterations"] = max_inner;
    report.diagnostics["pde_mean_inner_iterations"] = steps ? total_inner / static_cast<double>(steps) : 0.0;
    return out;
}

inline std::vector<double> terminal_values(const TerminalClaim& claim, const SpaceGrid& space, std::size_t n) {
    std::vector<double> out(n * space.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < space.size(); ++m) out[i * space.size() + m] = claim(space[m], i);
    return out;
}

inline void check_boundary(const SolutionSurface& s, double horizon_span, double y0) {
    double edge = 0.0;
    for (std::size_t i = 0; i < s.n_states; ++i)
        for (std::size_t k = 0; k <= s.steps(); ++k)
            edge = std::max({edge, std::abs(s.value(k, i, 0)), std::abs(s.value(k, i, s.space.size() - 1))});
    const double l = s.space.half_width();
    const double tail = std::exp(-l * l / (2.0 * std::max(horizon_span, 1e-300)));
    if (tail * (1.0 + edge) > 1e-5 * (1.0 + std::abs(y0)))
        throw SolverError(SolverError::Kind::GridTooCoarse,
                          "boundary at +-" + std::to_string(l) + " influences the value at w = 0 (tail weight " +
                              std::to_string(tail) + ")");
}

} // namespace detail

inline SpaceGrid pde_space_grid(const Problem& p, const PdeConfig& cfg) {
    const double l = cfg.half_width > 0.0 ? cfg.half_width : default_half_width(p.horizon, p.claim);
    return SpaceGrid(l, cfg.space_nodes);
}

inline std::vector<double> uniform_times(double t0, double t1, std::size_t steps) {
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(steps);
    t.back() = t1;
    return t;
}

/// One solve with optional frozen driver arguments (a Picard stage).
inline PdeResult solve_pde_stage(const Problem& p, const PdeConfig& cfg, const SolutionSurface* frozen,
                                 Staging staging) {
    if (p.initial_state >= p.chain.size()) throw SolverError(SolverError::Kind::InvalidInput, "initial state out of range");
    if (!(p.horizon > 0.0) || cfg.time_steps == 0)
        throw SolverError(SolverError::Kind::InvalidInput, "need a positive horizon and at least one time step");
    PdeResult res;
    const SpaceGrid space = pde_space_grid(p, cfg);
    res.surface = detail::pde_backward(p.chain, p.driver, detail::terminal_values(p.claim, space, p.chain.size()),
                                       uniform_times(0.0, p.horizon, cfg.time_steps), space, cfg, {frozen, staging},
                                       res.report);
    res.report.y0 = res.surface.value(0, p.initial_state, space.center());
    res.report.diagnostics["time_steps"] = static_cast<double>(cfg.time_steps);
    res.report.diagnostics["space_nodes"] = static_cast<double>(cfg.space_nodes);
    res.report.diagnostics["half_width"] = space.half_width();
    if (cfg.check_boundary) detail::check_boundary(res.surface, p.horizon, res.report.y0);
    return res;
}

/// Discretization error of y0 from one coarsening in time and one in space:
/// |y0(dt) - y0(2 dt)| + |y0(dw) - y0(2 dw)|.
inline double pde_error_estimate(const Problem& p, const PdeConfig& cfg, double y0) {
    double err = 0.0;
    PdeConfig coarse = cfg;
    coarse.estimate_error = false;
    if (cfg.time_steps >= 2) {
        coarse.time_steps = cfg.time_steps / 2;
        err += std::abs(y0 - solve_pde_stage(p, coarse, nullptr, Staging::None).report.y0);
        coarse.time_steps = cfg.time_steps;
    }
    if ((cfg.space_nodes - 1) % 4 == 0 && (cfg.space_nodes - 1) / 2 + 1 >= 5) {
        coarse.space_nodes = (cfg.space_nodes - 1) / 2 + 1;
        coarse.half_width = pde_space_grid(p, cfg).half_width();
        err += std::abs(y0 - solve_pde_stage(p, coarse, nullptr, Staging::None).report.y0);
    }
    return err;
}

inline PdeResult solve_pde(const Problem& p, const PdeConfig& cfg = {}) {
    PdeResult res = solve_pde_stage(p, cfg, nullptr, Staging::None);
    if (cfg.estimate_error) res.report.error_estimate = pde_error_estimate(p, cfg, res.report.y0);
    return res;
}

/// Solve on [t0, t1] from terminal grid values at t1 (same layout as SolutionSurface rows).
inline SolutionSurface solve_pde_between(const RateMatrix& chain, const Driver& driver, std::vector<double> terminal,
                                         double t0, double t1, const SpaceGrid& space, const PdeConfig& cfg) {
    SolveReport ignored;
    return detail::pde_backward(chain, driver, std::move(terminal), uniform_times(t0, t1, cfg.time_steps), space, cfg,
                                {}, ignored);
}

} // namespace bsdebm
