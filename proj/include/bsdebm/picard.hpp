#pragma once

// Outer Picard iteration over staged solves. Each stage solves the backward
// equation with one group of driver arguments taken from the previous iterate.

#include "bsdebm/lsmc_solver.hpp"
#include "bsdebm/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <optional>

namespace bsdebm {

/// A backend provides a zero iterate, one staged solve, a sup distance and y0.
template <class B>
concept PicardBackend = requires(B b, const typename B::Surface& s, Staging st, SolveReport& rep) {
    { b.zero() } -> std::convertible_to<typename B::Surface>;
    { b.stage(s, st, rep) } -> std::convertible_to<typename B::Surface>;
    { b.distance(s, s) } -> std::convertible_to<double>;
    { b.y0(s) } -> std::convertible_to<double>;
};

template <class Surface>
struct PicardResult {
    Surface surface;
    SolveReport report;
    std::size_t iterations = 0;
};

/// Iterates Y^{n+1} = stage(Y^n) from Y^0 = stage(0) until the sup distance of
/// successive surfaces drops below tol. Ratios use 0/0 := 0.
template <PicardBackend B>
PicardResult<typename B::Surface> picard_iterate(B& backend, Staging staging, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw SolverError(SolverError::Kind::InvalidInput, "picard_iterate: tol must be positive");
    if (staging == Staging::None) throw SolverError(SolverError::Kind::InvalidInput, "picard_iterate: choose a staging");
    PicardResult<typename B::Surface> out;
    SolveReport stage_report;
    auto current = backend.stage(backend.zero(), staging, stage_report);
    double last_ratio = 0.0;
    for (std::size_t n = 1; n <= max_iter; ++n) {
        stage_report = {};
        auto next = backend.stage(current, staging, stage_report);
        const double delta = backend.distance(next, current);
        auto& deltas = out.report.picard_deltas;
        if (!deltas.empty()) {
            const double prev = deltas.back();
            last_ratio = prev == 0.0 ? 0.0 : delta / prev;
            out.report.picard_ratios.push_back(last_ratio);
        }
        deltas.push_back(delta);
        current = std::move(next);
        if (delta < tol) {
            out.iterations = n;
            out.report.y0 = backend.y0(current);
            out.report.se = stage_report.se;
            out.report.diagnostics = stage_report.diagnostics;
            out.report.diagnostics["picard_iterations"] = static_cast<double>(n);
            out.report.diagnostics["picard_final_ratio"] = last_ratio;
            out.surface = std::move(current);
            return out;
        }
    }
    throw SolverError(SolverError::Kind::NoConvergence,
                      "picard_iterate: no convergence after " + std::to_string(max_iter) + " iterations", last_ratio);
}

/// Finite-difference stages.
class PdePicardBackend {
public:
    using Surface = SolutionSurface;

    PdePicardBackend(Problem p, PdeConfig cfg) : p_(std::move(p)), cfg_(cfg) {}

    Surface zero() const {
        Surface s;
        const SpaceGrid space = pde_space_grid(p_, cfg_);
        s.times = uniform_times(0.0, p_.horizon, cfg_.time_steps);
        s.space = space;
        s.n_states = p_.chain.size();
        s.values.assign(s.times.size() * s.n_states * space.size(), 0.0);
        s.z1 = s.values;
        return s;
    }
    Surface stage(const Surface& prev, Staging st, SolveReport& rep) const {
        auto r = solve_pde_stage(p_, cfg_, &prev, st);
        rep = std::move(r.report);
        return std::move(r.surface);
    }
    double distance(const Surface& a, const Surface& b) const {
        double d = 0.0;
        for (std::size_t q = 0; q < a.values.size(); ++q) d = std::max(d, std::abs(a.values[q] - b.values[q]));
        return d;
    }
    double y0(const Surface& s) const { return s.value(0, p_.initial_state, s.space.center()); }

private:
    Problem p_;
    PdeConfig cfg_;
};

/// Regression stages on a fixed batch.
class LsmcPicardBackend {
public:
    using Surface = LsmcPathValues;

    LsmcPicardBackend(Problem p, const PathBatch& batch, LsmcConfig cfg) : p_(std::move(p)), batch_(batch), cfg_(cfg) {
        cfg_.store_paths = true;
    }

    Surface zero() const {
        Surface s;
        s.steps = batch_.grid.steps();
        s.n_paths = batch_.size();
        s.n_states = p_.chain.size();
        s.u.assign((s.steps + 1) * s.n_paths * s.n_states, 0.0);
        s.z1 = s.u;
        s.f.assign(s.steps * s.n_paths, 0.0);
        s.state = node_states(batch_).state;
        return s;
    }
    Surface stage(const Surface& prev, Staging st, SolveReport& rep) const {
        auto r = solve_lsmc_stage(p_, batch_, cfg_, {&prev, st});
        rep = std::move(r.report);
        return std::move(r.values);
    }
    double distance(const Surface& a, const Surface& b) const {
        double d = 0.0;
        for (std::size_t q = 0; q < a.u.size(); ++q) d = std::max(d, std::abs(a.u[q] - b.u[q]));
        return d;
    }
    double y0(const Surface& s) const {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t p = 0; p < s.n_paths; ++p)
            if (s.state[p] == p_.initial_state) {
                sum += s.y(0, p);
                ++cnt;
            }
        return cnt ? sum / static_cast<double>(cnt) : 0.0;
    }

private:
    Problem p_;
    const PathBatch& batch_;
    LsmcConfig cfg_;
};

} // namespace bsdebm
