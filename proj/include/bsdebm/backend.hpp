#pragma once

// One entry point over both backends, used by pricing and the runner.

#include "bsdebm/lsmc_solver.hpp"
#include "bsdebm/pde_solver.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace bsdebm {

enum class BackendKind { Pde, Lsmc };

inline const char* to_string(BackendKind b) { return b == BackendKind::Pde ? "pde" : "lsmc"; }

inline BackendKind parse_backend(const std::string& s) {
    if (s == "pde") return BackendKind::Pde;
    if (s == "lsmc") return BackendKind::Lsmc;
    throw ConfigError("unknown backend '" + s + "' (expected pde or lsmc)");
}

struct BackendConfig {
    BackendKind kind = BackendKind::Pde;
    PdeConfig pde;
    LsmcConfig lsmc;
    std::size_t n_paths = 20000;
    std::size_t mc_steps = 50;
    std::uint64_t seed = 1;
};

struct SolveOutcome {
    SolveReport report;
    std::optional<SolutionSurface> surface; // PDE backend only
};

/// Solves with the configured backend. LSMC draws its batch from (seed, chain, x0, T).
inline SolveOutcome solve(const Problem& p, const BackendConfig& cfg) {
    SolveOutcome out;
    if (cfg.kind == BackendKind::Pde) {
        auto r = solve_pde(p, cfg.pde);
        out.report = std::move(r.report);
        out.surface = std::move(r.surface);
    } else {
        const auto batch = generate_batch(p.chain, p.initial_state, TimeGrid::uniform(p.horizon, cfg.mc_steps),
                                          cfg.n_paths, cfg.seed, cfg.lsmc.workers);
        out.report = solve_lsmc(p, batch, cfg.lsmc).report;
    }
    return out;
}

} // namespace bsdebm
