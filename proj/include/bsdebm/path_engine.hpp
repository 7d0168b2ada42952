#pragma once

#include "bsdebm/grid.hpp"
#include "bsdebm/markov_chain.hpp"
#include "bsdebm/random.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace bsdebm {

/// A joint (W, X) realization: exact chain path plus Brownian increments on a grid.
struct JointPath {
    ChainPath chain;
    std::vector<double> brownian_increments;
    std::uint64_t seed = 0;

    double terminal_brownian() const {
        double w = 0.0;
        for (double dw : brownian_increments) w += dw;
        return w;
    }

    /// W at every grid node, starting from W_0 = 0.
    std::vector<double> brownian_at_nodes() const {
        std::vector<double> w(brownian_increments.size() + 1, 0.0);
        for (std::size_t k = 0; k < brownian_increments.size(); ++k) w[k + 1] = w[k] + brownian_increments[k];
        return w;
    }

    std::vector<Vector> martingale_increments(const RateMatrix& a, const TimeGrid& grid) const {
        return bsdebm::martingale_increments(chain, a, grid.nodes());
    }

    bool operator==(const JointPath&) const = default;
};

struct PathBatch {
    TimeGrid grid;
    std::uint64_t master_seed = 0;
    std::size_t n_states = 0;
    std::vector<JointPath> paths;

    std::size_t size() const noexcept { return paths.size(); }

    /// Same paths observed on every factor-th grid node.
    PathBatch coarsened(std::size_t factor) const {
        PathBatch out;
        out.grid = grid.coarsened(factor);
        out.master_seed = master_seed;
        out.n_states = n_states;
        out.paths.reserve(paths.size());
        for (const auto& p : paths) {
            JointPath q;
            q.chain = p.chain;
            q.seed = p.seed;
            q.brownian_increments.assign(out.grid.steps(), 0.0);
            for (std::size_t k = 0; k < p.brownian_increments.size(); ++k)
                q.brownian_increments[k / factor] += p.brownian_increments[k];
            out.paths.push_back(std::move(q));
        }
        return out;
    }

    bool operator==(const PathBatch&) const = default;
};

/// Path `index` of a batch. Depends only on (master_seed, index).
inline JointPath generate_path(const RateMatrix& a, std::size_t x0, const TimeGrid& grid,
                               std::uint64_t master_seed, std::uint64_t index) {
    JointPath p;
    p.seed = stream_seed(master_seed, index, StreamTag::Auxiliary);
    Rng chain_rng = make_stream(master_seed, index, StreamTag::Chain);
    p.chain = simulate_chain(a, x0, grid.horizon(), chain_rng);
    Rng w_rng = make_stream(master_seed, index, StreamTag::Brownian);
    std::normal_distribution<double> normal(0.0, 1.0);
    p.brownian_increments.resize(grid.steps());
    for (std::size_t k = 0; k < grid.steps(); ++k) p.brownian_increments[k] = std::sqrt(grid.dt(k)) * normal(w_rng);
    return p;
}

inline PathBatch generate_batch(const RateMatrix& a, std::size_t x0, const TimeGrid& grid, std::size_t n_paths,
                                std::uint64_t master_seed, std::size_t workers = 1) {
    if (n_paths == 0) throw Error("generate_batch: n_paths must be at least 1");
    if (x0 >= a.size()) throw Error("generate_batch: initial state out of range");
    PathBatch batch;
    batch.grid = grid;
    batch.master_seed = master_seed;
    batch.n_states = a.size();
    batch.paths.resize(n_paths);
    parallel_for(n_paths, workers,
                 [&](std::size_t i) { batch.paths[i] = generate_path(a, x0, grid, master_seed, i); });
    return batch;
}

/// Node-major views of W and X used by the backward solvers.
struct BatchStates {
    std::size_t steps = 0;
    std::size_t n_paths = 0;
    std::vector<double> w;          // w[k * n_paths + p]
    std::vector<std::size_t> state; // state[k * n_paths + p]

    double w_at(std::size_t k, std::size_t p) const { return w[k * n_paths + p]; }
    std::size_t state_at(std::size_t k, std::size_t p) const { return state[k * n_paths + p]; }
};

inline BatchStates node_states(const PathBatch& batch) {
    BatchStates s;
    s.steps = batch.grid.steps();
    s.n_paths = batch.size();
    s.w.assign((s.steps + 1) * s.n_paths, 0.0);
    s.state.assign((s.steps + 1) * s.n_paths, 0);
    for (std::size_t p = 0; p < s.n_paths; ++p) {
        const auto& path = batch.paths[p];
        double w = 0.0;
        std::size_t jump = 0;
        for (std::size_t k = 0; k <= s.steps; ++k) {
            if (k > 0) w += path.brownian_increments[k - 1];
            const double t = batch.grid[k];
            while (jump < path.chain.jump_times.size() && path.chain.jump_times[jump] <= t) ++jump;
            s.w[k * s.n_paths + p] = w;
            s.state[k * s.n_paths + p] = path.chain.states[jump];
        }
    }
    return s;
}

} // namespace bsdebm
