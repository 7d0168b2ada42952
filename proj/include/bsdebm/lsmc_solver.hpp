#pragma once

// Least-squares Monte Carlo backend: backward induction over the grid with one
// polynomial regression in W per chain state and step.

#include "bsdebm/path_engine.hpp"
#include "bsdebm/problem.hpp"
#include "bsdebm/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace bsdebm {

struct LsmcConfig {
    std::size_t degree = 3;
    SolveMode mode = SolveMode::Implicit;
    double inner_tol = 1e-10;
    std::size_t inner_max_iter = 200;
    std::size_t workers = 1;
    bool store_paths = false;
    bool estimate_error = false;
};

/// (Y, Z1, Z2) sampled along every path at every node. U and Z1 are kept for
/// all states so that a later Picard stage can freeze them.
struct LsmcPathValues {
    std::size_t steps = 0, n_paths = 0, n_states = 0;
    std::vector<double> u;  // [(k * P + p) * N + j], value of state j at (t_k, W_k)
    std::vector<double> z1; // same layout
    std::vector<double> f;  // [k * P + p], driver along the path (k < steps)
    std::vector<std::size_t> state;

    std::size_t index(std::size_t k, std::size_t p, std::size_t j = 0) const { return (k * n_paths + p) * n_states + j; }
    double y(std::size_t k, std::size_t p) const { return u[index(k, p, state[k * n_paths + p])]; }
    std::span<const double> z2(std::size_t k, std::size_t p) const { return {&u[index(k, p)], n_states}; }
};

struct LsmcResult {
    SolveReport report;
    LsmcPathValues values; // empty unless store_paths
};

namespace detail {

inline void poly_basis(double x, std::size_t degree, double* out) {
    out[0] = 1.0;
    for (std::size_t d = 1; d <= degree; ++d) out[d] = out[d - 1] * x;
}

struct BucketFit {
    Vector coef;
    bool valid = false;
};

// Normal equations per state bucket, summed over fixed path chunks in chunk
// order so that the result does not depend on the number of workers.
struct Regression {
    std::size_t n_states, nb;
    std::vector<Matrix> gram;
    std::vector<Matrix> rhs; // nb x n_targets
    std::vector<std::size_t> count;

    Regression(std::size_t n, std::size_t basis, std::size_t targets) : n_states(n), nb(basis) {
        for (std::size_t i = 0; i < n; ++i) {
            gram.push_back(Matrix::Zero(static_cast<Eigen::Index>(basis), static_cast<Eigen::Index>(basis)));
            rhs.push_back(Matrix::Zero(static_cast<Eigen::Index>(basis), static_cast<Eigen::Index>(targets)));
        }
        count.assign(n, 0);
    }

    void add(const Regression& o) {
        for (std::size_t i = 0; i < n_states; ++i) {
            gram[i] += o.gram[i];
            rhs[i] += o.rhs[i];
            count[i] += o.count[i];
        }
    }
};

inline constexpr std::size_t kRegressionChunk = 4096;

} // namespace detail

/// Frozen inputs for a Picard stage: values of the previous iterate on the same batch.
struct LsmcFrozen {
    const LsmcPathValues* values = nullptr;
    Staging staging = Staging::None;
};

inline LsmcResult solve_lsmc_stage(const Problem& prob, const PathBatch& batch, const LsmcConfig& cfg,
                                   LsmcFrozen frozen = {}) {
    const std::size_t n = prob.chain.size();
    const std::size_t np = batch.size();
    const std::size_t steps = batch.grid.steps();
    const std::size_t nb = cfg.degree + 1;
    if (np == 0) throw SolverError(SolverError::Kind::InvalidInput, "solve_lsmc: empty batch");
    if (batch.n_states != n) throw SolverError(SolverError::Kind::InvalidInput, "solve_lsmc: batch has a different chain");
    if (std::abs(batch.grid.horizon() - prob.horizon) > 1e-12)
        throw SolverError(SolverError::Kind::InvalidInput, "solve_lsmc: batch horizon differs from the problem horizon");
    if (frozen.staging != Staging::None &&
        (!frozen.values || frozen.values->n_paths != np || frozen.values->steps != steps || frozen.values->n_states != n))
        throw SolverError(SolverError::Kind::InvalidInput, "solve_lsmc: frozen values do not match the batch");

    const BatchStates st = node_states(batch);
    const bool implicit = cfg.mode == SolveMode::Implicit;
    const std::size_t n_chunks = (np + detail::kRegressionChunk - 1) / detail::kRegressionChunk;

    LsmcResult res;
    auto& diag = res.report.diagnostics;
    double singular = 0.0, empty = 0.0, worst_cond = 1.0, max_inner = 0.0;

    // Rolling values at node k + 1 and k.
    std::vector<double> u_next(np * n), z1_next(np * n), u_cur(np * n), z1_cur(np * n);
    std::vector<double> f_next(np, 0.0); // driver at k + 1 along the path (explicit targets)
    std::vector<double> path_sum(np, 0.0); // Q + sum dt F along the path

    if (cfg.store_paths) {
        auto& v = res.values;
        v.steps = steps;
        v.n_paths = np;
        v.n_states = n;
        v.u.assign((steps + 1) * np * n, 0.0);
        v.z1.assign((steps + 1) * np * n, 0.0);
        v.f.assign(steps * np, 0.0);
        v.state = st.state;
    }

    const double h = 1e-5;
    for (std::size_t p = 0; p < np; ++p) {
        const double w = st.w_at(steps, p);
        for (std::size_t j = 0; j < n; ++j) {
            u_next[p * n + j] = prob.claim(w, j);
            z1_next[p * n + j] = (prob.claim(w + h, j) - prob.claim(w - h, j)) / (2.0 * h);
        }
        path_sum[p] = u_next[p * n + st.state_at(steps, p)];
    }

    auto frozen_at = [&](std::size_t k, std::size_t p) -> std::pair<const double*, const double*> {
        const auto& fv = *frozen.values;
        return {&fv.u[fv.index(k, p)], &fv.z1[fv.index(k, p)]};
    };

    auto driver_at = [&](double t, double w, std::size_t j, const double* u, const double* z1, std::size_t k,
                         std::size_t p) {
        double y = u[j], g = z1[j];
        const double* z2 = u;
        if (frozen.staging == Staging::FreezeY) {
            y = frozen_at(k, p).first[j];
        } else if (frozen.staging == Staging::FreezeZ) {
            auto [fu, fz] = frozen_at(k, p);
            g = fz[j];
            z2 = fu;
        }
        return prob.driver(t, w, y, g, std::span<const double>(z2, n), j);
    };

    if (cfg.store_paths) {
        std::copy(u_next.begin(), u_next.end(), res.values.u.begin() + static_cast<std::ptrdiff_t>(res.values.index(steps, 0)));
        std::copy(z1_next.begin(), z1_next.end(), res.values.z1.begin() + static_cast<std::ptrdiff_t>(res.values.index(steps, 0)));
    }
    if (!implicit) {
        for (std::size_t p = 0; p < np; ++p)
            f_next[p] = driver_at(batch.grid[steps], st.w_at(steps, p), st.state_at(steps, p), &u_next[p * n],
                                  &z1_next[p * n], steps, p);
    }

    std::vector<detail::BucketFit> prev_value(n), prev_grad(n);
    std::vector<std::size_t> inner_iters(np, 0);

    for (std::size_t k = steps; k-- > 0;) {
        const double t = batch.grid[k];
        const double dt = batch.grid.dt(k);
        const double scale = k == 0 ? 1.0 : 1.0 / std::sqrt(t);

        // Pass 1: regress the value target, and in explicit mode its driver term.
        auto target = [&](std::size_t p) {
            const double y = u_next[p * n + st.state_at(k + 1, p)];
            return implicit ? y : y + dt * f_next[p];
        };
        auto fit = [&](auto&& target_fn) {
            std::vector<detail::Regression> parts(n_chunks, detail::Regression(n, nb, 1));
            parallel_chunks(np, detail::kRegressionChunk, cfg.workers, [&](std::size_t b, std::size_t e) {
                auto& r = parts[b / detail::kRegressionChunk];
                double phi[16];
                for (std::size_t p = b; p < e; ++p) {
                    const std::size_t i = st.state_at(k, p);
                    detail::poly_basis(st.w_at(k, p) * scale, cfg.degree, phi);
                    const Eigen::Map<const Vector> v(phi, static_cast<Eigen::Index>(nb));
                    r.gram[i].noalias() += v * v.transpose();
                    r.rhs[i].col(0).noalias() += target_fn(p) * v;
                    ++r.count[i];
                }
            });
            detail::Regression total(n, nb, 1);
            for (const auto& part : parts) total.add(part);
            return total;
        };
        auto solve_fits = [&](const detail::Regression& reg, std::vector<detail::BucketFit>& prev) {
            std::vector<detail::BucketFit> out(n);
            for (std::size_t i = 0; i < n; ++i) {
                auto& f = out[i];
                if (reg.count[i] == 0) {
                    empty += 1.0;
                    f = prev[i];
                    if (!f.valid) f.coef = Vector::Zero(static_cast<Eigen::Index>(nb));
                    continue;
                }
                const Matrix& g = reg.gram[i];
                Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
                const double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
                if (reg.count[i] < nb || !(lmin > 1e-12 * lmax)) {
                    // Rank-deficient design (always the case at t = 0): bucket mean.
                    if (k > 0) singular += 1.0;
                    f.coef = Vector::Zero(static_cast<Eigen::Index>(nb));
                    f.coef(0) = reg.rhs[i](0, 0) / static_cast<double>(reg.count[i]);
                } else {
                    worst_cond = std::max(worst_cond, lmax / lmin);
                    f.coef = g.ldlt().solve(reg.rhs[i].col(0));
                }
                f.valid = true;
            }
            prev = out;
            return out;
        };
        auto eval = [&](const detail::BucketFit& f, double x) {
            double phi[16];
            detail::poly_basis(x, cfg.degree, phi);
            double v = 0.0;
            for (std::size_t d = 0; d < nb; ++d) v += f.coef(static_cast<Eigen::Index>(d)) * phi[d];
            return v;
        };

        const auto value_fit = solve_fits(fit(target), prev_value);
        const auto grad_fit = solve_fits(
            fit([&](std::size_t p) {
                const std::size_t i = st.state_at(k, p);
                const double c = eval(value_fit[i], st.w_at(k, p) * scale);
                return (u_next[p * n + st.state_at(k + 1, p)] - c) * batch.paths[p].brownian_increments[k] / dt;
            }),
            prev_grad);

        // Pass 2: per-path value vector U and gradient vector.
        parallel_chunks(np, detail::kRegressionChunk, cfg.workers, [&](std::size_t b, std::size_t e) {
            std::vector<double> base(n), next(n);
            for (std::size_t p = b; p < e; ++p) {
                const double w = st.w_at(k, p);
                double* u = &u_cur[p * n];
                double* g = &z1_cur[p * n];
                for (std::size_t j = 0; j < n; ++j) {
                    base[j] = eval(value_fit[j], w * scale);
                    g[j] = eval(grad_fit[j], w * scale);
                    u[j] = base[j];
                }
                std::size_t it = 0;
                if (implicit) {
                    for (;; ++it) {
                        if (it >= cfg.inner_max_iter)
                            throw SolverError(SolverError::Kind::NoConvergence,
                                              "solve_lsmc: inner fixed point did not converge");
                        double delta = 0.0, mag = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            next[j] = base[j] + dt * driver_at(t, w, j, u, g, k, p);
                            delta = std::max(delta, std::abs(next[j] - u[j]));
                            mag = std::max(mag, std::abs(next[j]));
                        }
                        std::copy(next.begin(), next.end(), u);
                        if (delta <= cfg.inner_tol * (1.0 + mag)) break;
                    }
                }
                inner_iters[p] = it + 1;
            }
        });

        for (std::size_t p = 0; p < np; ++p) {
            max_inner = std::max(max_inner, static_cast<double>(inner_iters[p]));
            const std::size_t i = st.state_at(k, p);
            const double fk = implicit ? driver_at(t, st.w_at(k, p), i, &u_cur[p * n], &z1_cur[p * n], k, p)
                                       : f_next[p];
            path_sum[p] += dt * fk;
            if (cfg.store_paths) res.values.f[k * np + p] = fk;
        }
        if (!implicit) {
            for (std::size_t p = 0; p < np; ++p)
                f_next[p] = driver_at(t, st.w_at(k, p), st.state_at(k, p), &u_cur[p * n], &z1_cur[p * n], k, p);
        }
        if (cfg.store_paths) {
            std::copy(u_cur.begin(), u_cur.end(), res.values.u.begin() + static_cast<std::ptrdiff_t>(res.values.index(k, 0)));
            std::copy(z1_cur.begin(), z1_cur.end(), res.values.z1.begin() + static_cast<std::ptrdiff_t>(res.values.index(k, 0)));
        }
        std::swap(u_cur, u_next);
        std::swap(z1_cur, z1_next);
    }

    // u_next now holds node 0.
    double mean = 0.0, y0 = 0.0;
    std::size_t in_x0 = 0;
    for (std::size_t p = 0; p < np; ++p) {
        mean += path_sum[p];
        const std::size_t s = st.state_at(0, p);
        if (s == prob.initial_state) {
            y0 += u_next[p * n + s];
            ++in_x0;
        }
    }
    mean /= static_cast<double>(np);
    double var = 0.0;
    for (std::size_t p = 0; p < np; ++p) var += (path_sum[p] - mean) * (path_sum[p] - mean);
    var /= static_cast<double>(np > 1 ? np - 1 : 1);

    res.report.y0 = in_x0 ? y0 / static_cast<double>(in_x0) : mean;
    res.report.se = std::sqrt(var / static_cast<double>(np));
    diag["n_paths"] = static_cast<double>(np);
    diag["time_steps"] = static_cast<double>(steps);
    diag["basis_degree"] = static_cast<double>(cfg.degree);
    diag["singular_regressions"] = singular;
    diag["empty_state_buckets"] = empty;
    diag["max_condition_number"] = worst_cond;
    diag["max_inner_iterations"] = max_inner;
    diag["pathwise_mean"] = mean;
    if (singular > 0) res.report.notes.push_back("rank-deficient regressions fell back to bucket means");
    if (empty > 0) res.report.notes.push_back("empty state buckets reused the previous step's fit");
    return res;
}

/// Scheme error from the same batch observed on every second node.
inline double lsmc_error_estimate(const Problem& prob, const PathBatch& batch, const LsmcConfig& cfg, double y0) {
    if (batch.grid.steps() < 2 || batch.grid.steps() % 2 != 0) return 0.0;
    LsmcConfig coarse = cfg;
    coarse.store_paths = false;
    coarse.estimate_error = false;
    return std::abs(y0 - solve_lsmc_stage(prob, batch.coarsened(2), coarse).report.y0);
}

inline LsmcResult solve_lsmc(const Problem& prob, const PathBatch& batch, const LsmcConfig& cfg = {}) {
    LsmcResult res = solve_lsmc_stage(prob, batch, cfg);
    if (cfg.estimate_error) res.report.error_estimate = lsmc_error_estimate(prob, batch, cfg, res.report.y0);
    return res;
}

struct ResidualStep {
    double mean = 0.0;
    double se = 0.0;
};

/// Per step, the sample mean of Y_{k+1} - Y_k - (-F dt + Z1 dW + Z2^T dM) along the paths.
inline std::vector<ResidualStep> martingale_residuals(const LsmcPathValues& v, const PathBatch& batch,
                                                      const RateMatrix& chain) {
    if (v.n_paths != batch.size() || v.steps != batch.grid.steps())
        throw SolverError(SolverError::Kind::InvalidInput, "martingale_residuals: values were not stored for this batch");
    std::vector<ResidualStep> out(v.steps);
    std::vector<std::vector<double>> r(v.steps, std::vector<double>(v.n_paths));
    for (std::size_t p = 0; p < v.n_paths; ++p) {
        const auto dm = batch.paths[p].martingale_increments(chain, batch.grid);
        for (std::size_t k = 0; k < v.steps; ++k) {
            const std::size_t s = v.state[k * v.n_paths + p];
            double z2dm = 0.0;
            const auto z2 = v.z2(k, p);
            for (std::size_t j = 0; j < v.n_states; ++j) z2dm += z2[j] * dm[k](static_cast<Eigen::Index>(j));
            const double mart = -v.f[k * v.n_paths + p] * batch.grid.dt(k) +
                                 v.z1[v.index(k, p, s)] * batch.paths[p].brownian_increments[k] + z2dm;
            r[k][p] = v.y(k + 1, p) - v.y(k, p) - mart;
        }
    }
    for (std::size_t k = 0; k < v.steps; ++k) {
        double m = 0.0, q = 0.0;
        for (double x : r[k]) m += x;
        m /= static_cast<double>(v.n_paths);
        for (double x : r[k]) q += (x - m) * (x - m);
        out[k] = {m, std::sqrt(q / static_cast<double>(std::max<std::size_t>(v.n_paths - 1, 1)) /
                               static_cast<double>(v.n_paths))};
    }
    return out;
}

} // namespace bsdebm
