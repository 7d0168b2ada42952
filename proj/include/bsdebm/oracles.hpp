#pragma once

// Reference values that do not go through either backward solver.

#include "bsdebm/claim.hpp"
#include "bsdebm/driver.hpp"
#include "bsdebm/path_engine.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace bsdebm {

struct OracleEstimate {
    double y0 = 0.0;
    double se = 0.0;
    std::size_t n_paths = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline OracleEstimate mean_and_se(const std::vector<double>& v) {
    OracleEstimate e;
    e.n_paths = v.size();
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double q = 0.0;
    for (double x : v) q += (x - m) * (x - m);
    e.y0 = m;
    e.se = v.size() > 1 ? std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
    return e;
}

// Calls fn(a, b, state) for each holding interval of the chain inside [t0, t1].
template <class Fn>
void for_each_holding(const ChainPath& path, double t0, double t1, Fn&& fn) {
    double left = 0.0;
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        const double right = k < path.jump_times.size() ? path.jump_times[k] : path.horizon;
        const double a = std::max(left, t0), b = std::min(right, t1);
        if (b > a) fn(a, b, path.states[k]);
        if (right >= t1) break;
        left = right;
    }
}

} // namespace detail

/// Monte Carlo mean of Q + int_0^T F(u, X_u) du. The time integral is done per
/// holding interval with adaptive Gauss-Kronrod quadrature.
inline OracleEstimate simple_bsde_mc(const std::function<double(double, std::size_t)>& f, const TerminalClaim& claim,
                                     const PathBatch& batch, std::size_t workers = 1) {
    if (batch.size() == 0) throw Error("simple_bsde_mc: empty batch");
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> v(batch.size());
    parallel_for(batch.size(), workers, [&](std::size_t p) {
        const auto& path = batch.paths[p];
        double total = claim(path.terminal_brownian(), path.chain.final_state());
        detail::for_each_holding(path.chain, 0.0, path.chain.horizon, [&](double a, double b, std::size_t s) {
            total += gauss_kronrod<double, 15>::integrate([&](double u) { return f(u, s); }, a, b, 10, 1e-10);
        });
        v[p] = total;
    });
    return detail::mean_and_se(v);
}

/// Stochastic exponential of
///   Gamma_t = int rho du + int alpha dW + int gamma beta psi^+ dM
/// along one joint path. dM = dX - A X du, so between jumps Gamma also drifts
/// by -gamma beta psi^+ A X du.
struct DoleansPath {
    std::vector<double> log_increments; // continuous part per grid step
    std::vector<double> jump_times;
    std::vector<double> jump_factors; // 1 + gamma beta psi^+ (e_j - e_i)
    std::vector<double> values;       // E(Gamma) at grid nodes, values[0] = 1
    double forcing_integral = 0.0;    // int_0^T E(Gamma)_{u-} phi_u du
    bool nonpositive_jump = false;
    double first_nonpositive_time = 0.0;
    bool beta_outside_range = false;

    double terminal() const { return values.back(); }
};

/// The Brownian integral is left-point per grid step. Inside a step, W is
/// replaced by the linear interpolation of its endpoint values where phi and
/// E(Gamma)_{u-} need it; rho and phi are integrated by Gauss quadrature over
/// each holding interval, and jumps enter at their exact times.
inline DoleansPath doleans_exponential(const RateMatrix& a, const LinearDriverSpec& spec, const JointPath& path,
                                       const TimeGrid& grid) {
    using G = boost::math::quadrature::gauss<double, 7>;
    const std::size_t n = a.size();
    std::vector<Matrix> pinv;
    std::vector<Vector> comp; // psi^+ A e_i
    for (std::size_t i = 0; i < n; ++i) {
        pinv.push_back(psi_pinv(psi(a, i)));
        comp.push_back(pinv.back() * a.matrix() * unit_vector(n, i));
    }
    auto drift = [&](double v, std::size_t s) { return spec.rho(v, s) - spec.gamma(v, s) * spec.beta(v, s).dot(comp[s]); };

    DoleansPath d;
    d.values.assign(grid.steps() + 1, 1.0);
    d.log_increments.assign(grid.steps(), 0.0);
    double e = 1.0;
    double w_left = 0.0;
    std::size_t next_jump = 0;
    const auto& jt = path.chain.jump_times;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const double t0 = grid[k], t1 = grid[k + 1], dt = t1 - t0;
        const double dw = path.brownian_increments[k];
        const double alpha = spec.alpha(t0, path.chain.state_at(t0));
        auto w_at = [&](double u) { return w_left + dw * (u - t0) / dt; };
        double log_step = 0.0;
        // Sub-intervals between jumps inside the step.
        double a0 = t0;
        std::size_t state = path.chain.state_at(t0);
        while (true) {
            const bool jump_here = next_jump < jt.size() && jt[next_jump] <= t1;
            const double b0 = jump_here ? jt[next_jump] : t1;
            if (b0 > a0) {
                const double base = e;
                const double la = a0;
                const std::size_t s = state;
                // E(Gamma)_u = base * exp(int_la^u drift + alpha (W~_u - W~_la) - alpha^2 (u - la) / 2)
                auto e_at = [&](double u) {
                    const double r = G::integrate([&](double v) { return drift(v, s); }, la, u);
                    return base * std::exp(r + alpha * (w_at(u) - w_at(la)) - 0.5 * alpha * alpha * (u - la));
                };
                d.forcing_integral += G::integrate([&](double u) { return e_at(u) * spec.phi(u, w_at(u), s); }, a0, b0);
                const double r = G::integrate([&](double v) { return drift(v, s); }, a0, b0);
                const double inc = r + alpha * (w_at(b0) - w_at(a0)) - 0.5 * alpha * alpha * (b0 - a0);
                log_step += inc;
                e *= std::exp(inc);
            }
            if (!jump_here) break;
            const std::size_t to = path.chain.states[next_jump + 1];
            const double tau = jt[next_jump];
            const Vector beta = spec.beta(tau, state);
            if (std::abs(beta.sum()) > 1e-12 * (1.0 + beta.cwiseAbs().sum())) d.beta_outside_range = true;
            const Vector dir = unit_vector(n, to) - unit_vector(n, state);
            const double factor = 1.0 + spec.gamma(tau, state) * beta.dot(pinv[state] * dir);
            if (factor <= 0.0 && !d.nonpositive_jump) {
                d.nonpositive_jump = true;
                d.first_nonpositive_time = tau;
            }
            d.jump_times.push_back(tau);
            d.jump_factors.push_back(factor);
            e *= factor;
            state = to;
            a0 = tau;
            ++next_jump;
        }
        d.log_increments[k] = log_step;
        d.values[k + 1] = e;
        w_left += dw;
    }
    return d;
}

/// Monte Carlo mean of E(Gamma)_T Q + int_0^T E(Gamma)_{u-} phi_u du.
inline OracleEstimate linear_bsde_mc(const RateMatrix& a, const LinearDriverSpec& spec, const TerminalClaim& claim,
                                     const PathBatch& batch, std::size_t workers = 1) {
    if (batch.size() == 0) throw Error("linear_bsde_mc: empty batch");
    const auto bounds = spec.sample_bounds(a, batch.grid.horizon());
    if (!bounds.finite) throw Error("linear_bsde_mc: coefficients are not finite on [0, T]");
    std::vector<double> v(batch.size());
    std::vector<char> bad_jump(batch.size(), 0), outside(batch.size(), 0);
    std::vector<double> bad_time(batch.size(), 0.0);
    parallel_for(batch.size(), workers, [&](std::size_t p) {
        const auto& path = batch.paths[p];
        const DoleansPath d = doleans_exponential(a, spec, path, batch.grid);
        v[p] = d.terminal() * claim(path.terminal_brownian(), path.chain.final_state()) + d.forcing_integral;
        bad_jump[p] = d.nonpositive_jump;
        bad_time[p] = d.first_nonpositive_time;
        outside[p] = d.beta_outside_range;
    });
    OracleEstimate est = detail::mean_and_se(v);
    const auto first_bad = std::find(bad_jump.begin(), bad_jump.end(), 1);
    if (first_bad != bad_jump.end()) {
        const auto p = static_cast<std::size_t>(first_bad - bad_jump.begin());
        est.warnings.push_back("NonPositiveJumpFactor: path " + std::to_string(p) + " at t=" +
                               std::to_string(bad_time[p]) + " (" +
                               std::to_string(std::count(bad_jump.begin(), bad_jump.end(), 1)) + " paths affected)");
    }
    if (std::find(outside.begin(), outside.end(), 1) != outside.end())
        est.warnings.push_back("beta has a component along the constant vector, outside the range of psi");
    return est;
}

/// P(X_T = e_2 | X_0 = e_1) for the symmetric two-state chain with rate r.
inline double two_state_transition(double rate, double horizon) {
    return 0.5 * (1.0 - std::exp(-2.0 * rate * horizon));
}

/// int_0^T P(X_s = e_1 | X_0 = e_1) ds for the same chain.
inline double two_state_occupation(double rate, double horizon) {
    return 0.5 * horizon + (1.0 - std::exp(-2.0 * rate * horizon)) / (4.0 * rate);
}

} // namespace bsdebm
