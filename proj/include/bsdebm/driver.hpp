#pragma once

#include "bsdebm/markov_chain.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bsdebm {

/// Structural properties a driver claims to have. Checked by sampling in driver_checks.hpp.
struct DriverFlags {
    bool subadditive = false;
    bool positively_homogeneous = false;
    bool zero_at_zero_z = false;
};

/// Driver F(t, w, y, z1, z2, state) of the backward equation
///   Y_t - int_t^T F du + int_t^T Z1 dW + int_t^T Z2^T dM = Q.
/// z2 is read only through psi-compatible functionals, so adding a constant
/// to every component of z2 never changes the value.
class Driver {
public:
    using Fn = std::function<double(double t, double w, double y, double z1, std::span<const double> z2,
                                    std::size_t state)>;

    Driver(std::string name, Fn fn, double mu, DriverFlags flags = {})
        : name_(std::move(name)), fn_(std::move(fn)), mu_(mu), flags_(flags) {
        if (!(mu_ > 0.0)) throw Error("Driver: Lipschitz constant must be positive");
    }

    double operator()(double t, double w, double y, double z1, std::span<const double> z2,
                      std::size_t state) const {
        return fn_(t, w, y, z1, z2, state);
    }

    const std::string& name() const noexcept { return name_; }
    double mu() const noexcept { return mu_; }
    const DriverFlags& flags() const noexcept { return flags_; }

    bool sublinear() const noexcept {
        return flags_.subadditive && flags_.positively_homogeneous && flags_.zero_at_zero_z;
    }

private:
    std::string name_;
    Fn fn_;
    double mu_;
    DriverFlags flags_;
};

inline Driver zero_driver() {
    return Driver("zero", [](double, double, double, double, std::span<const double>, std::size_t) { return 0.0; },
                  1.0, {true, true, true});
}

/// F = kappa |z1|: drift uncertainty on the Brownian motion.
inline Driver ambiguity_driver(double kappa) {
    if (!(kappa >= 0.0)) throw Error("ambiguity_driver: kappa must be nonnegative");
    return Driver(
        "ambiguity",
        [kappa](double, double, double, double z1, std::span<const double>, std::size_t) { return kappa * std::abs(z1); },
        std::max(kappa * kappa, 1e-300), {true, true, true});
}

/// Rate uncertainty on the chain:
///   F = kappa * (max_j z2^T psi e_j - z2^T psi x),   x the current state.
/// The j = x term is zero, so F >= 0; F is a maximum of linear forms in z2 and
/// therefore subadditive and positively homogeneous, and it vanishes on the
/// psi-kernel (constant vectors).
inline Driver chain_ambiguity_driver(const RateMatrix& a, double kappa) {
    if (!(kappa >= 0.0)) throw Error("chain_ambiguity_driver: kappa must be nonnegative");
    const std::size_t n = a.size();
    auto psis = std::make_shared<std::vector<Matrix>>();
    double worst_exit = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        psis->push_back(psi(a, i).matrix);
        worst_exit = std::max(worst_exit, a.exit_rate(i));
    }
    // |dF| <= kappa (max_j |dz^T psi e_j| + |dz^T psi x|) <= 2 kappa sqrt(exit) ||dz||.
    const double mu = std::max(4.0 * kappa * kappa * worst_exit, 1e-300);
    return Driver(
        "chain_ambiguity",
        [psis, kappa, n](double, double, double, double, std::span<const double> z2, std::size_t state) {
            const Matrix& p = (*psis)[state];
            double best = -std::numeric_limits<double>::infinity();
            double own = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double v = 0.0;
                for (std::size_t l = 0; l < n; ++l)
                    v += z2[l] * p(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j));
                best = std::max(best, v);
                if (j == state) own = v;
            }
            return kappa * (best - own);
        },
        mu, {true, true, true});
}

/// F = c_i y + d_i z1 with regime-dependent coefficients.
inline Driver regime_linear_driver(std::vector<double> c, std::vector<double> d) {
    if (c.size() != d.size() || c.empty()) throw Error("regime_linear_driver: coefficient size mismatch");
    double mu = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) mu = std::max(mu, c[i] * c[i] + d[i] * d[i]);
    mu = std::max(mu, 1e-300);
    const bool zero_at_zero = std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
    return Driver(
        "regime_linear",
        [c = std::move(c), d = std::move(d)](double, double, double y, double z1, std::span<const double>,
                                             std::size_t state) { return c[state] * y + d[state] * z1; },
        mu, {true, true, zero_at_zero});
}

/// F = rho y, the same rate in every regime.
inline Driver discount_driver(double rho, std::size_t n_states) {
    auto d = regime_linear_driver(std::vector<double>(n_states, rho), std::vector<double>(n_states, 0.0));
    return Driver("discount", [d](double t, double w, double y, double z1, std::span<const double> z2,
                                  std::size_t s) { return d(t, w, y, z1, z2, s); },
                  d.mu(), d.flags());
}

/// Driver depending only on (t, state).
inline Driver time_state_driver(std::function<double(double, std::size_t)> f) {
    return Driver(
        "time_state",
        [f = std::move(f)](double t, double, double, double, std::span<const double>, std::size_t s) { return f(t, s); },
        1e-300, {});
}

/// F + eta.
inline Driver shifted(const Driver& base, double eta) {
    DriverFlags flags = base.flags();
    if (eta != 0.0) flags = {flags.subadditive && eta >= 0.0, false, false};
    return Driver(
        base.name() + "+shift",
        [base, eta](double t, double w, double y, double z1, std::span<const double> z2, std::size_t s) {
            return base(t, w, y, z1, z2, s) + eta;
        },
        base.mu(), flags);
}

/// Coefficients of the affine driver phi + rho y + alpha z1 + gamma beta z2.
/// beta(t, i) is a row vector; it must sum to zero so that beta z2 only sees
/// differences of z2 components (the range of psi).
struct LinearDriverSpec {
    std::function<double(double, std::size_t)> rho;
    std::function<double(double, std::size_t)> alpha;
    std::function<double(double, std::size_t)> gamma;
    std::function<Vector(double, std::size_t)> beta;
    std::function<double(double, double, std::size_t)> phi; // (t, w, state)

    /// Bounds of the coefficients over [0, horizon] x states, sampled on a grid.
    struct Bounds {
        double rho = 0.0, alpha = 0.0, gamma_beta = 0.0;
        bool finite = true;
    };

    Bounds sample_bounds(const RateMatrix& a, double horizon, std::size_t samples = 101) const {
        Bounds b;
        const std::size_t n = a.size();
        std::vector<Matrix> pinv;
        for (std::size_t i = 0; i < n; ++i) pinv.push_back(psi_pinv(psi(a, i)));
        for (std::size_t s = 0; s < samples; ++s) {
            const double t = samples > 1 ? horizon * static_cast<double>(s) / static_cast<double>(samples - 1) : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double r = rho(t, i), al = alpha(t, i), g = gamma(t, i);
                const Vector be = beta(t, i);
                if (!std::isfinite(r) || !std::isfinite(al) || !std::isfinite(g) || !be.allFinite()) b.finite = false;
                b.rho = std::max(b.rho, std::abs(r));
                b.alpha = std::max(b.alpha, std::abs(al));
                // sup of |gamma beta dz| / ||dz|| = |gamma| sqrt(beta psi^+ beta^T)
                b.gamma_beta = std::max(b.gamma_beta, std::abs(g) * std::sqrt(std::max(0.0, be.dot(pinv[i] * be))));
            }
        }
        return b;
    }
};

/// Per-state constant coefficients.
struct ConstantLinearCoefficients {
    std::vector<double> rho, alpha, gamma;
    std::vector<Vector> beta;
    std::vector<double> phi0, phi1; // phi = phi0 + phi1 * w

    LinearDriverSpec spec() const {
        LinearDriverSpec s;
        s.rho = [r = rho](double, std::size_t i) { return r[i]; };
        s.alpha = [a = alpha](double, std::size_t i) { return a[i]; };
        s.gamma = [g = gamma](double, std::size_t i) { return g[i]; };
        s.beta = [b = beta](double, std::size_t i) { return b[i]; };
        s.phi = [p0 = phi0, p1 = phi1](double, double w, std::size_t i) { return p0[i] + p1[i] * w; };
        return s;
    }
};

inline Driver affine_driver(const RateMatrix& a, const LinearDriverSpec& spec, double horizon) {
    const auto b = spec.sample_bounds(a, horizon);
    if (!b.finite) throw Error("affine_driver: coefficients are not finite on [0, T]");
    const double mu = std::max(b.rho * b.rho + b.alpha * b.alpha + b.gamma_beta * b.gamma_beta, 1e-300);
    const std::size_t n = a.size();
    return Driver(
        "affine",
        [spec, n](double t, double w, double y, double z1, std::span<const double> z2, std::size_t s) {
            const Vector be = spec.beta(t, s);
            double bz = 0.0;
            for (std::size_t j = 0; j < n; ++j) bz += be(static_cast<Eigen::Index>(j)) * z2[j];
            return spec.phi(t, w, s) + spec.rho(t, s) * y + spec.alpha(t, s) * z1 + spec.gamma(t, s) * bz;
        },
        mu, {});
}

/// Same driver for per-state constant coefficients, without per-call allocations.
inline Driver affine_driver(const RateMatrix& a, const ConstantLinearCoefficients& k, double horizon) {
    const auto b = k.spec().sample_bounds(a, horizon, 2);
    if (!b.finite) throw Error("affine_driver: coefficients are not finite");
    const double mu = std::max(b.rho * b.rho + b.alpha * b.alpha + b.gamma_beta * b.gamma_beta, 1e-300);
    const std::size_t n = a.size();
    if (k.rho.size() != n || k.alpha.size() != n || k.gamma.size() != n || k.beta.size() != n || k.phi0.size() != n ||
        k.phi1.size() != n)
        throw Error("affine_driver: one coefficient per state required");
    return Driver(
        "affine",
        [k, n](double, double w, double y, double z1, std::span<const double> z2, std::size_t s) {
            double bz = 0.0;
            for (std::size_t j = 0; j < n; ++j) bz += k.beta[s](static_cast<Eigen::Index>(j)) * z2[j];
            return k.phi0[s] + k.phi1[s] * w + k.rho[s] * y + k.alpha[s] * z1 + k.gamma[s] * bz;
        },
        mu, {});
}

} // namespace bsdebm
