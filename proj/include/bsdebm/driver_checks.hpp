#pragma once

// Sampling-based checks of the structural conditions placed on drivers.

#include "bsdebm/driver.hpp"
#include "bsdebm/random.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace bsdebm {

struct DriverInput {
    double t = 0.0, w = 0.0, y = 0.0, z1 = 0.0;
    Vector z2;
    std::size_t state = 0;
};

/// Draws driver arguments uniformly from boxes.
struct InputSampler {
    std::size_t n_states = 2;
    double horizon = 1.0;
    double w_scale = 2.0;
    double y_scale = 2.0;
    double z_scale = 2.0;

    DriverInput draw(Rng& rng) const {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_real_distribution<double> ut(0.0, horizon);
        std::uniform_int_distribution<std::size_t> us(0, n_states - 1);
        DriverInput in;
        in.t = ut(rng);
        in.w = w_scale * u(rng);
        in.y = y_scale * u(rng);
        in.z1 = z_scale * u(rng);
        in.z2 = Vector(static_cast<Eigen::Index>(n_states));
        for (auto& v : in.z2) v = z_scale * u(rng);
        in.state = us(rng);
        return in;
    }
};

inline double evaluate(const Driver& d, const DriverInput& in) {
    return d(in.t, in.w, in.y, in.z1, std::span<const double>(in.z2.data(), static_cast<std::size_t>(in.z2.size())),
             in.state);
}

struct LipschitzReport {
    double max_ratio = 0.0;
    double declared_mu = 0.0;
    bool flagged = false;
    std::size_t samples = 0;
    std::size_t kernel_skipped = 0;
    std::size_t kernel_violations = 0;

    bool passed() const noexcept { return !flagged && kernel_violations == 0; }
};

/// Largest observed |dF|^2 / (|dy|^2 + |dz1|^2 + ||dz2||^2). A quarter of the
/// pairs perturb only y, only z1, only z2, or everything; a further share moves
/// z2 along the psi-kernel only, where F has to stay put.
inline LipschitzReport check_lipschitz(const Driver& d, const RateMatrix& a, const InputSampler& sampler, std::size_t n,
                                       Rng& rng) {
    if (n == 0) throw Error("check_lipschitz: need at least one sample");
    LipschitzReport rep;
    rep.declared_mu = d.mu();
    std::vector<PsiMatrix> psis;
    for (std::size_t i = 0; i < a.size(); ++i) psis.push_back(psi(a, i));
    std::uniform_int_distribution<int> mode_dist(0, 4);
    std::uniform_real_distribution<double> shift(-3.0, 3.0);
    for (std::size_t s = 0; s < n; ++s) {
        DriverInput p = sampler.draw(rng);
        DriverInput q = sampler.draw(rng);
        q.t = p.t;
        q.w = p.w;
        q.state = p.state;
        switch (mode_dist(rng)) {
        case 0: q.z1 = p.z1; q.z2 = p.z2; break;
        case 1: q.y = p.y; q.z2 = p.z2; break;
        case 2: q.y = p.y; q.z1 = p.z1; break;
        case 3: break;
        default:
            q.y = p.y;
            q.z1 = p.z1;
            q.z2 = p.z2 + Vector::Constant(p.z2.size(), shift(rng));
            break;
        }
        const double df = evaluate(d, p) - evaluate(d, q);
        const double denom =
            (p.y - q.y) * (p.y - q.y) + (p.z1 - q.z1) * (p.z1 - q.z1) + seminorm_sq(p.z2 - q.z2, psis[p.state]);
        ++rep.samples;
        if (denom <= 1e-14 * (1.0 + p.z2.squaredNorm())) {
            ++rep.kernel_skipped;
            if (std::abs(df) > 1e-9 * (1.0 + std::abs(evaluate(d, p)))) ++rep.kernel_violations;
            continue;
        }
        rep.max_ratio = std::max(rep.max_ratio, df * df / denom);
    }
    rep.flagged = rep.max_ratio > rep.declared_mu * (1.0 + 1e-9);
    return rep;
}

struct SublinearReport {
    bool subadditive = true;
    bool positively_homogeneous = true;
    double worst_subadditive_excess = 0.0;
    double worst_homogeneity_error = 0.0;
    std::string witness;
    std::size_t samples = 0;
};

/// F(x1 + x2) <= F(x1) + F(x2) and F(l x) = l F(x) for l >= 0, where x is
/// (y, z1, z2) at a shared (t, w, state). Relative tolerance 1e-9.
inline SublinearReport check_sublinear_flags(const Driver& d, const InputSampler& sampler, std::size_t n, Rng& rng) {
    SublinearReport rep;
    std::uniform_real_distribution<double> ul(0.0, 5.0);
    const double fixed_lambdas[] = {0.0, 0.5, 1.0, 2.0};
    for (std::size_t s = 0; s < n; ++s) {
        DriverInput p = sampler.draw(rng);
        DriverInput q = sampler.draw(rng);
        q.t = p.t;
        q.w = p.w;
        q.state = p.state;
        DriverInput sum = p;
        sum.y += q.y;
        sum.z1 += q.z1;
        sum.z2 += q.z2;
        const double fp = evaluate(d, p), fq = evaluate(d, q), fs = evaluate(d, sum);
        const double excess = fs - fp - fq;
        const double tol = 1e-9 * (1.0 + std::abs(fp) + std::abs(fq));
        if (excess > tol) {
            if (rep.subadditive) {
                std::ostringstream os;
                os << "subadditivity: F(sum)=" << fs << " > " << fp << " + " << fq;
                if (!rep.witness.empty()) rep.witness += "; ";
                rep.witness += os.str();
            }
            rep.subadditive = false;
        }
        rep.worst_subadditive_excess = std::max(rep.worst_subadditive_excess, excess);

        const double lambda = s < 4 ? fixed_lambdas[s] : (s % 2 == 0 ? 2.0 : ul(rng));
        DriverInput scaled = p;
        scaled.y *= lambda;
        scaled.z1 *= lambda;
        scaled.z2 *= lambda;
        const double fl = evaluate(d, scaled);
        const double err = std::abs(fl - lambda * fp);
        if (err > 1e-9 * (1.0 + std::abs(lambda * fp))) {
            if (rep.positively_homogeneous) {
                std::ostringstream os;
                os << "homogeneity at lambda=" << lambda << ": F(l x)=" << fl << " vs l F(x)=" << lambda * fp;
                if (!rep.witness.empty()) rep.witness += "; ";
                rep.witness += os.str();
            }
            rep.positively_homogeneous = false;
        }
        rep.worst_homogeneity_error = std::max(rep.worst_homogeneity_error, err);
        ++rep.samples;
    }
    return rep;
}

/// F(t, w, y, 0, 0, x) = 0 on sampled (t, w, y, x).
inline bool check_zero_at_zero_z(const Driver& d, const InputSampler& sampler, std::size_t n, Rng& rng) {
    for (std::size_t s = 0; s < n; ++s) {
        DriverInput p = sampler.draw(rng);
        p.z1 = 0.0;
        p.z2.setZero();
        if (std::abs(evaluate(d, p)) > 1e-12) return false;
    }
    return true;
}

/// Largest |F(z2 + c 1) - F(z2)| over samples.
inline double kernel_sensitivity(const Driver& d, const InputSampler& sampler, std::size_t n, Rng& rng) {
    std::uniform_real_distribution<double> shift(-5.0, 5.0);
    double worst = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        DriverInput p = sampler.draw(rng);
        DriverInput q = p;
        q.z2 += Vector::Constant(p.z2.size(), shift(rng));
        worst = std::max(worst, std::abs(evaluate(d, p) - evaluate(d, q)));
    }
    return worst;
}

/// Upper end of the admissible epsilon range, c^{3/2} N^{-3/2}.
inline double balanced_epsilon_bound(const RateMatrix& a) {
    return std::pow(a.c(), 1.5) * std::pow(static_cast<double>(a.size()), -1.5);
}

struct BalancedReport {
    double epsilon = 0.0;
    std::size_t samples = 0;
    std::size_t premise_held = 0;
    std::size_t boundary = 0;   // premise held with zero seminorm, equality allowed
    std::size_t violations = 0;
    std::string witness;

    bool passed() const noexcept { return violations == 0; }
};

/// Whenever dz = z2a - z2b satisfies dz^T psi e_j >= -eps ||dz|| for every j,
/// requires F(z2a) - F(z2b) >= dz^T psi x, strictly unless ||dz|| = 0.
/// Pairs are drawn generic, shifted along the kernel, identical, or close to
/// the kernel, since the premise is rarely met by generic pairs.
inline BalancedReport check_balanced(const Driver& d, const RateMatrix& a, double epsilon, const InputSampler& sampler,
                                     std::size_t n, Rng& rng) {
    BalancedReport rep;
    rep.epsilon = epsilon;
    const std::size_t ns = a.size();
    std::vector<PsiMatrix> psis;
    for (std::size_t i = 0; i < ns; ++i) psis.push_back(psi(a, i));
    std::uniform_int_distribution<int> mode_dist(0, 3);
    std::uniform_real_distribution<double> shift(-3.0, 3.0);
    std::normal_distribution<double> tiny(0.0, 1e-3);
    for (std::size_t s = 0; s < n; ++s) {
        DriverInput p = sampler.draw(rng);
        DriverInput q = p;
        const int mode = mode_dist(rng);
        if (mode == 0) {
            q.z2 = sampler.draw(rng).z2;
        } else if (mode == 1) {
            q.z2 = p.z2 + Vector::Constant(p.z2.size(), shift(rng));
        } else if (mode == 3) {
            q.z2 = p.z2 + Vector::Constant(p.z2.size(), shift(rng));
            for (auto& v : q.z2) v += tiny(rng);
        }
        ++rep.samples;
        const Matrix& ps = psis[p.state].matrix;
        const Vector dz = p.z2 - q.z2;
        const double norm = std::sqrt(seminorm_sq(dz, psis[p.state]));
        const Vector proj = ps.transpose() * dz; // dz^T psi e_j for every j
        const double tol = 1e-10 * (1.0 + dz.cwiseAbs().maxCoeff() * ps.cwiseAbs().maxCoeff());
        bool premise = true;
        for (Eigen::Index j = 0; j < proj.size(); ++j)
            if (proj(j) < -epsilon * norm - tol) premise = false;
        if (!premise) continue;
        ++rep.premise_held;
        const double lhs = evaluate(d, p) - evaluate(d, q);
        const double rhs = proj(static_cast<Eigen::Index>(p.state));
        // The seminorm is a square root of a rounded quadratic form, so its noise floor is sqrt(eps).
        const bool zero_norm = norm <= 1e-7 * (1.0 + dz.norm()) * std::sqrt(1.0 + ps.cwiseAbs().maxCoeff());
        const double ftol = 1e-9 * (1.0 + std::abs(evaluate(d, p)));
        bool ok = zero_norm ? lhs >= rhs - ftol - tol : lhs > rhs + ftol;
        if (zero_norm && std::abs(lhs - rhs) <= ftol + tol) ++rep.boundary;
        if (!ok) {
            ++rep.violations;
            if (rep.witness.empty()) {
                std::ostringstream os;
                os << "state " << p.state << ": F difference " << lhs << " vs dz^T psi x " << rhs << " (seminorm " << norm
                   << ")";
                rep.witness = os.str();
            }
        }
    }
    return rep;
}

inline BalancedReport check_balanced(const Driver& d, const RateMatrix& a, const InputSampler& sampler, std::size_t n,
                                     Rng& rng) {
    return check_balanced(d, a, 0.99 * balanced_epsilon_bound(a), sampler, n, rng);
}

} // namespace bsdebm
