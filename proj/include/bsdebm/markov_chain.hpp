#pragma once

#include "bsdebm/errors.hpp"
#include "bsdebm/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

namespace bsdebm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Generator of a finite-state continuous-time Markov chain.
///
/// Column convention: entry (j, i) with j != i is the jump rate from state i
/// to state j, so every column sums to zero and the chain drift is A * X.
/// Off-diagonal rates are bounded in [c, 1/c] for a constant c in (0, 1).
class RateMatrix {
public:
    /// Checks every constraint and reports all violations at once.
    static RateMatrix validate(const Matrix& a, double c) {
        std::vector<RateMatrixIssue> issues;
        if (!(c > 0.0 && c < 1.0)) {
            std::ostringstream os;
            os << "c = " << c << " is not in (0,1)";
            issues.push_back({RateMatrixViolation::InvalidC, os.str()});
        }
        if (a.rows() != a.cols()) {
            issues.push_back({RateMatrixViolation::NotSquare, "matrix is not square"});
            throw RateMatrixError(std::move(issues));
        }
        const auto n = a.rows();
        if (n < 2) issues.push_back({RateMatrixViolation::TooFewStates, "need at least two states"});
        const bool c_ok = c > 0.0 && c < 1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double col_sum = 0.0;
            double col_scale = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                col_sum += a(j, i);
                col_scale = std::max(col_scale, std::abs(a(j, i)));
                if (j == i || !c_ok) continue;
                if (!(a(j, i) >= c && a(j, i) <= 1.0 / c)) {
                    std::ostringstream os;
                    os << "a(" << j << "," << i << ") = " << a(j, i) << " outside [" << c << ", "
                       << 1.0 / c << "]";
                    issues.push_back({RateMatrixViolation::OffDiagonalOutOfBounds, os.str()});
                }
            }
            if (!(std::abs(col_sum) <= 1e-12 * std::max(1.0, col_scale))) {
                std::ostringstream os;
                os << "column " << i << " sums to " << col_sum;
                issues.push_back({RateMatrixViolation::ColumnSumNonzero, os.str()});
            }
        }
        if (!issues.empty()) throw RateMatrixError(std::move(issues));
        RateMatrix r;
        r.a_ = a;
        r.c_ = c;
        return r;
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(a_.rows()); }
    const Matrix& matrix() const noexcept { return a_; }
    double c() const noexcept { return c_; }
    /// Rate of jumping from `from` to `to` (to != from).
    double rate(std::size_t from, std::size_t to) const {
        return a_(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from));
    }
    double exit_rate(std::size_t state) const {
        const auto i = static_cast<Eigen::Index>(state);
        return -a_(i, i);
    }

private:
    Matrix a_;
    double c_ = 0.5;
};

/// Off-diagonal rates uniform in [c, 1/c]; diagonal fixed by zero column sums.
inline RateMatrix random_rate_matrix(std::size_t n, double c, Rng& rng) {
    std::uniform_real_distribution<double> u(c, 1.0 / c);
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < a.rows(); ++j) {
            if (j == i) continue;
            a(j, i) = u(rng);
            sum += a(j, i);
        }
        a(i, i) = -sum;
    }
    return RateMatrix::validate(a, c);
}

inline Vector unit_vector(std::size_t n, std::size_t i) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(n));
    e(static_cast<Eigen::Index>(i)) = 1.0;
    return e;
}

/// One realization of the chain on [0, T]. The path is right-continuous:
/// states[k] holds on [jump_times[k-1], jump_times[k]).
struct ChainPath {
    double horizon = 0.0;
    std::size_t initial_state = 0;
    std::vector<double> jump_times;
    std::vector<std::size_t> states; // size jump_times.size() + 1

    std::size_t jumps() const noexcept { return jump_times.size(); }
    std::size_t final_state() const noexcept { return states.back(); }

    std::size_t state_at(double t) const {
        auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
        return states[static_cast<std::size_t>(it - jump_times.begin())];
    }

    /// Time spent in each state during [a, b].
    Vector occupation(double a, double b, std::size_t n_states) const {
        Vector occ = Vector::Zero(static_cast<Eigen::Index>(n_states));
        if (!(b > a)) return occ;
        double left = 0.0;
        for (std::size_t k = 0; k < states.size(); ++k) {
            const double right = k < jump_times.size() ? jump_times[k] : horizon;
            const double lo = std::max(left, a);
            const double hi = std::min(right, b);
            if (hi > lo) occ(static_cast<Eigen::Index>(states[k])) += hi - lo;
            if (right >= b) break;
            left = right;
        }
        return occ;
    }

    bool operator==(const ChainPath&) const = default;
};

/// Checks the structural invariants of a path against an n-state chain.
inline bool is_valid_path(const ChainPath& p, std::size_t n_states) {
    if (p.states.size() != p.jump_times.size() + 1) return false;
    if (p.states.front() != p.initial_state) return false;
    for (std::size_t k = 0; k < p.states.size(); ++k) {
        if (p.states[k] >= n_states) return false;
        if (k > 0 && p.states[k] == p.states[k - 1]) return false;
    }
    double prev = 0.0;
    for (double t : p.jump_times) {
        if (!(t > prev) || t > p.horizon) return false;
        prev = t;
    }
    return true;
}

/// Exact simulation: exponential holding times with rate -a_ii, next state j
/// drawn with probability a_ji / (-a_ii).
inline ChainPath simulate_chain(const RateMatrix& a, std::size_t x0, double horizon, Rng& rng) {
    if (x0 >= a.size()) throw Error("simulate_chain: initial state out of range");
    if (!(horizon >= 0.0)) throw Error("simulate_chain: negative horizon");
    ChainPath path;
    path.horizon = horizon;
    path.initial_state = x0;
    path.states.push_back(x0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double t = 0.0;
    std::size_t state = x0;
    const std::size_t n = a.size();
    while (true) {
        const double exit = a.exit_rate(state);
        t += std::exponential_distribution<double>(exit)(rng);
        if (t > horizon) break;
        double pick = unif(rng) * exit;
        std::size_t next = state;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == state) continue;
            next = j;
            pick -= a.rate(state, j);
            if (pick < 0.0) break;
        }
        path.jump_times.push_back(t);
        path.states.push_back(next);
        state = next;
    }
    return path;
}

/// Increments of M_t = X_t - X_0 - int_0^t A X_s ds over consecutive grid
/// intervals. Occupation integrals are exact.
inline std::vector<Vector> martingale_increments(const ChainPath& path, const RateMatrix& a,
                                                 const std::vector<double>& nodes) {
    const std::size_t n = a.size();
    std::vector<Vector> out;
    if (nodes.size() < 2) return out;
    out.reserve(nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const Vector occ = path.occupation(nodes[k], nodes[k + 1], n);
        Vector dm = unit_vector(n, path.state_at(nodes[k + 1])) - unit_vector(n, path.state_at(nodes[k]));
        dm -= a.matrix() * occ;
        out.push_back(std::move(dm));
    }
    return out;
}

/// M_T for the whole path.
inline Vector terminal_martingale(const ChainPath& path, const RateMatrix& a) {
    return martingale_increments(path, a, {0.0, path.horizon}).front();
}

/// psi = diag(A x) - A diag(x) - diag(x) A^T for x = e_state.
struct PsiMatrix {
    Matrix matrix;
    std::size_t state = 0;
};

inline PsiMatrix psi(const RateMatrix& a, std::size_t state) {
    const std::size_t n = a.size();
    const Vector x = unit_vector(n, state);
    const Matrix& am = a.matrix();
    Matrix m = Matrix((am * x).asDiagonal()) - am * x.asDiagonal() - Matrix(x.asDiagonal()) * am.transpose();
    return {std::move(m), state};
}

/// Column j of psi from the closed form: (e_j^T A x)(e_j - x) off the current
/// state, -A x on it.
inline Vector psi_column(const RateMatrix& a, std::size_t state, std::size_t j) {
    const std::size_t n = a.size();
    const Vector x = unit_vector(n, state);
    if (j == state) return -(a.matrix() * x);
    const Vector ej = unit_vector(n, j);
    return ej.dot(a.matrix() * x) * (ej - x);
}

inline constexpr double kPsdTolerance = 1e-10;

/// ||z||^2 = z^T psi z, clamped to 0 within tolerance.
inline double seminorm_sq(const Vector& z, const PsiMatrix& p) {
    if (z.size() != p.matrix.rows()) throw Error("seminorm_sq: dimension mismatch");
    const double q = z.dot(p.matrix * z);
    if (q >= 0.0) return q;
    const double scale = 1.0 + p.matrix.cwiseAbs().maxCoeff() * z.squaredNorm();
    if (q >= -kPsdTolerance * scale) return 0.0;
    throw NegativeBeyondTolerance("seminorm_sq: quadratic form is " + std::to_string(q));
}

/// Moore-Penrose inverse via symmetric eigendecomposition, cutting eigenvalues
/// at N * eps * lambda_max.
inline Matrix psi_pinv(const Matrix& psi_m) {
    const auto n = psi_m.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(psi_m);
    const Vector& lambda = eig.eigenvalues();
    const double lmax = lambda.cwiseAbs().maxCoeff();
    const double cutoff = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * lmax;
    Vector inv = Vector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k)
        if (lambda(k) > cutoff && lmax > 0.0) inv(k) = 1.0 / lambda(k);
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

inline Matrix psi_pinv(const PsiMatrix& p) { return psi_pinv(p.matrix); }

/// int_0^T psi_s ds along a path, built from exact occupation times.
inline Matrix integrated_psi(const ChainPath& path, const RateMatrix& a) {
    const std::size_t n = a.size();
    const Vector occ = path.occupation(0.0, path.horizon, n);
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        if (occ(static_cast<Eigen::Index>(i)) > 0.0)
            out += occ(static_cast<Eigen::Index>(i)) * psi(a, i).matrix;
    return out;
}

/// Jump counts N^{ij}_T and their compensators int_0^T a_ji <X_s, e_i> ds.
struct JumpCounts {
    Eigen::MatrixXi counts;
    Matrix compensators;

    Matrix martingale() const { return counts.cast<double>() - compensators; }
};

inline JumpCounts count_jumps(const ChainPath& path, const RateMatrix& a) {
    const std::size_t n = a.size();
    const auto ni = static_cast<Eigen::Index>(n);
    JumpCounts out{Eigen::MatrixXi::Zero(ni, ni), Matrix::Zero(ni, ni)};
    for (std::size_t k = 1; k < path.states.size(); ++k)
        ++out.counts(static_cast<Eigen::Index>(path.states[k - 1]), static_cast<Eigen::Index>(path.states[k]));
    const Vector occ = path.occupation(0.0, path.horizon, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                out.compensators(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    a.rate(i, j) * occ(static_cast<Eigen::Index>(i));
    return out;
}

} // namespace bsdebm
