#pragma once

#include "bsdebm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace bsdebm {

/// Markovian terminal condition Q = q(W_T, X_T), with a declared growth bound
/// |q(w, i)| <= growth_constant * (1 + |w|^growth_power).
struct TerminalClaim {
    std::string name;
    std::function<double(double w, std::size_t state)> payoff;
    double growth_constant = 1.0;
    double growth_power = 0.0;
    // Typical magnitude of the payoff; widens the spatial truncation of the PDE grid.
    double scale = 0.0;
    // True when the payoff does not depend on w or the state.
    bool deterministic = false;

    double operator()(double w, std::size_t state) const { return payoff(w, state); }
};

inline TerminalClaim constant_claim(double value) {
    return {"constant(" + std::to_string(value) + ")", [value](double, std::size_t) { return value; },
            std::abs(value), 0.0, 0.0, true};
}

/// q(w, i) = sum_k coeffs[i][k] w^k. A single row is shared by all states.
inline TerminalClaim polynomial_claim(std::vector<std::vector<double>> coeffs, std::string name = "polynomial") {
    if (coeffs.empty()) throw Error("polynomial_claim: no coefficients");
    double growth = 0.0;
    std::size_t degree = 0;
    for (const auto& row : coeffs) {
        for (std::size_t k = 0; k < row.size(); ++k)
            if (row[k] != 0.0) degree = std::max(degree, k);
        double s = 0.0;
        for (double c : row) s += std::abs(c);
        growth = std::max(growth, s);
    }
    bool deterministic = degree == 0;
    if (deterministic)
        for (const auto& row : coeffs)
            if ((row.empty() ? 0.0 : row[0]) != (coeffs[0].empty() ? 0.0 : coeffs[0][0])) deterministic = false;
    return {std::move(name),
            [coeffs = std::move(coeffs)](double w, std::size_t state) {
                const auto& row = coeffs.size() == 1 ? coeffs[0] : coeffs.at(state);
                double v = 0.0;
                for (std::size_t k = row.size(); k-- > 0;) v = v * w + row[k];
                return v;
            },
            growth, static_cast<double>(degree), 0.0, deterministic};
}

inline TerminalClaim brownian_claim() { return polynomial_claim({{0.0, 1.0}}, "W_T"); }
inline TerminalClaim negative_brownian_claim() { return polynomial_claim({{0.0, -1.0}}, "-W_T"); }
inline TerminalClaim brownian_squared_claim() { return polynomial_claim({{0.0, 0.0, 1.0}}, "W_T^2"); }

/// value * 1{X_T = e_state}.
inline TerminalClaim indicator_claim(std::size_t state, double value = 1.0) {
    return {"1{X_T=e" + std::to_string(state + 1) + "}",
            [state, value](double, std::size_t s) { return s == state ? value : 0.0; }, std::abs(value), 0.0, 0.0,
            false};
}

inline TerminalClaim scaled(const TerminalClaim& q, double lambda) {
    TerminalClaim out = q;
    out.name = std::to_string(lambda) + "*" + q.name;
    out.payoff = [f = q.payoff, lambda](double w, std::size_t s) { return lambda * f(w, s); };
    out.growth_constant = std::abs(lambda) * q.growth_constant;
    out.scale = std::abs(lambda) * q.scale;
    return out;
}

inline TerminalClaim negated(const TerminalClaim& q) {
    TerminalClaim out = scaled(q, -1.0);
    out.name = "-(" + q.name + ")";
    return out;
}

inline TerminalClaim sum(const TerminalClaim& a, const TerminalClaim& b) {
    return {a.name + "+" + b.name,
            [fa = a.payoff, fb = b.payoff](double w, std::size_t s) { return fa(w, s) + fb(w, s); },
            a.growth_constant + b.growth_constant, std::max(a.growth_power, b.growth_power), std::max(a.scale, b.scale),
            a.deterministic && b.deterministic};
}

inline TerminalClaim shifted(const TerminalClaim& q, double delta) { return sum(q, constant_claim(delta)); }

} // namespace bsdebm
