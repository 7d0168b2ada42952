#pragma once

#include "bsdebm/claim.hpp"
#include "bsdebm/driver.hpp"
#include "bsdebm/markov_chain.hpp"

#include <map>
#include <string>
#include <vector>

namespace bsdebm {

/// Markovian backward problem: chain, start state, horizon, driver and claim.
struct Problem {
    RateMatrix chain;
    std::size_t initial_state = 0;
    double horizon = 1.0;
    Driver driver = zero_driver();
    TerminalClaim claim = constant_claim(0.0);
};

enum class SolveMode { Implicit, Explicit };

/// Which driver arguments come from the previous Picard iterate.
enum class Staging {
    None,    // no freezing: the plain scheme
    FreezeY, // y from the previous iterate, (z1, z2) from the current one
    FreezeZ, // (z1, z2) from the previous iterate, y from the current one
};

struct SolveReport {
    double y0 = 0.0;
    double se = 0.0;             // Monte Carlo standard error, 0 for the PDE backend
    double error_estimate = 0.0; // discretization error estimate, 0 when not computed
    std::vector<double> picard_deltas;
    std::vector<double> picard_ratios;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> notes;
};

inline const char* to_string(SolveMode m) { return m == SolveMode::Implicit ? "implicit" : "explicit"; }

} // namespace bsdebm
