#pragma once

// Subcommands of the command-line tool. Every artifact embeds the resolved
// configuration, which never contains the worker count, so that replays with
// any number of workers produce identical bytes.

#include "bsdebm/comparison.hpp"
#include "bsdebm/config.hpp"
#include "bsdebm/oracles.hpp"
#include "bsdebm/path_store.hpp"
#include "bsdebm/picard.hpp"
#include "bsdebm/sublinear.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bsdebm {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitViolation = 3 };

/// Dot decimal separator and 17 significant digits; NaN becomes an empty field.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

/// Quotes a CSV field when it contains a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

namespace detail {

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json report_json(const SolveReport& r) {
    json j;
    j["y0"] = number_or_null(r.y0);
    j["se"] = r.se;
    j["error_estimate"] = r.error_estimate;
    j["diagnostics"] = r.diagnostics;
    j["notes"] = r.notes;
    json d = json::array(), q = json::array();
    for (double x : r.picard_deltas) d.push_back(number_or_null(x));
    for (double x : r.picard_ratios) q.push_back(number_or_null(x));
    j["picard_deltas"] = d;
    j["picard_ratios"] = q;
    return j;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    out << text;
}

inline void write_json(const std::filesystem::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

inline std::vector<std::size_t> slice_nodes(std::size_t steps, std::size_t slices) {
    std::vector<std::size_t> out;
    if (slices < 2) return {0};
    for (std::size_t s = 0; s < slices; ++s) {
        const std::size_t k = (steps * s) / (slices - 1);
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

inline json envelope(const ExperimentConfig& cfg, const std::string& command) {
    json j;
    j["command"] = command;
    j["seed"] = cfg.backend.seed;
    j["resolved_config"] = cfg.resolved;
    return j;
}

struct SuiteResult {
    json details = json::object();
    std::vector<std::string> violations;
    bool skipped = false;

    void check(bool ok, const std::string& what) {
        if (!ok) violations.push_back(what);
    }
    json to_json(const std::string& name) const {
        json j = details;
        j["suite"] = name;
        j["passed"] = violations.empty();
        j["skipped"] = skipped;
        j["violations"] = violations;
        return j;
    }
};

inline std::string fmt(const std::string& label, double a, double b) {
    return label + " (" + format_number(a) + " vs " + format_number(b) + ")";
}

inline SuiteResult suite_chain(const ExperimentConfig& cfg, std::size_t workers) {
    SuiteResult r;
    const RateMatrix a = cfg.chain();
    const std::size_t n = a.size();
    double worst_sym = 0, worst_eig = 0, worst_null = 0, worst_col = 0, worst_pinv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const PsiMatrix p = psi(a, i);
        worst_sym = std::max(worst_sym, (p.matrix - p.matrix.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Matrix> es(p.matrix, Eigen::EigenvaluesOnly);
        worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
        worst_null = std::max(worst_null, (p.matrix * Vector::Ones(static_cast<Eigen::Index>(n))).cwiseAbs().maxCoeff());
        const Matrix pinv = psi_pinv(p);
        for (std::size_t j = 0; j < n; ++j) {
            const Vector col = p.matrix.col(static_cast<Eigen::Index>(j));
            worst_col = std::max(worst_col, (psi_column(a, i, j) - col).cwiseAbs().maxCoeff());
            if (j == i) continue;
            const Vector dir = unit_vector(n, j) - unit_vector(n, i);
            worst_pinv = std::max(worst_pinv, (p.matrix * pinv * dir - dir).cwiseAbs().maxCoeff());
        }
    }
    r.details["psi"] = {{"asymmetry", worst_sym}, {"min_eigenvalue", worst_eig}, {"null_residual", worst_null},
                        {"column_formula_error", worst_col}, {"pinv_identity_error", worst_pinv}};
    r.check(worst_sym <= 1e-12, "psi not symmetric");
    r.check(worst_eig >= -1e-10, "psi has a negative eigenvalue");
    r.check(worst_null <= 1e-10, "psi * 1 != 0");
    r.check(worst_col <= 1e-12, "column formula disagrees with psi");
    r.check(worst_pinv <= 1e-10, "pseudoinverse identity fails");

    const auto batch = generate_batch(a, cfg.initial_state, TimeGrid::uniform(cfg.horizon, 1), cfg.verify_paths,
                                      stream_seed(cfg.backend.seed, 1, StreamTag::Auxiliary), workers);
    const auto np = static_cast<double>(batch.size());
    Matrix m_sum = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), m_sq = m_sum;
    Matrix d_sum = m_sum, d_sq = m_sum;
    for (const auto& p : batch.paths) {
        const Matrix mart = count_jumps(p.chain, a).martingale();
        m_sum += mart;
        m_sq += mart.cwiseProduct(mart);
        const Vector mt = terminal_martingale(p.chain, a);
        const Matrix d = mt * mt.transpose() - integrated_psi(p.chain, a);
        d_sum += d;
        d_sq += d.cwiseProduct(d);
    }
    double worst_m = 0.0, worst_qv = 0.0;
    for (Eigen::Index i = 0; i < m_sum.rows(); ++i)
        for (Eigen::Index j = 0; j < m_sum.cols(); ++j) {
            auto z = [&](double s, double q) {
                const double mean = s / np;
                const double se = std::sqrt(std::max(0.0, q / np - mean * mean) / (np - 1.0));
                return se > 0.0 ? std::abs(mean) / se : (mean == 0.0 ? 0.0 : INFINITY);
            };
            if (i != j) worst_m = std::max(worst_m, z(m_sum(i, j), m_sq(i, j)));
            worst_qv = std::max(worst_qv, z(d_sum(i, j), d_sq(i, j)));
        }
    r.details["compensated_counts_max_z"] = number_or_null(worst_m);
    r.details["quadratic_variation_max_z"] = number_or_null(worst_qv);
    r.details["n_paths"] = batch.size();
    r.check(worst_m <= 3.0, "compensated jump counts: mean beyond 3 SE");
    r.check(worst_qv <= 4.0, "quadratic variation identity beyond 4 SE");
    return r;
}

inline SuiteResult suite_drivers(const ExperimentConfig& cfg) {
    SuiteResult r;
    const RateMatrix a = cfg.chain();
    const Driver d = build_driver(cfg.driver, a, cfg.horizon);
    Rng rng = make_stream(cfg.backend.seed, 2, StreamTag::Auxiliary);
    const InputSampler sampler{a.size(), cfg.horizon};
    const auto lip = check_lipschitz(d, a, sampler, cfg.verify_samples, rng);
    r.details["lipschitz"] = {{"max_ratio", lip.max_ratio}, {"declared_mu", lip.declared_mu},
                              {"kernel_violations", lip.kernel_violations}};
    r.check(!lip.flagged, fmt("observed Lipschitz ratio exceeds declared mu", lip.max_ratio, lip.declared_mu));
    r.check(lip.kernel_violations == 0, "driver reacts to constant shifts of z2");
    const auto& fl = d.flags();
    if (fl.subadditive || fl.positively_homogeneous) {
        const auto s = check_sublinear_flags(d, sampler, cfg.verify_samples, rng);
        r.details["sublinear_flags"] = {{"subadditive", s.subadditive}, {"positively_homogeneous", s.positively_homogeneous},
                                        {"witness", s.witness}};
        r.check(!fl.subadditive || s.subadditive, "declared subadditive but sampling disagrees: " + s.witness);
        r.check(!fl.positively_homogeneous || s.positively_homogeneous,
                "declared positively homogeneous but sampling disagrees: " + s.witness);
    }
    if (fl.zero_at_zero_z) r.check(check_zero_at_zero_z(d, sampler, cfg.verify_samples, rng), "F(t, y, 0, 0, x) != 0");
    const auto bal = check_balanced(d, a, sampler, cfg.verify_samples, rng);
    r.details["balanced"] = {{"epsilon", bal.epsilon}, {"premise_held", bal.premise_held},
                             {"violations", bal.violations}, {"witness", bal.witness}};
    return r;
}

inline SuiteResult suite_linear(const ExperimentConfig& cfg, std::size_t workers) {
    SuiteResult r;
    const RateMatrix a = cfg.chain();
    const auto coef = linear_coefficients(cfg.driver, a.size());
    const auto spec = coef.spec();
    const TerminalClaim q = build_claim(cfg.claim);
    const auto batch = generate_batch(a, cfg.initial_state, TimeGrid::uniform(cfg.horizon, cfg.verify_steps),
                                      cfg.verify_paths, stream_seed(cfg.backend.seed, 3, StreamTag::Auxiliary), workers);
    const auto est = linear_bsde_mc(a, spec, q, batch, workers);
    PdeConfig pc = cfg.backend.pde;
    pc.estimate_error = true;
    pc.mode = SolveMode::Implicit;
    const auto pde = solve_pde({a, cfg.initial_state, cfg.horizon, affine_driver(a, coef, cfg.horizon), q}, pc);
    r.details["oracle"] = {{"y0", est.y0}, {"se", est.se}, {"n_paths", est.n_paths}, {"warnings", est.warnings}};
    r.details["pde"] = {{"y0", pde.report.y0}, {"error_estimate", pde.report.error_estimate}};
    r.details["driver"] = cfg.driver.name == "affine" ? "affine" : "affine with zero coefficients";
    const double tol = 3.0 * est.se + pde.report.error_estimate;
    r.details["tolerance"] = tol;
    r.check(std::abs(pde.report.y0 - est.y0) <= tol, fmt("finite differences vs stochastic exponential", pde.report.y0, est.y0));
    return r;
}

inline SuiteResult suite_solvers(const ExperimentConfig& cfg, std::size_t workers) {
    SuiteResult r;
    const RateMatrix a = cfg.chain();
    const Problem p{a, cfg.initial_state, cfg.horizon, build_driver(cfg.driver, a, cfg.horizon), build_claim(cfg.claim)};
    PdeConfig pc = cfg.backend.pde;
    pc.estimate_error = true;
    const auto pde = solve_pde(p, pc);
    const auto batch = generate_batch(a, cfg.initial_state, TimeGrid::uniform(cfg.horizon, cfg.verify_steps),
                                      cfg.verify_paths, stream_seed(cfg.backend.seed, 4, StreamTag::Auxiliary), workers);
    LsmcConfig lc = cfg.backend.lsmc;
    lc.estimate_error = true;
    lc.workers = workers;
    const auto mc = solve_lsmc(p, batch, lc);
    const double tol = 3.0 * mc.report.se + pde.report.error_estimate + mc.report.error_estimate;
    r.details["pde"] = {{"y0", pde.report.y0}, {"error_estimate", pde.report.error_estimate}};
    r.details["lsmc"] = {{"y0", mc.report.y0}, {"se", mc.report.se}, {"error_estimate", mc.report.error_estimate}};
    r.details["tolerance"] = tol;
    r.check(std::abs(pde.report.y0 - mc.report.y0) <= tol, fmt("backends disagree", pde.report.y0, mc.report.y0));
    return r;
}

inline SuiteResult suite_picard(const ExperimentConfig& cfg) {
    SuiteResult r;
    const RateMatrix a = cfg.chain();
    const Problem p{a, cfg.initial_state, cfg.horizon, build_driver(cfg.driver, a, cfg.horizon), build_claim(cfg.claim)};
    PdeConfig pc = cfg.backend.pde;
    pc.time_steps = cfg.verify_pde_steps;
    pc.space_nodes = cfg.verify_pde_nodes;
    PdePicardBackend backend(p, pc);
    try {
        const auto res = picard_iterate(backend, cfg.picard.staging, cfg.picard.tol, cfg.picard.max_iter);
        r.details["iterations"] = res.iterations;
        r.details["report"] = report_json(res.report);
        const double last = res.report.picard_ratios.empty() ? 0.0 : res.report.picard_ratios.back();
        r.check(last < 1.0, "final contraction ratio is not below 1");
    } catch (const SolverError& e) {
        r.check(false, e.what());
        r.details["last_ratio"] = e.last_ratio();
    }
    return r;
}

inline std::vector<TerminalClaim> axiom_family() {
    return {brownian_claim(), negative_brownian_claim(), brownian_squared_claim(), indicator_claim(1),
            constant_claim(1.0), constant_claim(-0.5)};
}

inline SuiteResult suite_pricing(const ExperimentConfig& cfg, bool axioms) {
    SuiteResult r;
    const RateMatrix a = cfg.chain();
    const Driver d = build_driver(cfg.driver, a, cfg.horizon);
    if (!d.sublinear()) {
        r.skipped = true;
        r.details["reason"] = "driver is not sublinear";
        return r;
    }
    const double kappa = cfg.driver.params.contains("kappa") ? cfg.driver.params.at("kappa").get<double>() : std::nan("");
    const auto spec = SublinearSpec::verify(d, a, cfg.horizon, kappa, cfg.verify_samples, cfg.backend.seed);
    const Market mk{a, cfg.initial_state, cfg.horizon};
    PdeConfig pc = cfg.backend.pde;
    pc.time_steps = cfg.verify_pde_steps;
    pc.space_nodes = cfg.verify_pde_nodes;
    if (!axioms) {
        BackendConfig bc = cfg.backend;
        bc.kind = BackendKind::Pde;
        bc.pde = pc;
        const auto q = quote(spec, mk, build_claim(cfg.claim), bc);
        r.details["quote"] = {{"bid", q.bid}, {"ask", q.ask}, {"spread", q.spread()}, {"tolerance", q.tolerance()}};
        r.check(q.bid <= q.ask + q.tolerance(), fmt("bid above ask", q.bid, q.ask));
        if (cfg.driver.name == "zero" && cfg.driver.shift == 0.0)
            r.check(std::abs(q.spread()) <= q.tolerance(), "linear driver with a nonzero spread");
        return r;
    }
    const auto rep = axiom_suite(spec, mk, axiom_family(), pc);
    json checks = json::array();
    for (const auto& c : rep.checks) {
        checks.push_back({{"property", c.property}, {"name", c.name}, {"comparisons", c.comparisons},
                          {"worst_excess", number_or_null(c.worst_excess)}, {"witness", c.witness}});
        r.check(c.passed(), c.name + ": " + c.witness);
    }
    r.details["properties"] = checks;
    return r;
}

inline int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out, std::size_t workers) {
    const RateMatrix a = cfg.chain();
    const auto batch = generate_batch(a, cfg.initial_state, TimeGrid::uniform(cfg.horizon, cfg.simulate_steps),
                                      cfg.simulate_paths, cfg.backend.seed, workers);
    save_batch(batch, (out / "paths.bin").string());
    double w = 0.0, jumps = 0.0;
    for (const auto& p : batch.paths) {
        w += p.terminal_brownian();
        jumps += static_cast<double>(p.chain.jumps());
    }
    json j = envelope(cfg, "simulate");
    j["paths_file"] = "paths.bin";
    j["n_paths"] = batch.size();
    j["time_steps"] = batch.grid.steps();
    j["mean_terminal_brownian"] = w / static_cast<double>(batch.size());
    j["mean_jumps"] = jumps / static_cast<double>(batch.size());
    write_json(out / "summary.json", j);
    return kExitOk;
}

inline int cmd_solve(const ExperimentConfig& cfg, const std::filesystem::path& out, std::size_t workers) {
    const RateMatrix a = cfg.chain();
    const Problem p{a, cfg.initial_state, cfg.horizon, build_driver(cfg.driver, a, cfg.horizon), build_claim(cfg.claim)};
    json j = envelope(cfg, "solve");
    j["backend"] = to_string(cfg.backend.kind);
    std::ostringstream csv;
    csv.imbue(std::locale::classic());
    csv << "t,state,w,value,z1\n";
    auto row = [&](double t, std::size_t i, double w, double v, double g) {
        csv << format_number(t) << ',' << i << ',' << format_number(w) << ',' << format_number(v) << ','
            << format_number(g) << '\n';
    };
    if (cfg.backend.kind == BackendKind::Pde) {
        SolutionSurface surface;
        SolveReport rep;
        if (cfg.picard.enabled) {
            PdePicardBackend backend(p, cfg.backend.pde);
            auto res = picard_iterate(backend, cfg.picard.staging, cfg.picard.tol, cfg.picard.max_iter);
            surface = std::move(res.surface);
            rep = std::move(res.report);
            if (cfg.backend.pde.estimate_error) rep.error_estimate = pde_error_estimate(p, cfg.backend.pde, rep.y0);
        } else {
            auto res = solve_pde(p, cfg.backend.pde);
            surface = std::move(res.surface);
            rep = std::move(res.report);
        }
        j["report"] = report_json(rep);
        for (std::size_t k : slice_nodes(surface.steps(), cfg.surface_slices))
            for (std::size_t i = 0; i < surface.n_states; ++i)
                for (std::size_t m = 0; m < surface.space.size(); ++m)
                    row(surface.times[k], i, surface.space[m], surface.value(k, i, m), surface.gradient(k, i, m));
    } else {
        const auto batch = generate_batch(a, cfg.initial_state, TimeGrid::uniform(cfg.horizon, cfg.backend.mc_steps),
                                          cfg.backend.n_paths, cfg.backend.seed, workers);
        LsmcConfig lc = cfg.backend.lsmc;
        lc.workers = workers;
        lc.store_paths = true;
        LsmcPathValues values;
        SolveReport rep;
        if (cfg.picard.enabled) {
            LsmcPicardBackend backend(p, batch, lc);
            auto res = picard_iterate(backend, cfg.picard.staging, cfg.picard.tol, cfg.picard.max_iter);
            values = std::move(res.surface);
            rep = std::move(res.report);
        } else {
            auto res = solve_lsmc_stage(p, batch, lc);
            values = std::move(res.values);
            rep = std::move(res.report);
        }
        if (lc.estimate_error) rep.error_estimate = lsmc_error_estimate(p, batch, lc, rep.y0);
        j["report"] = report_json(rep);
        // Sampled along the first paths: (t, state, W_t, u_state, z1_state).
        const std::size_t shown = std::min<std::size_t>(values.n_paths, 200);
        for (std::size_t k : slice_nodes(values.steps, cfg.surface_slices)) {
            const auto st = node_states(batch);
            for (std::size_t q = 0; q < shown; ++q) {
                const std::size_t i = values.state[k * values.n_paths + q];
                row(batch.grid[k], i, st.w_at(k, q), values.u[values.index(k, q, i)], values.z1[values.index(k, q, i)]);
            }
        }
    }
    write_text(out / "surface.csv", csv.str());
    write_json(out / "summary.json", j);
    return kExitOk;
}

inline int cmd_price(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const RateMatrix a = cfg.chain();
    const Market mk{a, cfg.initial_state, cfg.horizon};
    std::vector<DriverConfig> drivers;
    if (cfg.price_kappas.empty() || !cfg.driver.params.contains("kappa")) {
        drivers.push_back(cfg.driver);
    } else {
        for (double k : cfg.price_kappas) {
            DriverConfig d = cfg.driver;
            d.params["kappa"] = k;
            drivers.push_back(d);
        }
    }
    std::ostringstream csv;
    csv << "claim,kappa,bid,ask,spread,se,scheme_err\n";
    json quotes = json::array(), violations = json::array();
    for (const auto& dc : drivers) {
        const Driver d = build_driver(dc, a, cfg.horizon);
        if (!d.sublinear())
            throw ConfigError("config.driver: '" + dc.name + "' is not a sublinear driver, so it cannot price");
        const double kappa = dc.params.contains("kappa") ? dc.params.at("kappa").get<double>() : std::nan("");
        const auto spec = SublinearSpec::verify(d, a, cfg.horizon, kappa, 2000, cfg.backend.seed);
        for (const auto& cc : cfg.price_claims) {
            const auto q = quote(spec, mk, build_claim(cc), cfg.backend);
            csv << csv_field(q.claim) << ',' << format_number(q.kappa) << ',' << format_number(q.bid) << ','
                << format_number(q.ask) << ',' << format_number(q.spread()) << ',' << format_number(q.se) << ','
                << format_number(q.scheme_err) << '\n';
            quotes.push_back({{"claim", q.claim}, {"driver", q.spec}, {"kappa", number_or_null(q.kappa)},
                              {"bid", q.bid}, {"ask", q.ask}, {"spread", q.spread()}, {"se", q.se},
                              {"scheme_err", q.scheme_err}});
            if (q.bid > q.ask + q.tolerance()) violations.push_back("bid above ask for " + q.claim);
        }
    }
    write_text(out / "quotes.csv", csv.str());
    json j = envelope(cfg, "price");
    j["backend"] = to_string(cfg.backend.kind);
    j["quotes"] = quotes;
    j["violations"] = violations;
    write_json(out / "summary.json", j);
    return violations.empty() ? kExitOk : kExitViolation;
}

inline int cmd_compare(const ExperimentConfig& cfg, const std::filesystem::path& out) {
    const RateMatrix a = cfg.chain();
    const StandardPair first{build_driver(cfg.compare_first_driver, a, cfg.horizon), build_claim(cfg.compare_first_claim)};
    const StandardPair second{build_driver(cfg.compare_second_driver, a, cfg.horizon),
                              build_claim(cfg.compare_second_claim)};
    ComparisonConfig cc;
    cc.pde = cfg.backend.pde;
    cc.pde.estimate_error = false;
    cc.balanced_samples = cfg.compare_balanced_samples;
    cc.seed = cfg.backend.seed;
    json j = envelope(cfg, "compare");
    int code = kExitOk;
    try {
        const auto rep = compare_solutions(a, cfg.initial_state, cfg.horizon, first, second, cc);
        j["status"] = "ordered";
        j["min_margin"] = rep.min_margin;
        j["tolerance"] = rep.tolerance;
        j["scheme_error"] = rep.scheme_error;
        j["y0_first"] = rep.y0_first;
        j["y0_second"] = rep.y0_second;
        j["worst"] = {{"t", rep.worst_t}, {"state", rep.worst_state}, {"w", rep.worst_w}};
        j["balanced"] = {{"epsilon", rep.balanced.epsilon}, {"premise_held", rep.balanced.premise_held}};
    } catch (const PremiseViolated& e) {
        j["status"] = "premise_violated";
        j["premise"] = e.premise();
        j["message"] = e.what();
        code = kExitViolation;
    } catch (const ComparisonViolated& e) {
        j["status"] = "comparison_violated";
        j["min_margin"] = e.margin();
        j["message"] = e.what();
        code = kExitViolation;
    }
    write_json(out / "comparison.json", j);
    return code;
}

inline int cmd_verify(const ExperimentConfig& cfg, const std::filesystem::path& out, std::size_t workers,
                      std::vector<std::string> suites, std::ostream& log) {
    if (suites.empty()) suites = cfg.verify_suites;
    const std::vector<std::string> all = {"chain", "drivers", "linear", "solvers", "picard", "pricing", "axioms"};
    if (std::find(suites.begin(), suites.end(), "all") != suites.end()) suites = all;
    for (const auto& s : suites)
        if (std::find(all.begin(), all.end(), s) == all.end()) throw ConfigError("unknown verify suite '" + s + "'");
    json j = envelope(cfg, "verify");
    json results = json::array(), violations = json::array();
    for (const auto& s : suites) {
        SuiteResult r;
        if (s == "chain") r = suite_chain(cfg, workers);
        else if (s == "drivers") r = suite_drivers(cfg);
        else if (s == "linear") r = suite_linear(cfg, workers);
        else if (s == "solvers") r = suite_solvers(cfg, workers);
        else if (s == "picard") r = suite_picard(cfg);
        else if (s == "pricing") r = suite_pricing(cfg, false);
        else r = suite_pricing(cfg, true);
        log << (r.violations.empty() ? "pass" : "FAIL") << (r.skipped ? " (skipped)" : "") << "  " << s << '\n';
        for (const auto& v : r.violations) violations.push_back(s + ": " + v);
        results.push_back(r.to_json(s));
    }
    j["suites"] = results;
    j["violations"] = violations;
    j["passed"] = violations.empty();
    write_json(out / "verify.json", j);
    return violations.empty() ? kExitOk : kExitViolation;
}

} // namespace detail

/// Runs one subcommand and writes its artifacts plus resolved_config.json into out.
inline int run_command(const std::string& command, const ExperimentConfig& cfg, const std::filesystem::path& out,
                       std::size_t workers, const std::vector<std::string>& args, std::ostream& log) {
    std::filesystem::create_directories(out);
    detail::write_json(out / "resolved_config.json", cfg.resolved);
    if (command == "simulate") return detail::cmd_simulate(cfg, out, workers);
    if (command == "solve") return detail::cmd_solve(cfg, out, workers);
    if (command == "price") return detail::cmd_price(cfg, out);
    if (command == "compare") return detail::cmd_compare(cfg, out);
    if (command == "verify") return detail::cmd_verify(cfg, out, workers, args, log);
    throw ConfigError("unknown command '" + command + "'");
}

/// Applies --seed and --backend overrides to a parsed config and its resolved form.
inline void apply_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                            std::optional<std::string> backend) {
    if (seed) {
        cfg.backend.seed = *seed;
        cfg.resolved["seed"] = *seed;
    }
    if (backend) {
        cfg.backend.kind = parse_backend(*backend);
        cfg.resolved["backend"] = *backend;
    }
}

} // namespace bsdebm
