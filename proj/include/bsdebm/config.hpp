#pragma once

// Experiment configuration: JSON in, validated structs out, and the fully
// resolved JSON (every default filled in) for replay.

#include "bsdebm/backend.hpp"
#include "bsdebm/claim.hpp"
#include "bsdebm/driver.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

namespace bsdebm {

using json = nlohmann::json;

namespace detail {

// Reads keys from one JSON object, records the resolved values and rejects
// keys that were never read.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        used_.insert(key);
        if (!j_.contains(key)) {
            resolved_[key] = fallback;
            return fallback;
        }
        T v = convert<T>(j_.at(key), key);
        resolved_[key] = v;
        return v;
    }

    template <class T>
    T require(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(field(key) + ": required");
        T v = convert<T>(j_.at(key), key);
        resolved_[key] = v;
        return v;
    }

    /// Raw sub-object or array; the caller stores its resolved form with set().
    json raw(const std::string& key, json fallback = json::object()) {
        used_.insert(key);
        return j_.contains(key) ? j_.at(key) : fallback;
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    void set(const std::string& key, json v) { resolved_[key] = std::move(v); }
    std::string field(const std::string& key) const { return path_ + "." + key; }

    json finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
        return resolved_;
    }

private:
    template <class T>
    T convert(const json& v, const std::string& key) const {
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0))
                    throw ConfigError(field(key) + ": expected a nonnegative integer");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
            }
            return v.get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(field(key) + ": " + e.what());
        }
    }

    json j_;
    std::string path_;
    std::set<std::string> used_;
    json resolved_ = json::object();
};

inline std::vector<double> per_state(Fields& f, const std::string& key, std::size_t n, double fallback) {
    auto v = f.get<std::vector<double>>(key, std::vector<double>(n, fallback));
    if (v.size() == 1 && n > 1) v.assign(n, v[0]);
    if (v.size() != n) throw ConfigError(f.field(key) + ": expected " + std::to_string(n) + " values");
    f.set(key, v);
    return v;
}

} // namespace detail

/// Named driver with its parameters as given (after defaults).
struct DriverConfig {
    std::string name = "zero";
    json params = json::object();
    double shift = 0.0;
};

struct ClaimConfig {
    std::string name = "brownian";
    json params = json::object();
};

struct PicardConfig {
    bool enabled = false;
    Staging staging = Staging::FreezeY;
    double tol = 1e-8;
    std::size_t max_iter = 50;
};

struct ExperimentConfig {
    Matrix rates;
    double c = 0.5;
    std::size_t initial_state = 0;
    double horizon = 1.0;
    DriverConfig driver;
    ClaimConfig claim;
    BackendConfig backend;
    PicardConfig picard;

    std::size_t simulate_paths = 1000;
    std::size_t simulate_steps = 100;

    std::vector<double> price_kappas;
    std::vector<ClaimConfig> price_claims;

    DriverConfig compare_first_driver, compare_second_driver;
    ClaimConfig compare_first_claim, compare_second_claim;
    std::size_t compare_balanced_samples = 2000;

    std::vector<std::string> verify_suites = {"all"};
    std::size_t verify_paths = 20000;
    std::size_t verify_steps = 50;
    std::size_t verify_samples = 2000;
    std::size_t verify_pde_steps = 200;
    std::size_t verify_pde_nodes = 201;

    std::size_t surface_slices = 11;

    json resolved; // every field with defaults, for replay

    RateMatrix chain() const { return RateMatrix::validate(rates, c); }
};

namespace detail {

inline DriverConfig parse_driver(const json& j, const std::string& path, std::size_t n, json& resolved) {
    Fields f(j, path);
    DriverConfig d;
    d.name = f.get<std::string>("name", "zero");
    d.shift = f.get<double>("shift", 0.0);
    Fields p(f.raw("params"), path + ".params");
    if (d.name == "zero") {
    } else if (d.name == "ambiguity" || d.name == "chain_ambiguity") {
        if (p.get<double>("kappa", 0.2) < 0.0) throw ConfigError(p.field("kappa") + ": must be nonnegative");
    } else if (d.name == "discount") {
        p.get<double>("rho", 0.0);
    } else if (d.name == "regime_linear") {
        per_state(p, "c", n, 0.0);
        per_state(p, "d", n, 0.0);
    } else if (d.name == "affine") {
        per_state(p, "rho", n, 0.0);
        per_state(p, "alpha", n, 0.0);
        per_state(p, "gamma", n, 0.0);
        per_state(p, "phi0", n, 0.0);
        per_state(p, "phi1", n, 0.0);
        auto beta = p.get<std::vector<std::vector<double>>>(
            "beta", std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
        if (beta.size() != n) throw ConfigError(p.field("beta") + ": expected one row per state");
        for (const auto& row : beta)
            if (row.size() != n) throw ConfigError(p.field("beta") + ": each row needs one entry per state");
    } else {
        throw ConfigError(f.field("name") + ": unknown driver '" + d.name +
                          "' (zero, ambiguity, chain_ambiguity, discount, regime_linear, affine)");
    }
    d.params = p.finish();
    f.set("params", d.params);
    resolved = f.finish();
    return d;
}

inline ClaimConfig parse_claim(const json& j, const std::string& path, std::size_t n, json& resolved) {
    Fields f(j, path);
    ClaimConfig c;
    c.name = f.get<std::string>("name", "brownian");
    Fields p(f.raw("params"), path + ".params");
    if (c.name == "brownian" || c.name == "negative_brownian" || c.name == "brownian_squared") {
    } else if (c.name == "constant") {
        p.get<double>("value", 1.0);
    } else if (c.name == "indicator") {
        if (p.get<std::size_t>("state", n > 1 ? 1 : 0) >= n) throw ConfigError(p.field("state") + ": out of range");
        p.get<double>("value", 1.0);
    } else if (c.name == "polynomial") {
        auto rows = p.require<std::vector<std::vector<double>>>("coefficients");
        if (rows.empty() || (rows.size() != 1 && rows.size() != n))
            throw ConfigError(p.field("coefficients") + ": give one row, or one row per state");
    } else {
        throw ConfigError(f.field("name") + ": unknown claim '" + c.name +
                          "' (brownian, negative_brownian, brownian_squared, constant, indicator, polynomial)");
    }
    c.params = p.finish();
    f.set("params", c.params);
    resolved = f.finish();
    return c;
}

inline Staging parse_staging(const std::string& s, const std::string& field) {
    if (s == "freeze_y") return Staging::FreezeY;
    if (s == "freeze_z") return Staging::FreezeZ;
    throw ConfigError(field + ": expected freeze_y or freeze_z");
}

inline SolveMode parse_mode(const std::string& s, const std::string& field) {
    if (s == "implicit") return SolveMode::Implicit;
    if (s == "explicit") return SolveMode::Explicit;
    throw ConfigError(field + ": expected implicit or explicit");
}

} // namespace detail

inline Driver build_driver(const DriverConfig& d, const RateMatrix& chain, double horizon) {
    const auto& p = d.params;
    auto vec = [&](const char* k) { return p.at(k).get<std::vector<double>>(); };
    Driver out = zero_driver();
    if (d.name == "ambiguity") out = ambiguity_driver(p.at("kappa").get<double>());
    else if (d.name == "chain_ambiguity") out = chain_ambiguity_driver(chain, p.at("kappa").get<double>());
    else if (d.name == "discount") out = discount_driver(p.at("rho").get<double>(), chain.size());
    else if (d.name == "regime_linear") out = regime_linear_driver(vec("c"), vec("d"));
    else if (d.name == "affine") {
        ConstantLinearCoefficients k;
        k.rho = vec("rho");
        k.alpha = vec("alpha");
        k.gamma = vec("gamma");
        k.phi0 = vec("phi0");
        k.phi1 = vec("phi1");
        for (const auto& row : p.at("beta").get<std::vector<std::vector<double>>>())
            k.beta.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
        out = affine_driver(chain, k, horizon);
    }
    return d.shift != 0.0 ? shifted(out, d.shift) : out;
}

/// Coefficients of an affine driver config; all zero for any other driver.
inline ConstantLinearCoefficients linear_coefficients(const DriverConfig& d, std::size_t n) {
    ConstantLinearCoefficients k;
    k.rho = k.alpha = k.gamma = k.phi0 = k.phi1 = std::vector<double>(n, 0.0);
    k.beta.assign(n, Vector::Zero(static_cast<Eigen::Index>(n)));
    if (d.name != "affine") return k;
    const auto& p = d.params;
    k.rho = p.at("rho").get<std::vector<double>>();
    k.alpha = p.at("alpha").get<std::vector<double>>();
    k.gamma = p.at("gamma").get<std::vector<double>>();
    k.phi0 = p.at("phi0").get<std::vector<double>>();
    k.phi1 = p.at("phi1").get<std::vector<double>>();
    k.beta.clear();
    for (const auto& row : p.at("beta").get<std::vector<std::vector<double>>>())
        k.beta.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
    for (auto& v : k.phi0) v += d.shift;
    return k;
}

inline TerminalClaim build_claim(const ClaimConfig& c) {
    const auto& p = c.params;
    if (c.name == "brownian") return brownian_claim();
    if (c.name == "negative_brownian") return negative_brownian_claim();
    if (c.name == "brownian_squared") return brownian_squared_claim();
    if (c.name == "constant") return constant_claim(p.at("value").get<double>());
    if (c.name == "indicator") return indicator_claim(p.at("state").get<std::size_t>(), p.at("value").get<double>());
    return polynomial_claim(p.at("coefficients").get<std::vector<std::vector<double>>>());
}

/// Parses and validates a configuration. Throws ConfigError with the field path.
inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig cfg;
    detail::Fields top(j, "config");
    json res = json::object();

    {
        detail::Fields ch(top.raw("chain"), "config.chain");
        const std::vector<std::vector<double>> sym = {{-1.0, 1.0}, {1.0, -1.0}};
        auto rows = ch.get<std::vector<std::vector<double>>>("rates", sym);
        cfg.c = ch.get<double>("c", 0.5);
        cfg.rates = Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.size()) throw ConfigError("config.chain.rates: matrix must be square");
            for (std::size_t col = 0; col < rows.size(); ++col)
                cfg.rates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = rows[r][col];
        }
        try {
            (void)cfg.chain();
        } catch (const RateMatrixError& e) {
            throw ConfigError(std::string("config.chain: ") + e.what());
        }
        top.set("chain", ch.finish());
    }
    const std::size_t n = static_cast<std::size_t>(cfg.rates.rows());
    cfg.initial_state = top.get<std::size_t>("initial_state", 0);
    if (cfg.initial_state >= n) throw ConfigError("config.initial_state: out of range");
    cfg.horizon = top.get<double>("horizon", 1.0);
    if (!(cfg.horizon > 0.0)) throw ConfigError("config.horizon: must be positive");

    json r;
    cfg.driver = detail::parse_driver(top.raw("driver"), "config.driver", n, r);
    top.set("driver", r);
    cfg.claim = detail::parse_claim(top.raw("claim"), "config.claim", n, r);
    top.set("claim", r);

    cfg.backend.kind = parse_backend(top.get<std::string>("backend", "pde"));
    const SolveMode mode = detail::parse_mode(top.get<std::string>("mode", "implicit"), "config.mode");
    cfg.backend.seed = top.get<std::uint64_t>("seed", 1);

    {
        detail::Fields p(top.raw("pde"), "config.pde");
        auto& c = cfg.backend.pde;
        c.mode = mode;
        c.time_steps = p.get<std::size_t>("time_steps", 1000);
        c.space_nodes = p.get<std::size_t>("space_nodes", 401);
        c.half_width = p.get<double>("half_width", 0.0);
        c.inner_tol = p.get<double>("inner_tol", 1e-10);
        c.inner_max_iter = p.get<std::size_t>("inner_max_iter", 500);
        c.estimate_error = p.get<bool>("estimate_error", true);
        if (c.time_steps == 0) throw ConfigError("config.pde.time_steps: must be positive");
        if (c.space_nodes < 5 || c.space_nodes % 2 == 0)
            throw ConfigError("config.pde.space_nodes: must be odd and at least 5");
        top.set("pde", p.finish());
    }
    {
        detail::Fields p(top.raw("lsmc"), "config.lsmc");
        auto& c = cfg.backend.lsmc;
        c.mode = mode;
        cfg.backend.n_paths = p.get<std::size_t>("n_paths", 20000);
        cfg.backend.mc_steps = p.get<std::size_t>("time_steps", 50);
        c.degree = p.get<std::size_t>("degree", 3);
        c.inner_tol = p.get<double>("inner_tol", 1e-10);
        c.inner_max_iter = p.get<std::size_t>("inner_max_iter", 200);
        c.estimate_error = p.get<bool>("estimate_error", true);
        if (cfg.backend.n_paths == 0 || cfg.backend.mc_steps == 0)
            throw ConfigError("config.lsmc: n_paths and time_steps must be positive");
        if (c.degree > 8) throw ConfigError("config.lsmc.degree: at most 8");
        top.set("lsmc", p.finish());
    }
    {
        detail::Fields p(top.raw("picard"), "config.picard");
        cfg.picard.enabled = p.get<bool>("enabled", false);
        cfg.picard.staging = detail::parse_staging(p.get<std::string>("staging", "freeze_y"), "config.picard.staging");
        cfg.picard.tol = p.get<double>("tol", 1e-8);
        cfg.picard.max_iter = p.get<std::size_t>("max_iter", 50);
        if (!(cfg.picard.tol > 0.0)) throw ConfigError("config.picard.tol: must be positive");
        top.set("picard", p.finish());
    }
    {
        detail::Fields p(top.raw("simulate"), "config.simulate");
        cfg.simulate_paths = p.get<std::size_t>("n_paths", 1000);
        cfg.simulate_steps = p.get<std::size_t>("time_steps", 100);
        if (cfg.simulate_paths == 0 || cfg.simulate_steps == 0)
            throw ConfigError("config.simulate: n_paths and time_steps must be positive");
        top.set("simulate", p.finish());
    }
    {
        detail::Fields p(top.raw("price"), "config.price");
        const bool has_kappa = cfg.driver.params.contains("kappa");
        cfg.price_kappas = p.get<std::vector<double>>(
            "kappas", has_kappa ? std::vector<double>{cfg.driver.params.at("kappa").get<double>()} : std::vector<double>{});
        for (double k : cfg.price_kappas)
            if (k < 0.0) throw ConfigError("config.price.kappas: must be nonnegative");
        json claims = p.raw("claims", json::array({top.has("claim") ? j.at("claim") : json::object()}));
        if (!claims.is_array() || claims.empty()) throw ConfigError("config.price.claims: expected a nonempty array");
        json resolved_claims = json::array();
        for (std::size_t i = 0; i < claims.size(); ++i) {
            json rc;
            cfg.price_claims.push_back(
                detail::parse_claim(claims[i], "config.price.claims[" + std::to_string(i) + "]", n, rc));
            resolved_claims.push_back(rc);
        }
        p.set("claims", resolved_claims);
        top.set("price", p.finish());
    }
    {
        detail::Fields p(top.raw("compare"), "config.compare");
        auto pair = [&](const char* key, DriverConfig& d, ClaimConfig& c, double shift) {
            detail::Fields s(p.raw(key), std::string("config.compare.") + key);
            json rd, rc;
            d = detail::parse_driver(s.raw("driver"), std::string("config.compare.") + key + ".driver", n, rd);
            json cj = s.raw("claim", json{{"name", "constant"}, {"params", {{"value", shift}}}});
            c = detail::parse_claim(cj, std::string("config.compare.") + key + ".claim", n, rc);
            s.set("driver", rd);
            s.set("claim", rc);
            p.set(key, s.finish());
        };
        pair("first", cfg.compare_first_driver, cfg.compare_first_claim, 1.0);
        pair("second", cfg.compare_second_driver, cfg.compare_second_claim, 0.0);
        cfg.compare_balanced_samples = p.get<std::size_t>("balanced_samples", 2000);
        top.set("compare", p.finish());
    }
    {
        detail::Fields p(top.raw("verify"), "config.verify");
        cfg.verify_suites = p.get<std::vector<std::string>>("suites", {"all"});
        static const std::set<std::string> known = {"all", "chain", "drivers", "linear", "solvers", "picard",
                                                    "pricing", "axioms"};
        for (const auto& s : cfg.verify_suites)
            if (!known.count(s)) throw ConfigError("config.verify.suites: unknown suite '" + s + "'");
        cfg.verify_paths = p.get<std::size_t>("n_paths", 20000);
        cfg.verify_steps = p.get<std::size_t>("time_steps", 50);
        cfg.verify_samples = p.get<std::size_t>("samples", 2000);
        cfg.verify_pde_steps = p.get<std::size_t>("pde_time_steps", 200);
        cfg.verify_pde_nodes = p.get<std::size_t>("pde_space_nodes", 201);
        if (cfg.verify_paths < 2 || cfg.verify_steps == 0 || cfg.verify_pde_steps == 0 || cfg.verify_pde_nodes < 5 ||
            cfg.verify_pde_nodes % 2 == 0)
            throw ConfigError("config.verify: sizes out of range");
        top.set("verify", p.finish());
    }
    {
        detail::Fields p(top.raw("output"), "config.output");
        cfg.surface_slices = p.get<std::size_t>("surface_slices", 11);
        top.set("output", p.finish());
    }
    cfg.resolved = top.finish();
    (void)build_driver(cfg.driver, cfg.chain(), cfg.horizon);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(file + ": " + e.what());
    }
    return parse_config(j);
}

} // namespace bsdebm
