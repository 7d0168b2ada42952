#include "bsdebm/runner.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"Regime-switching backward SDE laboratory"};
    app.require_subcommand(1);

    std::string config_file;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backend;
    std::size_t workers = bsdebm::default_workers();
    std::vector<std::string> suites;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON experiment config (defaults apply when omitted)");
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker threads (default: BSDEBM_WORKERS or hardware)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--backend", backend, "pde or lsmc, overrides the config")
            ->check(CLI::IsMember({"pde", "lsmc"}));
    };
    common(app.add_subcommand("simulate", "write a joint path batch to paths.bin"));
    common(app.add_subcommand("solve", "solve one BSDE, optionally by Picard iteration"));
    common(app.add_subcommand("price", "bid/ask quotes under a sublinear driver"));
    common(app.add_subcommand("compare", "check that two problems are ordered on the grid"));
    auto* verify = app.add_subcommand("verify", "run oracle and property suites");
    common(verify);
    verify->add_option("suites", suites, "all, chain, drivers, linear, solvers, picard, pricing, axioms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : bsdebm::kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        bsdebm::ExperimentConfig cfg =
            config_file.empty() ? bsdebm::parse_config(bsdebm::json::object()) : bsdebm::load_config(config_file);
        bsdebm::apply_overrides(cfg, seed, backend);
        return bsdebm::run_command(command, cfg, out_dir, workers, suites, std::cout);
    } catch (const bsdebm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return bsdebm::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bsdebm::kExitFailure;
    }
}
