// nigam-cli: fit | decompose | rates | cv | simulate
#include <nigam/nigam.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace {

// One line on stderr: "ERROR <input|internal> <message>"; exit 2 or 1.
int report(nigam_status status) {
    std::string msg = nigam_last_error();
    for (char& c : msg)
        if (c == '\n' || c == '\r') c = ' ';
    const bool input = status == NIGAM_ERR_INPUT || status == NIGAM_ERR_ARGUMENT;
    std::fprintf(stderr, "ERROR %s %s\n", input ? "input" : "internal", msg.c_str());
    return input ? 2 : 1;
}

struct RunOptions {
    std::string config;
    std::string proxy;
    std::string gauges;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> chains;
    std::optional<unsigned> threads;
    std::optional<double> grid_step;
};

nigam_status make_config(const RunOptions& o, nigam_config** cfg) {
    nigam_status st = nigam_config_load(o.config.c_str(), cfg);
    if (st != NIGAM_OK) return st;
    if (o.seed) st = nigam_config_set_seed(*cfg, *o.seed);
    if (st == NIGAM_OK && o.chains) st = nigam_config_set_chains(*cfg, *o.chains);
    if (st == NIGAM_OK && o.threads) st = nigam_config_set_threads(*cfg, *o.threads);
    if (st == NIGAM_OK && o.grid_step) st = nigam_config_set_grid_step(*cfg, *o.grid_step);
    return st;
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "JSON configuration (defaults when omitted)");
    cmd->add_option("--proxy", o.proxy, "Proxy observations CSV")->required();
    cmd->add_option("--gauges", o.gauges, "Annual tide-gauge CSV");
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--chains", o.chains, "Number of chains")->check(CLI::PositiveNumber);
    cmd->add_option("--threads", o.threads, "Worker thread cap (0: hardware)");
    cmd->add_option("--grid-step", o.grid_step, "Prediction grid step in years")->check(CLI::PositiveNumber);
}

int cmd_fit(const RunOptions& o) {
    nigam_config* cfg = nullptr;
    nigam_fit* fit = nullptr;
    nigam_status st = make_config(o, &cfg);
    if (st == NIGAM_OK) st = nigam_fit_run(cfg, o.proxy.c_str(), o.gauges.c_str(), o.out.c_str(), &fit);
    nigam_config_free(cfg);
    if (st != NIGAM_OK) return report(st);
    for (size_t i = 0; i < nigam_fit_warning_count(fit); ++i) std::fprintf(stderr, "WARNING %s\n", nigam_fit_warning(fit, i));
    for (size_t i = 0; i < nigam_fit_rhat_exceeded_count(fit); ++i)
        std::fprintf(stderr, "RHAT_EXCEEDED %s\n", nigam_fit_rhat_exceeded(fit, i));
    nigam_fit_free(fit);
    return 0;
}

int cmd_summary(const std::string& fit_dir, const std::string& out, double step, bool rates) {
    nigam_fit* fit = nullptr;
    nigam_status st = nigam_fit_load(fit_dir.c_str(), &fit);
    if (st == NIGAM_OK)
        st = rates ? nigam_rates(fit, step, out.c_str()) : nigam_decompose(fit, step, out.c_str());
    nigam_fit_free(fit);
    return st == NIGAM_OK ? 0 : report(st);
}

int cmd_cv(const RunOptions& o, int folds) {
    nigam_config* cfg = nullptr;
    nigam_cv* cv = nullptr;
    nigam_status st = make_config(o, &cfg);
    if (st == NIGAM_OK) st = nigam_cv_run(cfg, o.proxy.c_str(), o.gauges.c_str(), folds, o.out.c_str(), &cv);
    nigam_config_free(cfg);
    if (st != NIGAM_OK) return report(st);
    std::printf("heldout=%zu coverage95=%.4f coverage50=%.4f rmse_m=%.4f\n", nigam_cv_heldout_count(cv),
                nigam_cv_coverage95(cv), nigam_cv_coverage50(cv), nigam_cv_rmse(cv));
    nigam_cv_free(cv);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy-input GAM sea-level decomposition"};
    app.set_version_flag("--version", std::string(nigam_version()));
    app.require_subcommand(1);

    RunOptions fit_opts;
    auto* fit = app.add_subcommand("fit", "Two-stage fit; writes a fit directory");
    add_run_options(fit, fit_opts);

    std::string fit_dir, out_csv;
    double step = 0.0;
    auto* decompose = app.add_subcommand("decompose", "Component bands on a time grid per site");
    auto* rates = app.add_subcommand("rates", "Total and regional rates of change per site");
    for (auto* cmd : {decompose, rates}) {
        cmd->add_option("--fit", fit_dir, "Fit directory")->required();
        cmd->add_option("--out", out_csv, "Output CSV")->required();
        cmd->add_option("--grid-step", step, "Grid step in years (default from the fit config)")
            ->check(CLI::PositiveNumber);
    }

    RunOptions cv_opts;
    int folds = 0;
    auto* cv = app.add_subcommand("cv", "k-fold cross-validation of held-out proxy rows");
    add_run_options(cv, cv_opts);
    cv->add_option("--folds", folds, "Number of folds (default from config)")->check(CLI::Range(2, 1000));

    std::uint64_t sim_seed = 1;
    int sim_sites = 8, sim_per_site = 80;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Synthetic dataset with known truth");
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_option("--seed", sim_seed, "Random seed");
    simulate->add_option("--sites", sim_sites, "Number of sites")->check(CLI::PositiveNumber);
    simulate->add_option("--per-site", sim_per_site, "Observations per site")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (char& c : msg)
            if (c == '\n') c = ' ';
        std::fprintf(stderr, "ERROR input %s\n", msg.c_str());
        return 2;
    }

    if (*fit) return cmd_fit(fit_opts);
    if (*decompose) return cmd_summary(fit_dir, out_csv, step, false);
    if (*rates) return cmd_summary(fit_dir, out_csv, step, true);
    if (*cv) return cmd_cv(cv_opts, folds);
    if (*simulate) {
        const nigam_status st = nigam_simulate(sim_seed, sim_sites, sim_per_site, sim_out.c_str());
        return st == NIGAM_OK ? 0 : report(st);
    }
    return 2;
}
