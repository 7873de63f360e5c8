#include "nigam/nigam.h"

#include "nigam/config.hpp"
#include "nigam/error.hpp"
#include "nigam/pipeline.hpp"
#include "nigam/synth.hpp"

#include <fstream>
#include <new>
#include <string>
#include <vector>

struct nigam_config {
    nigam::Config config;
};

struct nigam_fit {
    nigam::pipeline::LoadedFit fit;
    std::vector<std::string> warnings;
    std::vector<std::string> rhat_exceeded;
};

struct nigam_cv {
    nigam::validate::CVReport report;
};

namespace {

thread_local std::string last_error;

nigam_status fail(nigam_status status, const std::string& message) {
    last_error = message;
    return status;
}

template <class F>
nigam_status guarded(F&& body) {
    try {
        last_error.clear();
        body();
        return NIGAM_OK;
    } catch (const nigam::InputError& e) {
        return fail(NIGAM_ERR_INPUT, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(NIGAM_ERR_INPUT, std::string("config: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(NIGAM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(NIGAM_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(NIGAM_ERR_INTERNAL, "unknown error");
    }
}

std::string str(const char* s) { return s ? std::string(s) : std::string(); }

} // namespace

extern "C" {

const char* nigam_version(void) { return nigam::pipeline::kVersion; }

const char* nigam_last_error(void) { return last_error.c_str(); }

nigam_status nigam_config_load(const char* path, nigam_config** out) {
    if (!out) return fail(NIGAM_ERR_ARGUMENT, "null output handle");
    *out = nullptr;
    return guarded([&] { *out = new nigam_config{nigam::load_config(str(path))}; });
}

void nigam_config_free(nigam_config* config) { delete config; }

nigam_status nigam_config_set_seed(nigam_config* config, uint64_t seed) {
    if (!config) return fail(NIGAM_ERR_ARGUMENT, "null config handle");
    config->config.mcmc.seed = seed;
    return NIGAM_OK;
}

nigam_status nigam_config_set_chains(nigam_config* config, int chains) {
    if (!config) return fail(NIGAM_ERR_ARGUMENT, "null config handle");
    if (chains < 1) return fail(NIGAM_ERR_ARGUMENT, "chains must be >= 1");
    config->config.mcmc.chains = chains;
    return NIGAM_OK;
}

nigam_status nigam_config_set_threads(nigam_config* config, unsigned threads) {
    if (!config) return fail(NIGAM_ERR_ARGUMENT, "null config handle");
    config->config.mcmc.threads = threads;
    return NIGAM_OK;
}

nigam_status nigam_config_set_grid_step(nigam_config* config, double step_yr) {
    if (!config) return fail(NIGAM_ERR_ARGUMENT, "null config handle");
    if (!(step_yr > 0.0)) return fail(NIGAM_ERR_ARGUMENT, "grid step must be positive");
    config->config.grid_step_yr = step_yr;
    return NIGAM_OK;
}

nigam_status nigam_config_set_iterations(nigam_config* config, int iterations, int burn_in, int thin) {
    if (!config) return fail(NIGAM_ERR_ARGUMENT, "null config handle");
    nigam::model::McmcConfig m = config->config.mcmc;
    m.iterations = iterations;
    m.burn_in = burn_in;
    m.thin = thin;
    const nigam_status st = guarded([&] { m.validate(); });
    if (st != NIGAM_OK) return fail(NIGAM_ERR_ARGUMENT, last_error);
    config->config.mcmc = m;
    return NIGAM_OK;
}

nigam_status nigam_config_write(const nigam_config* config, const char* path) {
    if (!config || !path) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw nigam::InputError(std::string(path) + ": cannot open for writing");
        out << nigam::config_to_json(config->config).dump(2) << '\n';
    });
}

nigam_status nigam_fit_run(const nigam_config* config, const char* proxy_csv, const char* gauge_csv,
                           const char* out_dir, nigam_fit** out) {
    if (!config || !proxy_csv || !out_dir || !out) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto run = nigam::pipeline::run_fit(config->config, proxy_csv, str(gauge_csv), out_dir);
        auto* fit = new nigam_fit;
        fit->fit.config = std::move(run.config);
        fit->fit.data = std::move(run.data);
        fit->fit.spec = std::move(run.spec);
        fit->fit.samples = std::move(run.fit.stage2.samples);
        fit->warnings = fit->fit.data.warnings;
        fit->rhat_exceeded = std::move(run.rhat_exceeded);
        *out = fit;
    });
}

nigam_status nigam_fit_load(const char* fit_dir, nigam_fit** out) {
    if (!fit_dir || !out) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] { *out = new nigam_fit{nigam::pipeline::load_fit(fit_dir), {}, {}}; });
}

void nigam_fit_free(nigam_fit* fit) { delete fit; }

size_t nigam_fit_site_count(const nigam_fit* fit) { return fit ? fit->fit.data.sites.size() : 0; }

size_t nigam_fit_observation_count(const nigam_fit* fit) { return fit ? fit->fit.data.observations.size() : 0; }

size_t nigam_fit_draw_count(const nigam_fit* fit) {
    return fit ? static_cast<size_t>(fit->fit.samples.total_draws()) : 0;
}

size_t nigam_fit_warning_count(const nigam_fit* fit) { return fit ? fit->warnings.size() : 0; }

const char* nigam_fit_warning(const nigam_fit* fit, size_t i) {
    return fit && i < fit->warnings.size() ? fit->warnings[i].c_str() : nullptr;
}

size_t nigam_fit_rhat_exceeded_count(const nigam_fit* fit) { return fit ? fit->rhat_exceeded.size() : 0; }

const char* nigam_fit_rhat_exceeded(const nigam_fit* fit, size_t i) {
    return fit && i < fit->rhat_exceeded.size() ? fit->rhat_exceeded[i].c_str() : nullptr;
}

nigam_status nigam_fit_posterior_mean(const nigam_fit* fit, const char* parameter, double* out) {
    if (!fit || !parameter || !out) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    const auto& samples = fit->fit.samples;
    const std::string name(parameter);
    if (samples.scale_index(name) >= 0) {
        *out = samples.pooled_scale(name).mean();
        return NIGAM_OK;
    }
    const auto names = samples.coef_names();
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) {
            *out = samples.pooled_coef().col(static_cast<Eigen::Index>(k)).mean();
            return NIGAM_OK;
        }
    return fail(NIGAM_ERR_ARGUMENT, "unknown parameter '" + name + "'");
}

nigam_status nigam_decompose(const nigam_fit* fit, double step_yr, const char* out_csv) {
    if (!fit || !out_csv) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    return guarded([&] { nigam::pipeline::write_decomposition(fit->fit, step_yr, out_csv); });
}

nigam_status nigam_rates(const nigam_fit* fit, double step_yr, const char* out_csv) {
    if (!fit || !out_csv) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    return guarded([&] { nigam::pipeline::write_rates(fit->fit, step_yr, out_csv); });
}

nigam_status nigam_cv_run(const nigam_config* config, const char* proxy_csv, const char* gauge_csv, int folds,
                          const char* out_dir, nigam_cv** out) {
    if (!config || !proxy_csv || !out_dir || !out) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        *out = new nigam_cv{nigam::pipeline::run_cv(config->config, proxy_csv, str(gauge_csv), folds, out_dir)};
    });
}

void nigam_cv_free(nigam_cv* cv) { delete cv; }

size_t nigam_cv_heldout_count(const nigam_cv* cv) { return cv ? cv->report.overall.n : 0; }
double nigam_cv_coverage95(const nigam_cv* cv) { return cv ? cv->report.overall.coverage95 : 0.0; }
double nigam_cv_coverage50(const nigam_cv* cv) { return cv ? cv->report.overall.coverage50 : 0.0; }
double nigam_cv_rmse(const nigam_cv* cv) { return cv ? cv->report.overall.rmse : 0.0; }

nigam_status nigam_simulate(uint64_t seed, int n_sites, int n_per_site, const char* out_dir) {
    if (!out_dir) return fail(NIGAM_ERR_ARGUMENT, "null argument");
    if (n_sites < 1 || n_per_site < 1) return fail(NIGAM_ERR_ARGUMENT, "site and observation counts must be >= 1");
    return guarded([&] { nigam::pipeline::simulate(nigam::synth::default_truth(n_sites, seed), n_per_site, out_dir); });
}

} // extern "C"
