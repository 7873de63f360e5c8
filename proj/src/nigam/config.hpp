#pragma once

#include "nigam/ingest.hpp"
#include "nigam/model.hpp"

#include <json.hpp>

#include <string>

namespace nigam {

struct ValidationSettings {
    int folds = 10;
    int replicates_per_draw = 10; // posterior predictive simulations per retained draw
};

// Everything a run is configured with. Serialised as JSON with the keys
// knots, priors, mcmc, seed, ingest, validation, output; every key is
// optional and missing ones take the defaults below.
struct Config {
    model::KnotSettings knots;
    model::PriorSettings priors;
    model::McmcConfig mcmc;
    ingest::IngestOptions ingest;
    ValidationSettings validation;
    double grid_step_yr = 10.0;
    double rhat_threshold = 1.1;

    void validate() const;
};

Config config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const Config& config);
// Empty path gives the defaults.
Config load_config(const std::string& path);

} // namespace nigam
