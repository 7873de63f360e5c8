#include "nigam/config.hpp"

#include "nigam/error.hpp"

#include <fstream>
#include <set>

namespace nigam {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InputError("config: '" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items())
        if (!ok.count(key)) throw InputError("config: unknown key '" + where + "." + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& target, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError("config: '" + where + "." + key + "' has the wrong type");
    }
}

void read_scale(const json& j, const char* key, model::ScalePrior& prior, double& initial) {
    if (!j.contains(key)) return;
    const json& s = j.at(key);
    const std::string where = std::string("priors.") + key;
    reject_unknown(s, where, {"location", "scale", "initial"});
    read(s, "location", prior.location, where);
    read(s, "scale", prior.scale, where);
    read(s, "initial", initial, where);
}

json scale_json(const model::ScalePrior& p, double initial) {
    return json{{"location", p.location}, {"scale", p.scale}, {"initial", initial}};
}

} // namespace

void Config::validate() const {
    mcmc.validate();
    if (knots.regional_basis < knots.regional_degree + 2)
        throw InputError("config: knots.regional_basis must be at least regional_degree + 2");
    if (knots.local_space_basis < knots.local_degree + 2 || knots.local_time_basis < knots.local_degree + 2)
        throw InputError("config: local basis counts must be at least local_degree + 2");
    if (knots.time_padding_yr < 0.0 || !(knots.space_padding_deg > 0.0))
        throw InputError("config: paddings must be nonnegative (space padding positive)");
    if (knots.time_span && !(knots.time_span->first < knots.time_span->second))
        throw InputError("config: knots.time_span_ce must be increasing");
    for (const auto* p : {&priors.sigma_r, &priors.sigma_l, &priors.sigma_h, &priors.sigma})
        if (!(p->scale > 0.0)) throw InputError("config: prior scales must be positive");
    if (validation.folds < 2) throw InputError("config: validation.folds must be >= 2");
    if (validation.replicates_per_draw < 1) throw InputError("config: validation.replicates_per_draw must be >= 1");
    if (!(grid_step_yr > 0.0)) throw InputError("config: output.grid_step_yr must be positive");
    if (!(ingest.rsl_sd_floor > 0.0)) throw InputError("config: ingest.rsl_sd_floor_m must be positive");
}

Config config_from_json(const json& j) {
    Config c;
    reject_unknown(j, "", {"knots", "priors", "mcmc", "seed", "ingest", "validation", "output"});
    if (j.contains("knots")) {
        const json& k = j.at("knots");
        reject_unknown(k, "knots", {"regional_basis", "regional_degree", "local_space_basis", "local_time_basis",
                                    "local_degree", "time_padding_yr", "space_padding_deg", "time_span_ce"});
        read(k, "regional_basis", c.knots.regional_basis, "knots");
        read(k, "regional_degree", c.knots.regional_degree, "knots");
        read(k, "local_space_basis", c.knots.local_space_basis, "knots");
        read(k, "local_time_basis", c.knots.local_time_basis, "knots");
        read(k, "local_degree", c.knots.local_degree, "knots");
        read(k, "time_padding_yr", c.knots.time_padding_yr, "knots");
        read(k, "space_padding_deg", c.knots.space_padding_deg, "knots");
        if (k.contains("time_span_ce") && !k.at("time_span_ce").is_null()) {
            const json& span = k.at("time_span_ce");
            if (!span.is_array() || span.size() != 2 || !span[0].is_number() || !span[1].is_number())
                throw InputError("config: knots.time_span_ce must be [first_ce, last_ce] or null");
            c.knots.time_span = std::make_pair(span[0].get<double>(), span[1].get<double>());
        }
    }
    if (j.contains("priors")) {
        const json& p = j.at("priors");
        reject_unknown(p, "priors", {"sigma_r", "sigma_l", "sigma_h", "sigma"});
        read_scale(p, "sigma_r", c.priors.sigma_r, c.priors.sigma_r_initial);
        read_scale(p, "sigma_l", c.priors.sigma_l, c.priors.sigma_l_initial);
        read_scale(p, "sigma_h", c.priors.sigma_h, c.priors.sigma_h_initial);
        read_scale(p, "sigma", c.priors.sigma, c.priors.sigma_initial);
    }
    if (j.contains("mcmc")) {
        const json& m = j.at("mcmc");
        reject_unknown(m, "mcmc", {"iterations", "burn_in", "thin", "chains", "blocking", "threads"});
        read(m, "iterations", c.mcmc.iterations, "mcmc");
        read(m, "burn_in", c.mcmc.burn_in, "mcmc");
        read(m, "thin", c.mcmc.thin, "mcmc");
        read(m, "chains", c.mcmc.chains, "mcmc");
        read(m, "threads", c.mcmc.threads, "mcmc");
        std::string blocking = c.mcmc.blocking == model::Blocking::Joint ? "joint" : "component";
        read(m, "blocking", blocking, "mcmc");
        if (blocking == "joint") c.mcmc.blocking = model::Blocking::Joint;
        else if (blocking == "component") c.mcmc.blocking = model::Blocking::Component;
        else throw InputError("config: mcmc.blocking must be 'joint' or 'component'");
    }
    read(j, "seed", c.mcmc.seed, "");
    if (j.contains("ingest")) {
        const json& g = j.at("ingest");
        reject_unknown(g, "ingest", {"rsl_sd_floor_m", "gauge_slope_prior_sd_mm_yr", "datum_first_year",
                                     "datum_last_year", "long_record_years", "near_record_years",
                                     "near_distance_deg", "pre_industrial_cutoff_ce"});
        read(g, "rsl_sd_floor_m", c.ingest.rsl_sd_floor, "ingest");
        double sd_mm = c.ingest.gauge_slope_prior_sd * 1000.0;
        read(g, "gauge_slope_prior_sd_mm_yr", sd_mm, "ingest");
        c.ingest.gauge_slope_prior_sd = sd_mm / 1000.0;
        read(g, "datum_first_year", c.ingest.datum_first_year, "ingest");
        read(g, "datum_last_year", c.ingest.datum_last_year, "ingest");
        read(g, "long_record_years", c.ingest.long_record_years, "ingest");
        read(g, "near_record_years", c.ingest.near_record_years, "ingest");
        read(g, "near_distance_deg", c.ingest.near_distance_deg, "ingest");
        read(g, "pre_industrial_cutoff_ce", c.ingest.pre_industrial_cutoff, "ingest");
    }
    if (j.contains("validation")) {
        const json& v = j.at("validation");
        reject_unknown(v, "validation", {"folds", "replicates_per_draw"});
        read(v, "folds", c.validation.folds, "validation");
        read(v, "replicates_per_draw", c.validation.replicates_per_draw, "validation");
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        reject_unknown(o, "output", {"grid_step_yr", "rhat_threshold"});
        read(o, "grid_step_yr", c.grid_step_yr, "output");
        read(o, "rhat_threshold", c.rhat_threshold, "output");
    }
    c.validate();
    return c;
}

json config_to_json(const Config& c) {
    json j;
    j["knots"] = {{"regional_basis", c.knots.regional_basis},
                  {"regional_degree", c.knots.regional_degree},
                  {"local_space_basis", c.knots.local_space_basis},
                  {"local_time_basis", c.knots.local_time_basis},
                  {"local_degree", c.knots.local_degree},
                  {"time_padding_yr", c.knots.time_padding_yr},
                  {"space_padding_deg", c.knots.space_padding_deg},
                  {"time_span_ce", c.knots.time_span ? json::array({c.knots.time_span->first, c.knots.time_span->second})
                                                     : json(nullptr)}};
    j["priors"] = {{"sigma_r", scale_json(c.priors.sigma_r, c.priors.sigma_r_initial)},
                   {"sigma_l", scale_json(c.priors.sigma_l, c.priors.sigma_l_initial)},
                   {"sigma_h", scale_json(c.priors.sigma_h, c.priors.sigma_h_initial)},
                   {"sigma", scale_json(c.priors.sigma, c.priors.sigma_initial)}};
    j["mcmc"] = {{"iterations", c.mcmc.iterations},
                 {"burn_in", c.mcmc.burn_in},
                 {"thin", c.mcmc.thin},
                 {"chains", c.mcmc.chains},
                 {"blocking", c.mcmc.blocking == model::Blocking::Joint ? "joint" : "component"},
                 {"threads", c.mcmc.threads}};
    j["seed"] = c.mcmc.seed;
    j["ingest"] = {{"rsl_sd_floor_m", c.ingest.rsl_sd_floor},
                   {"gauge_slope_prior_sd_mm_yr", c.ingest.gauge_slope_prior_sd * 1000.0},
                   {"datum_first_year", c.ingest.datum_first_year},
                   {"datum_last_year", c.ingest.datum_last_year},
                   {"long_record_years", c.ingest.long_record_years},
                   {"near_record_years", c.ingest.near_record_years},
                   {"near_distance_deg", c.ingest.near_distance_deg},
                   {"pre_industrial_cutoff_ce", c.ingest.pre_industrial_cutoff}};
    j["validation"] = {{"folds", c.validation.folds}, {"replicates_per_draw", c.validation.replicates_per_draw}};
    j["output"] = {{"grid_step_yr", c.grid_step_yr}, {"rhat_threshold", c.rhat_threshold}};
    return j;
}

Config load_config(const std::string& path) {
    if (path.empty()) return Config{};
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open config file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": invalid JSON: " + e.what());
    }
    return config_from_json(j);
}

} // namespace nigam
