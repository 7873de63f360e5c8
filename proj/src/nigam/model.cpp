#include "nigam/model.hpp"

#include "nigam/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace nigam::model {

double ScalePrior::log_density(double x) const {
    if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
    const double z = (x - location) / scale;
    // mass of the untruncated Cauchy on (0, inf)
    const double mass = 0.5 + std::atan(location / scale) / std::numbers::pi;
    return -std::log(std::numbers::pi * scale * (1.0 + z * z)) - std::log(mass);
}

void McmcConfig::validate() const {
    if (iterations < 1) throw InputError("mcmc.iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations) throw InputError("mcmc.burn_in must lie in [0, iterations)");
    if (thin < 1) throw InputError("mcmc.thin must be >= 1");
    if (chains < 1) throw InputError("mcmc.chains must be >= 1");
    if (retained_per_chain() < 1) throw InputError("mcmc settings retain no draws");
}

void ModelSpec::validate(std::size_t n_sites) const {
    regional.validate();
    local.lon.validate();
    local.lat.validate();
    local.time.validate();
    mcmc.validate();
    for (const ScalePrior* p : {&priors.sigma_r, &priors.sigma_l, &priors.sigma_h, &priors.sigma})
        if (!(p->scale > 0.0)) throw InputError("prior scales must be positive");
    for (double v : {priors.sigma_r_initial, priors.sigma_l_initial, priors.sigma_h_initial, priors.sigma_initial})
        if (!(v > 0.0)) throw InputError("initial scale values must be positive");
    if (slope_priors.size() != n_sites) throw InputError("slope priors do not match the site registry");
    for (const auto& p : slope_priors)
        if (!(p.sd > 0.0)) throw InputError("slope prior sds must be positive");
}

ModelSpec resolve_spec(const KnotSettings& knots, const PriorSettings& priors, const McmcConfig& mcmc,
                       const ingest::Dataset& data) {
    if (data.observations.empty()) throw InputError("no observations to model");
    double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
    for (const auto& o : data.observations) {
        t_lo = std::min(t_lo, o.age);
        t_hi = std::max(t_hi, o.age);
    }
    double lon_lo = std::numeric_limits<double>::infinity(), lon_hi = -lon_lo;
    double lat_lo = lon_lo, lat_hi = -lon_lo;
    for (const auto& s : data.sites.sites()) {
        lon_lo = std::min(lon_lo, s.lon);
        lon_hi = std::max(lon_hi, s.lon);
        lat_lo = std::min(lat_lo, s.lat);
        lat_hi = std::max(lat_hi, s.lat);
    }

    ModelSpec spec;
    if (knots.time_span) {
        t_lo = knots.time_span->first;
        t_hi = knots.time_span->second;
    } else {
        t_lo -= knots.time_padding_yr;
        t_hi += knots.time_padding_yr;
    }
    spec.regional = basis::KnotGrid::with_basis_count(t_lo, t_hi, knots.regional_basis, knots.regional_degree);
    spec.local.lon = basis::KnotGrid::with_basis_count(lon_lo - knots.space_padding_deg,
                                                       lon_hi + knots.space_padding_deg, knots.local_space_basis,
                                                       knots.local_degree);
    spec.local.lat = basis::KnotGrid::with_basis_count(lat_lo - knots.space_padding_deg,
                                                       lat_hi + knots.space_padding_deg, knots.local_space_basis,
                                                       knots.local_degree);
    spec.local.time = basis::KnotGrid::with_basis_count(spec.regional.lo, spec.regional.hi, knots.local_time_basis,
                                                        knots.local_degree);
    spec.priors = priors;
    spec.mcmc = mcmc;
    for (const auto& s : data.sites.sites()) spec.slope_priors.push_back({s.slope_prior_mean, s.slope_prior_sd});
    spec.validate(data.sites.size());
    return spec;
}

DesignSet build_designs(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                        const ModelSpec& spec, Stage stage, std::span<const double> corrective_var) {
    const auto n = static_cast<Eigen::Index>(obs.size());
    const auto m = static_cast<Eigen::Index>(sites.size());
    if (!corrective_var.empty() && corrective_var.size() != obs.size())
        throw InputError("corrective variance length does not match the observations");

    std::vector<std::string> offending;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& o = obs[i];
        std::ostringstream why;
        why.precision(10);
        if (o.site_id < 0 || o.site_id >= m) {
            why << "row " << i << " (unknown site " << o.site_id << ")";
        } else if (!spec.regional.contains(o.age)) {
            why << "row " << i << " (age " << o.age << " outside [" << spec.regional.lo << ", " << spec.regional.hi
                << "])";
        } else if (stage == Stage::Two) {
            const auto& s = sites[o.site_id];
            if (!spec.local.lon.contains(s.lon) || !spec.local.lat.contains(s.lat) || !spec.local.time.contains(o.age))
                why << "row " << i << " (outside the local tensor grid)";
        }
        if (!why.str().empty()) offending.push_back(why.str());
    }
    if (!offending.empty()) {
        std::ostringstream msg;
        msg << offending.size() << " observation(s) outside the model span: ";
        for (std::size_t k = 0; k < offending.size() && k < 10; ++k) msg << (k ? ", " : "") << offending[k];
        if (offending.size() > 10) msg << ", ...";
        throw InputError(msg.str());
    }

    DesignSet d;
    d.stage = stage;
    std::vector<double> ages(obs.size()), lons(obs.size()), lats(obs.size());
    d.age.resize(n);
    d.response.resize(n);
    d.obs_var_known.resize(n);
    d.site_of.resize(obs.size());
    std::vector<Eigen::Triplet<double>> z;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& o = obs[i];
        ages[i] = o.age;
        lons[i] = sites[o.site_id].lon;
        lats[i] = sites[o.site_id].lat;
        const auto ii = static_cast<Eigen::Index>(i);
        d.age(ii) = o.age;
        d.response(ii) = o.rsl;
        d.obs_var_known(ii) = o.rsl_sd * o.rsl_sd;
        if (stage == Stage::Two && !corrective_var.empty()) d.obs_var_known(ii) += corrective_var[i];
        d.site_of[i] = o.site_id;
        z.emplace_back(ii, o.site_id, 1.0);
    }
    d.site_incidence.resize(n, m);
    d.site_incidence.setFromTriplets(z.begin(), z.end());
    d.regional = basis::bspline_basis(ages, spec.regional);
    if (stage == Stage::Two) d.local = basis::tensor_basis(lons, lats, ages, spec.local);
    return d;
}

int LinearGaussianModel::block_index(const std::string& name) const {
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (blocks[b].name == name) return static_cast<int>(b);
    return -1;
}

int LinearGaussianModel::scale_index(const std::string& name) const {
    for (std::size_t k = 0; k < scales.size(); ++k)
        if (scales[k].name == name) return static_cast<int>(k);
    return -1;
}

void LinearGaussianModel::validate() const {
    if (response.size() != design.rows() || known_var.size() != design.rows())
        throw InputError("model response and variance lengths must match the design rows");
    Eigen::Index next = 0;
    for (const auto& b : blocks) {
        if (b.offset != next) throw InputError("coefficient blocks must tile the design columns in order");
        if (b.prior_mean.size() != b.size) throw InputError("block '" + b.name + "' prior mean has the wrong length");
        if (b.scale < 0) {
            if (b.prior_sd.size() != b.size || !(b.prior_sd.array() > 0.0).all())
                throw InputError("block '" + b.name + "' needs positive fixed prior sds");
        } else if (b.scale >= static_cast<int>(scales.size())) {
            throw InputError("block '" + b.name + "' references a missing scale");
        }
        next += b.size;
    }
    if (next != design.cols()) throw InputError("coefficient blocks do not cover the design");
    if (noise_scale >= static_cast<int>(scales.size())) throw InputError("noise scale index out of range");
    if ((known_var.array() < 0.0).any()) throw InputError("known observation variances must be nonnegative");
    std::vector<int> seen(blocks.size(), 0);
    for (const auto& g : update_groups)
        for (int b : g) {
            if (b < 0 || b >= static_cast<int>(blocks.size())) throw InputError("update group references no block");
            ++seen[b];
        }
    for (std::size_t b = 0; b < blocks.size(); ++b)
        if (seen[b] != 1) throw InputError("every block must belong to exactly one update group");
}

State initial_state(const LinearGaussianModel& model) {
    State s;
    s.coef.resize(model.n_coef());
    for (const auto& b : model.blocks) s.coef.segment(b.offset, b.size) = b.prior_mean;
    s.scales.resize(static_cast<Eigen::Index>(model.scales.size()));
    for (std::size_t k = 0; k < model.scales.size(); ++k) s.scales(static_cast<Eigen::Index>(k)) = model.scales[k].initial;
    return s;
}

Eigen::VectorXd observation_variance(const LinearGaussianModel& model, const State& state) {
    Eigen::VectorXd v = model.known_var;
    if (model.noise_scale >= 0) {
        const double s = state.scales(model.noise_scale);
        v.array() += s * s;
    }
    return v;
}

double log_posterior(const LinearGaussianModel& model, const State& state) {
    constexpr double log_2pi = 1.8378770664093454836;
    for (Eigen::Index k = 0; k < state.scales.size(); ++k)
        if (!(state.scales(k) > 0.0)) return -std::numeric_limits<double>::infinity();

    const Eigen::VectorXd v = observation_variance(model, state);
    const Eigen::VectorXd resid = model.response - model.design * state.coef;
    double lp = -0.5 * (v.size() * log_2pi + v.array().log().sum() + (resid.array().square() / v.array()).sum());

    for (const auto& b : model.blocks) {
        const Eigen::VectorXd dev = state.coef.segment(b.offset, b.size) - b.prior_mean;
        if (b.scale >= 0) {
            const double s = state.scales(b.scale);
            lp -= 0.5 * (b.size * (log_2pi + 2.0 * std::log(s)) + dev.squaredNorm() / (s * s));
        } else {
            lp -= 0.5 * (b.size * log_2pi + 2.0 * b.prior_sd.array().log().sum() +
                         (dev.array() / b.prior_sd.array()).square().sum());
        }
    }
    for (std::size_t k = 0; k < model.scales.size(); ++k)
        lp += model.scales[k].prior.log_density(state.scales(static_cast<Eigen::Index>(k)));
    return lp;
}

LinearGaussianModel assemble_model(const DesignSet& d, const ModelSpec& spec, const InformedPriors* informed) {
    const Eigen::Index n = d.rows();
    const Eigen::Index kr = d.regional.cols();
    const Eigen::Index m = d.site_incidence.cols();
    const bool stage_two = d.stage == Stage::Two;
    const Eigen::Index kl = stage_two ? d.local->cols() : 0;
    if (static_cast<Eigen::Index>(spec.slope_priors.size()) != m)
        throw InputError("slope priors do not match the number of sites");
    if (stage_two && !informed) throw InputError("stage two needs stage-one informed priors");

    LinearGaussianModel model;
    model.response = d.response;
    model.known_var = d.obs_var_known;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 40);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < kr; ++c)
            if (d.regional.values(i, c) != 0.0) trip.emplace_back(i, c, d.regional.values(i, c));
        const int j = d.site_of[static_cast<std::size_t>(i)];
        trip.emplace_back(i, kr + j, d.age(i));
        trip.emplace_back(i, kr + m + j, 1.0);
        if (stage_two)
            for (Eigen::Index c = 0; c < kl; ++c)
                if (d.local->values(i, c) != 0.0) trip.emplace_back(i, kr + 2 * m + c, d.local->values(i, c));
    }
    model.design.resize(n, kr + 2 * m + kl);
    model.design.setFromTriplets(trip.begin(), trip.end());
    model.design.makeCompressed();

    const auto& pr = spec.priors;
    if (!stage_two) {
        model.scales.push_back({"sigma_r", pr.sigma_r, pr.sigma_r_initial, false});
        model.scales.push_back({"sigma_h", pr.sigma_h, pr.sigma_h_initial, false});
    } else {
        model.scales.push_back({"sigma_l", pr.sigma_l, pr.sigma_l_initial, false});
    }
    model.scales.push_back({"sigma", pr.sigma, pr.sigma_initial, false});
    model.noise_scale = static_cast<int>(model.scales.size()) - 1;

    CoefBlock regional{"beta_r", 0, kr, Eigen::VectorXd::Zero(kr), {}, -1};
    CoefBlock slope{"beta_g", kr, m, Eigen::VectorXd(m), Eigen::VectorXd(m), -1};
    CoefBlock offset{"beta_h", kr + m, m, Eigen::VectorXd::Zero(m), {}, -1};
    for (Eigen::Index j = 0; j < m; ++j) {
        slope.prior_mean(j) = spec.slope_priors[static_cast<std::size_t>(j)].mean;
        slope.prior_sd(j) = spec.slope_priors[static_cast<std::size_t>(j)].sd;
    }
    if (!stage_two) {
        regional.scale = model.scale_index("sigma_r");
        offset.scale = model.scale_index("sigma_h");
    } else {
        if (informed->regional_mean.size() != kr || informed->regional_sd.size() != kr ||
            informed->offset_mean.size() != m || informed->offset_sd.size() != m)
            throw InputError("informed priors do not match the model dimensions");
        regional.prior_mean = informed->regional_mean;
        regional.prior_sd = informed->regional_sd;
        offset.prior_mean = informed->offset_mean;
        offset.prior_sd = informed->offset_sd;
    }
    model.blocks = {regional, slope, offset};
    if (stage_two)
        model.blocks.push_back({"beta_l", kr + 2 * m, kl, Eigen::VectorXd::Zero(kl), {}, model.scale_index("sigma_l")});

    if (spec.mcmc.blocking == Blocking::Joint) {
        std::vector<int> all(model.blocks.size());
        for (std::size_t b = 0; b < all.size(); ++b) all[b] = static_cast<int>(b);
        model.update_groups = {all};
    } else {
        model.update_groups = {{0}, {1, 2}};
        if (stage_two) model.update_groups.push_back({3});
    }
    model.validate();
    return model;
}

} // namespace nigam::model
