#pragma once

#include "nigam/ingest.hpp"
#include "nigam/model.hpp"
#include "nigam/sampler.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace nigam::posterior {

// Posterior mean with the equal-tailed 50% and 95% intervals.
struct Band {
    double mean = 0.0;
    double p2_5 = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
    double p97_5 = 0.0;

    double width95() const { return p97_5 - p2_5; }
    double width50() const { return p75 - p25; }
};

// Linear-interpolation quantile (type 7) of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);
Band summarize(const Eigen::Ref<const Eigen::VectorXd>& draws);

struct SiteGrid {
    int site_id = 0;
    std::vector<double> times;
};

// Evenly spaced times (step years) from each site's oldest to youngest observation.
std::vector<SiteGrid> default_grid(std::span<const ingest::Observation> obs, std::size_t n_sites, double step);

// Draw-by-time matrices of each component at one site. Blocks missing from
// the samples (beta_l after stage one) contribute zero.
struct ComponentDraws {
    Eigen::MatrixXd regional;
    Eigen::MatrixXd linear_local; // beta_g t + beta_h
    Eigen::MatrixXd nonlinear_local;
    Eigen::MatrixXd total;
};

ComponentDraws component_draws(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                               const model::ModelSpec& spec, const SiteGrid& grid);

struct SiteDecomposition {
    int site_id = 0;
    std::vector<double> times;
    std::vector<Band> regional, linear_local, nonlinear_local, total;
};

struct DecompositionSummary {
    std::vector<SiteDecomposition> sites;
};

DecompositionSummary decompose(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                               const model::ModelSpec& spec, const std::vector<SiteGrid>& grids);

enum class RateKind { Total, Regional };

// Per-draw rate in mm/yr: dr/dt, plus beta_g and dl/dt for the total.
Eigen::MatrixXd rate_draws(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                           const model::ModelSpec& spec, const SiteGrid& grid, RateKind which);

struct SiteRates {
    int site_id = 0;
    RateKind kind = RateKind::Total;
    std::vector<double> times;
    std::vector<Band> rate; // mm/yr
};

std::vector<SiteRates> rate_of_change(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                                      const model::ModelSpec& spec, const std::vector<SiteGrid>& grids,
                                      RateKind which);

// site_id, time_ce, component, mean, p2.5, p25, p75, p97.5
void write_decomposition_csv(const DecompositionSummary& summary, std::ostream& out);
void write_rates_csv(const std::vector<SiteRates>& rates, std::ostream& out);

} // namespace nigam::posterior
