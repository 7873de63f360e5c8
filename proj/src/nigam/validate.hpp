#pragma once

#include "nigam/ingest.hpp"
#include "nigam/model.hpp"
#include "nigam/sampler.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nigam::validate {

// fold[i] in [0, k) for proxy rows, -1 for tide-gauge rows (never held out).
struct FoldAssignment {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> fold;
    std::vector<std::string> warnings;
};

// Site-stratified random partition: each site's proxy rows are shuffled and
// dealt round-robin, continuing the deal across sites, so every fold gets
// floor or ceil of n_j / k rows from site j.
FoldAssignment kfold_split(std::span<const ingest::Observation> obs, int k, std::uint64_t seed);

struct PredictiveInterval {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;
};

// Posterior predictive simulations y = f(draw) + N(0, sigma^2 + s_y^2 + s_t^2),
// `replicates` per retained draw. Returns simulations x observations.
// corrective_var holds s_t^2 per observation (empty means zero).
Eigen::MatrixXd predictive_draws(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                                 const model::ModelSpec& spec, std::span<const ingest::Observation> heldout,
                                 const Eigen::VectorXd& corrective_var, int replicates, sampler::Rng& rng);

// Equal-tailed interval at `level` and the simulation mean, per column.
std::vector<PredictiveInterval> intervals_from_draws(const Eigen::MatrixXd& sims, double level);

std::vector<PredictiveInterval> predictive_interval(const sampler::PosteriorSamples& samples,
                                                    const ingest::SiteRegistry& sites, const model::ModelSpec& spec,
                                                    std::span<const ingest::Observation> heldout,
                                                    const Eigen::VectorXd& corrective_var, double level,
                                                    int replicates, sampler::Rng& rng);

struct HeldOutPrediction {
    int site_id = 0;
    double truth = 0.0;
    PredictiveInterval pi95;
    PredictiveInterval pi50;
};

struct Score {
    std::string label;
    std::size_t n = 0;
    double coverage95 = 0.0;
    double width95 = 0.0;
    double coverage50 = 0.0;
    double width50 = 0.0;
    double rmse = 0.0;
};

struct CVReport {
    std::vector<Score> sites;
    Score overall;
    FoldAssignment folds;
    std::uint64_t seed = 0;
    std::vector<HeldOutPrediction> predictions;
};

// Coverage, mean interval width and RMSE per site and overall.
CVReport score(const std::vector<HeldOutPrediction>& predictions, const ingest::SiteRegistry& sites);

// k-fold CV over proxy rows; every fold reruns the two-stage fit on its
// training rows (all tide gauges included) with the grids of `spec`.
CVReport cross_validate(const ingest::Dataset& data, const model::ModelSpec& spec, int k, int replicates,
                        std::uint64_t seed);

// site, coverage95, width95, coverage50, width50, rmse_m; overall row last.
void write_cv_report(const CVReport& report, std::ostream& out);
// obs_index, fold
void write_fold_assignment(const FoldAssignment& folds, std::ostream& out);

} // namespace nigam::validate
