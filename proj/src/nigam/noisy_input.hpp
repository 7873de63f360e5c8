#pragma once

#include "nigam/ingest.hpp"
#include "nigam/model.hpp"
#include "nigam/sampler.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>

namespace nigam::noisy_input {

// Reduced fit f* = r(t) + g t + h, summarised per coefficient.
struct StageOnePosterior {
    model::InformedPriors informed; // regional and offset means / sds
    Eigen::VectorXd slope_mean;
    Eigen::VectorXd slope_sd;
    sampler::PosteriorSamples samples;
    sampler::Diagnostics diagnostics;
};

// Observation variance sigma^2 + s_y^2 only; no local tensor term.
StageOnePosterior stage_one_fit(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                                const model::ModelSpec& spec);

// Pooled posterior means and sds of the stage-one samples.
StageOnePosterior summarize_stage_one(sampler::RunResult run);

// d f*/dt of the stage-one posterior mean at every observation (m/yr):
// derivative regional basis times mean beta_r, plus the site's mean slope.
Eigen::VectorXd posterior_mean_derivative(const StageOnePosterior& stage1, std::span<const ingest::Observation> obs,
                                          const model::ModelSpec& spec);

struct CorrectiveVariance {
    Eigen::VectorXd derivative; // m/yr
    Eigen::VectorXd variance;   // s_t^2 = age_sd^2 * derivative^2, m^2
};

CorrectiveVariance corrective_variance(const Eigen::VectorXd& derivative, std::span<const ingest::Observation> obs);

// Full model with stage-one informed regional and offset priors and the
// corrective variance added to each observation.
sampler::RunResult stage_two_fit(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                                 const model::ModelSpec& spec, const StageOnePosterior& stage1,
                                 const CorrectiveVariance& corrective);

struct TwoStageFit {
    StageOnePosterior stage1;
    CorrectiveVariance corrective;
    sampler::RunResult stage2;
    double stage1_seconds = 0.0;
    double stage2_seconds = 0.0;
};

TwoStageFit fit_two_stage(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                          const model::ModelSpec& spec);

// coefficient, mean, sd
void write_stage1_summary(const StageOnePosterior& stage1, std::ostream& out);
// obs_index, deriv_m_yr, s_t_m
void write_corrective_variance(const CorrectiveVariance& cv, std::ostream& out);

} // namespace nigam::noisy_input
