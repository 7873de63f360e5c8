#pragma once

#include "nigam/config.hpp"
#include "nigam/ingest.hpp"
#include "nigam/model.hpp"
#include "nigam/noisy_input.hpp"
#include "nigam/sampler.hpp"
#include "nigam/synth.hpp"
#include "nigam/validate.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nigam::pipeline {

inline constexpr const char* kVersion = "0.1.0";

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
// FNV-1a of a file's bytes as 16 hex digits.
std::string file_digest(const std::string& path);
std::string hex64(std::uint64_t value);

// Names of parameters whose R-hat exceeds the threshold (or is not finite).
std::vector<std::string> rhat_exceeded(const sampler::Diagnostics& diagnostics, double threshold);

struct FitRun {
    Config config;
    ingest::Dataset data;
    model::ModelSpec spec;
    noisy_input::TwoStageFit fit;
    std::vector<std::string> rhat_exceeded;
};

// Ingest, two-stage fit, and the fit directory:
// observations.csv, sites.csv, config.json, stage1_summary.csv,
// corrective_variance.csv, samples.csv (stage two), diagnostics.csv (both
// stages, stage-one names prefixed "stage1:"), manifest.json.
FitRun run_fit(const Config& config, const std::string& proxy_csv, const std::string& gauge_csv,
               const std::string& out_dir);

struct LoadedFit {
    Config config;
    ingest::Dataset data;
    model::ModelSpec spec;
    sampler::PosteriorSamples samples;
};

// Rebuilds the model grids from the fit directory's tables and config.
LoadedFit load_fit(const std::string& fit_dir);

// step <= 0 uses the fit's configured grid step.
void write_decomposition(const LoadedFit& fit, double step, const std::string& path);
// Total and regional rates in one table.
void write_rates(const LoadedFit& fit, double step, const std::string& path);

// k-fold CV; writes cv_report.csv, cv_folds.csv, cv_predictions.csv and
// manifest.json into out_dir. folds <= 0 uses the configured count.
validate::CVReport run_cv(const Config& config, const std::string& proxy_csv, const std::string& gauge_csv,
                          int folds, const std::string& out_dir);

// Writes proxy.csv (ingest schema), an empty gauges.csv, truth_sites.csv and
// truth_regional.csv (10-year grid) into out_dir.
ingest::Dataset simulate(const synth::SynthTruth& truth, int n_per_site, const std::string& out_dir);

} // namespace nigam::pipeline
