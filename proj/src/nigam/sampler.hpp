#pragma once

#include "nigam/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace nigam::sampler {

using Rng = std::mt19937_64;

// Independent stream for (seed, chain, stream): the three values are mixed
// through std::seed_seq, so neighbouring chains do not share state.
Rng make_rng(std::uint64_t seed, std::uint64_t chain, std::uint64_t stream = 0);

// Full conditional of a group of coefficient blocks given everything else:
// N(mean, precision^-1) over the listed design columns.
struct ConditionalGaussian {
    std::vector<Eigen::Index> columns;
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;
};

ConditionalGaussian coefficient_conditional(const model::LinearGaussianModel& model, const model::State& state,
                                            std::span<const int> blocks);

// Exact draw from the conditional above, written into state.coef.
// Throws NumericalError if the precision is not positive definite.
void gibbs_coefficient_block(const model::LinearGaussianModel& model, std::span<const int> blocks,
                             model::State& state, Rng& rng);

struct SliceOptions {
    double width = 1.0;
    int max_step_out = 32;
    int max_shrink = 200;
};

// One univariate slice-sampling transition (stepping out, then shrinkage)
// for an unnormalised log density. `evaluations` counts density calls.
template <class LogDensity>
double slice_step(double x0, LogDensity&& log_density, Rng& rng, const SliceOptions& opt = {},
                  int* evaluations = nullptr) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    int evals = 0;
    auto f = [&](double x) {
        ++evals;
        return log_density(x);
    };
    const double level = f(x0) - expo(rng);
    double lo = x0 - opt.width * unif(rng);
    double hi = lo + opt.width;
    int left_steps = static_cast<int>(std::floor(opt.max_step_out * unif(rng)));
    int right_steps = opt.max_step_out - 1 - left_steps;
    while (left_steps-- > 0 && f(lo) > level) lo -= opt.width;
    while (right_steps-- > 0 && f(hi) > level) hi += opt.width;
    double x1 = x0;
    for (int k = 0; k < opt.max_shrink; ++k) {
        const double cand = lo + unif(rng) * (hi - lo);
        if (f(cand) > level) {
            x1 = cand;
            break;
        }
        (cand < x0 ? lo : hi) = cand;
    }
    if (evaluations) *evaluations += evals;
    return x1;
}

// Log full conditional of scale k (the Gaussian terms it governs plus its
// prior), as a density on the scale itself; -inf for value <= 0.
double scale_log_conditional(const model::LinearGaussianModel& model, int k, const model::State& state,
                             double value);

// Slice update of scale k on the log scale. Returns the new value.
double scale_update(const model::LinearGaussianModel& model, int k, const model::State& state, Rng& rng,
                    const SliceOptions& opt = {}, int* evaluations = nullptr);

// Log density of prior scale k with every coefficient integrated out, the
// other scales held at their current values (up to a constant in `value`).
// k must not be the noise scale.
double collapsed_scale_log_density(const model::LinearGaussianModel& model, int k, const model::State& state,
                                   double value);

// Slice update of prior scale k from the density above, on the log scale.
double collapsed_scale_update(const model::LinearGaussianModel& model, int k, const model::State& state, Rng& rng,
                              const SliceOptions& opt = {}, int* evaluations = nullptr);

struct BlockLayout {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
};

struct ChainDraws {
    Eigen::MatrixXd coef;   // draws x coefficients
    Eigen::MatrixXd scales; // draws x scales
};

struct PosteriorSamples {
    std::vector<BlockLayout> blocks;
    std::vector<std::string> scale_names;
    std::vector<ChainDraws> chains;

    Eigen::Index n_coef() const;
    Eigen::Index draws_per_chain() const { return chains.empty() ? 0 : chains.front().coef.rows(); }
    Eigen::Index total_draws() const { return draws_per_chain() * static_cast<Eigen::Index>(chains.size()); }
    std::optional<BlockLayout> block(const std::string& name) const;
    int scale_index(const std::string& name) const;
    std::vector<std::string> coef_names() const;

    // Draws stacked chain after chain.
    Eigen::MatrixXd pooled_coef() const;
    Eigen::VectorXd pooled_scale(const std::string& name) const;
};

struct ParamDiagnostic {
    std::string name;
    double rhat = 1.0;
    double ess = 0.0;
};

struct Diagnostics {
    std::vector<ParamDiagnostic> params;
    // Slice sampling has no rejections; this reports its average cost.
    double slice_evaluations_per_update = 0.0;

    const ParamDiagnostic* find(const std::string& name) const;
};

struct RunResult {
    PosteriorSamples samples;
    Diagnostics diagnostics;
};

// Runs mcmc.chains chains from the deterministic initial state, keeping
// every thin-th draw after burn-in. Bit-reproducible for a fixed seed.
// When a single update group covers every coefficient, each iteration draws
// the prior scales collapsed, then all coefficients, then the noise scale
// given the coefficients. Otherwise coefficient groups come first and every
// scale is drawn given the coefficients.
RunResult run_chains(const model::LinearGaussianModel& model, const model::McmcConfig& mcmc);

// Split-chain potential scale reduction. Constant chains with a common
// value give 1.0; constant chains at different values give +inf.
double rhat(const std::vector<Eigen::VectorXd>& chains);

// Multi-chain effective sample size (Geyer initial monotone sequence),
// clamped to (0, total draws].
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

Diagnostics diagnose(const PosteriorSamples& samples);

// Long format: chain, draw, parameter, value.
void write_samples_csv(const PosteriorSamples& samples, std::ostream& out);
PosteriorSamples read_samples_csv(const std::string& path);
// parameter, rhat, ess
void write_diagnostics_csv(const Diagnostics& diagnostics, std::ostream& out);

} // namespace nigam::sampler
