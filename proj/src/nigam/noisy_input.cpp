#include "nigam/noisy_input.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

namespace nigam::noisy_input {

namespace {

constexpr std::uint64_t stage_one_stream = 1;
constexpr std::uint64_t stage_two_stream = 2;

void column_moments(const Eigen::MatrixXd& draws, const sampler::BlockLayout& b, Eigen::VectorXd& mean,
                    Eigen::VectorXd& sd) {
    const Eigen::MatrixXd block = draws.middleCols(b.offset, b.size);
    mean = block.colwise().mean().transpose();
    const double n = static_cast<double>(block.rows());
    sd = ((block.rowwise() - mean.transpose()).array().square().colwise().sum() / std::max(1.0, n - 1.0))
             .sqrt()
             .transpose();
}

sampler::BlockLayout require_block(const sampler::PosteriorSamples& s, const std::string& name) {
    auto b = s.block(name);
    if (!b) throw InputError("stage-one samples carry no block '" + name + "'");
    return *b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

StageOnePosterior summarize_stage_one(sampler::RunResult run) {
    StageOnePosterior s;
    const Eigen::MatrixXd draws = run.samples.pooled_coef();
    column_moments(draws, require_block(run.samples, "beta_r"), s.informed.regional_mean, s.informed.regional_sd);
    column_moments(draws, require_block(run.samples, "beta_h"), s.informed.offset_mean, s.informed.offset_sd);
    column_moments(draws, require_block(run.samples, "beta_g"), s.slope_mean, s.slope_sd);
    if (!(s.informed.regional_sd.array() > 0.0).all() || !(s.informed.offset_sd.array() > 0.0).all())
        throw NumericalError("stage-one posterior has a zero standard deviation; the chain did not move");
    s.samples = std::move(run.samples);
    s.diagnostics = std::move(run.diagnostics);
    return s;
}

StageOnePosterior stage_one_fit(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                                const model::ModelSpec& spec) {
    const auto designs = model::build_designs(obs, sites, spec, model::Stage::One);
    const auto lgm = model::assemble_model(designs, spec);
    model::McmcConfig mcmc = spec.mcmc;
    mcmc.stream = stage_one_stream;
    return summarize_stage_one(sampler::run_chains(lgm, mcmc));
}

Eigen::VectorXd posterior_mean_derivative(const StageOnePosterior& stage1, std::span<const ingest::Observation> obs,
                                          const model::ModelSpec& spec) {
    Eigen::VectorXd deriv(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto& o = obs[i];
        if (o.site_id < 0 || o.site_id >= stage1.slope_mean.size())
            throw InputError("observation " + std::to_string(i) + " references an unknown site");
        const basis::LocalRow row = basis::evaluate_derivative_row(o.age, spec.regional);
        double d = stage1.slope_mean(o.site_id);
        for (int k = 0; k < row.count; ++k) d += row.values[k] * stage1.informed.regional_mean(row.first + k);
        deriv(static_cast<Eigen::Index>(i)) = d;
    }
    return deriv;
}

CorrectiveVariance corrective_variance(const Eigen::VectorXd& derivative, std::span<const ingest::Observation> obs) {
    if (derivative.size() != static_cast<Eigen::Index>(obs.size()))
        throw InputError("derivative length does not match the observations");
    CorrectiveVariance cv;
    cv.derivative = derivative;
    cv.variance.resize(derivative.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double st = obs[i].age_sd * derivative(ii);
        cv.variance(ii) = st * st;
    }
    return cv;
}

sampler::RunResult stage_two_fit(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                                 const model::ModelSpec& spec, const StageOnePosterior& stage1,
                                 const CorrectiveVariance& corrective) {
    const std::span<const double> extra(corrective.variance.data(), static_cast<std::size_t>(corrective.variance.size()));
    const auto designs = model::build_designs(obs, sites, spec, model::Stage::Two, extra);
    const auto lgm = model::assemble_model(designs, spec, &stage1.informed);
    model::McmcConfig mcmc = spec.mcmc;
    mcmc.stream = stage_two_stream;
    return sampler::run_chains(lgm, mcmc);
}

TwoStageFit fit_two_stage(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                          const model::ModelSpec& spec) {
    TwoStageFit fit;
    auto t0 = std::chrono::steady_clock::now();
    fit.stage1 = stage_one_fit(obs, sites, spec);
    fit.stage1_seconds = seconds_since(t0);
    fit.corrective = corrective_variance(posterior_mean_derivative(fit.stage1, obs, spec), obs);
    t0 = std::chrono::steady_clock::now();
    fit.stage2 = stage_two_fit(obs, sites, spec, fit.stage1, fit.corrective);
    fit.stage2_seconds = seconds_since(t0);
    return fit;
}

void write_stage1_summary(const StageOnePosterior& stage1, std::ostream& out) {
    out << "coefficient,mean,sd\n";
    auto emit = [&](const char* name, const Eigen::VectorXd& mean, const Eigen::VectorXd& sd) {
        for (Eigen::Index k = 0; k < mean.size(); ++k)
            out << name << '[' << k << "]," << csv::format_double(mean(k)) << ',' << csv::format_double(sd(k)) << '\n';
    };
    emit("beta_r", stage1.informed.regional_mean, stage1.informed.regional_sd);
    emit("beta_g", stage1.slope_mean, stage1.slope_sd);
    emit("beta_h", stage1.informed.offset_mean, stage1.informed.offset_sd);
}

void write_corrective_variance(const CorrectiveVariance& cv, std::ostream& out) {
    out << "obs_index,deriv_m_yr,s_t_m\n";
    for (Eigen::Index i = 0; i < cv.variance.size(); ++i)
        out << i << ',' << csv::format_double(cv.derivative(i)) << ',' << csv::format_double(std::sqrt(cv.variance(i)))
            << '\n';
}

} // namespace nigam::noisy_input
