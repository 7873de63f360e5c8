#pragma once

#include "nigam/basis.hpp"
#include "nigam/ingest.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nigam::model {

// Cauchy(location, scale) truncated to (0, inf). location = 0 gives the
// half-Cauchy.
struct ScalePrior {
    double location = 0.0;
    double scale = 1.0;

    double log_density(double x) const;
};

struct PriorSettings {
    ScalePrior sigma_r{0.0, 1.0};
    ScalePrior sigma_l{0.0, 1.0};
    ScalePrior sigma_h{2.5, 2.0};
    ScalePrior sigma{0.0, 1.0};
    double sigma_r_initial = 0.1;
    double sigma_l_initial = 0.1;
    double sigma_h_initial = 2.5;
    double sigma_initial = 0.1;
};

enum class Blocking { Joint, Component };

struct McmcConfig {
    int iterations = 2000;
    int burn_in = 1000;
    int thin = 5;
    int chains = 2;
    std::uint64_t seed = 1;
    Blocking blocking = Blocking::Joint;
    unsigned threads = 0; // 0: one worker per hardware thread
    std::uint64_t stream = 0; // separates the RNG streams of pipeline stages

    int retained_per_chain() const { return (iterations - burn_in) / thin; }
    void validate() const;
};

struct KnotSettings {
    int regional_basis = 24;
    int regional_degree = 3;
    int local_space_basis = 4;
    int local_time_basis = 8;
    int local_degree = 2;
    double time_padding_yr = 10.0;
    double space_padding_deg = 1.0;
    // Fixed regional/local time span (years CE) instead of the padded data range.
    std::optional<std::pair<double, double>> time_span;
};

struct ModelSpec {
    basis::KnotGrid regional;
    basis::TensorGrids local;
    PriorSettings priors;
    McmcConfig mcmc;
    std::vector<ingest::SlopePrior> slope_priors; // per site, m/yr

    void validate(std::size_t n_sites) const;
};

// Grids spanning the data: time over [min age - pad, max age + pad] (or the
// configured time_span) and
// space over the site bounding box widened by space_padding_deg.
ModelSpec resolve_spec(const KnotSettings& knots, const PriorSettings& priors, const McmcConfig& mcmc,
                       const ingest::Dataset& data);

enum class Stage { One, Two };

// Per-observation design pieces for f = r(t) + g_j t + h_j + l(x, t).
struct DesignSet {
    Stage stage = Stage::One;
    basis::BasisMatrix regional;
    Eigen::VectorXd age;
    Eigen::SparseMatrix<double, Eigen::RowMajor> site_incidence;
    std::optional<basis::BasisMatrix> local;
    Eigen::VectorXd response;
    Eigen::VectorXd obs_var_known; // s_y^2, plus s_t^2 in stage two
    std::vector<int> site_of;

    Eigen::Index rows() const { return response.size(); }
};

// Stage two adds the tensor basis and the corrective variances (one per
// observation; empty means zero).
DesignSet build_designs(std::span<const ingest::Observation> obs, const ingest::SiteRegistry& sites,
                        const ModelSpec& spec, Stage stage, std::span<const double> corrective_var = {});

// ---------------------------------------------------------------------------
// Assembled form consumed by the sampler: y ~ N(X theta, sigma^2 + known_var)
// with independent normal priors on theta, grouped into named blocks whose
// prior sd is either fixed per coefficient or a shared scale parameter.

struct ScaleParam {
    std::string name;
    ScalePrior prior;
    double initial = 1.0;
    bool fixed = false;
};

struct CoefBlock {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
    Eigen::VectorXd prior_mean;
    Eigen::VectorXd prior_sd; // used when scale < 0
    int scale = -1;           // index into LinearGaussianModel::scales
};

struct LinearGaussianModel {
    Eigen::SparseMatrix<double, Eigen::RowMajor> design;
    Eigen::VectorXd response;
    Eigen::VectorXd known_var;
    std::vector<CoefBlock> blocks;
    std::vector<ScaleParam> scales;
    int noise_scale = -1; // -1: observation variance is known_var alone
    std::vector<std::vector<int>> update_groups;

    Eigen::Index n_coef() const { return design.cols(); }
    Eigen::Index n_obs() const { return design.rows(); }
    int block_index(const std::string& name) const; // -1 when absent
    int scale_index(const std::string& name) const; // -1 when absent
    void validate() const;
};

struct State {
    Eigen::VectorXd coef;
    Eigen::VectorXd scales;
};

State initial_state(const LinearGaussianModel& model);

// Per-observation variance sigma^2 + known_var.
Eigen::VectorXd observation_variance(const LinearGaussianModel& model, const State& state);

// Log joint density (likelihood times every prior), normalised. Returns
// -infinity for a nonpositive scale.
double log_posterior(const LinearGaussianModel& model, const State& state);

// Stage-one posterior summaries that replace the regional and offset priors
// in stage two.
struct InformedPriors {
    Eigen::VectorXd regional_mean, regional_sd;
    Eigen::VectorXd offset_mean, offset_sd;
};

// Columns: beta_r | beta_g | beta_h | beta_l (stage two only).
LinearGaussianModel assemble_model(const DesignSet& designs, const ModelSpec& spec,
                                   const InformedPriors* informed = nullptr);

} // namespace nigam::model
