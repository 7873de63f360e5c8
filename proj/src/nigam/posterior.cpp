#include "nigam/posterior.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace nigam::posterior {

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InputError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Band summarize(const Eigen::Ref<const Eigen::VectorXd>& draws) {
    std::vector<double> v(draws.data(), draws.data() + draws.size());
    if (v.empty()) throw InputError("cannot summarise an empty posterior");
    std::sort(v.begin(), v.end());
    Band b;
    b.mean = draws.mean();
    b.p2_5 = quantile_sorted(v, 0.025);
    b.p25 = quantile_sorted(v, 0.25);
    b.p75 = quantile_sorted(v, 0.75);
    b.p97_5 = quantile_sorted(v, 0.975);
    return b;
}

std::vector<SiteGrid> default_grid(std::span<const ingest::Observation> obs, std::size_t n_sites, double step) {
    if (!(step > 0.0)) throw InputError("grid step must be positive");
    std::vector<double> lo(n_sites, std::numeric_limits<double>::infinity());
    std::vector<double> hi(n_sites, -std::numeric_limits<double>::infinity());
    for (const auto& o : obs) {
        lo[static_cast<std::size_t>(o.site_id)] = std::min(lo[static_cast<std::size_t>(o.site_id)], o.age);
        hi[static_cast<std::size_t>(o.site_id)] = std::max(hi[static_cast<std::size_t>(o.site_id)], o.age);
    }
    std::vector<SiteGrid> grids;
    for (std::size_t j = 0; j < n_sites; ++j) {
        if (!std::isfinite(lo[j])) continue;
        SiteGrid g;
        g.site_id = static_cast<int>(j);
        for (double t = lo[j]; t <= hi[j] + 1e-9; t += step) g.times.push_back(t);
        grids.push_back(std::move(g));
    }
    return grids;
}

namespace {

void require_draws(const sampler::PosteriorSamples& samples) {
    if (samples.total_draws() == 0) throw InputError("posterior samples are empty");
}

sampler::BlockLayout need(const sampler::PosteriorSamples& s, const char* name) {
    auto b = s.block(name);
    if (!b) throw InputError(std::string("posterior samples carry no block '") + name + "'");
    return *b;
}

void check_site(const ingest::SiteRegistry& sites, const SiteGrid& grid) {
    if (grid.site_id < 0 || static_cast<std::size_t>(grid.site_id) >= sites.size())
        throw InputError("grid references unknown site " + std::to_string(grid.site_id));
}

} // namespace

ComponentDraws component_draws(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                               const model::ModelSpec& spec, const SiteGrid& grid) {
    require_draws(samples);
    check_site(sites, grid);
    const Eigen::MatrixXd coef = samples.pooled_coef();
    const auto br = need(samples, "beta_r");
    const auto bg = need(samples, "beta_g");
    const auto bh = need(samples, "beta_h");
    const auto j = grid.site_id;
    const auto n_draws = coef.rows();
    const auto n_times = static_cast<Eigen::Index>(grid.times.size());

    ComponentDraws out;
    const auto regional_basis = basis::bspline_basis(grid.times, spec.regional);
    out.regional = coef.middleCols(br.offset, br.size) * regional_basis.values.transpose();
    const Eigen::Map<const Eigen::RowVectorXd> t(grid.times.data(), n_times);
    out.linear_local = coef.col(bg.offset + j) * t;
    out.linear_local.colwise() += coef.col(bh.offset + j);
    if (auto bl = samples.block("beta_l")) {
        const auto& s = sites[static_cast<std::size_t>(j)];
        const std::vector<double> lons(grid.times.size(), s.lon), lats(grid.times.size(), s.lat);
        const auto local_basis = basis::tensor_basis(lons, lats, grid.times, spec.local);
        out.nonlinear_local = coef.middleCols(bl->offset, bl->size) * local_basis.values.transpose();
    } else {
        out.nonlinear_local = Eigen::MatrixXd::Zero(n_draws, n_times);
    }
    out.total = out.regional + out.linear_local + out.nonlinear_local;
    return out;
}

namespace {

std::vector<Band> summarize_columns(const Eigen::MatrixXd& draws) {
    std::vector<Band> out;
    out.reserve(static_cast<std::size_t>(draws.cols()));
    for (Eigen::Index c = 0; c < draws.cols(); ++c) out.push_back(summarize(draws.col(c)));
    return out;
}

} // namespace

DecompositionSummary decompose(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                               const model::ModelSpec& spec, const std::vector<SiteGrid>& grids) {
    require_draws(samples);
    DecompositionSummary summary;
    for (const auto& g : grids) {
        const ComponentDraws d = component_draws(samples, sites, spec, g);
        SiteDecomposition s;
        s.site_id = g.site_id;
        s.times = g.times;
        s.regional = summarize_columns(d.regional);
        s.linear_local = summarize_columns(d.linear_local);
        s.nonlinear_local = summarize_columns(d.nonlinear_local);
        s.total = summarize_columns(d.total);
        summary.sites.push_back(std::move(s));
    }
    return summary;
}

Eigen::MatrixXd rate_draws(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                           const model::ModelSpec& spec, const SiteGrid& grid, RateKind which) {
    require_draws(samples);
    check_site(sites, grid);
    const Eigen::MatrixXd coef = samples.pooled_coef();
    const auto br = need(samples, "beta_r");
    const auto deriv = basis::bspline_derivative_basis(grid.times, spec.regional);
    Eigen::MatrixXd rate = coef.middleCols(br.offset, br.size) * deriv.values.transpose();
    if (which == RateKind::Total) {
        const auto bg = need(samples, "beta_g");
        rate.colwise() += coef.col(bg.offset + grid.site_id);
        if (auto bl = samples.block("beta_l")) {
            const auto& s = sites[static_cast<std::size_t>(grid.site_id)];
            const std::vector<double> lons(grid.times.size(), s.lon), lats(grid.times.size(), s.lat);
            const auto local = basis::tensor_time_derivative_basis(lons, lats, grid.times, spec.local);
            rate += coef.middleCols(bl->offset, bl->size) * local.values.transpose();
        }
    }
    return rate * 1000.0;
}

std::vector<SiteRates> rate_of_change(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                                      const model::ModelSpec& spec, const std::vector<SiteGrid>& grids,
                                      RateKind which) {
    require_draws(samples);
    std::vector<SiteRates> out;
    for (const auto& g : grids) {
        SiteRates r;
        r.site_id = g.site_id;
        r.kind = which;
        r.times = g.times;
        r.rate = summarize_columns(rate_draws(samples, sites, spec, g, which));
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

void emit(std::ostream& out, int site, double t, const char* component, const Band& b) {
    out << site << ',' << csv::format_double(t) << ',' << component << ',' << csv::format_double(b.mean) << ','
        << csv::format_double(b.p2_5) << ',' << csv::format_double(b.p25) << ',' << csv::format_double(b.p75) << ','
        << csv::format_double(b.p97_5) << '\n';
}

constexpr const char* header = "site_id,time_ce,component,mean,p2.5,p25,p75,p97.5\n";

} // namespace

void write_decomposition_csv(const DecompositionSummary& summary, std::ostream& out) {
    out << header;
    for (const auto& s : summary.sites)
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            emit(out, s.site_id, s.times[i], "regional", s.regional[i]);
            emit(out, s.site_id, s.times[i], "linear_local", s.linear_local[i]);
            emit(out, s.site_id, s.times[i], "nonlinear_local", s.nonlinear_local[i]);
            emit(out, s.site_id, s.times[i], "total", s.total[i]);
        }
}

void write_rates_csv(const std::vector<SiteRates>& rates, std::ostream& out) {
    out << header;
    for (const auto& r : rates)
        for (std::size_t i = 0; i < r.times.size(); ++i)
            emit(out, r.site_id, r.times[i], r.kind == RateKind::Total ? "total_rate" : "regional_rate", r.rate[i]);
}

} // namespace nigam::posterior
