#include "nigam/validate.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"
#include "nigam/noisy_input.hpp"
#include "nigam/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

namespace nigam::validate {

FoldAssignment kfold_split(std::span<const ingest::Observation> obs, int k, std::uint64_t seed) {
    if (k < 2) throw InputError("k-fold split needs k >= 2");
    FoldAssignment out;
    out.k = k;
    out.seed = seed;
    out.fold.assign(obs.size(), -1);

    std::map<int, std::vector<std::size_t>> by_site;
    for (std::size_t i = 0; i < obs.size(); ++i)
        if (obs[i].source == ingest::SourceKind::Proxy) by_site[obs[i].site_id].push_back(i);

    auto rng = sampler::make_rng(seed, 0, 7);
    std::vector<int> site_order;
    for (const auto& [site, _] : by_site) site_order.push_back(site);
    std::shuffle(site_order.begin(), site_order.end(), rng);

    std::size_t next = std::uniform_int_distribution<int>(0, k - 1)(rng);
    for (int site : site_order) {
        auto& rows = by_site[site];
        if (static_cast<int>(rows.size()) < k)
            out.warnings.push_back("site " + std::to_string(site) + " has " + std::to_string(rows.size()) +
                                   " proxy rows (< " + std::to_string(k) + "); it cannot appear in every fold");
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t r : rows) {
            out.fold[r] = static_cast<int>(next % static_cast<std::size_t>(k));
            ++next;
        }
    }
    return out;
}

Eigen::MatrixXd predictive_draws(const sampler::PosteriorSamples& samples, const ingest::SiteRegistry& sites,
                                 const model::ModelSpec& spec, std::span<const ingest::Observation> heldout,
                                 const Eigen::VectorXd& corrective_var, int replicates, sampler::Rng& rng) {
    if (samples.total_draws() == 0) throw InputError("posterior samples are empty");
    if (replicates < 1) throw InputError("replicates must be >= 1");
    const auto n = static_cast<Eigen::Index>(heldout.size());
    if (corrective_var.size() != 0 && corrective_var.size() != n)
        throw InputError("corrective variance length does not match the held-out rows");

    const Eigen::MatrixXd coef = samples.pooled_coef();
    const Eigen::Index draws = coef.rows();
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(draws);
    if (samples.scale_index("sigma") >= 0) sigma = samples.pooled_scale("sigma");

    // f for every (draw, row): assemble the held-out design against the
    // sample layout.
    std::vector<double> ages, lons, lats;
    for (const auto& o : heldout) {
        ages.push_back(o.age);
        lons.push_back(sites[static_cast<std::size_t>(o.site_id)].lon);
        lats.push_back(sites[static_cast<std::size_t>(o.site_id)].lat);
    }
    const auto br = samples.block("beta_r");
    const auto bg = samples.block("beta_g");
    const auto bh = samples.block("beta_h");
    if (!br || !bg || !bh) throw InputError("samples lack the regional, slope or offset block");
    Eigen::MatrixXd f = coef.middleCols(br->offset, br->size) * basis::bspline_basis(ages, spec.regional).values.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j = heldout[static_cast<std::size_t>(i)].site_id;
        f.col(i) += coef.col(bg->offset + j) * ages[static_cast<std::size_t>(i)] + coef.col(bh->offset + j);
    }
    if (auto bl = samples.block("beta_l"))
        f += coef.middleCols(bl->offset, bl->size) * basis::tensor_basis(lons, lats, ages, spec.local).values.transpose();

    Eigen::VectorXd known(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sy = heldout[static_cast<std::size_t>(i)].rsl_sd;
        known(i) = sy * sy + (corrective_var.size() ? corrective_var(i) : 0.0);
    }

    std::normal_distribution<double> normal;
    Eigen::MatrixXd sims(draws * replicates, n);
    for (Eigen::Index d = 0; d < draws; ++d)
        for (int r = 0; r < replicates; ++r) {
            const Eigen::Index row = d * replicates + r;
            for (Eigen::Index i = 0; i < n; ++i)
                sims(row, i) = f(d, i) + std::sqrt(sigma(d) * sigma(d) + known(i)) * normal(rng);
        }
    return sims;
}

std::vector<PredictiveInterval> intervals_from_draws(const Eigen::MatrixXd& sims, double level) {
    if (!(level > 0.0 && level < 1.0)) throw InputError("interval level must lie in (0, 1)");
    std::vector<PredictiveInterval> out;
    std::vector<double> col(static_cast<std::size_t>(sims.rows()));
    for (Eigen::Index i = 0; i < sims.cols(); ++i) {
        Eigen::Map<Eigen::VectorXd>(col.data(), sims.rows()) = sims.col(i);
        std::sort(col.begin(), col.end());
        const double tail = (1.0 - level) / 2.0;
        out.push_back({posterior::quantile_sorted(col, tail), posterior::quantile_sorted(col, 1.0 - tail),
                       sims.col(i).mean()});
    }
    return out;
}

std::vector<PredictiveInterval> predictive_interval(const sampler::PosteriorSamples& samples,
                                                    const ingest::SiteRegistry& sites, const model::ModelSpec& spec,
                                                    std::span<const ingest::Observation> heldout,
                                                    const Eigen::VectorXd& corrective_var, double level,
                                                    int replicates, sampler::Rng& rng) {
    return intervals_from_draws(predictive_draws(samples, sites, spec, heldout, corrective_var, replicates, rng),
                                level);
}

namespace {

struct Accumulator {
    std::size_t n = 0;
    double in95 = 0, w95 = 0, in50 = 0, w50 = 0, sq = 0;

    void add(const HeldOutPrediction& p) {
        ++n;
        in95 += (p.truth >= p.pi95.lo && p.truth <= p.pi95.hi) ? 1.0 : 0.0;
        in50 += (p.truth >= p.pi50.lo && p.truth <= p.pi50.hi) ? 1.0 : 0.0;
        w95 += p.pi95.hi - p.pi95.lo;
        w50 += p.pi50.hi - p.pi50.lo;
        const double e = p.truth - p.pi95.point;
        sq += e * e;
    }

    Score finish(std::string label) const {
        Score s;
        s.label = std::move(label);
        s.n = n;
        if (n == 0) return s;
        const double dn = static_cast<double>(n);
        s.coverage95 = in95 / dn;
        s.width95 = w95 / dn;
        s.coverage50 = in50 / dn;
        s.width50 = w50 / dn;
        s.rmse = std::sqrt(sq / dn);
        return s;
    }
};

} // namespace

CVReport score(const std::vector<HeldOutPrediction>& predictions, const ingest::SiteRegistry& sites) {
    CVReport report;
    std::map<int, Accumulator> per_site;
    Accumulator all;
    for (const auto& p : predictions) {
        per_site[p.site_id].add(p);
        all.add(p);
    }
    for (const auto& [site, acc] : per_site) {
        const std::string label = static_cast<std::size_t>(site) < sites.size() ? sites[static_cast<std::size_t>(site)].name
                                                                                 : std::to_string(site);
        report.sites.push_back(acc.finish(label));
    }
    report.overall = all.finish("overall");
    report.predictions = predictions;
    return report;
}

CVReport cross_validate(const ingest::Dataset& data, const model::ModelSpec& spec, int k, int replicates,
                        std::uint64_t seed) {
    const FoldAssignment folds = kfold_split(data.observations, k, seed);
    std::vector<HeldOutPrediction> predictions;
    for (int f = 0; f < k; ++f) {
        std::vector<ingest::Observation> train, test;
        for (std::size_t i = 0; i < data.observations.size(); ++i)
            (folds.fold[i] == f ? test : train).push_back(data.observations[i]);
        if (test.empty()) continue;

        model::ModelSpec fold_spec = spec;
        fold_spec.mcmc.seed = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(f + 1);
        const auto fit = noisy_input::fit_two_stage(train, data.sites, fold_spec);
        const auto deriv = noisy_input::posterior_mean_derivative(fit.stage1, test, fold_spec);
        const auto cv = noisy_input::corrective_variance(deriv, test);

        auto rng = sampler::make_rng(seed, static_cast<std::uint64_t>(f), 3);
        const Eigen::MatrixXd sims =
            predictive_draws(fit.stage2.samples, data.sites, fold_spec, test, cv.variance, replicates, rng);
        const auto pi95 = intervals_from_draws(sims, 0.95);
        const auto pi50 = intervals_from_draws(sims, 0.50);
        for (std::size_t i = 0; i < test.size(); ++i)
            predictions.push_back({test[i].site_id, test[i].rsl, pi95[i], pi50[i]});
    }
    CVReport report = score(predictions, data.sites);
    report.folds = folds;
    report.seed = seed;
    return report;
}

void write_cv_report(const CVReport& report, std::ostream& out) {
    out << "site,coverage95,width95,coverage50,width50,rmse_m\n";
    auto row = [&](const Score& s) {
        csv::write_row(out, {s.label, csv::format_double(s.coverage95), csv::format_double(s.width95),
                             csv::format_double(s.coverage50), csv::format_double(s.width50),
                             csv::format_double(s.rmse)});
    };
    for (const auto& s : report.sites) row(s);
    row(report.overall);
}

void write_fold_assignment(const FoldAssignment& folds, std::ostream& out) {
    out << "obs_index,fold\n";
    for (std::size_t i = 0; i < folds.fold.size(); ++i) out << i << ',' << folds.fold[i] << '\n';
}

} // namespace nigam::validate
