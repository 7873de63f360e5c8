#include "nigam/pipeline.hpp"

#include "nigam/csv.hpp"
#include "nigam/error.hpp"
#include "nigam/posterior.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

namespace nigam::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, value >>= 4) s[static_cast<std::size_t>(i)] = digits[value & 0xf];
    return s;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path + ": cannot open");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex64(fnv1a(bytes));
}

std::vector<std::string> rhat_exceeded(const sampler::Diagnostics& diagnostics, double threshold) {
    std::vector<std::string> out;
    for (const auto& p : diagnostics.params)
        if (!(p.rhat <= threshold)) out.push_back(p.name);
    return out;
}

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw InputError(dir + ": cannot create output directory");
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(path.string() + ": cannot open for writing");
    writer(out);
    out.flush();
    if (!out) throw Error(path.string() + ": write failed");
}

json module_versions() {
    json j;
    for (const char* m : {"ingest", "basis", "model", "sampler", "noisy_input", "posterior", "validate", "synth", "cli"})
        j[m] = kVersion;
    return j;
}

json input_digests(const std::string& proxy_csv, const std::string& gauge_csv) {
    json j = json::object();
    j["proxy"] = {{"path", proxy_csv}, {"fnv1a64", file_digest(proxy_csv)}};
    if (!gauge_csv.empty()) j["gauges"] = {{"path", gauge_csv}, {"fnv1a64", file_digest(gauge_csv)}};
    return j;
}

model::ModelSpec spec_for(const Config& config, const ingest::Dataset& data) {
    return model::resolve_spec(config.knots, config.priors, config.mcmc, data);
}

} // namespace

FitRun run_fit(const Config& config, const std::string& proxy_csv, const std::string& gauge_csv,
               const std::string& out_dir) {
    config.validate();
    const auto t_start = std::chrono::steady_clock::now();
    FitRun run;
    run.config = config;
    run.data = ingest::load_observations(proxy_csv, gauge_csv, config.ingest);
    const double ingest_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    run.spec = spec_for(config, run.data);
    // Fail on bad inputs before any artifact is written.
    const json inputs = input_digests(proxy_csv, gauge_csv);
    ensure_dir(out_dir);

    run.fit = noisy_input::fit_two_stage(run.data.observations, run.data.sites, run.spec);
    // Stage-two parameters first, then the stage-one fit under a "stage1:" prefix.
    sampler::Diagnostics all = run.fit.stage2.diagnostics;
    for (auto p : run.fit.stage1.diagnostics.params) {
        p.name = "stage1:" + p.name;
        all.params.push_back(std::move(p));
    }
    run.rhat_exceeded = rhat_exceeded(all, config.rhat_threshold);

    const fs::path dir(out_dir);
    const json cfg = config_to_json(config);
    write_file(dir / "config.json", [&](std::ostream& o) { o << cfg.dump(2) << '\n'; });
    write_file(dir / "observations.csv", [&](std::ostream& o) { ingest::write_observation_table(run.data, o); });
    write_file(dir / "sites.csv", [&](std::ostream& o) { ingest::write_site_table(run.data.sites, o); });
    write_file(dir / "stage1_summary.csv",
               [&](std::ostream& o) { noisy_input::write_stage1_summary(run.fit.stage1, o); });
    write_file(dir / "corrective_variance.csv",
               [&](std::ostream& o) { noisy_input::write_corrective_variance(run.fit.corrective, o); });
    write_file(dir / "samples.csv", [&](std::ostream& o) { sampler::write_samples_csv(run.fit.stage2.samples, o); });
    write_file(dir / "diagnostics.csv",
               [&](std::ostream& o) { sampler::write_diagnostics_csv(all, o); });

    json manifest;
    manifest["command"] = "fit";
    manifest["config_hash"] = hex64(fnv1a(cfg.dump()));
    manifest["seed"] = config.mcmc.seed;
    manifest["inputs"] = inputs;
    manifest["module_versions"] = module_versions();
    manifest["seconds"] = {{"ingest", ingest_seconds},
                           {"stage1", run.fit.stage1_seconds},
                           {"stage2", run.fit.stage2_seconds}};
    manifest["warnings"] = run.data.warnings;
    manifest["rhat_exceeded"] = run.rhat_exceeded;
    write_file(dir / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    return run;
}

LoadedFit load_fit(const std::string& fit_dir) {
    const fs::path dir(fit_dir);
    for (const char* name : {"config.json", "observations.csv", "sites.csv", "samples.csv"})
        if (!fs::exists(dir / name)) throw InputError((dir / name).string() + ": missing fit artifact");
    LoadedFit fit;
    fit.config = load_config((dir / "config.json").string());
    fit.data = ingest::read_dataset_tables((dir / "observations.csv").string(), (dir / "sites.csv").string());
    fit.spec = spec_for(fit.config, fit.data);
    fit.samples = sampler::read_samples_csv((dir / "samples.csv").string());
    const Eigen::Index expected = fit.spec.regional.basis_count() +
                                  2 * static_cast<Eigen::Index>(fit.data.sites.size()) + fit.spec.local.basis_count();
    if (!fit.samples.block("beta_l") || fit.samples.n_coef() != expected)
        throw InputError((dir / "samples.csv").string() + ": samples do not match the fitted model");
    return fit;
}

void write_decomposition(const LoadedFit& fit, double step, const std::string& path) {
    const double s = step > 0.0 ? step : fit.config.grid_step_yr;
    const auto grids = posterior::default_grid(fit.data.observations, fit.data.sites.size(), s);
    const auto summary = posterior::decompose(fit.samples, fit.data.sites, fit.spec, grids);
    write_file(path, [&](std::ostream& o) { posterior::write_decomposition_csv(summary, o); });
}

void write_rates(const LoadedFit& fit, double step, const std::string& path) {
    const double s = step > 0.0 ? step : fit.config.grid_step_yr;
    const auto grids = posterior::default_grid(fit.data.observations, fit.data.sites.size(), s);
    auto rates = posterior::rate_of_change(fit.samples, fit.data.sites, fit.spec, grids, posterior::RateKind::Total);
    auto regional =
        posterior::rate_of_change(fit.samples, fit.data.sites, fit.spec, grids, posterior::RateKind::Regional);
    rates.insert(rates.end(), regional.begin(), regional.end());
    write_file(path, [&](std::ostream& o) { posterior::write_rates_csv(rates, o); });
}

validate::CVReport run_cv(const Config& config, const std::string& proxy_csv, const std::string& gauge_csv,
                          int folds, const std::string& out_dir) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const ingest::Dataset data = ingest::load_observations(proxy_csv, gauge_csv, config.ingest);
    const model::ModelSpec spec = spec_for(config, data);
    const int k = folds > 0 ? folds : config.validation.folds;
    if (k < 2) throw InputError("cv: folds must be >= 2");
    const json inputs = input_digests(proxy_csv, gauge_csv);
    ensure_dir(out_dir);

    auto report = validate::cross_validate(data, spec, k, config.validation.replicates_per_draw, config.mcmc.seed);

    const fs::path dir(out_dir);
    write_file(dir / "cv_report.csv", [&](std::ostream& o) { validate::write_cv_report(report, o); });
    write_file(dir / "cv_folds.csv", [&](std::ostream& o) { validate::write_fold_assignment(report.folds, o); });
    write_file(dir / "cv_predictions.csv", [&](std::ostream& o) {
        o << "site_name,rsl_m,point_m,lo95_m,hi95_m,lo50_m,hi50_m\n";
        for (const auto& p : report.predictions)
            csv::write_row(o, {data.sites[static_cast<std::size_t>(p.site_id)].name, csv::format_double(p.truth),
                               csv::format_double(p.pi95.point), csv::format_double(p.pi95.lo),
                               csv::format_double(p.pi95.hi), csv::format_double(p.pi50.lo),
                               csv::format_double(p.pi50.hi)});
    });
    const json cfg = config_to_json(config);
    json manifest;
    manifest["command"] = "cv";
    manifest["config_hash"] = hex64(fnv1a(cfg.dump()));
    manifest["seed"] = config.mcmc.seed;
    manifest["folds"] = k;
    manifest["inputs"] = inputs;
    manifest["module_versions"] = module_versions();
    manifest["seconds"] = {{"cv", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    manifest["warnings"] = data.warnings;
    write_file(dir / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    return report;
}

ingest::Dataset simulate(const synth::SynthTruth& truth, int n_per_site, const std::string& out_dir) {
    ingest::Dataset data = synth::generate(truth, n_per_site);
    ensure_dir(out_dir);
    const fs::path dir(out_dir);
    write_file(dir / "proxy.csv", [&](std::ostream& o) { ingest::write_proxy_csv(data, o); });
    write_file(dir / "gauges.csv", [&](std::ostream& o) {
        o << "station_name,lon,lat,year_ce,annual_mean_m,slope_prior_mean_mm_yr,slope_prior_sd_mm_yr\n";
    });
    write_file(dir / "truth_sites.csv", [&](std::ostream& o) {
        o << "site_name,lon,lat,slope_mm_yr,offset_m\n";
        for (const auto& s : truth.sites)
            csv::write_row(o, {s.name, csv::format_double(s.lon), csv::format_double(s.lat),
                               csv::format_double(s.slope * 1000.0), csv::format_double(s.offset)});
    });
    write_file(dir / "truth_regional.csv", [&](std::ostream& o) {
        o << "time_ce,regional_m,regional_rate_mm_yr\n";
        double lo = truth.sites.front().t_start, hi = truth.sites.front().t_end;
        for (const auto& s : truth.sites) {
            lo = std::min(lo, s.t_start);
            hi = std::max(hi, s.t_end);
        }
        for (double t = std::ceil(lo / 10.0) * 10.0; t <= hi; t += 10.0)
            csv::write_row(o, {csv::format_double(t), csv::format_double(truth.regional ? truth.regional(t) : 0.0),
                               csv::format_double(truth.regional_rate ? truth.regional_rate(t) * 1000.0 : 0.0)});
    });
    json manifest;
    manifest["command"] = "simulate";
    manifest["seed"] = truth.seed;
    manifest["sites"] = truth.sites.size();
    manifest["n_per_site"] = n_per_site;
    manifest["module_versions"] = module_versions();
    write_file(dir / "manifest.json", [&](std::ostream& o) { o << manifest.dump(2) << '\n'; });
    return data;
}

} // namespace nigam::pipeline
