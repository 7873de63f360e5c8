#include "nigam/synth.hpp"

#include "nigam/error.hpp"
#include "nigam/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace nigam::synth {

double SynthTruth::value(const SynthSite& site, double t) const {
    double f = site.slope * t + site.offset;
    if (regional) f += regional(t);
    if (local) f += local(site.lon, site.lat, t);
    return f;
}

void SynthTruth::validate() const {
    if (sites.empty()) throw InputError("synthetic truth needs at least one site");
    if (sigma < 0.0 || rsl_sd_lo < 0.0 || rsl_sd_hi < rsl_sd_lo || age_sd_lo < 0.0 || age_sd_hi < age_sd_lo)
        throw InputError("synthetic noise scales must be nonnegative with lo <= hi");
    if (!(slope_prior_sd > 0.0)) throw InputError("synthetic slope prior sd must be positive");
    for (const auto& s : sites)
        if (!(s.t_start < s.t_end)) throw InputError("synthetic site '" + s.name + "' has an empty time range");
}

namespace {

std::string site_name(int j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "site_%02d", j);
    return buf;
}

} // namespace

SynthTruth default_truth(int n_sites, std::uint64_t seed) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto shape = [](double t) { return 0.13 * std::exp((t - 2010.0) / 300.0) + 0.02 * std::sin(two_pi * (t + 1000.0) / 1100.0); };
    auto shape_rate = [](double t) {
        return 0.13 / 300.0 * std::exp((t - 2010.0) / 300.0) +
               0.02 * two_pi / 1100.0 * std::cos(two_pi * (t + 1000.0) / 1100.0);
    };
    // Remove the least-squares line over -1000..2010 CE from the curve and
    // move its slope into the site slopes. f is unchanged; the split between
    // r and the site terms then matches what the data can identify (a
    // common level and trend are shared with the offsets and slopes).
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    const double n = 3011.0;
    for (int y = -1000; y <= 2010; ++y) {
        const double v = shape(y);
        st += y;
        sy += v;
        stt += static_cast<double>(y) * y;
        sty += y * v;
    }
    const double trend = (sty - st * sy / n) / (stt - st * st / n);
    const double level = sy / n - trend * st / n;

    SynthTruth truth;
    truth.seed = seed;
    truth.regional = [shape, trend, level](double t) { return shape(t) - level - trend * t; };
    truth.regional_rate = [shape_rate, trend](double t) { return shape_rate(t) - trend; };
    truth.local = [](double lon, double lat, double t) {
        return 0.03 * std::sin(two_pi * (lon + 81.0) / 25.0) * std::cos(two_pi * (lat - 25.0) / 30.0) *
               std::sin(two_pi * (t + 1000.0) / 2000.0);
    };

    auto rng = sampler::make_rng(seed, 0, 11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int j = 0; j < n_sites; ++j) {
        SynthSite s;
        s.name = site_name(j);
        s.lon = -81.0 + 21.0 * u(rng);
        s.lat = 25.0 + 22.0 * u(rng);
        s.t_start = -1000.0 + 800.0 * u(rng);
        s.t_end = 1950.0 + 60.0 * u(rng);
        s.slope = 0.0002 + 0.0015 * u(rng) + trend;
        s.offset = -1.0 + 2.0 * u(rng);
        truth.sites.push_back(s);
    }
    return truth;
}

SynthTruth pure_slope_truth(int n_sites, double slope, double age_sd, double rsl_sd, double sigma,
                            std::uint64_t seed) {
    SynthTruth truth = default_truth(n_sites, seed);
    truth.regional = [](double) { return 0.0; };
    truth.regional_rate = [](double) { return 0.0; };
    truth.local = nullptr;
    for (auto& s : truth.sites) s.slope = slope;
    truth.age_sd_lo = truth.age_sd_hi = age_sd;
    truth.rsl_sd_lo = truth.rsl_sd_hi = rsl_sd;
    truth.sigma = sigma;
    return truth;
}

ingest::Dataset generate(const SynthTruth& truth, int n_per_site) {
    truth.validate();
    if (n_per_site < 1) throw InputError("synthetic generation needs n_per_site >= 1");
    auto rng = sampler::make_rng(truth.seed, 1, 12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> normal;

    ingest::Dataset data;
    std::vector<ingest::Site> sites;
    for (std::size_t j = 0; j < truth.sites.size(); ++j) {
        const auto& s = truth.sites[j];
        sites.push_back({s.name, s.lon, s.lat, ingest::SourceKind::Proxy, s.slope, truth.slope_prior_sd});
        for (int i = 0; i < n_per_site; ++i) {
            const double latent = s.t_start + (s.t_end - s.t_start) * u(rng);
            const double age_sd = truth.age_sd_lo + (truth.age_sd_hi - truth.age_sd_lo) * u(rng);
            const double rsl_sd = truth.rsl_sd_lo + (truth.rsl_sd_hi - truth.rsl_sd_lo) * u(rng);
            ingest::Observation o;
            o.site_id = static_cast<int>(j);
            o.age = latent + age_sd * normal(rng);
            o.age_sd = age_sd;
            o.rsl = truth.value(s, latent) + std::sqrt(truth.sigma * truth.sigma + rsl_sd * rsl_sd) * normal(rng);
            o.rsl_sd = rsl_sd;
            o.source = ingest::SourceKind::Proxy;
            data.observations.push_back(o);
        }
    }
    data.sites = ingest::SiteRegistry(std::move(sites));
    data.validate();
    return data;
}

} // namespace nigam::synth
