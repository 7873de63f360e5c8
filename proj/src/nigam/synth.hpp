#pragma once

#include "nigam/ingest.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace nigam::synth {

struct SynthSite {
    std::string name;
    double lon = 0.0;
    double lat = 0.0;
    double t_start = 0.0; // years CE, latent ages are uniform on [t_start, t_end]
    double t_end = 0.0;
    double slope = 0.0;   // m/yr
    double offset = 0.0;  // m
};

// Known truth f(x, t) = r(t) + slope_j t + offset_j + l(x, t) plus the noise
// pattern used to corrupt it.
struct SynthTruth {
    std::function<double(double)> regional;               // m
    std::function<double(double)> regional_rate;          // m/yr
    std::function<double(double, double, double)> local; // (lon, lat, t) -> m
    std::vector<SynthSite> sites;
    double sigma = 0.01;       // m
    double rsl_sd_lo = 0.02;   // s_y ~ U(lo, hi), m
    double rsl_sd_hi = 0.10;
    double age_sd_lo = 20.0;   // age sd ~ U(lo, hi), yr
    double age_sd_hi = 70.0;
    double slope_prior_sd = 0.0003; // m/yr, sd of the slope prior centred on the true slope
    std::uint64_t seed = 1;

    double value(const SynthSite& site, double t) const;
    void validate() const;
};

// Realistic-scale truth: regional range about 0.15 m over 3000 years with a
// late rise and no net level or linear trend over -1000..2010 CE, slopes
// 0.2-1.7 mm/yr plus that removed trend, offsets within +-1 m, a 3 cm local
// field with a 2000-year period.
SynthTruth default_truth(int n_sites, std::uint64_t seed);

// r = 0, l = 0, every site rising at `slope`; fixed age and rsl sds.
SynthTruth pure_slope_truth(int n_sites, double slope, double age_sd, double rsl_sd, double sigma,
                            std::uint64_t seed);

// Latent age t~ uniform per site, observed age t~ + N(0, age_sd^2),
// rsl f(x, t~) + N(0, sigma^2 + s_y^2). Sites are all proxies and carry
// slope priors centred on the true slopes.
ingest::Dataset generate(const SynthTruth& truth, int n_per_site);

} // namespace nigam::synth
