#include "nigam/error.hpp"
#include "nigam/ingest.hpp"
#include "nigam/synth.hpp"

#include "support.hpp"

#include <cmath>

using namespace nigam;

namespace {

double residual_sd(const std::vector<double>& r) {
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (static_cast<double>(r.size()) - 1.0));
}

} // namespace

TEST_SUITE("synth") {

TEST_CASE("without noise observations lie on the truth") {
    auto truth = synth::default_truth(5, 3);
    truth.sigma = 0.0;
    truth.rsl_sd_lo = truth.rsl_sd_hi = 0.0;
    truth.age_sd_lo = truth.age_sd_hi = 0.0;
    const auto data = synth::generate(truth, 50);
    for (const auto& o : data.observations)
        CHECK(o.rsl == truth.value(truth.sites[static_cast<std::size_t>(o.site_id)], o.age));
}

TEST_CASE("noise variances add") {
    auto truth = synth::pure_slope_truth(10, 0.001, 0.0, 0.05, 0.01, 4);
    const auto data = synth::generate(truth, 1000);
    std::vector<double> r;
    for (const auto& o : data.observations) r.push_back(o.rsl - truth.value(truth.sites[static_cast<std::size_t>(o.site_id)], o.age));
    CHECK(residual_sd(r) == doctest::Approx(std::sqrt(0.0026)).epsilon(0.05));
}

TEST_CASE("age errors add slope-scaled variance") {
    auto truth = synth::pure_slope_truth(10, 0.0, 30.0, 0.05, 0.01, 5);
    truth.regional = [](double t) { return 0.002 * t; };
    truth.regional_rate = [](double) { return 0.002; };
    const auto data = synth::generate(truth, 1000);
    std::vector<double> r;
    for (const auto& o : data.observations) r.push_back(o.rsl - truth.value(truth.sites[static_cast<std::size_t>(o.site_id)], o.age));
    const double expect = std::sqrt(0.01 * 0.01 + 0.05 * 0.05 + std::pow(30 * 0.002, 2));
    CHECK(residual_sd(r) == doctest::Approx(expect).epsilon(0.10));
}

TEST_CASE("default truth scales") {
    const auto truth = synth::default_truth(8, 1);
    REQUIRE(truth.sites.size() == 8);
    double lo = 1e9, hi = -1e9, mean = 0.0;
    for (int y = -1000; y <= 2010; ++y) {
        lo = std::min(lo, truth.regional(y));
        hi = std::max(hi, truth.regional(y));
        mean += truth.regional(y) / 3011.0;
    }
    CHECK(hi - lo > 0.10);
    CHECK(hi - lo < 0.20);
    CHECK(std::abs(mean) < 1e-9);
    for (double t : {-900.0, 0.0, 1500.0, 2000.0}) {
        const double h = 0.01;
        CHECK(truth.regional_rate(t) == doctest::Approx((truth.regional(t + h) - truth.regional(t - h)) / (2 * h)).epsilon(1e-6));
    }
    for (const auto& s : truth.sites) {
        CHECK(s.t_start >= -1000.0);
        CHECK(s.t_end <= 2010.0);
        CHECK(std::abs(s.offset) <= 1.0);
        CHECK(s.lon >= -81.0);
        CHECK(s.lon <= -60.0);
    }
}

TEST_CASE("counts are exact, values finite and generation reproducible") {
    const auto truth = synth::default_truth(7, 9);
    const auto a = synth::generate(truth, 33);
    const auto b = synth::generate(truth, 33);
    CHECK(a.observations.size() == 7 * 33);
    std::vector<int> per(7, 0);
    for (const auto& o : a.observations) {
        per[static_cast<std::size_t>(o.site_id)]++;
        CHECK(std::isfinite(o.age));
        CHECK(std::isfinite(o.rsl));
        CHECK(o.age_sd >= 20.0);
        CHECK(o.age_sd <= 70.0);
    }
    for (int c : per) CHECK(c == 33);
    for (std::size_t i = 0; i < a.observations.size(); ++i) CHECK(a.observations[i].rsl == b.observations[i].rsl);
    CHECK_THROWS_AS(synth::generate(truth, 0), InputError);
}

TEST_CASE("without local field or slopes sites differ only by offsets") {
    auto truth = synth::pure_slope_truth(4, 0.0, 30.0, 0.05, 0.01, 2);
    truth.regional = synth::default_truth(4, 2).regional;
    for (double t : {-800.0, 100.0, 1900.0})
        CHECK(truth.value(truth.sites[0], t) - truth.value(truth.sites[1], t) ==
              doctest::Approx(truth.sites[0].offset - truth.sites[1].offset).epsilon(1e-12));
}

TEST_CASE("generated data round-trips through the ingest schema") {
    const auto data = synth::generate(synth::default_truth(4, 6), 25);
    testing::TempDir dir("synth");
    {
        std::ofstream out(dir.file("proxy.csv"));
        ingest::write_proxy_csv(data, out);
    }
    const auto back = ingest::load_observations(dir.file("proxy.csv"), "");
    REQUIRE(back.observations.size() == data.observations.size());
    REQUIRE(back.sites.size() == data.sites.size());
    for (std::size_t i = 0; i < data.observations.size(); ++i) {
        CHECK(back.observations[i].age == data.observations[i].age);
        CHECK(back.observations[i].rsl == data.observations[i].rsl);
        CHECK(back.observations[i].age_sd == data.observations[i].age_sd);
        CHECK(back.observations[i].site_id == data.observations[i].site_id);
    }
    for (std::size_t j = 0; j < data.sites.size(); ++j) {
        CHECK(back.sites[j].name == data.sites[j].name);
        CHECK(back.sites[j].slope_prior_mean == doctest::Approx(data.sites[j].slope_prior_mean).epsilon(1e-14));
    }
}

}
