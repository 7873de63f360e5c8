#include "nigam/error.hpp"
#include "nigam/validate.hpp"

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace nigam;
using ingest::Observation;
using ingest::SourceKind;

namespace {

std::vector<Observation> rows_per_site(const std::vector<int>& counts, int gauge_rows = 0) {
    std::vector<Observation> obs;
    for (std::size_t s = 0; s < counts.size(); ++s)
        for (int i = 0; i < counts[s]; ++i) obs.push_back({static_cast<int>(s), 100.0 * i, 30, 0, 0.1});
    for (int i = 0; i < gauge_rows; ++i)
        obs.push_back({static_cast<int>(counts.size()), 1900.0 + 10 * i, 5, 0, 0.01, SourceKind::TideGauge});
    return obs;
}

// Samples with zero coefficients and the given noise sd, one site.
sampler::PosteriorSamples flat_samples(int draws, double sigma, double offset = 0.0) {
    sampler::PosteriorSamples s;
    s.blocks = {{"beta_r", 0, 24}, {"beta_g", 24, 1}, {"beta_h", 25, 1}};
    s.scale_names = {"sigma"};
    sampler::ChainDraws ch;
    ch.coef = Eigen::MatrixXd::Zero(draws, 26);
    ch.coef.col(25).setConstant(offset);
    ch.scales = Eigen::MatrixXd::Constant(draws, 1, sigma);
    s.chains.push_back(ch);
    return s;
}

model::ModelSpec one_site_spec() {
    model::ModelSpec spec;
    spec.regional = basis::KnotGrid::with_basis_count(0, 2000, 24, 3);
    return spec;
}

validate::HeldOutPrediction prediction(int site, double truth, double point, double half95, double half50) {
    return {site, truth, {point - half95, point + half95, point}, {point - half50, point + half50, point}};
}

} // namespace

TEST_SUITE("validate") {

TEST_CASE("100 rows in 10 folds give folds of 10") {
    const auto obs = rows_per_site({100});
    const auto f = validate::kfold_split(obs, 10, 1);
    std::vector<int> sizes(10, 0);
    for (int v : f.fold) sizes[static_cast<std::size_t>(v)]++;
    for (int s : sizes) CHECK(s == 10);
    CHECK(f.warnings.empty());
}

TEST_CASE("splits are deterministic in the seed") {
    const auto obs = rows_per_site({40, 23, 17});
    CHECK(validate::kfold_split(obs, 10, 5).fold == validate::kfold_split(obs, 10, 5).fold);
    CHECK(validate::kfold_split(obs, 10, 5).fold != validate::kfold_split(obs, 10, 6).fold);
}

TEST_CASE("every fold gets its share of each site") {
    const auto obs = rows_per_site({30, 47, 12, 5}, 15);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto f = validate::kfold_split(obs, 10, seed);
        std::vector<std::vector<int>> per(4, std::vector<int>(10, 0));
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (obs[i].source == SourceKind::TideGauge) {
                CHECK(f.fold[i] == -1);
                continue;
            }
            REQUIRE(f.fold[i] >= 0);
            REQUIRE(f.fold[i] < 10);
            per[static_cast<std::size_t>(obs[i].site_id)][static_cast<std::size_t>(f.fold[i])]++;
        }
        for (int c : per[0]) CHECK(std::abs(c - 3) <= 1);
        for (int c : per[1]) CHECK((c == 4 || c == 5));
        for (int c : per[3]) CHECK(c <= 1);
        // One small-site warning, for the five-row site.
        REQUIRE(f.warnings.size() == 1);
        CHECK(f.warnings[0].find("site 3") == 0);
        // Folds partition the proxy rows.
        std::size_t assigned = 0;
        for (int k = 0; k < 10; ++k) assigned += static_cast<std::size_t>(std::count(f.fold.begin(), f.fold.end(), k));
        CHECK(assigned == obs.size() - 15);
    }
    CHECK_THROWS_AS(validate::kfold_split(obs, 1, 1), InputError);
}

TEST_CASE("standard-normal predictive interval") {
    const auto spec = one_site_spec();
    const ingest::SiteRegistry sites({{"a", 0, 0, SourceKind::Proxy, 0.0, 1.0}});
    const std::vector<Observation> obs{{0, 500.0, 0.0, 0.0, 0.0}};
    auto rng = sampler::make_rng(2, 0, 1);
    const auto pi = validate::predictive_interval(flat_samples(1000, 1.0), sites, spec, obs, {}, 0.95, 10, rng);
    REQUIRE(pi.size() == 1);
    // 1e4 predictive draws: the 2.5% quantile has se sqrt(.025 * .975 / 1e4) / phi(1.96) = 0.027.
    CHECK(std::abs(pi[0].lo + 1.959964) < 4 * 0.027);
    CHECK(std::abs(pi[0].hi - 1.959964) < 4 * 0.027);
    CHECK(std::abs(pi[0].point) < 0.05);
}

TEST_CASE("noise-free degenerate posterior collapses the interval") {
    const auto spec = one_site_spec();
    const ingest::SiteRegistry sites({{"a", 0, 0, SourceKind::Proxy, 0.0, 1.0}});
    const std::vector<Observation> obs{{0, 500.0, 0.0, 0.0, 0.0}, {0, 1500.0, 0.0, 0.0, 0.0}};
    auto rng = sampler::make_rng(2, 0, 1);
    const auto pi = validate::predictive_interval(flat_samples(50, 0.0, 0.37), sites, spec, obs,
                                                  Eigen::VectorXd::Zero(2), 0.95, 4, rng);
    for (const auto& p : pi) {
        CHECK(p.lo == doctest::Approx(0.37).epsilon(1e-14));
        CHECK(p.hi == doctest::Approx(0.37).epsilon(1e-14));
        CHECK(p.point == doctest::Approx(0.37).epsilon(1e-14));
    }
}

TEST_CASE("scores") {
    const ingest::SiteRegistry sites({{"a", 0, 0, SourceKind::Proxy, 0.0, 1.0}, {"b", 1, 1, SourceKind::Proxy, 0.0, 1.0}});
    SUBCASE("hand-computed RMSE") {
        const auto r = validate::score({prediction(0, 0.0, 0.06, 1, 0.5), prediction(1, 0.0, 0.08, 1, 0.5)}, sites);
        CHECK(r.overall.rmse == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
        CHECK(r.overall.rmse == doctest::Approx(0.0707).epsilon(1e-3));
        CHECK(r.overall.coverage95 == 1.0);
        CHECK(r.overall.width95 == doctest::Approx(2.0));
        REQUIRE(r.sites.size() == 2);
        CHECK(r.sites[1].label == "b");
        CHECK(r.sites[1].rmse == doctest::Approx(0.08));
    }
    SUBCASE("random nested intervals") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> n01(0.0, 1.0);
        std::uniform_real_distribution<double> u(0.1, 2.0);
        std::vector<validate::HeldOutPrediction> preds;
        for (int i = 0; i < 500; ++i) {
            const double h50 = u(rng);
            preds.push_back(prediction(i % 2, n01(rng), n01(rng), h50 * 2.9, h50));
        }
        const auto r = validate::score(preds, sites);
        CHECK(r.overall.coverage95 >= r.overall.coverage50);
        CHECK(r.overall.coverage95 <= 1.0);
        CHECK(r.overall.width50 >= 0.0);
        CHECK(r.overall.rmse >= 0.0);
        auto shuffled = preds;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(validate::score(shuffled, sites).overall.rmse == doctest::Approx(r.overall.rmse).epsilon(1e-12));
    }
    SUBCASE("report CSV ends with the overall row") {
        auto r = validate::score({prediction(0, 0.0, 0.06, 1, 0.5)}, sites);
        std::ostringstream out;
        validate::write_cv_report(r, out);
        const auto text = out.str();
        CHECK(text.rfind("site,coverage95,width95,coverage50,width50,rmse_m\n", 0) == 0);
        CHECK(text.find("\noverall,1,2,1,1,0.06\n") != std::string::npos);
    }
}

TEST_CASE("cross-validation predicts every proxy row once") {
    const auto data = testing::small_dataset(3, 16, 2);
    model::McmcConfig mc;
    mc.iterations = 120;
    mc.burn_in = 60;
    mc.thin = 3;
    mc.threads = 1;
    const auto spec = testing::default_spec(data, {}, mc);
    const auto r = validate::cross_validate(data, spec, 4, 2, 9);
    CHECK(r.overall.n == data.observations.size());
    CHECK(r.predictions.size() == data.observations.size());
    CHECK(r.sites.size() == 3);
    CHECK(r.overall.coverage95 >= 0.0);
    CHECK(r.overall.coverage95 <= 1.0);
    CHECK(r.overall.coverage95 >= r.overall.coverage50);
    CHECK(r.overall.width95 > r.overall.width50);
    const auto again = validate::cross_validate(data, spec, 4, 2, 9);
    CHECK(again.overall.rmse == r.overall.rmse);
    CHECK(again.overall.coverage95 == r.overall.coverage95);
}

}
