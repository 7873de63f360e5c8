#include "nigam/config.hpp"
#include "nigam/error.hpp"

#include "support.hpp"

using nigam::Config;
using nigam::InputError;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("an empty path gives the documented defaults") {
    const Config c = nigam::load_config("");
    CHECK(c.knots.regional_basis == 24);
    CHECK(c.knots.regional_degree == 3);
    CHECK(c.knots.local_space_basis == 4);
    CHECK(c.knots.local_time_basis == 8);
    CHECK(c.knots.local_degree == 2);
    CHECK(c.knots.time_padding_yr == 10.0);
    CHECK_FALSE(c.knots.time_span.has_value());
    CHECK(c.mcmc.iterations == 2000);
    CHECK(c.mcmc.burn_in == 1000);
    CHECK(c.mcmc.thin == 5);
    CHECK(c.mcmc.chains == 2);
    CHECK(c.priors.sigma_h.location == 2.5);
    CHECK(c.priors.sigma_h.scale == 2.0);
    CHECK(c.priors.sigma_r.location == 0.0);
    CHECK(c.validation.folds == 10);
    CHECK(c.grid_step_yr == 10.0);
    CHECK(c.rhat_threshold == 1.1);
    CHECK(c.ingest.datum_first_year == 2000);
    CHECK(c.ingest.datum_last_year == 2018);
}

TEST_CASE("JSON round trip preserves every field") {
    Config c;
    c.knots.regional_basis = 30;
    c.knots.time_span = std::make_pair(-1200.0, 2050.0);
    c.priors.sigma_l.scale = 0.5;
    c.priors.sigma_initial = 0.03;
    c.mcmc.iterations = 300;
    c.mcmc.burn_in = 100;
    c.mcmc.seed = 99;
    c.mcmc.blocking = nigam::model::Blocking::Component;
    c.ingest.gauge_slope_prior_sd = 0.0005;
    c.validation.replicates_per_draw = 3;
    c.grid_step_yr = 25.0;
    const json j = nigam::config_to_json(c);
    const Config back = nigam::config_from_json(j);
    CHECK(nigam::config_to_json(back) == j);
    CHECK(back.knots.time_span->first == -1200.0);
    CHECK(back.ingest.gauge_slope_prior_sd == doctest::Approx(0.0005));
    CHECK(back.mcmc.blocking == nigam::model::Blocking::Component);
    CHECK(back.mcmc.seed == 99);

    const json defaults = nigam::config_to_json(Config{});
    CHECK(defaults.at("knots").at("time_span_ce").is_null());
    CHECK(nigam::config_to_json(nigam::config_from_json(defaults)) == defaults);
}

TEST_CASE("partial configs fill in defaults") {
    const Config c = nigam::config_from_json(json::parse(R"({"mcmc": {"iterations": 50, "burn_in": 10}, "seed": 3})"));
    CHECK(c.mcmc.iterations == 50);
    CHECK(c.mcmc.thin == 5);
    CHECK(c.mcmc.seed == 3);
    CHECK(c.knots.regional_basis == 24);
}

TEST_CASE("invalid configs are input errors") {
    CHECK_THROWS_WITH_AS(nigam::config_from_json(json::parse(R"({"mcmc": {"iters": 5}})")),
                         doctest::Contains("mcmc.iters"), InputError);
    CHECK_THROWS_AS(nigam::config_from_json(json::parse(R"({"bogus": 1})")), InputError);
    CHECK_THROWS_AS(nigam::config_from_json(json::parse(R"({"mcmc": {"iterations": "many"}})")), InputError);
    CHECK_THROWS_AS(nigam::config_from_json(json::parse(R"({"knots": {"time_span_ce": [10, 0]}})")), InputError);
    CHECK_THROWS_AS(nigam::config_from_json(json::parse(R"({"mcmc": {"burn_in": 5000}})")), InputError);
    CHECK_THROWS_AS(nigam::config_from_json(json::parse(R"({"priors": {"sigma": {"scale": 0}}})")), InputError);
    testing::TempDir dir("config");
    testing::write_text(dir.file("bad.json"), "{ not json");
    CHECK_THROWS_AS(nigam::load_config(dir.file("bad.json")), InputError);
    CHECK_THROWS_AS(nigam::load_config(dir.file("missing.json")), InputError);
}

}
