#include "nigam/error.hpp"
#include "nigam/model.hpp"
#include "nigam/sampler.hpp"

#include "support.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace nigam::model;
using nigam::ingest::Observation;

namespace {

InformedPriors informed_for(const DesignSet& d, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    InformedPriors p;
    const auto kr = d.regional.cols(), m = d.site_incidence.cols();
    p.regional_mean = Eigen::VectorXd::NullaryExpr(kr, [&] { return 0.05 * n01(rng); });
    p.regional_sd = Eigen::VectorXd::Constant(kr, 0.03);
    p.offset_mean = Eigen::VectorXd::NullaryExpr(m, [&] { return 0.5 * n01(rng); });
    p.offset_sd = Eigen::VectorXd::Constant(m, 0.1);
    return p;
}

State random_state(const LinearGaussianModel& model, std::mt19937_64& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    State s = initial_state(model);
    for (Eigen::Index j = 0; j < s.coef.size(); ++j) s.coef(j) += 0.01 * n01(rng);
    for (Eigen::Index k = 0; k < s.scales.size(); ++k) s.scales(k) = u(rng);
    return s;
}

} // namespace

TEST_SUITE("model") {

TEST_CASE("scale priors are normalised on the positive half-line") {
    for (const ScalePrior p : {ScalePrior{0.0, 1.0}, ScalePrior{2.5, 2.0}, ScalePrior{-1.0, 0.5}}) {
        boost::math::quadrature::exp_sinh<double> integrator;
        const double mass = integrator.integrate([&](double x) { return std::exp(p.log_density(x)); });
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(p.log_density(0.0) == -std::numeric_limits<double>::infinity());
        CHECK(p.log_density(-1.0) == -std::numeric_limits<double>::infinity());
    }
    CHECK(ScalePrior{0.0, 1.0}.log_density(1.0) == doctest::Approx(std::log(2.0 / (std::numbers::pi * 2.0))));
}

TEST_CASE("site incidence rows are one-hot") {
    const auto data = testing::small_dataset(4, 15);
    const auto spec = testing::default_spec(data);
    const auto d = build_designs(data.observations, data.sites, spec, Stage::Two);
    CHECK(d.site_incidence.rows() == 60);
    CHECK(d.site_incidence.cols() == 4);
    const Eigen::MatrixXd Z = d.site_incidence;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        CHECK(Z.row(i).sum() == 1.0);
        CHECK(Z(i, data.observations[static_cast<std::size_t>(i)].site_id) == 1.0);
    }
    CHECK(d.regional.rows() == 60);
    CHECK(d.local->rows() == 60);
    CHECK(d.local->cols() == 4 * 4 * 8);
}

TEST_CASE("stage one has no local term") {
    const auto data = testing::small_dataset(3, 10);
    const auto spec = testing::default_spec(data);
    const auto d = build_designs(data.observations, data.sites, spec, Stage::One);
    CHECK_FALSE(d.local.has_value());
    const auto model = assemble_model(d, spec);
    CHECK(model.block_index("beta_l") == -1);
    CHECK(model.scale_index("sigma_l") == -1);
    CHECK(model.n_coef() == 24 + 3 + 3);
}

TEST_CASE("single observation reproduces the hand computation") {
    nigam::ingest::Dataset data;
    data.sites = nigam::ingest::SiteRegistry({{"only", -75, 35, nigam::ingest::SourceKind::Proxy, 0.001, 0.0003}});
    data.observations = {Observation{0, 1234.5, 30.0, -0.8, 0.05}};
    KnotSettings knots;
    knots.time_span = std::make_pair(1000.0, 1500.0);
    const auto spec = testing::default_spec(data, knots);
    const auto d = build_designs(data.observations, data.sites, spec, Stage::One);
    const auto model = assemble_model(d, spec);

    Eigen::VectorXd beta = Eigen::VectorXd::LinSpaced(model.n_coef(), -0.3, 0.4);
    const double slope = beta(24), offset = beta(25);
    const auto row = nigam::basis::evaluate_row(1234.5, spec.regional);
    double expect = slope * 1234.5 + offset;
    for (int k = 0; k < row.count; ++k) expect += row.values[k] * beta(row.first + k);
    CHECK((model.design * beta)(0) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("observations outside the span are listed by row") {
    const auto data = testing::small_dataset(2, 5);
    KnotSettings knots;
    knots.time_span = std::make_pair(0.0, 2100.0);
    const auto spec = testing::default_spec(data, knots);
    std::vector<std::size_t> outside;
    for (std::size_t i = 0; i < data.observations.size(); ++i)
        if (data.observations[i].age < 0.0) outside.push_back(i);
    REQUIRE_FALSE(outside.empty());
    try {
        (void)build_designs(data.observations, data.sites, spec, Stage::One);
        FAIL("expected an error");
    } catch (const nigam::InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(std::to_string(outside.size()) + " observation(s)") == 0);
        CHECK(msg.find("row " + std::to_string(outside.front()) + " ") != std::string::npos);
    }
}

TEST_CASE("log posterior terms") {
    SUBCASE("doubling sigma_r with zero regional coefficients changes only its own terms") {
        const auto data = testing::small_dataset(2, 10);
        const auto spec = testing::default_spec(data);
        const auto model = assemble_model(build_designs(data.observations, data.sites, spec, Stage::One), spec);
        State s = initial_state(model);
        const int k = model.scale_index("sigma_r");
        const double kr = 24;
        const double a = 0.3;
        s.scales(k) = a;
        const double lp1 = log_posterior(model, s);
        s.scales(k) = 2 * a;
        const double lp2 = log_posterior(model, s);
        const double expect = -kr * std::log(2.0) + spec.priors.sigma_r.log_density(2 * a) -
                              spec.priors.sigma_r.log_density(a);
        CHECK(lp2 - lp1 == doctest::Approx(expect).epsilon(1e-10));
    }
    SUBCASE("one observation at its mean contributes -log(2 pi v)/2") {
        LinearGaussianModel m;
        m.design.resize(1, 1);
        m.design.insert(0, 0) = 1.0;
        m.response = Eigen::VectorXd::Constant(1, 0.7);
        m.known_var = Eigen::VectorXd::Constant(1, 0.04 + 0.0025);
        m.scales = {{"sigma", {0.0, 1.0}, 0.1, false}};
        m.noise_scale = 0;
        m.blocks = {{"b", 0, 1, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1), -1}};
        m.update_groups = {{0}};
        State s{Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 0.1)};
        const double v = 0.01 + 0.04 + 0.0025;
        const double prior = -0.5 * std::log(2 * std::numbers::pi) - 0.5 * 0.49 + m.scales[0].prior.log_density(0.1);
        CHECK(log_posterior(m, s) - prior == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * v)).epsilon(1e-12));
        s.scales(0) = 0.0;
        CHECK(log_posterior(m, s) == -std::numeric_limits<double>::infinity());
    }
    SUBCASE("matches an independently coded density sum") {
        nigam::ingest::Dataset data;
        data.sites = nigam::ingest::SiteRegistry({{"a", -75, 35, nigam::ingest::SourceKind::Proxy, 0.001, 0.0003},
                                                  {"b", -70, 40, nigam::ingest::SourceKind::Proxy, 0.0015, 0.0004}});
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> age(0, 2000), rsl(-2, 0), sd(0.02, 0.1);
        for (int i = 0; i < 5; ++i) data.observations.push_back({i % 2, age(rng), 30, rsl(rng), sd(rng)});
        KnotSettings knots;
        knots.regional_basis = 6;
        knots.time_span = std::make_pair(-10.0, 2010.0);
        const auto spec = testing::default_spec(data, knots);
        const auto d = build_designs(data.observations, data.sites, spec, Stage::Two);
        const auto inf = informed_for(d, rng);
        const auto model = assemble_model(d, spec, &inf);
        const State s = random_state(model, rng);

        auto lnorm = [](double x, double mu, double sd) {
            return std::log(1.0 / (sd * std::sqrt(2 * std::numbers::pi))) - (x - mu) * (x - mu) / (2 * sd * sd);
        };
        auto lcauchy = [](double x, double loc, double scale) {
            const double mass = 1.0 - (std::atan(-loc / scale) / std::numbers::pi + 0.5);
            return std::log(1.0 / (std::numbers::pi * scale * (1 + std::pow((x - loc) / scale, 2))) / mass);
        };
        const double sig_l = s.scales(0), sig = s.scales(1);
        const int kr = 6, kl = 128;
        double lp = 0.0;
        for (int i = 0; i < 5; ++i) {
            const auto& o = data.observations[static_cast<std::size_t>(i)];
            double f = 0.0;
            for (int c = 0; c < kr; ++c) f += d.regional.values(i, c) * s.coef(c);
            f += s.coef(kr + o.site_id) * o.age + s.coef(kr + 2 + o.site_id);
            for (int c = 0; c < kl; ++c) f += d.local->values(i, c) * s.coef(kr + 4 + c);
            lp += lnorm(o.rsl, f, std::sqrt(sig * sig + o.rsl_sd * o.rsl_sd));
        }
        for (int c = 0; c < kr; ++c) lp += lnorm(s.coef(c), inf.regional_mean(c), inf.regional_sd(c));
        for (int j = 0; j < 2; ++j) {
            lp += lnorm(s.coef(kr + j), spec.slope_priors[j].mean, spec.slope_priors[j].sd);
            lp += lnorm(s.coef(kr + 2 + j), inf.offset_mean(j), inf.offset_sd(j));
        }
        for (int c = 0; c < kl; ++c) lp += lnorm(s.coef(kr + 4 + c), 0.0, sig_l);
        lp += lcauchy(sig_l, 0, 1) + lcauchy(sig, 0, 1);
        CHECK(log_posterior(model, s) == doctest::Approx(lp).epsilon(1e-10));
    }
}

TEST_CASE("log posterior is finite for positive scales") {
    const auto data = testing::small_dataset(3, 8);
    const auto spec = testing::default_spec(data);
    const auto d = build_designs(data.observations, data.sites, spec, Stage::Two);
    std::mt19937_64 rng(6);
    const auto inf = informed_for(d, rng);
    const auto model = assemble_model(d, spec, &inf);
    for (int i = 0; i < 100; ++i) CHECK(std::isfinite(log_posterior(model, random_state(model, rng))));
}

TEST_CASE("shifting the data and the offset prior means shifts the mode") {
    const auto data = testing::small_dataset(3, 10);
    const auto spec = testing::default_spec(data);
    const auto d = build_designs(data.observations, data.sites, spec, Stage::Two);
    std::mt19937_64 rng(12);
    const auto inf = informed_for(d, rng);
    const auto model = assemble_model(d, spec, &inf);

    const double c = 1.75;
    auto d2 = d;
    d2.response.array() += c;
    auto inf2 = inf;
    inf2.offset_mean.array() += c;
    const auto model2 = assemble_model(d2, spec, &inf2);

    const State s = random_state(model, rng);
    State s2 = s;
    const auto& off = model.blocks[static_cast<std::size_t>(model.block_index("beta_h"))];
    s2.coef.segment(off.offset, off.size).array() += c;
    CHECK(log_posterior(model2, s2) == doctest::Approx(log_posterior(model, s)).epsilon(1e-10));

    std::vector<int> all{0, 1, 2, 3};
    const auto cond = nigam::sampler::coefficient_conditional(model, s, all);
    const auto cond2 = nigam::sampler::coefficient_conditional(model2, s, all);
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(model.n_coef());
    shift.segment(off.offset, off.size).array() = c;
    CHECK((cond2.mean - cond.mean - shift).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("stage one does not depend on the local grids") {
    const auto data = testing::small_dataset(3, 12);
    KnotSettings coarse, fine;
    fine.local_space_basis = 6;
    fine.local_time_basis = 12;
    fine.space_padding_deg = 3.0;
    const auto a = assemble_model(build_designs(data.observations, data.sites, testing::default_spec(data, coarse), Stage::One),
                                  testing::default_spec(data, coarse));
    const auto b = assemble_model(build_designs(data.observations, data.sites, testing::default_spec(data, fine), Stage::One),
                                  testing::default_spec(data, fine));
    REQUIRE(a.n_coef() == b.n_coef());
    CHECK((Eigen::MatrixXd(a.design) - Eigen::MatrixXd(b.design)).cwiseAbs().maxCoeff() == 0.0);
    std::mt19937_64 rng(1);
    const State s = random_state(a, rng);
    CHECK(log_posterior(a, s) == log_posterior(b, s));
}

TEST_CASE("stage two needs informed priors of matching size") {
    const auto data = testing::small_dataset(2, 6);
    const auto spec = testing::default_spec(data);
    const auto d = build_designs(data.observations, data.sites, spec, Stage::Two);
    CHECK_THROWS_AS(assemble_model(d, spec), nigam::InputError);
    InformedPriors bad;
    CHECK_THROWS_AS(assemble_model(d, spec, &bad), nigam::InputError);
}

TEST_CASE("mcmc settings validation") {
    McmcConfig c;
    CHECK(c.retained_per_chain() == 200);
    c.burn_in = 2000;
    CHECK_THROWS_AS(c.validate(), nigam::InputError);
    c = {};
    c.thin = 0;
    CHECK_THROWS_AS(c.validate(), nigam::InputError);
}

}
