#include "nigam/basis.hpp"
#include "nigam/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace nigam::basis;

namespace {

double row_dot(const LocalRow& row, const Eigen::VectorXd& beta) {
    double s = 0.0;
    for (int k = 0; k < row.count; ++k) s += row.values[k] * beta(row.first + k);
    return s;
}

double eval(double x, const KnotGrid& g, const Eigen::VectorXd& beta) { return row_dot(evaluate_row(x, g), beta); }

KnotGrid random_grid(std::mt19937_64& rng, int degree) {
    std::uniform_real_distribution<double> lo(-2000.0, 500.0), width(50.0, 4000.0);
    std::uniform_int_distribution<int> interior(1, 30);
    const double a = lo(rng);
    return KnotGrid{a, a + width(rng), interior(rng), degree};
}

} // namespace

TEST_SUITE("basis") {

TEST_CASE("cubic on a single interval gives the Bernstein weights") {
    // The row evaluator accepts the knot-free grid that the validated
    // constructors refuse.
    const KnotGrid g{0.0, 1.0, 0, 3};
    const auto row = evaluate_row(0.5, g);
    REQUIRE(row.count == 4);
    CHECK(row.first == 0);
    const double expect[] = {0.125, 0.375, 0.375, 0.125};
    for (int k = 0; k < 4; ++k) CHECK(row.values[k] == doctest::Approx(expect[k]).epsilon(1e-14));
}

TEST_CASE("knot layout is clamped and equidistant") {
    const KnotGrid g{0.0, 10.0, 4, 3};
    const auto u = g.knots();
    REQUIRE(u.size() == 4 + 8);
    for (int i = 0; i < 4; ++i) {
        CHECK(u[i] == 0.0);
        CHECK(u[u.size() - 1 - i] == 10.0);
    }
    for (int i = 4; i < 8; ++i) CHECK(u[i] == doctest::Approx(2.0 * (i - 3)));
    CHECK(g.basis_count() == 8);
    CHECK(KnotGrid::with_basis_count(0, 1, 24, 3).basis_count() == 24);
    CHECK_THROWS_AS(KnotGrid::with_basis_count(1, 1, 24, 3), nigam::InputError);
    CHECK_THROWS_AS(KnotGrid::with_basis_count(0, 1, 4, 3), nigam::InputError);
}

TEST_CASE("rows sum to one, are nonnegative and locally supported") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        for (int degree : {2, 3}) {
            const KnotGrid g = random_grid(rng, degree);
            const auto u = g.knots();
            std::uniform_real_distribution<double> x(g.lo, g.hi);
            std::vector<double> ts(100);
            for (auto& t : ts) t = x(rng);
            ts.push_back(g.lo);
            ts.push_back(g.hi);
            const auto B = bspline_basis(ts, g);
            for (Eigen::Index i = 0; i < B.rows(); ++i) {
                CHECK(std::abs(B.values.row(i).sum() - 1.0) < 1e-10);
                for (Eigen::Index s = 0; s < B.cols(); ++s) {
                    CHECK(B.values(i, s) >= 0.0);
                    // Column s lives on [u_s, u_{s+degree+1}].
                    if (ts[i] < u[s] || ts[i] > u[s + degree + 1]) CHECK(B.values(i, s) == 0.0);
                }
            }
        }
    }
}

TEST_CASE("a cubic row at an interior knot has three nonzeros") {
    const KnotGrid g{0.0, 10.0, 4, 3};
    const auto u = g.knots();
    for (int i = 4; i < 8; ++i) {
        const auto B = bspline_basis(std::vector<double>{u[i]}, g);
        int nonzero = 0;
        for (Eigen::Index s = 0; s < B.cols(); ++s) nonzero += B.values(0, s) != 0.0;
        CHECK(nonzero == 3);
    }
}

TEST_CASE("evaluation outside the span is an error") {
    const KnotGrid g{0.0, 10.0, 4, 3};
    CHECK_THROWS_AS(bspline_basis(std::vector<double>{10.5}, g), nigam::InputError);
    CHECK_THROWS_AS(bspline_derivative_basis(std::vector<double>{-1e-6}, g), nigam::InputError);
}

TEST_CASE("Greville coefficients reproduce affine functions") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const KnotGrid g = random_grid(rng, 3);
        const auto gr = g.greville();
        const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(gr.data(), static_cast<Eigen::Index>(gr.size()));
        const Eigen::VectorXd affine = 0.002 * beta.array() - 3.0;
        std::uniform_real_distribution<double> x(g.lo, g.hi);
        for (int i = 0; i < 50; ++i) {
            const double t = x(rng);
            CHECK(eval(t, g, beta) == doctest::Approx(t).epsilon(1e-12));
            CHECK(eval(t, g, affine) == doctest::Approx(0.002 * t - 3.0).epsilon(1e-12));
            CHECK(row_dot(evaluate_derivative_row(t, g), beta) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("derivative of a constant is zero") {
    const KnotGrid g{-1000.0, 2020.0, 20, 3};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> x(g.lo, g.hi);
    std::vector<double> ts(50);
    for (auto& t : ts) t = x(rng);
    const auto D = bspline_derivative_basis(ts, g);
    const Eigen::VectorXd d = D.values * Eigen::VectorXd::Constant(g.basis_count(), 4.2);
    CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic derivative matches central differences") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const KnotGrid g = random_grid(rng, 3);
        const Eigen::VectorXd beta = Eigen::VectorXd::NullaryExpr(g.basis_count(), [&] { return n01(rng); });
        const double h = 1e-5 * (g.hi - g.lo);
        std::uniform_real_distribution<double> x(g.lo + h, g.hi - h);
        for (int i = 0; i < 100; ++i) {
            const double t = x(rng);
            const double fd = (eval(t + h, g, beta) - eval(t - h, g, beta)) / (2.0 * h);
            const double an = row_dot(evaluate_derivative_row(t, g), beta);
            CHECK(std::abs(an - fd) <= 1e-5 * std::max(std::abs(fd), 1.0 / (g.hi - g.lo)));
        }
    }
}

TEST_CASE("tensor basis") {
    const TensorGrids one{{-80, -60, 1, 2}, {25, 45, 1, 2}, {0, 2000, 1, 2}};
    CHECK(one.basis_count() == 64);

    const TensorGrids grids{{-82, -59, 2, 2}, {24, 48, 2, 2}, {-1000, 2020, 6, 2}};
    REQUIRE(grids.basis_count() == 5 * 5 * 9);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> lon(-82, -59), lat(24, 48), t(-1000, 2020), c(-1, 1);
    std::vector<double> lons(20), lats(20), ts(20);
    for (int i = 0; i < 20; ++i) {
        lons[i] = lon(rng);
        lats[i] = lat(rng);
        ts[i] = t(rng);
    }
    const auto B = tensor_basis(lons, lats, ts, grids);
    const auto D = tensor_time_derivative_basis(lons, lats, ts, grids);
    REQUIRE(B.cols() == grids.basis_count());

    SUBCASE("rows sum to one") {
        for (Eigen::Index i = 0; i < B.rows(); ++i) CHECK(B.values.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }

    Eigen::VectorXd u(5), v(5), w(9);
    for (auto* vec : {&u, &v, &w})
        for (Eigen::Index k = 0; k < vec->size(); ++k) (*vec)(k) = c(rng);
    auto separable = [&](const Eigen::VectorXd& wt) {
        Eigen::VectorXd beta(grids.basis_count());
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b)
                for (int k = 0; k < 9; ++k) beta(grids.column(a, b, k)) = u(a) * v(b) * wt(k);
        return beta;
    };

    SUBCASE("separable coefficients give the product of univariate curves") {
        const Eigen::VectorXd f = B.values * separable(w);
        for (int i = 0; i < 20; ++i) {
            const double expect = eval(lons[i], grids.lon, u) * eval(lats[i], grids.lat, v) * eval(ts[i], grids.time, w);
            CHECK(std::abs(f(i) - expect) < 1e-10);
        }
    }
    SUBCASE("constant in time has zero time derivative") {
        const Eigen::VectorXd d = D.values * separable(Eigen::VectorXd::Ones(9));
        CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("linear time factor differentiates to the spatial product") {
        const auto gr = grids.time.greville();
        const Eigen::VectorXd d = D.values * separable(Eigen::Map<const Eigen::VectorXd>(gr.data(), 9));
        for (int i = 0; i < 20; ++i)
            CHECK(std::abs(d(i) - eval(lons[i], grids.lon, u) * eval(lats[i], grids.lat, v)) < 1e-9);
    }
    SUBCASE("time derivative matches finite differences") {
        const Eigen::VectorXd beta = Eigen::VectorXd::NullaryExpr(grids.basis_count(), [&] { return c(rng); });
        const double h = 1e-5 * (grids.time.hi - grids.time.lo);
        const Eigen::VectorXd d = D.values * beta;
        for (int i = 0; i < 20; ++i) {
            std::vector<double> lo{ts[i] - h}, hi{ts[i] + h}, x{lons[i]}, y{lats[i]};
            const double fd = ((tensor_basis(x, y, hi, grids).values * beta)(0) -
                               (tensor_basis(x, y, lo, grids).values * beta)(0)) / (2 * h);
            CHECK(std::abs(d(i) - fd) <= 1e-5 * std::max(std::abs(fd), 1e-6));
        }
    }
}

}
