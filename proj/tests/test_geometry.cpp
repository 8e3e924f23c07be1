#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "wavebc/geometry.hpp"

using namespace wavebc;

namespace {
constexpr double kPi = 3.14159265358979323846;

DomainSpec interval() { return make_interval_domain(1.2, 1.0 / 400.0); }
DomainSpec disc() { return make_disc_domain(1.0, 0.45, 64, 128); }
}  // namespace

TEST_CASE("eikonal on the interval and the disc") {
    CHECK(eikonal(interval(), {0.3, 0.0}) == doctest::Approx(0.3));
    CHECK(eikonal(disc(), {0.3, 0.4}) == doctest::Approx(0.5));
    CHECK(eikonal(disc(), {0.0, 0.0}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(eikonal(interval(), {-0.1, 0.0}), OutOfDomainError);
    CHECK_THROWS_AS(eikonal(disc(), {1.2, 0.0}), OutOfDomainError);
}

TEST_CASE("semi-geodesic coordinates") {
    const SgcPoint p = sgc_inverse(interval(), {0.3, 0.0});
    CHECK(p.gamma == doctest::Approx(0.0));
    CHECK(p.tau == doctest::Approx(0.3));

    const SgcPoint d = sgc_inverse(disc(), {0.0, 0.5});
    CHECK(d.gamma == doctest::Approx(kPi / 2));
    CHECK(d.tau == doctest::Approx(0.5));

    CHECK_THROWS_AS(sgc_inverse(disc(), {0.0, 0.0}), CutLocusError);

    const Point2 x = sgc_forward(interval(), {0.0, 0.7});
    CHECK(x.x == doctest::Approx(0.7));
    const Point2 y = sgc_forward(disc(), {0.0, 0.25});
    CHECK(y.x == doctest::Approx(0.75));
    CHECK(y.y == doctest::Approx(0.0));
    CHECK_THROWS_AS(sgc_forward(disc(), {0.0, 1.0}), CutLocusError);
}

TEST_CASE("sgc round trip is the identity off the cut locus") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const DomainSpec dom = disc();
    for (int k = 0; k < 100; ++k) {
        // stay off the center
        const double r = 0.05 + 0.94 * unit(rng);
        const double th = 2.0 * kPi * unit(rng);
        const Point2 p{r * std::cos(th), r * std::sin(th)};
        const Point2 back = sgc_forward(dom, sgc_inverse(dom, p));
        CHECK(back.x == doctest::Approx(p.x).epsilon(1e-12));
        CHECK(back.y == doctest::Approx(p.y).epsilon(1e-12));
    }
    const DomainSpec iv = interval();
    for (int k = 0; k < 100; ++k) {
        const double x = 1.19 * unit(rng);
        CHECK(sgc_forward(iv, sgc_inverse(iv, {x, 0.0})).x == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("volume jacobian") {
    CHECK(jacobian_beta(interval(), {0.0, 0.37}) == doctest::Approx(1.0));
    CHECK(jacobian_beta(disc(), {1.0, 0.0}) == doctest::Approx(1.0));
    CHECK(jacobian_beta(disc(), {0.3, 0.5}) == doctest::Approx(0.5));

    SUBCASE("beta decreases in depth and integrates to the annulus area") {
        const DomainSpec dom = disc();
        double prev = 2.0;
        for (double tau = 0.0; tau < 0.9; tau += 0.1) {
            const double b = jacobian_beta(dom, {0.0, tau});
            CHECK(b < prev);
            prev = b;
        }
        // independent quadrature of int beta dGamma dtau over tau in [0, 0.35]
        const double T = 0.35;
        const double quad = 2.0 * kPi * 1.0 *
                            oracles::quad_midpoint(
                                [&](double tau) { return jacobian_beta(dom, {0.0, tau}); }, 0.0,
                                T, 4096);
        const double area = kPi * (1.0 - (1.0 - T) * (1.0 - T));
        CHECK(quad == doctest::Approx(area).epsilon(1e-10));
    }
}

TEST_CASE("interior grid carries the exact measure") {
    const InteriorGrid g1 = make_interior_grid(interval(), 0.8, 80, 1);
    CHECK(g1.cell_volume.sum() == doctest::Approx(0.8).epsilon(1e-12));

    const InteriorGrid g2 = make_interior_grid(disc(), 0.35, 64, 16);
    const double area = kPi * (1.0 - 0.65 * 0.65);
    CHECK(g2.cell_volume.sum() == doctest::Approx(area).epsilon(1e-12));
    for (int id = 0; id < g2.n_nodes(); ++id) CHECK(g2.beta(id) > 0.0);

    CHECK_THROWS_AS(make_interior_grid(disc(), 0.95, 16, 4), ConfigurationError);
    CHECK_THROWS_AS(make_interior_grid(interval(), 0.8, 80, 3), ArgumentError);
}

TEST_CASE("pattern mask is all-true below the cut-locus time") {
    const PatternMask m = make_pattern_mask(make_interior_grid(disc(), 0.35, 16, 8));
    CHECK(m.mask.all());
}

TEST_CASE("image operator") {
    const InteriorGrid gi = make_interior_grid(interval(), 0.8, 40, 1);
    const InteriorGrid gd = make_interior_grid(disc(), 0.35, 32, 8);

    SUBCASE("interval image of a constant is the constant") {
        InteriorField y = gi.make_interior_field();
        y.values.setOnes();
        const BoundaryTimeField img = image_apply(gi, y);
        CHECK((img.values.array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));
    }
    SUBCASE("disc image of a constant is beta^(1/2)") {
        InteriorField y = gd.make_interior_field();
        y.values.setOnes();
        const BoundaryTimeField img = image_apply(gd, y);
        for (int p = 0; p < gd.n_tau; ++p)
            CHECK(img.values(p, 3) ==
                  doctest::Approx(std::sqrt(1.0 - gd.tau_sample(p))).epsilon(1e-12));
    }
    SUBCASE("isometry and adjoint identities under the grid quadrature") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> gauss;
        InteriorField y = gd.make_interior_field();
        for (int i = 0; i < y.values.size(); ++i) y.values(i) = gauss(rng);
        BoundaryTimeField g = make_field(gd.control_grid());
        for (int k = 0; k < g.n_tau(); ++k)
            for (int j = 0; j < g.n_gamma(); ++j) g.values(k, j) = gauss(rng);

        const BoundaryTimeField iy = image_apply(gd, y);
        CHECK(norm(iy) == doctest::Approx(norm(y)).epsilon(1e-12));

        const InteriorField round = image_adjoint(gd, image_apply(gd, y));
        CHECK((round.values - y.values).norm() == doctest::Approx(0.0).epsilon(1e-12));

        const double lhs = inner_product(iy, g);
        const double rhs = inner_product(y, image_adjoint(gd, g));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    SUBCASE("grid quadrature of a smooth field converges to the continuum integral") {
        // ||y||_H on the coarse grid vs a refined quadrature of the closed form
        auto f = [](double tau, double th) {
            return std::cos(2.0 * tau) * (1.0 + 0.5 * std::sin(th));
        };
        const InteriorGrid coarse = make_interior_grid(disc(), 0.35, 16, 8);
        InteriorField y = coarse.make_interior_field();
        for (int p = 0; p < coarse.n_tau; ++p)
            for (int i = 0; i < coarse.n_gamma; ++i)
                y.values(coarse.node(p, i)) = f(coarse.tau_sample(p), coarse.gamma_coords(i));
        const InteriorGrid fine = make_interior_grid(disc(), 0.35, 256, 128);
        InteriorField yf = fine.make_interior_field();
        for (int p = 0; p < fine.n_tau; ++p)
            for (int i = 0; i < fine.n_gamma; ++i)
                yf.values(fine.node(p, i)) = f(fine.tau_sample(p), fine.gamma_coords(i));
        CHECK(norm(y) == doctest::Approx(norm(yf)).epsilon(2e-3));
    }
    SUBCASE("dimension mismatches are rejected") {
        InteriorField bad{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)};
        CHECK_THROWS_AS(image_apply(gd, bad), DimensionError);
        BoundaryTimeField badf = make_field(gi.control_grid());
        CHECK_THROWS_AS(image_adjoint(gd, badf), DimensionError);
    }
}
