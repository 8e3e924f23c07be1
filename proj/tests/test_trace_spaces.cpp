#include <random>

#include "doctest.h"
#include "wavebc/trace_spaces.hpp"

using namespace wavebc;

namespace {
constexpr double kPi = 3.14159265358979323846;

ControlGrid grid1(int n_tau = 64, double T = 1.0) {
    ControlGrid g;
    g.n_tau = n_tau;
    g.n_gamma = 1;
    g.dt = T / n_tau;
    g.gamma_coords = Eigen::VectorXd::Zero(1);
    g.gamma_weights = Eigen::VectorXd::Ones(1);
    return g;
}

BoundaryTimeField sample(const ControlGrid& g, const std::function<double(double)>& f) {
    BoundaryTimeField out = make_field(g);
    for (int k = 0; k < g.n_tau; ++k) out.values(k, 0) = f(g.t_sample(k));
    return out;
}

BoundaryTimeField random_field(const ControlGrid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    BoundaryTimeField out = make_field(g);
    for (int k = 0; k < g.n_tau; ++k)
        for (int j = 0; j < g.n_gamma; ++j) out.values(k, j) = gauss(rng);
    return out;
}
}  // namespace

TEST_CASE("time reversal") {
    const ControlGrid g = grid1();
    const BoundaryTimeField f = sample(g, [](double t) { return t; });
    const BoundaryTimeField yf = time_reverse(f);
    for (int k = 0; k < g.n_tau; ++k)
        CHECK(yf.values(k, 0) == doctest::Approx(1.0 - g.t_sample(k)).epsilon(1e-14));
    const BoundaryTimeField back = time_reverse(yf);
    CHECK((back.values - f.values).norm() == 0.0);

    const BoundaryTimeField h = random_field(g, 1);
    const BoundaryTimeField w = random_field(g, 2);
    CHECK(inner_product(time_reverse(h), w) == doctest::Approx(inner_product(h, time_reverse(w))));
}

TEST_CASE("cumulative time integration") {
    const ControlGrid g = grid1();
    const BoundaryTimeField one = sample(g, [](double) { return 1.0; });
    const BoundaryTimeField j1 = time_integrate(one);
    for (int k = 0; k < g.n_tau; ++k)
        CHECK(j1.values(k, 0) == doctest::Approx(g.t_sample(k)).epsilon(1e-14));

    const ControlGrid gs = grid1(128, kPi);
    const BoundaryTimeField s = sample(gs, [](double t) { return std::sin(t); });
    const BoundaryTimeField js = time_integrate(s);
    double worst = 0.0;
    for (int k = 0; k < gs.n_tau; ++k)
        worst = std::max(worst, std::abs(js.values(k, 0) - (1.0 - std::cos(gs.t_sample(k)))));
    CHECK(worst < 2.0 * gs.dt * gs.dt);

    const BoundaryTimeField z = make_field(g);
    CHECK(time_integrate(z).values.norm() == 0.0);

    SUBCASE("adjoint is the anticipating integral") {
        const BoundaryTimeField a = random_field(g, 3);
        const BoundaryTimeField b = random_field(g, 4);
        // <Jf, g> = <f, J~g> with J~ the reversed cumulative rule
        const double lhs = inner_product(time_integrate(a), b);
        const BoundaryTimeField jt = time_reverse(time_integrate(time_reverse(b)));
        CHECK(lhs == doctest::Approx(inner_product(a, jt)).epsilon(1e-12));
    }
}

TEST_CASE("odd extension and restriction") {
    const ControlGrid g = grid1();
    const BoundaryTimeField one = sample(g, [](double) { return 1.0; });
    const BoundaryTimeField s = odd_extend(one);
    CHECK(s.n_tau() == 2 * g.n_tau);
    CHECK(s.values(0, 0) == 1.0);
    CHECK(s.values(2 * g.n_tau - 1, 0) == -1.0);
    for (int k = 0; k < g.n_tau; ++k)  // odd about t = T
        CHECK(s.values(k, 0) == doctest::Approx(-s.values(2 * g.n_tau - 1 - k, 0)));

    const BoundaryTimeField f = random_field(g, 5);
    const BoundaryTimeField round = odd_restrict(odd_extend(f));
    CHECK((round.values - 2.0 * f.values).norm() == doctest::Approx(0.0));

    ControlGrid g2 = g.doubled();
    const BoundaryTimeField h = random_field(g2, 6);
    const double lhs = inner_product(odd_extend(f), h);
    const double rhs = inner_product(f, odd_restrict(h));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * norm(f) * norm(h));
}

TEST_CASE("delay shift") {
    const ControlGrid g = grid1();
    const BoundaryTimeField f = random_field(g, 7);
    CHECK((delay_shift(f, 0.0).values - f.values).norm() == 0.0);

    BoundaryTimeField pulse = make_field(g);
    const int k0 = 6;
    pulse.values(k0, 0) = 1.0;
    const BoundaryTimeField moved = delay_shift(pulse, 19 * g.dt);
    CHECK(moved.values(k0 + 19, 0) == 1.0);
    CHECK(moved.values.sum() == 1.0);

    const BoundaryTimeField ab = delay_shift(delay_shift(f, 3 * g.dt), 4 * g.dt);
    const BoundaryTimeField once = delay_shift(f, 7 * g.dt);
    CHECK((ab.values - once.values).norm() == 0.0);

    CHECK_THROWS_AS(delay_shift(f, 0.5 * g.dt), AlignmentError);
    CHECK_THROWS_AS(delay_shift(f, -g.dt), ArgumentError);
}

TEST_CASE("band and depth cutoffs") {
    const ControlGrid g = grid1();
    const BoundaryTimeField f = random_field(g, 8);
    CHECK((band_cutoff(f, g.horizon()).values - f.values).norm() == 0.0);
    CHECK(band_cutoff(f, 0.0).values.norm() == 0.0);

    const double x1 = 16 * g.dt, x2 = 40 * g.dt;
    const BoundaryTimeField a = band_cutoff(band_cutoff(f, x1), x2);
    const BoundaryTimeField b = band_cutoff(f, std::min(x1, x2));
    CHECK((a.values - b.values).norm() == 0.0);
    const BoundaryTimeField idem = band_cutoff(band_cutoff(f, x1), x1);
    CHECK((idem.values - band_cutoff(f, x1).values).norm() == 0.0);
    CHECK_THROWS_AS(band_cutoff(f, 2.0 * g.horizon()), ArgumentError);

    const DomainSpec dom = make_disc_domain(1.0, 0.45, 64, 128);
    const InteriorGrid grid = make_interior_grid(dom, 0.35, 32, 8);
    InteriorField y = grid.make_interior_field();
    y.values.setOnes();
    CHECK((depth_cutoff(grid, y, grid.T).values - y.values).norm() == 0.0);
    CHECK(depth_cutoff(grid, y, 0.0).values.norm() == 0.0);
    const double xi = 10 * grid.dtau();
    const InteriorField c1 = depth_cutoff(grid, depth_cutoff(grid, y, xi), 20 * grid.dtau());
    CHECK((c1.values - depth_cutoff(grid, y, xi).values).norm() == 0.0);

    SUBCASE("boundary subset restriction") {
        const BoundarySubset arc = BoundarySubset::arc(8, 6, 4);  // wraps around
        CHECK(arc.contains(6));
        CHECK(arc.contains(1));
        CHECK_FALSE(arc.contains(2));
        ControlGrid gd = grid.control_grid();
        BoundaryTimeField fd = make_field(gd);
        fd.values.setOnes();
        const BoundaryTimeField cut = band_cutoff(fd, gd.horizon(), arc);
        CHECK(cut.values.col(2).norm() == 0.0);
        CHECK(cut.values.col(6).norm() > 0.0);
    }
}

TEST_CASE("time derivative stencils") {
    const ControlGrid g = grid1();
    const BoundaryTimeField lin = sample(g, [](double t) { return t; });
    const BoundaryTimeField dl = time_derivative(lin);
    CHECK((dl.values.array() - 1.0).abs().maxCoeff() < 1e-12);

    const BoundaryTimeField sq = sample(g, [](double t) { return t * t; });
    const BoundaryTimeField ds = time_derivative(sq);
    for (int k = 0; k < g.n_tau; ++k)
        CHECK(ds.values(k, 0) == doctest::Approx(2.0 * g.t_sample(k)).epsilon(1e-10));

    const ControlGrid gs = grid1(128, kPi);
    const BoundaryTimeField sn = sample(gs, [](double t) { return std::sin(t); });
    const BoundaryTimeField dn = time_derivative(sn);
    double worst = 0.0;
    for (int k = 0; k < gs.n_tau; ++k)
        worst = std::max(worst, std::abs(dn.values(k, 0) - std::cos(gs.t_sample(k))));
    CHECK(worst < 4.0 * gs.dt * gs.dt);
}

TEST_CASE("nest index sets") {
    const ControlGrid g = grid1(64);
    const NestIndex nest = make_nest(g, 8);
    CHECK(nest.n_thresholds() == 9);
    CHECK(nest.index_set(0).empty());
    CHECK(nest.index_set(8).size() == 64);
    for (int m = 1; m < nest.n_thresholds(); ++m) {
        const auto prev = nest.index_set(m - 1);
        const auto cur = nest.index_set(m);
        CHECK(cur.size() > prev.size());
        CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    }
    CHECK_THROWS_AS(make_nest(g, 7), ArgumentError);
}

TEST_CASE("smooth control generation") {
    const ControlGrid g = grid1(64, 1.0);
    SmoothControlSpec spec;
    spec.shape = ControlShape::raised_cosine;
    spec.center_time = 0.5;
    spec.width = 0.4;

    const SmoothControl c = make_smooth_control(g, spec);
    for (int k = 0; k < g.n_tau; ++k)
        if (g.t_sample(k) <= 0.3) CHECK(c.f.values(k, 0) == 0.0);
    CHECK(c.value(0.0, 0.5) == doctest::Approx(1.0));

    SUBCASE("analytic second derivative, not a difference") {
        const double t = g.t_sample(33);
        const double k2 = std::pow(2.0 * kPi / spec.width, 2);
        const double expected = -0.5 * k2 * std::cos(2.0 * kPi * (t - 0.5) / spec.width);
        CHECK(c.f_tt.values(33, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("class constraints") {
        SmoothControlSpec bad = spec;
        bad.center_time = 0.1;  // support would cross t = 0
        CHECK_THROWS_AS(make_smooth_control(g, bad), ArgumentError);
        SmoothControlSpec m0 = spec;
        m0.control_class = ControlClass::M0;
        m0.center_time = 0.9;  // support would touch t = T
        CHECK_THROWS_AS(make_smooth_control(g, m0), ArgumentError);
        m0.center_time = 0.5;
        const SmoothControl ok = make_smooth_control(g, m0);
        CHECK(ok.f.values(0, 0) == 0.0);
        CHECK(ok.f.values(g.n_tau - 1, 0) == 0.0);
    }
    SUBCASE("families spread their centers") {
        const auto fam = make_smooth_controls(g, spec, 4);
        CHECK(fam.size() == 4);
        for (std::size_t i = 1; i < fam.size(); ++i)
            CHECK(fam[i].spec.center_time > fam[i - 1].spec.center_time);
    }
}
