#include <cmath>
#include <numbers>

#include "doctest.h"
#include "wfrho/core_types.hpp"
#include "wfrho/quadrature.hpp"

using namespace wfrho;
using std::numbers::pi;

TEST_CASE("velocity map examples and inverse") {
    CHECK(norm(v_of_p({0, 0, 0}, 1.0)) == 0.0);
    CHECK(v_of_p({1, 0, 0}, 1.0).x == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(v_of_p({3, 4, 0}, 0.0).x == doctest::Approx(0.6));  // massless limit: unit speed direction
    CHECK(norm(v_of_p({1e3, 0, 0}, 1.0)) < 1.0);
    double prev = 0.0;
    for (double s = 0.1; s < 50; s *= 1.7) {
        const double v = norm(v_of_p({s, 0, 0}, 2.0));
        CHECK(v > prev);
        CHECK(v < 1.0);
        prev = v;
    }
    const Vec3 v{0.3, -0.2, 0.5};
    CHECK(norm(v_of_p(p_of_v(v, 1.7), 1.7) - v) < 1e-15);
    CHECK_THROWS_AS(p_of_v({1.0, 0, 0}, 1.0), InvalidInput);
}

TEST_CASE("acceleration of the velocity map matches a finite difference") {
    const double m = 1.3;
    auto p = [](double t) { return Vec3{std::sin(t), 0.5 * t * t, std::cos(2 * t)}; };
    auto pd = [](double t) { return Vec3{std::cos(t), t, -2 * std::sin(2 * t)}; };
    const double t = 0.7, h = 1e-5;
    const Vec3 fd = (v_of_p(p(t + h), m) - v_of_p(p(t - h), m)) / (2 * h);
    CHECK(norm(accel_of(p(t), pd(t), m) - fd) < 1e-9);
}

TEST_CASE("bump density: total charge, support and symmetry") {
    for (double R : {0.05, 0.3, 1.0}) {
        for (int intervals : {512, 2048}) {
            const ChargeDensity rho = make_bump_density(R, 1.5, {}, intervals);
            // independent radial quadrature of 4 pi r^2 rho(r) on a finer composite rule
            const GaussLegendre& gl = gauss_legendre(20);
            double total = 0.0;
            const int pieces = 64;
            for (int k = 0; k < pieces; ++k) {
                const double a = R * k / pieces, b = R * (k + 1) / pieces;
                total += gl.integrate(a, b, [&](double r) { return 4 * pi * r * r * rho.value_r(r); });
            }
            CHECK(total == doctest::Approx(1.5).epsilon(1e-10));
            CHECK(rho.enclosed_charge(2 * R) == doctest::Approx(1.5).epsilon(1e-12));
        }
        const ChargeDensity rho = make_bump_density(R, 1.0);
        CHECK(rho({R, 0, 0}) == 0.0);
        CHECK(rho({0, 0, 1.01 * R}) == 0.0);
        CHECK(rho({0.3 * R, 0.4 * R, 0}) == doctest::Approx(rho({0, 0, 0.5 * R})).epsilon(1e-15));
        CHECK(rho.peak() > 0.0);
        // radial derivative against a central difference, and vanishing at the boundary
        const double r = 0.6 * R, h = 1e-6 * R;
        CHECK(rho.deriv_r(r) == doctest::Approx((rho.value_r(r + h) - rho.value_r(r - h)) / (2 * h)).epsilon(1e-6));
        CHECK(std::abs(rho.deriv_r(0.999 * R)) < 1e-100);
    }
    CHECK_THROWS_AS(make_bump_density(0.0, 1.0), InvalidInput);
    CHECK_THROWS_AS(make_bump_density(-1.0, 1.0), InvalidInput);
    CHECK(make_bump_density(0.5, 0.0).peak() == 0.0);
}

TEST_CASE("density moments against direct quadrature") {
    const ChargeDensity rho = make_bump_density(0.4, 2.0);
    const GaussLegendre& gl = gauss_legendre(40);
    for (int k = 1; k <= 3; ++k)
        for (double r : {0.05, 0.123, 0.3, 0.4, 0.9}) {
            const double top = std::min(r, 0.4);
            double ref = 0.0;
            for (int j = 0; j < 32; ++j) {
                const double a = top * j / 32, b = top * (j + 1) / 32;
                ref += gl.integrate(a, b, [&](double u) { return rho.value_r(u) * std::pow(u, k); });
            }
            CHECK(rho.moment(k, r) == doctest::Approx(ref).epsilon(1e-9));
        }
}

TEST_CASE("uniform trajectory and asymptotes") {
    const Vec3 p{0.5, 0.2, 0};
    const ChargeTrajectory u = ChargeTrajectory::uniform({1, 2, 3}, p, 1.0, 0.5);
    const Vec3 v = v_of_p(p, 1.0);
    for (double t : {-100.0, 0.0, 0.5, 3.0, 1e3}) {
        const TrajState s = u.eval(t);
        CHECK(norm(s.q - (Vec3{1, 2, 3} + v * (t - 0.5))) < 1e-12 * (1 + std::abs(t)));
        CHECK(norm(s.p - p) == 0.0);
        CHECK(norm(s.a) == 0.0);
    }
    CHECK(u.speed_bound() == doctest::Approx(norm(v)));
    CHECK(std::isinf(u.domain_begin()));
}

TEST_CASE("trajectory breakpoints are sorted and survive copies") {
    const ChargeTrajectory u = ChargeTrajectory::uniform({}, {0.1, 0, 0}, 1.0);
    CHECK(u.breakpoints().empty());
    const ChargeTrajectory b = u.with_breakpoints({0.5, -1.0, 0.5});
    CHECK(b.breakpoints() == std::vector<double>{-1.0, 0.5});
    CHECK(b.with_asymptotes(b.past(), std::nullopt).breakpoints() == b.breakpoints());
    CHECK(b.extended({1.0, {0.1, 0, 0}, {0.1, 0, 0}, {}}).breakpoints() == b.breakpoints());
    CHECK(norm(b.eval(0.3).q - u.eval(0.3).q) == 0.0);
    CHECK_THROWS_AS(u.with_breakpoints({std::nan("")}), InvalidInput);
}

TEST_CASE("trajectory Hermite interpolation reproduces a circular orbit") {
    // q = r (cos w t, sin w t, 0), speed r w = 0.5, acceleration r w^2 towards the center
    const double r = 1.0, w = 0.5, m = 1.0;
    std::vector<TrajectorySample> samples;
    const double dt = 0.02;
    for (int k = 0; k <= 200; ++k) {
        const double t = k * dt;
        const Vec3 q{r * std::cos(w * t), r * std::sin(w * t), 0};
        const Vec3 v{-r * w * std::sin(w * t), r * w * std::cos(w * t), 0};
        const Vec3 p = p_of_v(v, m);
        const double gamma = 1 / std::sqrt(1 - norm2(v));
        const Vec3 a = -q * (w * w);
        samples.push_back({t, q, p, a * (gamma * m)});  // a is normal to v, so dp/dt = gamma m a
    }
    const ChargeTrajectory traj(samples, m);
    for (double t : {0.013, 1.0, 2.345, 3.999}) {
        const TrajState s = traj.eval(t);
        const Vec3 q{r * std::cos(w * t), r * std::sin(w * t), 0};
        CHECK(norm(s.q - q) < 1e-8);
        CHECK(norm(s.a - (-q * (w * w))) < 1e-5);
        CHECK(norm(s.v - v_of_p(s.p, m)) == doctest::Approx(0.0));
    }
    CHECK_THROWS_AS(traj.eval(4.5), DomainError);
    CHECK_THROWS_AS(traj.eval(-0.1), DomainError);

    const ChargeTrajectory est = ChargeTrajectory::from_states(samples, m);
    CHECK(norm(est.eval(2.0).a - traj.eval(2.0).a) < 1e-4);
}

TEST_CASE("trajectory validation") {
    std::vector<TrajectorySample> ok{{0, {}, {}, {}}, {1, {0.1, 0, 0}, {0.1, 0, 0}, {}}};
    CHECK_NOTHROW(ChargeTrajectory(ok, 1.0));
    CHECK_THROWS_WITH_AS(ChargeTrajectory(ok, 0.0), "mass must be nonzero", InvalidInput);
    auto bad = ok;
    bad[1].t = 0.0;
    CHECK_THROWS_AS(ChargeTrajectory(bad, 1.0), InvalidInput);
    bad = ok;
    bad[1].q = {std::nan(""), 0, 0};
    CHECK_THROWS_AS(ChargeTrajectory(bad, 1.0), InvalidInput);
    CHECK_THROWS_AS(ChargeTrajectory({ok[0]}, 1.0), InvalidInput);
    // asymptote must start where the samples end
    CHECK_THROWS_AS(ChargeTrajectory(ok, 1.0, AsymptoteSpec::rest(0, {1, 0, 0})), InvalidInput);
    const ChargeTrajectory withrest(ok, 1.0, AsymptoteSpec::rest(0, {}), AsymptoteSpec::rest(1, {0.1, 0, 0}));
    CHECK(withrest.jumps().size() == 1);  // the start is already at rest
    CHECK(norm(withrest.eval(7.0).q - Vec3{0.1, 0, 0}) == 0.0);
    CHECK(norm(withrest.eval(7.0).v) == 0.0);
}

TEST_CASE("phase point validation") {
    PhasePoint ph{{{0, 0, 0}}, {{1, 0, 0}}, {}};
    CHECK_NOTHROW(ph.validate({1.0}));
    CHECK_THROWS_AS(ph.validate({0.0}), InvalidInput);
    CHECK_THROWS_AS(ph.validate({1.0, 2.0}), InvalidInput);
}

TEST_CASE("norm grid weights and discrete norm properties") {
    const NormGrid g = NormGrid::ball({0.1, 0, 0}, 2.0, 0.25);
    CHECK(g.size() > 1000);
    double vol = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK(g.mu[k] > 0.0);
        CHECK(g.w[k] == 1.0 / (1.0 + norm2(g.nodes[k])));
        vol += g.mu[k];
    }
    CHECK(vol == doctest::Approx(4.0 / 3.0 * pi * 8.0).epsilon(0.05));

    auto f = [](const Vec3& x) { return EB{{std::sin(x.y), x.z * x.x, 1.0}, {0, std::cos(x.x), x.y}}; };
    auto g2 = [](const Vec3& x) { return EB{{x.x, 0, -x.z}, {1.0, 0, 0}}; };
    auto sum = [&](const Vec3& x) { return f(x) + g2(x); };
    auto scaled = [&](const Vec3& x) { return f(x) * -3.0; };
    for (int order : {0, 1}) {
        const double nf = discrete_norm(f, g, order), ng = discrete_norm(g2, g, order);
        CHECK(nf > 0.0);
        CHECK(discrete_norm(sum, g, order) <= nf + ng + 1e-12);
        CHECK(discrete_norm(scaled, g, order) == doctest::Approx(3.0 * nf).epsilon(1e-12));
    }
    // order 1 adds the curl: curl of (x, 0, -z) is zero, curl of the constant B is zero
    CHECK(discrete_norm(g2, g, 1) == doctest::Approx(discrete_norm(g2, g, 0)).epsilon(1e-9));

    // constant unit E field: weighted integral of 1 / (1 + |x|^2) over the ball about the origin
    const NormGrid g0 = NormGrid::ball({}, 2.0, 0.05);
    auto unit = [](const Vec3&) { return EB{{1, 0, 0}, {}}; };
    const double exact = 4 * pi * (2.0 - std::atan(2.0));
    CHECK(discrete_norm(unit, g0, 0) * discrete_norm(unit, g0, 0) == doctest::Approx(exact).epsilon(0.01));

    const auto sf = sample_on_grid(f, g, 1), sg = sample_on_grid(g2, g, 1);
    CHECK(discrete_norm_diff({sf}, {sf}, g) == 0.0);
    CHECK(discrete_norm_diff({sf}, {sg}, g) > 0.0);
    CHECK_THROWS_AS(NormGrid::ball({}, -1.0, 0.1), InvalidInput);
}
