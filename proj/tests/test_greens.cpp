#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "wfrho/greens.hpp"
#include "wfrho/maxwell.hpp"

using namespace wfrho;
using std::numbers::pi;

namespace {

const SphereQuadRule& rule() {
    static const SphereQuadRule r = SphereQuadRule::product(16, 32);
    return r;
}

// smooth bump supported in the ball of radius a about c
ScalarField3 bump_at(const Vec3& c, double a) {
    return {[c, a](const Vec3& x) {
                const double u2 = norm2(x - c) / (a * a);
                return u2 < 1.0 ? std::exp(-1.0 / (1.0 - u2)) : 0.0;
            },
            {}};
}

}  // namespace

TEST_CASE("sphere rule weights and exactness") {
    double w = 0.0;
    for (double x : rule().weights) w += x;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    // mean of |y|^2 over a sphere of radius r about c is |c|^2 + r^2
    const Vec3 c{0.3, -1.0, 2.0};
    auto sq = [](const Vec3& y) { return norm2(y); };
    CHECK(sphere_mean(sq, c, 0.7, rule()) == doctest::Approx(norm2(c) + 0.49).epsilon(1e-13));
    // ball mean of |y - c|^2 is 3 r^2 / 5
    BallQuadRule ball = BallQuadRule::product(8, rule());
    auto sqc = [&](const Vec3& y) { return norm2(y - c); };
    CHECK(ball_mean(sqc, c, 2.0, ball) == doctest::Approx(3.0 * 4.0 / 5.0).epsilon(1e-13));
}

TEST_CASE("mean value property for harmonic functions") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Vec3 pole{3, 3, 3};
    auto h1 = [](const Vec3& x) { return x.x * x.x - x.y * x.y + x.x * x.y * x.z; };
    auto h2 = [&](const Vec3& x) { return 1.0 / norm(x - pole); };
    for (int k = 0; k < 20; ++k) {
        const Vec3 c{U(rng), U(rng), U(rng)};
        const double r = 0.1 + 0.8 * std::abs(U(rng));
        CHECK(sphere_mean(h1, c, r, rule()) == doctest::Approx(h1(c)).epsilon(1e-12));
        CHECK(sphere_mean(h2, c, r, rule()) == doctest::Approx(h2(c)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(sphere_mean(h1, {}, -1.0, rule()), InvalidInput);
}

TEST_CASE("propagator is odd in time and vanishes at t = 0") {
    const ScalarField3 f{[](const Vec3& x) { return std::cos(x.x) * std::exp(-norm2(x)); }, {}};
    const Vec3 x{0.2, 0.1, -0.3};
    for (double t : {0.1, 0.5, 1.7}) CHECK(K_conv(f, -t, x, rule()) == doctest::Approx(-K_conv(f, t, x, rule())));
    CHECK(K_conv(f, 0.0, x, rule()) == 0.0);
}

TEST_CASE("strong Huygens support of the propagator") {
    const Vec3 c{0.5, 0.0, 0.0};
    const double a = 0.3;
    const ScalarField3 f = bump_at(c, a);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    int inside = 0, outside = 0;
    for (int k = 0; k < 200; ++k) {
        const Vec3 x{U(rng), U(rng), U(rng)};
        const double t = U(rng);
        const double d = norm(x - c);
        const double val = K_conv(f, t, x, rule());
        if (d > std::abs(t) + a || d < std::abs(t) - a) {
            CHECK(val == 0.0);
            ++outside;
        } else {
            ++inside;
        }
    }
    CHECK(outside > 50);
    CHECK(inside > 10);
}

TEST_CASE("short-time limits of the propagator") {
    // K_t f / t -> f and d/dt K_t f -> f with errors of order t^2
    const ScalarField3 f{[](const Vec3& x) { return std::sin(x.x) * std::cos(2 * x.y) + x.z * x.z; },
                         [](const Vec3& x) { return -5.0 * std::sin(x.x) * std::cos(2 * x.y) + 2.0; }};
    const Vec3 x{0.3, -0.4, 0.5};
    GreensOptions opts;
    std::vector<double> err_k, err_dt;
    const std::vector<double> ts{1e-2, 5e-3, 2.5e-3};
    for (double t : ts) {
        err_k.push_back(std::abs(K_conv(f, t, x, opts.sphere) / t - f.value(x)));
        err_dt.push_back(std::abs(dtK_conv(f, t, x, opts) - f.value(x)));
    }
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        CHECK(std::log(err_k[i] / err_k[i + 1]) / std::log(2.0) == doctest::Approx(2.0).epsilon(0.05));
        CHECK(std::log(err_dt[i] / err_dt[i + 1]) / std::log(2.0) == doctest::Approx(2.0).epsilon(0.05));
    }
    // leading coefficients t^2/6 and t^2/2 times the Laplacian
    CHECK(err_dt[0] / err_k[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("Kirchhoff formula reproduces a plane wave") {
    const Vec3 k{1.0, -2.0, 0.5};
    const double w = norm(k);
    const ScalarField3 A0{[k](const Vec3& x) { return std::sin(dot(k, x)); },
                          [k](const Vec3& x) { return -norm2(k) * std::sin(dot(k, x)); }};
    const ScalarField3 dA0{[k, w](const Vec3& x) { return -w * std::cos(dot(k, x)); }, {}};
    GreensOptions opts(24, 48, 24, 16);
    for (double t : {-1.3, -0.2, 0.4, 1.1}) {
        const Vec3 x{0.1, 0.7, -0.2};
        CHECK(kirchhoff_homogeneous(A0, dA0, t, x, opts) == doctest::Approx(std::sin(dot(k, x) - w * t)).epsilon(1e-9));
    }
    // the stencil Laplacian gives the same result to stencil accuracy
    ScalarField3 A0s = A0;
    A0s.laplacian = nullptr;
    opts.h_stencil = 1e-4;
    const Vec3 x{0.1, 0.7, -0.2};
    CHECK(kirchhoff_homogeneous(A0s, dA0, 0.8, x, opts) == doctest::Approx(std::sin(dot(k, x) - w * 0.8)).epsilon(1e-6));
    opts.h_stencil = 0.0;
    CHECK_THROWS_AS(kirchhoff_homogeneous(A0s, dA0, 0.8, x, opts), InvalidInput);
}

TEST_CASE("free Maxwell evolution: vacuum plane wave and static Coulomb data") {
    GreensOptions opts(24, 48, 24, 24, 1e-4);
    // E = y^ cos(z - t), B = -x^ cos(z - t) travels along +z
    const VectorField3 E0{[](const Vec3& x) { return Vec3{0, std::cos(x.z), 0}; },
                          [](const Vec3& x) { return Vec3{0, -std::cos(x.z), 0}; },
                          [](const Vec3& x) { return Vec3{std::sin(x.z), 0, 0}; }};
    const VectorField3 B0{[](const Vec3& x) { return Vec3{-std::cos(x.z), 0, 0}; },
                          [](const Vec3& x) { return Vec3{std::cos(x.z), 0, 0}; },
                          [](const Vec3& x) { return Vec3{0, std::sin(x.z), 0}; }};
    const VectorField3 none{[](const Vec3&) { return Vec3{}; }, {}, {}};
    const Vec3 x{0.2, -0.1, 0.4};
    for (double t : {-0.7, 0.3, 1.2}) {
        const EB f = free_maxwell_evolve(E0, B0, none, t, x, opts);
        CHECK(norm(f.E - Vec3{0, std::cos(x.z - t), 0}) < 1e-9);
        CHECK(norm(f.B - Vec3{-std::cos(x.z - t), 0, 0}) < 1e-9);
    }

    // Coulomb data of a smooth charge is curl free with B = 0, so it is stationary under the free group
    const ChargeDensity rho = make_bump_density(0.5, 1.0);
    const Vec3 q{0.1, 0.0, 0.0};
    const VectorField3 Ec{[&](const Vec3& y) { return coulomb_field(rho, q, y).E; },
                          [&](const Vec3& y) { return rho.gradient(y - q) * (4 * pi); },
                          [](const Vec3&) { return Vec3{}; }};
    const VectorField3 gd{[&](const Vec3& y) { return rho.gradient(y - q) * (4 * pi); }, {}, {}};
    for (double t : {0.2, 0.6, -0.9})
        for (Vec3 y : {Vec3{0.3, 0.2, 0.0}, Vec3{1.2, -0.3, 0.4}}) {
            const EB f = free_maxwell_evolve(Ec, none, gd, t, y, opts);
            const Vec3 ref = coulomb_field(rho, q, y).E;
            CHECK(norm(f.E - ref) < 2e-4 * norm(ref));
            CHECK(norm(f.B) < 1e-12);
        }
}
