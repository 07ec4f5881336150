#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "wfrho/maxwell.hpp"
#include "wfrho/quadrature.hpp"

using namespace wfrho;
using std::numbers::pi;

namespace {

// Smooth bounded path q(t) = (0.2 sin t, 0.05 t^2, 0.1 (1 - cos t)) sampled with analytic momenta.
std::shared_ptr<const ChargeTrajectory> wiggle(double t0, double t1, double dt = 0.01) {
    auto q = [](double t) { return Vec3{0.2 * std::sin(t), 0.05 * t * t, 0.1 * (1 - std::cos(t))}; };
    auto v = [](double t) { return Vec3{0.2 * std::cos(t), 0.1 * t, 0.1 * std::sin(t)}; };
    auto p = [&](double t) { return p_of_v(v(t), 1.0); };
    std::vector<TrajectorySample> s;
    const int n = static_cast<int>(std::lround((t1 - t0) / dt));
    for (int k = 0; k <= n; ++k) {
        const double t = t0 + (t1 - t0) * k / n, h = 1e-5;
        s.push_back({t, q(t), p(t), (p(t + h) - p(t - h)) / (2 * h)});
    }
    return std::make_shared<ChargeTrajectory>(std::move(s), 1.0);
}

// Closed-form field of a point charge in uniform motion, evaluated from its present position.
EB boosted_point(const Vec3& r, const Vec3& v) {
    const double v2 = norm2(v);
    const double rn = norm(r);
    const double sin2 = v2 > 0 ? norm2(cross(r, v)) / (rn * rn * v2) : 0.0;
    const Vec3 E = r * ((1 - v2) / (rn * rn * rn * std::pow(1 - v2 * sin2, 1.5)));
    return {E, cross(v, E)};
}

}  // namespace

TEST_CASE("shell means against direct axisymmetric quadrature") {
    // the sphere mean of an axisymmetric function is half the integral over the polar cosine
    const ChargeDensity rho = make_bump_density(0.5, 1.0);
    const GaussLegendre& gl = gauss_legendre(20);
    auto polar_mean = [&](auto f) {
        double acc = 0.0;
        for (int k = 0; k < 256; ++k) acc += gl.integrate(-1.0 + k / 128.0, -1.0 + (k + 1) / 128.0, f);
        return 0.5 * acc;
    };
    for (double d : {0.05, 0.3, 0.6}) {
        for (double r : {0.02, 0.2, 0.45, 0.7, 0.9}) {
            // sphere point at polar cosine c about the axis towards the density center at distance d
            auto gap = [&](double c) { return std::sqrt(std::max(0.0, r * r + d * d - 2 * r * d * c)); };
            const double m0 = polar_mean([&](double c) { return rho.value_r(gap(c)); });
            const double mo = polar_mean([&](double c) { return rho.value_r(gap(c)) * c; });
            // grad rho at the sphere point projected on the axis: rho'(g) (r c - d) / g
            const double mg = polar_mean([&](double c) {
                const double g = gap(c);
                return g > 0 ? rho.deriv_r(g) * (r * c - d) / g : 0.0;
            });
            const ShellMeans m = shell_means(rho, r, d);
            const double scale = rho.peak() + std::abs(rho.deriv_r(0.3));
            CHECK(std::abs(m.m0 - m0) < 1e-7 * scale);
            CHECK(std::abs(m.m_omega - mo) < 1e-7 * scale);
            CHECK(std::abs(m.m_grad - mg) < 1e-7 * scale);
        }
    }
}

TEST_CASE("light-cone times of static and uniform trajectories") {
    const ChargeTrajectory rest = ChargeTrajectory::at_rest({0, 0, 0}, 1.0);
    CHECK(lightcone_time(rest, {2, 0, 0}, 0.0, {}, TimeSign::retarded) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(lightcone_time(rest, {0, 2, 0}, 0.0, {}, TimeSign::advanced) == doctest::Approx(2.0).epsilon(1e-12));
    // with an offset point z the distance is |x - z|
    CHECK(lightcone_time(rest, {2, 0, 0}, 1.0, {0.5, 0, 0}, TimeSign::retarded) == doctest::Approx(-0.5));

    // charge moving along x with speed v: solve (t - s)^2 = |x - v s e_x|^2 in closed form
    const double v = 0.6;
    const ChargeTrajectory u = ChargeTrajectory::uniform({0, 0, 0}, p_of_v({v, 0, 0}, 1.0), 1.0);
    const Vec3 x{1.0, 1.5, -0.3};
    const double t = 0.4;
    // (1 - v^2) s^2 - 2 (t - v x1) s + (t^2 - |x|^2) = 0
    const double a = 1 - v * v, b = -2 * (t - v * x.x), c = t * t - norm2(x);
    const double disc = std::sqrt(b * b - 4 * a * c);
    const double s_ret = (-b - disc) / (2 * a), s_adv = (-b + disc) / (2 * a);
    CHECK(lightcone_time(u, x, t, {}, TimeSign::retarded) == doctest::Approx(s_ret).epsilon(1e-12));
    CHECK(lightcone_time(u, x, t, {}, TimeSign::advanced) == doctest::Approx(s_adv).epsilon(1e-12));
    // point ahead of the charge at distance a: -s = a - v s gives s = -a / (1 - v)
    const Vec3 ahead{2.0 * (1 - v), 0, 0};
    CHECK(lightcone_time(u, ahead, 0.0, {}, TimeSign::retarded) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("Coulomb field: shell theorem and Gauss law") {
    const ChargeDensity rho = make_bump_density(0.3, 2.0);
    const Vec3 q{0.1, -0.2, 0.3};
    for (Vec3 x : {Vec3{1, 0, 0}, Vec3{-0.5, 0.4, 2.0}}) {
        const Vec3 r = x - q;
        const EB f = coulomb_field(rho, q, x);
        CHECK(norm(f.E - r * (2.0 / std::pow(norm(r), 3))) < 1e-12 * norm(f.E));
        CHECK(norm(f.B) == 0.0);
    }
    auto E = [&](const Vec3& y) { return coulomb_field(rho, q, y).E; };
    for (Vec3 x : {Vec3{0.1, -0.2, 0.3}, Vec3{0.2, -0.1, 0.35}, Vec3{0.3, -0.2, 0.3}}) {
        CHECK(stencil_div(E, x, 1e-4) == doctest::Approx(4 * pi * rho(x - q)).epsilon(1e-6));
        CHECK(norm(stencil_curl(E, x, 1e-4)) < 1e-6);
    }
}

TEST_CASE("static Lienard-Wiechert field equals the Coulomb field") {
    const ChargeDensity rho = make_bump_density(0.2, 1.0);
    const Vec3 q{0.05, 0.0, -0.1};
    const ChargeTrajectory rest = ChargeTrajectory::at_rest(q, 1.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-0.6, 0.6);
    for (int k = 0; k < 20; ++k) {
        const Vec3 x = q + Vec3{U(rng), U(rng), U(rng)};
        const Vec3 ref = coulomb_field(rho, q, x).E;
        for (TimeSign sg : {TimeSign::retarded, TimeSign::advanced}) {
            const EB f = lw_field(rest, rho, 0.7, x, sg);
            CHECK(norm(f.E - ref) <= 1e-6 * norm(ref) + 1e-12);
            CHECK(norm(f.B) <= 1e-9 * norm(ref) + 1e-12);
        }
    }
}

TEST_CASE("uniform Lienard-Wiechert field equals the smeared boosted Coulomb field") {
    const ChargeDensity rho = make_bump_density(0.2, 1.0);
    const Vec3 v{0.5, 0.0, 0.0};
    const ChargeTrajectory u = ChargeTrajectory::uniform({0, 0, 0}, p_of_v(v, 1.0), 1.0);
    const BallQuadRule ball = BallQuadRule::product(24, SphereQuadRule::product(24, 48));
    const double vol = 4.0 / 3.0 * pi * std::pow(rho.R(), 3);
    const double t = 0.3;
    for (Vec3 x : {Vec3{0.7, 0.1, 0.0}, Vec3{-0.2, 0.5, 0.3}, Vec3{0.15, 0.0, -0.45}}) {
        EB ref;
        for (std::size_t k = 0; k < ball.points.size(); ++k) {
            const Vec3 y = ball.points[k] * rho.R();
            ref += boosted_point(x - u.position(t) - y, v) * (ball.weights[k] * vol * rho(y));
        }
        const EB ret = lw_field(u, rho, t, x, TimeSign::retarded);
        const EB adv = lw_field(u, rho, t, x, TimeSign::advanced);
        CHECK(norm(ret.E - ref.E) < 1e-6 * norm(ref.E));
        CHECK(norm(ret.B - ref.B) < 1e-6 * norm(ref.E));
        CHECK(norm(adv.E - ref.E) < 1e-6 * norm(ref.E));
        // independent route: smeared point-charge formula
        const EB pt = lw_field(u, rho, t, x, TimeSign::retarded, {}, LwRoute::smeared_point);
        CHECK(norm(pt.E - ref.E) < 1e-4 * norm(ref.E));
    }
}

TEST_CASE("accelerated Lienard-Wiechert fields: route agreement and Maxwell equations") {
    const ChargeDensity rho = make_bump_density(0.25, 1.0);
    const auto traj = wiggle(-6.0, 6.0);
    const auto full = std::make_shared<ChargeTrajectory>(traj->with_asymptotes(
        AsymptoteSpec::uniform(-6.0, traj->position(-6.0), traj->eval(-6.0).p),
        AsymptoteSpec::uniform(6.0, traj->position(6.0), traj->eval(6.0).p)));
    for (Vec3 x : {Vec3{0.8, 0.2, 0.1}, Vec3{-0.4, 0.3, -0.5}}) {
        const EB a = lw_field(*full, rho, 0.5, x, TimeSign::retarded);
        const EB b = lw_field(*full, rho, 0.5, x, TimeSign::retarded, {}, LwRoute::smeared_point);
        CHECK(norm(a.E - b.E) < 1e-4 * norm(a.E));
        CHECK(norm(a.B - b.B) < 1e-4 * norm(a.E));
    }
    for (TimeSign sg : {TimeSign::retarded, TimeSign::advanced}) {
        const LwField F(full, rho, sg);
        for (Vec3 x : {Vec3{0.1, 0.1, 0.05}, Vec3{0.6, -0.2, 0.3}}) {
            const MaxwellResidual r = maxwell_residual(F, rho, *full, 0.4, x, 1e-3, 1e-3);
            const double scale = norm(F.eval(0.4, x).E) + 4 * pi * rho.peak() * 0.1;
            CHECK(r.max() < 1e-4 * scale);
        }
    }
}

TEST_CASE("Huygens truncation: the source integral ignores far-past data") {
    const ChargeDensity rho = make_bump_density(0.1, 1.0);
    const auto traj = wiggle(-6.0, 1.0);
    const Vec3 x{0.3, 0.0, 0.0};
    // the retarded window of (t, x) lies within roughly |x - q| + R of t
    const EB all = source_integral(rho, *traj, -6.0, 0.8, 0.8, x, {});
    const EB late = source_integral(rho, *traj, -1.0, 0.8, 0.8, x, {});
    CHECK(norm(all.E - late.E) == 0.0);
    CHECK(norm(all.E) > 0.0);
}

TEST_CASE("Maxwell solution: source identity matches the literal Kirchhoff evaluation") {
    const ChargeDensity rho = make_bump_density(0.3, 1.0);
    const auto traj = wiggle(-1.0, 1.5);
    const double t0 = 0.0;
    const auto F0 = std::make_shared<CoulombField>(rho, traj->position(t0));
    FieldQuad quad;
    quad.greens = GreensOptions(64, 128, 64, 16, 1e-3);  // the literal route converges slowly
    const MaxwellSolution sol(F0, t0, traj, rho, quad);
    CHECK(sol.uses_source_identity());
    for (double t : {0.3, -0.4, 0.9})
        for (Vec3 x : {Vec3{0.2, 0.1, 0.0}, Vec3{0.5, -0.3, 0.2}}) {
            const EB fast = sol.eval(t, x);
            const EB slow = sol.eval_generic(t, x);
            const double scale = rho.e() / (rho.R() * rho.R());
            // the literal route reaches about 1e-4 of the field scale at this order
            CHECK(norm(fast.E - slow.E) < 3e-4 * scale);
            CHECK(norm(fast.B - slow.B) < 3e-4 * scale);
            // the boundary-data part equals free Coulomb evolution plus the current kick
            const EB kick = coulomb_kirchhoff_with_kick(rho, traj->position(t0), traj->eval(t0).v, t0, t, x);
            const EB rebuilt = kick + source_integral(rho, *traj, t0, t, t, x, quad);
            CHECK(norm(rebuilt.E - fast.E) < 1e-6 * scale);
        }
    CHECK(norm(sol.eval(t0, {0.4, 0, 0}).E - F0->eval(t0, {0.4, 0, 0}).E) == 0.0);
}

TEST_CASE("Maxwell solution satisfies the Maxwell equations with constraints") {
    const ChargeDensity rho = make_bump_density(0.3, 1.0);
    const auto traj = wiggle(-1.0, 1.5);
    const auto F0 = std::make_shared<CoulombField>(rho, traj->position(0.0));
    const MaxwellSolution sol(F0, 0.0, traj, rho);
    for (double t : {0.5, -0.6, 1.2})
        for (Vec3 x : {Vec3{0.1, 0.1, 0.0}, Vec3{0.4, 0.2, -0.1}}) {
            const MaxwellResidual r = maxwell_residual(sol, rho, *traj, t, x, 1e-3, 1e-3);
            CHECK(r.max() < 1e-4 * (4 * pi * rho.peak()));
        }
}

TEST_CASE("field evaluators: superposition sources and the near-field guard") {
    const ChargeDensity rho = make_bump_density(0.2, 1.0);
    const auto a = std::make_shared<CoulombField>(rho, Vec3{0, 0, 0});
    const auto b = std::make_shared<CoulombField>(rho, Vec3{1, 0, 0});
    const Superposition s({{0.25, a}, {0.75, b}});
    CHECK(s.sources().size() == 2);
    CHECK(s.sources()[1].weight == 0.75);
    const Vec3 x{0.3, 0.4, 0};
    CHECK(norm(s.eval(0, x).E - (a->eval(0, x).E * 0.25 + b->eval(0, x).E * 0.75)) < 1e-15);
    CHECK(s.divergence_source(0, {0.05, 0, 0}) == doctest::Approx(4 * pi * 0.25 * rho({0.05, 0, 0})));
    const ScaledField sc(2.0, a);
    CHECK(sc.sources()[0].weight == 2.0);

    const ChargeTrajectory rest = ChargeTrajectory::at_rest({0, 0, 0}, 1.0);
    CHECK_THROWS_AS(lw_point_integrand(rest, 0.0, {0, 0, 0}, {0, 0, 0}, TimeSign::retarded), SolverAbort);
}
