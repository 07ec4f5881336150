#include <atomic>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "wfrho/mlsi.hpp"
#include "wfrho/quadrature.hpp"

using namespace wfrho;
using std::numbers::pi;

namespace {

PhasePoint coulomb_start(const std::vector<ChargeSpec>& ch, std::vector<Vec3> q, std::vector<Vec3> p) {
    PhasePoint ph{std::move(q), std::move(p), {}};
    for (std::size_t i = 0; i < ch.size(); ++i) ph.fields.push_back(std::make_shared<CoulombField>(ch[i].rho, ph.q[i]));
    return ph;
}

std::vector<ChargeSpec> pair_of(double R, double e1 = 1.0, double e2 = 1.0) {
    return {{1.0, make_bump_density(R, e1)}, {1.0, make_bump_density(R, e2)}};
}

// Records the latest time at which it was evaluated.
class SpyField final : public FieldEvaluator {
public:
    explicit SpyField(FieldPtr inner) : inner_(std::move(inner)) {}
    EB eval(double t, const Vec3& x) const override {
        double cur = latest.load();
        while (t > cur && !latest.compare_exchange_weak(cur, t)) {}
        return inner_->eval(t, x);
    }
    FieldKind kind() const override { return inner_->kind(); }
    std::vector<SourceTerm> sources() const override { return inner_->sources(); }
    mutable std::atomic<double> latest{-1e300};

private:
    FieldPtr inner_;
};

}  // namespace

TEST_CASE("smear rule integrates the density") {
    const ChargeDensity rho = make_bump_density(0.2, 1.5);
    const SmearRule r = SmearRule::build(rho, 3, 3, 6);
    double w = 0.0;
    Vec3 dipole;
    for (std::size_t k = 0; k < r.z.size(); ++k) {
        w += r.w[k];
        dipole += r.z[k] * r.w[k];
        CHECK(norm(r.z[k]) < 0.2);
    }
    CHECK(w == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(norm(dipole) < 1e-14);
}

TEST_CASE("Lorentz force: empty sum, static Coulomb pair and symmetry") {
    const double R = 0.05, d = 20 * R;
    const auto ch = pair_of(R);
    const PhasePoint ph = coulomb_start(ch, {{0, 0, 0}, {d, 0, 0}}, {{}, {}});
    const SmearRule rule = SmearRule::build(ch[0].rho, 3, 3, 6);
    const Vec3 f0 = lorentz_force(0, 0.0, ph.q[0], {}, ph.fields, rule);
    const Vec3 f1 = lorentz_force(1, 0.0, ph.q[1], {}, ph.fields, rule);
    // oracle: double quadrature of the smeared Coulomb interaction with an independent fine rule
    const BallQuadRule ball = BallQuadRule::product(48, SphereQuadRule::product(8, 16));
    const double vol = 4.0 / 3.0 * pi * R * R * R;
    Vec3 ref;
    for (std::size_t k = 0; k < ball.points.size(); ++k) {
        const Vec3 z = ball.points[k] * R;
        ref += coulomb_field(ch[1].rho, ph.q[1], ph.q[0] + z).E * (ball.weights[k] * vol * ch[0].rho(z));
    }
    CHECK(norm(f0 - ref) < 1e-6 * norm(ref));
    CHECK(norm(f0) == doctest::Approx(1.0 / (d * d)).epsilon(1e-6));
    CHECK(f0.x < 0.0);  // repulsive
    CHECK(std::abs(f0.y) + std::abs(f0.z) < 1e-12);
    CHECK(norm(f0 + f1) < 1e-9 * norm(f0));
    // a single charge feels nothing
    CHECK(norm(lorentz_force(0, 0.0, ph.q[0], {}, {ph.fields[0]}, rule)) == 0.0);
}

TEST_CASE("single charge moves uniformly in both time directions") {
    const std::vector<ChargeSpec> ch{{1.0, make_bump_density(0.1, 1.0)}};
    const Vec3 p0{1, 0, 0};
    const PhasePoint ph = coulomb_start(ch, {{0.3, 0, 0}}, {p0});
    MlsiConfig cfg;
    cfg.dt = 0.1;
    for (double target : {10.0, -3.0}) {
        const MlsiSolution sol = mlsi_integrate(ch, ph, 0.0, target, cfg);
        const Vec3 v = v_of_p(p0, 1.0);
        for (double t : {target * 0.37, target}) {
            const TrajState s = sol.trajectories[0]->eval(t);
            CHECK(norm(s.p - p0) <= 1e-10);
            CHECK(norm(s.q - (Vec3{0.3, 0, 0} + v * t)) <= 1e-8);
        }
        CHECK(sol.max_speed == doctest::Approx(1.0 / std::sqrt(2.0)));
    }
}

TEST_CASE("constraint checks accept Coulomb data and reject corrupted data") {
    const auto ch = pair_of(0.1);
    PhasePoint ph = coulomb_start(ch, {{-0.5, 0, 0}, {0.5, 0, 0}}, {{0, 0.1, 0}, {0, -0.1, 0}});
    MlsiConfig cfg;
    cfg.dt = 0.05;
    cfg.constraint_every = 4;
    const MlsiSolution sol = mlsi_integrate(ch, ph, 0.0, 1.5, cfg);
    CHECK(sol.constraints.size() >= 3);
    for (const auto& c : sol.constraints) CHECK(c.residual < 1e-4);
    CHECK(constraint_residual(sol, 0.77) < 1e-4);

    // Coulomb field anchored at the wrong place
    ph.fields[1] = std::make_shared<CoulombField>(ch[1].rho, Vec3{0.55, 0, 0});
    CHECK_THROWS_AS(mlsi_integrate(ch, ph, 0.0, 1.0, cfg), ConstraintViolation);
}

TEST_CASE("momentum change equals the time integral of the recorded forces") {
    const auto ch = pair_of(0.1);
    const PhasePoint ph = coulomb_start(ch, {{-0.4, 0, 0}, {0.4, 0, 0}}, {{0, 0.2, 0}, {0, -0.2, 0}});
    MlsiConfig cfg;
    cfg.dt = 0.02;
    const MlsiSolution sol = mlsi_integrate(ch, ph, 0.0, 1.2, cfg);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& s = sol.trajectories[i]->samples();
        // trapezoid rule with the Euler-Maclaurin endpoint correction
        Vec3 integral;
        for (std::size_t k = 0; k + 1 < s.size(); ++k) {
            const double h = s[k + 1].t - s[k].t;
            integral += (s[k].pdot + s[k + 1].pdot) * (0.5 * h);
        }
        const Vec3 fd_end = (s.back().pdot - s[s.size() - 2].pdot) / (s.back().t - s[s.size() - 2].t);
        const Vec3 fd_start = (s[1].pdot - s[0].pdot) / (s[1].t - s[0].t);
        integral -= (fd_end - fd_start) * (cfg.dt * cfg.dt / 12.0);
        const Vec3 dp = s.back().p - s.front().p;
        CHECK(norm(integral - dp) < 1e-5 * norm(dp));
    }
}

TEST_CASE("forward then backward integration returns to the start") {
    const auto ch = pair_of(0.1);
    const PhasePoint ph = coulomb_start(ch, {{-0.5, 0, 0}, {0.5, 0.1, 0}}, {{0.1, 0.1, 0}, {0, -0.1, 0}});
    std::vector<double> errs;
    for (double dt : {0.1, 0.05}) {
        MlsiConfig cfg;
        cfg.dt = dt;
        const MlsiSolution fwd = mlsi_integrate(ch, ph, 0.0, 1.5, cfg);
        // restart from the end state with the evolved fields as initial data
        PhasePoint end;
        for (std::size_t i = 0; i < 2; ++i) {
            const TrajState s = fwd.trajectories[i]->eval(1.5);
            end.q.push_back(s.q);
            end.p.push_back(s.p);
        }
        end.fields = fwd.fields;
        const MlsiSolution back = mlsi_integrate(ch, end, 1.5, 0.0, cfg);
        double err = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
            const TrajState s = back.trajectories[i]->eval(0.0);
            err = std::max({err, norm(s.q - ph.q[i]), norm(s.p - ph.p[i])});
        }
        errs.push_back(err);
    }
    CHECK(errs[0] < 1e-5);
    CHECK(errs[1] < errs[0] / 6.0);
}

TEST_CASE("convergence order under step refinement") {
    const auto ch = pair_of(0.1);
    const PhasePoint ph = coulomb_start(ch, {{-0.4, 0, 0}, {0.4, 0, 0}}, {{0, 0.2, 0}, {0, -0.2, 0}});
    auto end_state = [&](double dt) {
        MlsiConfig cfg;
        cfg.dt = dt;
        cfg.constraint_every = 0;
        const MlsiSolution sol = mlsi_integrate(ch, ph, 0.0, 1.6, cfg);
        return std::pair{sol.trajectories[0]->eval(1.6).q, sol.trajectories[0]->eval(1.6).p};
    };
    const auto ref = end_state(0.0125);
    const auto a = end_state(0.1), b = end_state(0.05);
    const double ea = norm(a.first - ref.first) + norm(a.second - ref.second);
    const double eb = norm(b.first - ref.first) + norm(b.second - ref.second);
    const double order = std::log2(ea / eb);
    MESSAGE("observed order " << order);
    CHECK(order > 3.0);
}

TEST_CASE("forward stepping is causal") {
    const auto ch = pair_of(0.1);
    PhasePoint ph = coulomb_start(ch, {{-0.5, 0, 0}, {0.5, 0, 0}}, {{}, {}});
    auto spy = std::make_shared<SpyField>(ph.fields[1]);
    ph.fields[1] = spy;
    MlsiConfig cfg;
    cfg.dt = 0.1;
    cfg.constraint_every = 0;
    mlsi_integrate(ch, ph, 0.0, 0.8, cfg);
    CHECK(spy->latest.load() <= 0.8 + 1e-12);
}

TEST_CASE("continuous dependence on the initial field") {
    const auto ch = pair_of(0.1);
    const PhasePoint base = coulomb_start(ch, {{-0.5, 0, 0}, {0.5, 0, 0}}, {{0, 0.1, 0}, {0, -0.1, 0}});
    MlsiConfig cfg;
    cfg.dt = 0.05;
    cfg.constraint_every = 0;
    const auto ref = mlsi_integrate(ch, base, 0.0, 1.5, cfg);
    // perturbation: delta times (field of a charge passing q_1 at t = 0 minus Coulomb at q_1), which is
    // divergence free, so the constraints still hold
    auto moving = std::make_shared<ChargeTrajectory>(ChargeTrajectory::uniform(base.q[1], {0, 0, 0.5}, 1.0));
    auto lw = std::make_shared<LwField>(moving, ch[1].rho, TimeSign::retarded);
    double prev = 0.0;
    for (double delta : {1e-3, 1e-2, 1e-1}) {
        PhasePoint ph = base;
        ph.fields[1] = std::make_shared<Superposition>(
            std::vector<std::pair<double, FieldPtr>>{{1.0 - delta, base.fields[1]}, {delta, lw}});
        const auto sol = mlsi_integrate(ch, ph, 0.0, 1.5, cfg);
        const double change = norm(sol.trajectories[0]->eval(1.5).q - ref.trajectories[0]->eval(1.5).q);
        CHECK(change > prev);
        prev = change;
    }
}

TEST_CASE("speed guard aborts") {
    const auto ch = pair_of(0.05, 1.0, -1.0);
    const PhasePoint ph = coulomb_start(ch, {{-0.2, 0, 0}, {0.2, 0, 0}}, {{}, {}});
    MlsiConfig cfg;
    cfg.dt = 0.02;
    cfg.v_guard = 0.3;
    CHECK_THROWS_AS(mlsi_integrate(ch, ph, 0.0, 3.0, cfg), SolverAbort);
    cfg.dt = -1.0;
    CHECK_THROWS_AS(mlsi_integrate(ch, ph, 0.0, 3.0, cfg), InvalidInput);
}
