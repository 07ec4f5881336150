#include "wfrho/mlsi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wfrho/parallel.hpp"
#include "wfrho/quadrature.hpp"

namespace wfrho {

namespace {

constexpr double kPi = std::numbers::pi;

double auto_stencil(const std::vector<ChargeSpec>& charges) {
    double rmin = std::numeric_limits<double>::infinity();
    for (const auto& c : charges) rmin = std::min(rmin, c.rho.R());
    return 1e-3 * rmin;
}

// Samples of one charge kept in integration order; the last entry is the current frontier.
struct Track {
    std::vector<TrajectorySample> samples;
    double mass;
    bool backward;

    std::vector<TrajectorySample> ordered(const TrajectorySample* extra) const {
        std::vector<TrajectorySample> out = samples;
        if (extra) out.push_back(*extra);
        if (backward) std::reverse(out.begin(), out.end());
        return out;
    }

    // Trajectory through all committed samples (plus a provisional stage sample); a uniform
    // continuation beyond the frontier keeps single-sample starts well defined.
    std::shared_ptr<const ChargeTrajectory> build(const TrajectorySample* extra, bool continuation) const {
        const TrajectorySample& front = extra ? *extra : samples.back();
        std::optional<AsymptoteSpec> ahead;
        if (continuation) ahead = AsymptoteSpec::uniform(front.t, front.q, front.p);
        if (backward) return std::make_shared<ChargeTrajectory>(ordered(extra), mass, ahead, std::nullopt);
        return std::make_shared<ChargeTrajectory>(ordered(extra), mass, std::nullopt, ahead);
    }
};

}  // namespace

SmearRule SmearRule::build(const ChargeDensity& rho, int n_radial, int n_theta, int n_phi) {
    if (n_radial < 1) throw InvalidInput("force quadrature needs at least one radial node");
    const SphereQuadRule sphere = SphereQuadRule::product(n_theta, n_phi);
    const GaussLegendre& gl = gauss_legendre(n_radial);
    const double R = rho.R();
    std::vector<double> radii, rw;
    double total = 0.0;
    for (int k = 0; k < gl.size(); ++k) {
        const double r = 0.5 * R * (1.0 + gl.nodes()[k]);
        const double w = 0.5 * R * gl.weights()[k] * 4.0 * kPi * r * r * rho.value_r(r);
        radii.push_back(r);
        rw.push_back(w);
        total += w;
    }
    SmearRule out;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        // renormalize so that constant fields see exactly the total charge
        const double wr = total != 0.0 ? rw[k] * rho.e() / total : 0.0;
        for (std::size_t j = 0; j < sphere.directions.size(); ++j) {
            out.z.push_back(sphere.directions[j] * radii[k]);
            out.w.push_back(wr * sphere.weights[j]);
        }
    }
    return out;
}

void MlsiConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("time step must be positive");
    if (order != 4) throw InvalidInput("only the fourth-order integrator is available");
    if (force_radial < 1 || force_theta < 1 || force_phi < 1) throw InvalidInput("force quadrature orders must be positive");
    if (!(v_guard > 0.0 && v_guard < 1.0)) throw InvalidInput("speed guard must lie in (0, 1)");
    if (!(constraint_tol > 0.0)) throw InvalidInput("constraint tolerance must be positive");
    if (constraint_every < 0) throw InvalidInput("constraint cadence must be non-negative");
}

Vec3 lorentz_force(std::size_t i, double t, const Vec3& q, const Vec3& v, const std::vector<FieldPtr>& fields,
                   const SmearRule& rule) {
    const std::size_t n = rule.z.size();
    std::vector<Vec3> terms(n);
    parallel_for(static_cast<long>(n), [&](long k) {
        if (rule.w[k] == 0.0) return;
        EB sum;
        for (std::size_t j = 0; j < fields.size(); ++j)
            if (j != i) sum += fields[j]->eval(t, q + rule.z[k]);
        terms[k] = (sum.E + cross(v, sum.B)) * rule.w[k];
    });
    Vec3 total;
    for (const Vec3& f : terms) total += f;
    return total;
}

std::vector<Vec3> default_constraint_offsets(double R) {
    return {{0, 0, 0},           {0.5 * R, 0, 0},   {0, -0.5 * R, 0},   {0, 0, 0.7 * R},
            {-0.4 * R, 0.4 * R, 0.3 * R}, {1.5 * R, 0, 0}, {0, 0, -2.0 * R}};
}

double constraint_residual(const std::vector<ChargeSpec>& charges, const std::vector<FieldPtr>& fields,
                           const std::vector<Vec3>& centers, double t, double h, const std::vector<Vec3>& offsets) {
    double worst = 0.0;
    for (std::size_t i = 0; i < charges.size(); ++i) {
        const ChargeDensity& rho = charges[i].rho;
        const double scale = 4.0 * kPi * rho.peak();
        if (scale == 0.0) continue;
        const FieldPtr& F = fields[i];
        auto E = [&](const Vec3& y) { return F->eval(t, y).E; };
        auto B = [&](const Vec3& y) { return F->eval(t, y).B; };
        const std::vector<Vec3> offs = offsets.empty() ? default_constraint_offsets(rho.R()) : offsets;
        for (const Vec3& o : offs) {
            const Vec3 x = centers[i] + o;
            const double r = std::abs(stencil_div(E, x, h) - 4.0 * kPi * rho(o)) + std::abs(stencil_div(B, x, h));
            worst = std::max(worst, r / scale);
        }
    }
    return worst;
}

double constraint_residual(const MlsiSolution& sol, double t, const std::vector<Vec3>& offsets, double h) {
    std::vector<Vec3> centers;
    for (const auto& tr : sol.trajectories) centers.push_back(tr->position(t));
    return constraint_residual(sol.charges, sol.fields, centers, t, h > 0.0 ? h : auto_stencil(sol.charges), offsets);
}

MlsiSolution mlsi_integrate(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, double t0,
                            double t_target, const MlsiConfig& cfg) {
    cfg.validate();
    const std::size_t N = charges.size();
    std::vector<double> masses;
    for (const auto& c : charges) masses.push_back(c.mass);
    initial.validate(masses);
    if (initial.fields.size() != N) throw InvalidInput("one initial field per charge is required");
    if (!std::isfinite(t0) || !std::isfinite(t_target)) throw InvalidInput("integration times must be finite");
    const double h_div = cfg.stencil_h > 0.0 ? cfg.stencil_h : auto_stencil(charges);

    MlsiSolution sol;
    sol.charges = charges;
    sol.initial_fields = initial.fields;
    sol.t0 = t0;

    const double c0 = constraint_residual(charges, initial.fields, initial.q, t0, h_div);
    sol.constraints.push_back({t0, c0});
    if (c0 > cfg.constraint_tol)
        throw ConstraintViolation("initial fields violate the Maxwell constraints (relative residual " +
                                  std::to_string(c0) + ")");

    std::vector<SmearRule> rules;
    for (const auto& c : charges) rules.push_back(SmearRule::build(c.rho, cfg.force_radial, cfg.force_theta, cfg.force_phi));

    const bool backward = t_target < t0;
    const double span = t_target - t0;
    const long steps = span == 0.0 ? 0 : std::max(1L, static_cast<long>(std::ceil(std::abs(span) / cfg.dt - 1e-9)));
    const double h = steps ? span / steps : 0.0;

    std::vector<Track> tracks(N);
    for (std::size_t i = 0; i < N; ++i) {
        tracks[i] = {{{t0, initial.q[i], initial.p[i], {}}}, charges[i].mass, backward};
        sol.max_speed = std::max(sol.max_speed, norm(v_of_p(initial.p[i], charges[i].mass)));
    }

    // Fields of all charges given trajectories through the committed samples plus optional stage samples.
    auto fields_for = [&](const std::vector<TrajectorySample>* stage, bool continuation) {
        std::vector<FieldPtr> out(N);
        for (std::size_t i = 0; i < N; ++i) {
            auto traj = tracks[i].build(stage ? &(*stage)[i] : nullptr, continuation);
            out[i] = std::make_shared<MaxwellSolution>(initial.fields[i], t0, traj, charges[i].rho, cfg.quad);
        }
        return out;
    };
    auto forces = [&](double t, const std::vector<Vec3>& q, const std::vector<Vec3>& p,
                      const std::vector<FieldPtr>& F) {
        std::vector<Vec3> out(N);
        if (N < 2) return out;
        for (std::size_t i = 0; i < N; ++i) out[i] = lorentz_force(i, t, q[i], v_of_p(p[i], masses[i]), F, rules[i]);
        return out;
    };

    std::vector<Vec3> q = initial.q, p = initial.p;
    double t = t0;
    for (long n = 0; n < steps; ++n) {
        std::vector<Vec3> kq1(N), kp1, kq2(N), kp2, kq3(N), kp3, kq4(N), kp4;
        // stage 1 also fixes dp/dt at the committed frontier
        kp1 = forces(t, q, p, fields_for(nullptr, true));
        for (std::size_t i = 0; i < N; ++i) {
            tracks[i].samples.back().pdot = kp1[i];
            kq1[i] = v_of_p(p[i], masses[i]);
        }
        const double tn = (n + 1 == steps) ? t_target : t0 + h * (n + 1);
        auto stage = [&](double c, const std::vector<Vec3>& kq, const std::vector<Vec3>& kp, std::vector<Vec3>& kq_out,
                         std::vector<Vec3>& kp_out) {
            std::vector<Vec3> qs(N), ps(N);
            std::vector<TrajectorySample> provisional(N);
            for (std::size_t i = 0; i < N; ++i) {
                qs[i] = q[i] + kq[i] * (c * h);
                ps[i] = p[i] + kp[i] * (c * h);
                provisional[i] = {c == 1.0 ? tn : t + c * h, qs[i], ps[i], kp[i]};
                kq_out[i] = v_of_p(ps[i], masses[i]);
            }
            kp_out = forces(provisional[0].t, qs, ps, fields_for(&provisional, true));
        };
        stage(0.5, kq1, kp1, kq2, kp2);
        stage(0.5, kq2, kp2, kq3, kp3);
        stage(1.0, kq3, kp3, kq4, kp4);
        for (std::size_t i = 0; i < N; ++i) {
            q[i] += (kq1[i] + kq2[i] * 2.0 + kq3[i] * 2.0 + kq4[i]) * (h / 6.0);
            p[i] += (kp1[i] + kp2[i] * 2.0 + kp3[i] * 2.0 + kp4[i]) * (h / 6.0);
            if (!isfinite(q[i]) || !isfinite(p[i])) throw SolverAbort("non-finite state in the integrator");
            const double speed = norm(v_of_p(p[i], masses[i]));
            sol.max_speed = std::max(sol.max_speed, speed);
            if (speed >= cfg.v_guard)
                throw SolverAbort("charge " + std::to_string(i) + " reached speed " + std::to_string(speed) +
                                  " beyond the guard at t = " + std::to_string(tn));
            tracks[i].samples.push_back({tn, q[i], p[i], kp4[i]});
        }
        t = tn;
        if (cfg.constraint_every > 0 && (n + 1) % cfg.constraint_every == 0 && n + 1 < steps)
            sol.constraints.push_back({t, constraint_residual(charges, fields_for(nullptr, false), q, t, h_div)});
    }
    // force at the final time completes the momentum interpolant
    if (steps > 0) {
        const auto kp = forces(t, q, p, fields_for(nullptr, true));
        for (std::size_t i = 0; i < N; ++i) tracks[i].samples.back().pdot = kp[i];
    }

    sol.t_begin = std::min(t0, t_target);
    sol.t_end = std::max(t0, t_target);
    const bool single = steps == 0;
    for (std::size_t i = 0; i < N; ++i) {
        auto traj = tracks[i].build(nullptr, single);
        sol.trajectories.push_back(traj);
        sol.fields.push_back(std::make_shared<MaxwellSolution>(initial.fields[i], t0, traj, charges[i].rho, cfg.quad));
    }
    if (steps > 0)
        sol.constraints.push_back({t, constraint_residual(charges, sol.fields, q, t, h_div)});
    return sol;
}

MlsiSolution mlsi_integrate_span(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, double t0,
                                 double t_lo, double t_hi, const MlsiConfig& cfg) {
    if (!(t_lo <= t0 && t0 <= t_hi)) throw InvalidInput("span must contain the initial time");
    const MlsiSolution back = mlsi_integrate(charges, initial, t0, t_lo, cfg);
    MlsiSolution fwd = mlsi_integrate(charges, initial, t0, t_hi, cfg);
    if (t_lo == t0) return fwd;
    if (t_hi == t0) return back;
    MlsiSolution sol;
    sol.charges = charges;
    sol.initial_fields = initial.fields;
    sol.t0 = t0;
    sol.t_begin = t_lo;
    sol.t_end = t_hi;
    sol.max_speed = std::max(back.max_speed, fwd.max_speed);
    for (auto it = back.constraints.rbegin(); it != back.constraints.rend(); ++it) sol.constraints.push_back(*it);
    sol.constraints.insert(sol.constraints.end(), fwd.constraints.begin() + 1, fwd.constraints.end());
    for (std::size_t i = 0; i < charges.size(); ++i) {
        std::vector<TrajectorySample> s = back.trajectories[i]->samples();
        s.pop_back();  // the shared sample at t0 comes from the forward run
        const auto& f = fwd.trajectories[i]->samples();
        s.insert(s.end(), f.begin(), f.end());
        auto traj = std::make_shared<ChargeTrajectory>(std::move(s), charges[i].mass);
        sol.trajectories.push_back(traj);
        sol.fields.push_back(std::make_shared<MaxwellSolution>(initial.fields[i], t0, traj, charges[i].rho, cfg.quad));
    }
    return sol;
}

}  // namespace wfrho
