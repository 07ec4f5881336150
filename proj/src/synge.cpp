#include "wfrho/synge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wfrho/parallel.hpp"

namespace wfrho {

namespace {

std::string charge_tag(std::size_t i) { return "charge " + std::to_string(i) + ": "; }

// Polynomial q(s) = sum c_k s^k on [0, tau] matching position, velocity and acceleration at both ends.
struct Quintic {
    Vec3 c[6];

    Quintic(const Vec3& q0, const Vec3& v0, const Vec3& a0, const Vec3& q1, const Vec3& v1, const Vec3& a1,
            double tau) {
        const Vec3 dq = q1 - q0 - v0 * tau - a0 * (0.5 * tau * tau);
        const Vec3 dv = (v1 - v0 - a0 * tau) * tau;
        const Vec3 da = (a1 - a0) * (tau * tau);
        c[0] = q0;
        c[1] = v0;
        c[2] = a0 * 0.5;
        c[3] = (dq * 10.0 - dv * 4.0 + da * 0.5) / std::pow(tau, 3);
        c[4] = (dq * -15.0 + dv * 7.0 - da) / std::pow(tau, 4);
        c[5] = (dq * 6.0 - dv * 3.0 + da * 0.5) / std::pow(tau, 5);
    }
    Vec3 q(double s) const { return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5])))); }
    Vec3 v(double s) const { return c[1] + s * (c[2] * 2.0 + s * (c[3] * 3.0 + s * (c[4] * 4.0 + s * c[5] * 5.0))); }
    Vec3 a(double s) const { return c[2] * 2.0 + s * (c[3] * 6.0 + s * (c[4] * 12.0 + s * c[5] * 20.0)); }
};

void check_past(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q0, const std::vector<PastSpec>& past) {
    if (q0.size() != charges.size() || past.size() != charges.size())
        throw InvalidInput("one position and one past spec per charge are required");
    for (std::size_t i = 0; i < past.size(); ++i) {
        const PastSpec& s = past[i];
        if (!isfinite(s.velocity) || !isfinite(s.offset) || !std::isfinite(s.transition) || s.transition < 0.0)
            throw InvalidInput(charge_tag(i) + "past spec must be finite with a non-negative transition");
        if (s.mode == AsymptoteMode::rest && norm(s.velocity) != 0.0)
            throw InvalidInput(charge_tag(i) + "a rest past cannot have a velocity");
        if (!(norm(s.velocity) < 1.0)) throw InvalidInput(charge_tag(i) + "past velocity is not time-like");
    }
}

ChargeTrajectory past_line(const ChargeSpec& c, const Vec3& q0, const PastSpec& s, double t0) {
    return ChargeTrajectory::uniform(q0 + s.offset, p_of_v(s.velocity, c.mass), c.mass, t0);
}

std::vector<SmearRule> smear_rules(const std::vector<ChargeSpec>& charges, const MlsiConfig& cfg) {
    std::vector<SmearRule> out;
    for (const auto& c : charges) out.push_back(SmearRule::build(c.rho, cfg.force_radial, cfg.force_theta, cfg.force_phi));
    return out;
}

std::vector<Vec3> retarded_accels(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q,
                                  const std::vector<Vec3>& p, const std::vector<FieldPtr>& fields, double t0,
                                  const MlsiConfig& cfg) {
    const auto rules = smear_rules(charges, cfg);
    std::vector<Vec3> a(charges.size());
    if (charges.size() < 2) return a;
    for (std::size_t i = 0; i < charges.size(); ++i) {
        const double m = charges[i].mass;
        const Vec3 f = lorentz_force(i, t0, q[i], v_of_p(p[i], m), fields, rules[i]);
        a[i] = accel_of(p[i], f, m);
    }
    return a;
}

}  // namespace

std::vector<Vec3> SyngeHistory::positions() const {
    std::vector<Vec3> out;
    for (const auto& tr : trajectories) out.push_back(tr->samples().back().q);
    return out;
}

std::vector<Vec3> SyngeHistory::momenta() const {
    std::vector<Vec3> out;
    for (const auto& tr : trajectories) out.push_back(tr->samples().back().p);
    return out;
}

std::vector<double> admissible_transitions(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q0,
                                           const std::vector<PastSpec>& past, double t0, const FieldQuad& quad) {
    check_past(charges, q0, past);
    const std::size_t N = charges.size();
    std::vector<double> out(N, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < N; ++j) {
        const ChargeTrajectory line = past_line(charges[j], q0[j], past[j], t0);
        const double slow = 1.0 - norm(past[j].velocity);
        for (std::size_t i = 0; i < N; ++i) {
            if (i == j) continue;
            // moving the field point by delta shifts the retarded time by at most delta / (1 - v)
            const double tr = lightcone_time(line, q0[i], t0, {}, TimeSign::retarded, quad);
            const double reach = (charges[i].rho.R() + charges[j].rho.R()) / slow;
            out[j] = std::min(out[j], t0 - tr - reach);
        }
        if (!(out[j] > 0.0))
            throw InvalidInput(charge_tag(j) + "partner supports at t0 see its past at t0 itself; no junction window exists");
    }
    return out;
}

SyngeHistory build_history(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q0,
                           const std::vector<Vec3>& p0, const std::vector<PastSpec>& past, double t0,
                           const MlsiConfig& cfg, const HistoryOptions& opts) {
    cfg.validate();
    const std::size_t N = charges.size();
    if (N == 0) throw InvalidInput("at least one charge is required");
    if (p0.size() != N) throw InvalidInput("one momentum per charge is required");
    if (!std::isfinite(t0)) throw InvalidInput("junction time must be finite");
    if (opts.transition_samples < 4) throw InvalidInput("the transition needs at least four samples");
    if (!(opts.line_spacing > 0.0)) throw InvalidInput("line sample spacing must be positive");
    std::vector<double> masses;
    for (const auto& c : charges) masses.push_back(c.mass);
    PhasePoint{q0, p0, {}}.validate(masses);

    const std::vector<double> tau_max = admissible_transitions(charges, q0, past, t0, cfg.quad);

    // step 3: retarded force at t0 from the straight pasts, which are all the partners see
    std::vector<std::shared_ptr<const ChargeTrajectory>> lines;
    std::vector<FieldPtr> line_fields;
    for (std::size_t j = 0; j < N; ++j) {
        lines.push_back(std::make_shared<ChargeTrajectory>(past_line(charges[j], q0[j], past[j], t0)));
        line_fields.push_back(std::make_shared<LwField>(lines.back(), charges[j].rho, TimeSign::retarded, cfg.quad));
    }
    SyngeHistory h;
    h.t0 = t0;
    h.charges = charges;
    h.junction_accel = retarded_accels(charges, q0, p0, line_fields, t0, cfg);

    // step 4: quintic transition from the line to the data at t0
    for (std::size_t i = 0; i < N; ++i) {
        const double m = charges[i].mass;
        double tau = past[i].transition;
        if (tau == 0.0) tau = std::isfinite(tau_max[i]) ? 0.5 * tau_max[i] : 1.0;
        if (tau > tau_max[i])
            throw InvalidInput(charge_tag(i) + "transition " + std::to_string(tau) +
                               " reaches into the partner light cones (at most " + std::to_string(tau_max[i]) + ")");
        const double tc = t0 - tau;
        if (tc < opts.t_min) throw InvalidInput(charge_tag(i) + "transition starts before t_min");
        const TrajState start = lines[i]->eval(tc);
        const Vec3 v0 = v_of_p(p0[i], m);
        const Quintic poly(start.q, start.v, {}, q0[i], v0, h.junction_accel[i], tau);

        for (int k = 0; k <= 8 * opts.transition_samples; ++k) {
            const double s = tau * k / (8.0 * opts.transition_samples);
            const double speed = norm(poly.v(s));
            if (!(speed < 1.0))
                throw InvalidInput(charge_tag(i) + "no time-like junction: transition speed reaches " +
                                   std::to_string(speed));
            h.v_max = std::max(h.v_max, speed);
            h.a_max = std::max(h.a_max, norm(poly.a(s)));
        }
        h.v_max = std::max(h.v_max, norm(start.v));

        std::vector<TrajectorySample> samples;
        std::optional<AsymptoteSpec> asym;
        const Vec3 p_line = p_of_v(start.v, m);
        if (std::isfinite(opts.t_min)) {
            const long n_line = static_cast<long>(std::ceil((tc - opts.t_min) / opts.line_spacing));
            for (long k = 0; k < n_line; ++k) {
                const double t = opts.t_min + (tc - opts.t_min) * k / n_line;
                samples.push_back({t, lines[i]->position(t), p_line, {}});
            }
        }
        const int n = opts.transition_samples;
        for (int k = 0; k < n; ++k) {
            const double s = tau * k / (n - 1);
            const Vec3 v = poly.v(s);
            samples.push_back({tc + s, poly.q(s), p_of_v(v, m), pdot_of(v, poly.a(s), m)});
        }
        // exact junction data at t0
        samples.back() = {t0, q0[i], p0[i], pdot_of(v0, h.junction_accel[i], m)};
        const TrajectorySample& first = samples.front();
        asym = past[i].mode == AsymptoteMode::rest ? AsymptoteSpec::rest(first.t, first.q)
                                                   : AsymptoteSpec::uniform(first.t, first.q, first.p);
        // the jerk jumps where the straight past meets the transition
        h.trajectories.push_back(std::make_shared<ChargeTrajectory>(
            ChargeTrajectory(std::move(samples), m, asym, std::nullopt).with_breakpoints({tc})));
        h.transition.push_back(tau);
    }
    return h;
}

std::vector<FieldPtr> history_fields(const SyngeHistory& h, const FieldQuad& quad) {
    std::vector<FieldPtr> out;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const auto& tr = h.trajectories[i];
        const TrajectorySample& end = tr->samples().back();
        if (end.t != h.t0) throw InvalidInput(charge_tag(i) + "history does not end at t0");
        auto cont = std::make_shared<ChargeTrajectory>(
            tr->with_asymptotes(tr->past(), AsymptoteSpec::uniform(end.t, end.q, end.p)));
        out.push_back(std::make_shared<LwField>(cont, h.charges[i].rho, TimeSign::retarded, quad));
    }
    return out;
}

double junction_mismatch(const SyngeHistory& h, const MlsiConfig& cfg) {
    const auto a = retarded_accels(h.charges, h.positions(), h.momenta(), history_fields(h, cfg.quad), h.t0, cfg);
    double worst = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) worst = std::max(worst, norm(h.trajectories[i]->eval(h.t0).a - a[i]));
    return worst;
}

std::vector<std::shared_ptr<const ChargeTrajectory>> concatenate(const SyngeHistory& history,
                                                                 const MlsiSolution& forward) {
    std::vector<std::shared_ptr<const ChargeTrajectory>> out;
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::vector<TrajectorySample> s;
        for (const auto& x : history.trajectories[i]->samples())
            if (x.t < history.t0) s.push_back(x);
        for (const auto& x : forward.trajectories[i]->samples())
            if (x.t >= history.t0) s.push_back(x);
        // only the acceleration is matched at t0, so the joined path is less smooth there
        std::vector<double> breaks = history.trajectories[i]->breakpoints();
        breaks.push_back(history.t0);
        out.push_back(std::make_shared<ChargeTrajectory>(
            ChargeTrajectory(std::move(s), history.charges[i].mass, history.trajectories[i]->past(), std::nullopt)
                .with_breakpoints(std::move(breaks))));
    }
    return out;
}

SyngeSolution synge_solve(const SyngeHistory& history, double t_end, const MlsiConfig& cfg) {
    if (!(t_end > history.t0)) throw InvalidInput("the forward solve needs t_end > t0");
    PhasePoint ph{history.positions(), history.momenta(), history_fields(history, cfg.quad)};
    SyngeSolution sol;
    sol.mlsi = mlsi_integrate(history.charges, ph, history.t0, t_end, cfg);
    sol.concatenated = concatenate(history, sol.mlsi);
    for (std::size_t i = 0; i < history.size(); ++i) {
        const Vec3 left = history.trajectories[i]->eval(history.t0).a;
        const Vec3 right = sol.mlsi.trajectories[i]->eval(history.t0).a;
        sol.junction_jump = std::max(sol.junction_jump, norm(left - right));
    }
    return sol;
}

ConsistencyReport synge_self_consistency(const SyngeSolution& sol, const SyngeHistory& history,
                                         const std::vector<FieldProbe>& probes, const FieldQuad& quad) {
    const auto concat = concatenate(history, sol.mlsi);
    const std::size_t N = history.size();
    for (const auto& pr : probes)
        if (pr.t < sol.mlsi.t_begin || pr.t > sol.mlsi.t_end)
            throw InvalidInput("probe time " + std::to_string(pr.t) + " lies outside the solution");
    std::vector<ConsistencyReport> per(probes.size());
    parallel_for(static_cast<long>(probes.size()), [&](long k) {
        const FieldProbe& pr = probes[k];
        for (std::size_t i = 0; i < N; ++i) {
            const ChargeDensity& rho = history.charges[i].rho;
            const EB evolved = sol.mlsi.fields[i]->eval(pr.t, pr.x);
            const EB lw = lw_field(*concat[i], rho, pr.t, pr.x, TimeSign::retarded, quad);
            const double diff = std::max(norm(evolved.E - lw.E), norm(evolved.B - lw.B));
            const double d = std::max(norm(pr.x - concat[i]->position(pr.t)), rho.R());
            per[k].max_abs = std::max(per[k].max_abs, diff);
            per[k].max_rel = std::max(per[k].max_rel, diff * d * d / std::abs(rho.e()));
        }
    });
    ConsistencyReport out;
    for (const auto& r : per) {
        out.max_abs = std::max(out.max_abs, r.max_abs);
        out.max_rel = std::max(out.max_rel, r.max_rel);
    }
    return out;
}

}  // namespace wfrho
