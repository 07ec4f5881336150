#include "wfrho/wf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace wfrho {

namespace {

using Terms = std::vector<std::pair<double, FieldPtr>>;

Terms flatten(const FieldPtr& f, double weight) {
    if (auto s = std::dynamic_pointer_cast<const Superposition>(f)) {
        Terms out;
        for (const auto& [w, g] : s->terms()) {
            Terms sub = flatten(g, weight * w);
            out.insert(out.end(), sub.begin(), sub.end());
        }
        return out;
    }
    return {{weight, f}};
}

FieldPtr mix(const FieldPtr& a, double lambda, const FieldPtr& b) {
    if (lambda == 1.0) return b;
    Terms t = flatten(a, 1.0 - lambda);
    Terms tb = flatten(b, lambda);
    t.insert(t.end(), tb.begin(), tb.end());
    // drop negligible history terms and restore unit total weight
    Terms kept;
    double total = 0.0;
    for (const auto& term : t)
        if (std::abs(term.first) > 1e-12) {
            kept.push_back(term);
            total += term.first;
        }
    for (auto& term : kept) term.first /= total;
    return std::make_shared<Superposition>(std::move(kept));
}

GridSample combine(double a, const GridSample& x, double b, const GridSample& y) {
    GridSample out;
    out.order = x.order;
    out.value.resize(x.value.size());
    for (std::size_t k = 0; k < x.value.size(); ++k) out.value[k] = x.value[k] * a + y.value[k] * b;
    out.curl.resize(x.curl.size());
    for (std::size_t k = 0; k < x.curl.size(); ++k) out.curl[k] = x.curl[k] * a + y.curl[k] * b;
    return out;
}

std::vector<SmearRule> smear_rules(const std::vector<ChargeSpec>& charges, const MlsiConfig& cfg) {
    std::vector<SmearRule> out;
    for (const auto& c : charges) out.push_back(SmearRule::build(c.rho, cfg.force_radial, cfg.force_theta, cfg.force_phi));
    return out;
}

double pair_force_scale(const MlsiSolution& sol, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < sol.size(); ++i)
        for (std::size_t j = i + 1; j < sol.size(); ++j) {
            const double d = norm(sol.trajectories[i]->position(t) - sol.trajectories[j]->position(t));
            s = std::max(s, std::abs(sol.charges[i].rho.e() * sol.charges[j].rho.e()) / (d * d));
        }
    return s;
}

void check_covers(const MlsiSolution& sol, double T) {
    const double slack = 1e-12 * std::max(1.0, T);
    if (sol.t_begin > -T + slack || sol.t_end < T - slack)
        throw InvalidInput("ML-SI solution does not cover [-T, T]");
}

}  // namespace

BoundaryFields make_boundary(const MlsiSolution& sol, double T, BoundaryKind kind, const FieldQuad& quad) {
    check_covers(sol, T);
    BoundaryFields X;
    X.kind = kind;
    X.T = T;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        const ChargeSpec& c = sol.charges[i];
        const TrajState plus = sol.trajectories[i]->eval(T), minus = sol.trajectories[i]->eval(-T);
        X.q_plus.push_back(plus.q);
        X.p_plus.push_back(plus.p);
        X.q_minus.push_back(minus.q);
        X.p_minus.push_back(minus.p);
        if (kind == BoundaryKind::coulomb) {
            X.plus.push_back(std::make_shared<CoulombField>(c.rho, plus.q));
            X.minus.push_back(std::make_shared<CoulombField>(c.rho, minus.q));
        } else {
            auto fut = std::make_shared<ChargeTrajectory>(ChargeTrajectory::uniform(plus.q, plus.p, c.mass, T));
            auto past = std::make_shared<ChargeTrajectory>(ChargeTrajectory::uniform(minus.q, minus.p, c.mass, -T));
            X.plus.push_back(std::make_shared<LwField>(fut, c.rho, TimeSign::advanced, quad));
            X.minus.push_back(std::make_shared<LwField>(past, c.rho, TimeSign::retarded, quad));
        }
    }
    return X;
}

BoundaryFields coulomb_boundary(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, double T,
                                const MlsiConfig& cfg) {
    if (!(T >= 0.0)) throw InvalidInput("boundary time must be non-negative");
    const MlsiSolution sol = mlsi_integrate_span(charges, initial, 0.0, -T, T, cfg);
    return make_boundary(sol, T, BoundaryKind::coulomb, cfg.quad);
}

std::vector<FieldPtr> boundary_seeded_fields(const MlsiSolution& sol, const BoundaryFields& X, double e_plus,
                                             double e_minus, const FieldQuad& quad) {
    std::vector<FieldPtr> out;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        const ChargeDensity& rho = sol.charges[i].rho;
        Terms terms;
        if (e_plus != 0.0)
            terms.push_back({e_plus, std::make_shared<MaxwellSolution>(X.plus[i], X.T, sol.trajectories[i], rho, quad)});
        if (e_minus != 0.0)
            terms.push_back({e_minus, std::make_shared<MaxwellSolution>(X.minus[i], -X.T, sol.trajectories[i], rho, quad)});
        out.push_back(terms.size() == 1 && terms[0].first == 1.0 ? terms[0].second
                                                                 : std::make_shared<Superposition>(std::move(terms)));
    }
    return out;
}

void WfConfig::validate() const {
    mlsi.validate();
    if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidInput("T must be finite and non-negative");
    if (!(e_plus >= 0.0 && e_plus <= 1.0 && e_minus >= 0.0 && e_minus <= 1.0))
        throw InvalidInput("e_plus and e_minus must lie in [0, 1]");
    if (std::abs(e_plus + e_minus - 1.0) > 1e-12) throw InvalidInput("e_plus + e_minus must equal 1");
    if (max_iter < 0) throw InvalidInput("max_iter must be non-negative");
    if (!(tol > 0.0)) throw InvalidInput("tolerance must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw InvalidInput("damping must lie in (0, 1]");
    if (!(grid_spacing > 0.0)) throw InvalidInput("grid spacing must be positive");
    if (grid_radius < 0.0 || grid_stencil < 0.0) throw InvalidInput("grid radius and stencil must be non-negative");
}

StResult s_t_map(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, const WfConfig& cfg) {
    cfg.validate();
    StResult r;
    r.solution = mlsi_integrate_span(charges, initial, 0.0, -cfg.T, cfg.T, cfg.mlsi);
    r.boundary = make_boundary(r.solution, cfg.T, cfg.boundary, cfg.mlsi.quad);
    r.fields = boundary_seeded_fields(r.solution, r.boundary, cfg.e_plus, cfg.e_minus, cfg.mlsi.quad);
    return r;
}

std::vector<FieldPtr> coulomb_seed(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q) {
    std::vector<FieldPtr> out;
    for (std::size_t i = 0; i < charges.size(); ++i) out.push_back(std::make_shared<CoulombField>(charges[i].rho, q[i]));
    return out;
}

NormGrid residual_grid(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q, const WfConfig& cfg) {
    Vec3 c;
    for (const Vec3& x : q) c += x / static_cast<double>(q.size());
    double radius = cfg.grid_radius;
    if (radius == 0.0) {
        double spread = 0.0, R = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            spread = std::max(spread, norm(q[i] - c));
            R = std::max(R, charges[i].rho.R());
        }
        radius = std::max(spread + R + 2.0 * cfg.T, cfg.grid_spacing);
    }
    return NormGrid::ball(c, radius, cfg.grid_spacing, cfg.grid_stencil);
}

std::vector<GridSample> sample_fields(const std::vector<FieldPtr>& fields, const NormGrid& grid, double t) {
    std::vector<GridSample> out;
    for (const auto& f : fields) out.push_back(sample_on_grid([&](const Vec3& x) { return f->eval(t, x); }, grid, 1));
    return out;
}

FixedPointResult fixed_point_solve(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q,
                                   const std::vector<Vec3>& p, const WfConfig& cfg, std::vector<FieldPtr> seed) {
    cfg.validate();
    const std::size_t N = charges.size();
    if (seed.empty()) seed = coulomb_seed(charges, q);
    if (seed.size() != N || q.size() != N || p.size() != N) throw InvalidInput("one position, momentum and seed per charge");

    FixedPointResult res;
    res.grid = residual_grid(charges, q, cfg);
    std::vector<FieldPtr> F = seed;
    std::vector<GridSample> samples = sample_fields(F, res.grid);
    double lambda = cfg.damping;
    double prev = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    int below = 0;
    auto& diag = res.diagnostics;
    diag.final_residual = std::numeric_limits<double>::infinity();

    for (int n = 0; n < cfg.max_iter; ++n) {
        const auto start = std::chrono::steady_clock::now();
        StResult st = s_t_map(charges, PhasePoint{q, p, F}, cfg);
        std::vector<GridSample> s_samples = sample_fields(st.fields, res.grid);
        const double r = discrete_norm_diff(s_samples, samples, res.grid);
        if (n > 0 && r > prev) lambda *= 0.5;
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        diag.iterations.push_back({n, r, lambda, ms});

        if (r < best) {
            best = r;
            diag.best_iter = n;
            res.fields = F;
            res.solution = st.solution;
            res.boundary = st.boundary;
            res.samples = samples;
            diag.final_residual = r;
        }
        below = r <= cfg.tol ? below + 1 : 0;
        if (below >= 2) {
            diag.converged = true;
            res.fields = F;
            res.solution = std::move(st.solution);
            res.boundary = std::move(st.boundary);
            res.samples = samples;
            diag.final_residual = r;
            diag.best_iter = n;
            return res;
        }
        for (std::size_t i = 0; i < N; ++i) {
            F[i] = mix(F[i], lambda, st.fields[i]);
            samples[i] = combine(1.0 - lambda, samples[i], lambda, s_samples[i]);
        }
        prev = r;
    }
    if (diag.best_iter < 0) {
        // no iteration ran: report the seed with its ML-SI solution
        res.fields = F;
        res.solution = mlsi_integrate_span(charges, PhasePoint{q, p, F}, 0.0, -cfg.T, cfg.T, cfg.mlsi);
        res.boundary = make_boundary(res.solution, cfg.T, cfg.boundary, cfg.mlsi.quad);
        res.samples = samples;
    }
    return res;
}

ForceResidual wf_residual(const MlsiSolution& sol, const WfConfig& cfg, const std::vector<double>& times) {
    cfg.validate();
    const BoundaryFields X = make_boundary(sol, cfg.T, cfg.boundary, cfg.mlsi.quad);
    const auto G = boundary_seeded_fields(sol, X, cfg.e_plus, cfg.e_minus, cfg.mlsi.quad);
    const auto rules = smear_rules(sol.charges, cfg.mlsi);
    ForceResidual out;
    for (double t : times) {
        if (t < -cfg.T || t > cfg.T) throw InvalidInput("probe time " + std::to_string(t) + " outside [-T, T]");
        out.force_scale = std::max(out.force_scale, pair_force_scale(sol, t));
        for (std::size_t i = 0; i < sol.size(); ++i) {
            const double m = sol.charges[i].mass;
            const TrajState s = sol.trajectories[i]->eval(t);
            const Vec3 f = sol.size() > 1 ? lorentz_force(i, t, s.q, s.v, G, rules[i]) : Vec3{};
            out.max_abs = std::max(out.max_abs, norm(pdot_of(s.v, s.a, m) - f));
        }
    }
    return out;
}

bool in_shadow(const Vec3& q, double R, double T, double t, const Vec3& x) {
    if (!(std::abs(t) < T - R)) return false;
    return norm(x - q) < std::min(std::abs(t - T), std::abs(t + T)) - R;
}

ShadowReport shadow_terms(const Vec3& q, const Vec3& v, const ChargeDensity& rho, double T, int sign, double t,
                          const Vec3& x, const FieldQuad& quad) {
    if (sign != 1 && sign != -1) throw InvalidInput("side must be +1 or -1");
    const double anchor = sign * T;
    ShadowReport r;
    r.boundary = norm(coulomb_kirchhoff_with_kick(rho, q, v, anchor, t, x, quad));
    const ChargeTrajectory rest = ChargeTrajectory::at_rest(q, 1.0);
    const double inf = std::numeric_limits<double>::infinity();
    r.relict = norm(sign > 0 ? source_integral(rho, rest, anchor, inf, t, x, quad)
                                  : source_integral(rho, rest, -inf, anchor, t, x, quad));
    return r;
}

ShadowReport shadow_check(const Vec3& q, const Vec3& v, const ChargeDensity& rho, double T,
                          const std::vector<std::pair<double, Vec3>>& probes, const FieldQuad& quad) {
    if (!(T > rho.R())) throw InvalidInput("the shadow region is empty unless T > R");
    if (!(norm(v) < 1.0)) throw InvalidInput("velocity must be time-like");
    ShadowReport out;
    for (const auto& [t, x] : probes) {
        if (!in_shadow(q, rho.R(), T, t, x))
            throw InvalidInput("probe (" + std::to_string(t) + ") lies outside the shadow region");
        for (int sign : {1, -1}) {
            const ShadowReport r = shadow_terms(q, v, rho, T, sign, t, x, quad);
            out.boundary = std::max(out.boundary, r.boundary);
            out.relict = std::max(out.relict, r.relict);
        }
    }
    return out;
}

InteractionWindow interaction_window(double v_bound, double T, double dq_max, double R) {
    if (!std::isfinite(v_bound) || !std::isfinite(T) || !std::isfinite(dq_max) || !std::isfinite(R))
        throw InvalidInput("interaction window inputs must be finite");
    if (!(v_bound >= 0.0 && v_bound < 1.0)) throw InvalidInput("velocity bound must lie in [0, 1)");
    if (!(T > 0.0) || !(dq_max >= 0.0) || !(R > 0.0)) throw InvalidInput("need T > 0, dq_max >= 0 and R > 0");
    InteractionWindow w;
    w.L = ((1.0 - v_bound) * T - dq_max - 2.0 * R) / (1.0 + v_bound);
    w.guaranteed = w.L > 0.0;
    return w;
}

double velocity_bound(const std::vector<const MlsiSolution*>& runs) {
    if (runs.empty()) throw InvalidInput("at least one run is required");
    double v = 0.0;
    for (const MlsiSolution* s : runs) {
        v = std::max(v, s->max_speed);
        for (const auto& tr : s->trajectories)
            for (const auto& x : tr->samples()) v = std::max(v, norm(v_of_p(x.p, tr->mass())));
    }
    return v;
}

double velocity_bound_estimate(const std::vector<ChargeSpec>& charges, const std::vector<PhasePoint>& scenarios,
                               double T, const MlsiConfig& cfg) {
    if (scenarios.empty()) throw InvalidInput("at least one scenario is required");
    std::vector<MlsiSolution> runs;
    for (const auto& ph : scenarios) runs.push_back(mlsi_integrate_span(charges, ph, 0.0, -T, T, cfg));
    std::vector<const MlsiSolution*> ptrs;
    for (const auto& r : runs) ptrs.push_back(&r);
    return velocity_bound(ptrs);
}

std::vector<std::shared_ptr<const ChargeTrajectory>> continued_uniformly(const MlsiSolution& sol) {
    std::vector<std::shared_ptr<const ChargeTrajectory>> out;
    for (const auto& tr : sol.trajectories) {
        const auto& s = tr->samples();
        out.push_back(std::make_shared<ChargeTrajectory>(
            tr->with_asymptotes(AsymptoteSpec::uniform(s.front().t, s.front().q, s.front().p),
                                AsymptoteSpec::uniform(s.back().t, s.back().q, s.back().p))));
    }
    return out;
}

ForceResidual true_interaction_check(const MlsiSolution& sol, const WfConfig& cfg, double L,
                                     const std::vector<double>& times) {
    cfg.validate();
    if (!(L > 0.0)) throw InvalidInput("no true-interaction window (L <= 0)");
    const BoundaryFields X = make_boundary(sol, cfg.T, cfg.boundary, cfg.mlsi.quad);
    const auto G = boundary_seeded_fields(sol, X, cfg.e_plus, cfg.e_minus, cfg.mlsi.quad);
    const auto cont = continued_uniformly(sol);
    std::vector<FieldPtr> W;
    for (std::size_t i = 0; i < sol.size(); ++i) {
        const ChargeDensity& rho = sol.charges[i].rho;
        Terms t;
        if (cfg.e_plus != 0.0) t.push_back({cfg.e_plus, std::make_shared<LwField>(cont[i], rho, TimeSign::advanced, cfg.mlsi.quad)});
        if (cfg.e_minus != 0.0) t.push_back({cfg.e_minus, std::make_shared<LwField>(cont[i], rho, TimeSign::retarded, cfg.mlsi.quad)});
        W.push_back(std::make_shared<Superposition>(std::move(t)));
    }
    const auto rules = smear_rules(sol.charges, cfg.mlsi);
    ForceResidual out;
    for (double t : times) {
        if (std::abs(t) > L) throw InvalidInput("probe time " + std::to_string(t) + " outside [-L, L]");
        out.force_scale = std::max(out.force_scale, pair_force_scale(sol, t));
        if (sol.size() < 2) continue;
        for (std::size_t i = 0; i < sol.size(); ++i) {
            const TrajState s = sol.trajectories[i]->eval(t);
            const Vec3 fg = lorentz_force(i, t, s.q, s.v, G, rules[i]);
            const Vec3 fw = lorentz_force(i, t, s.q, s.v, W, rules[i]);
            out.max_abs = std::max(out.max_abs, norm(fg - fw));
        }
    }
    return out;
}

}  // namespace wfrho
