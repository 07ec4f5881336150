#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "oracles.hpp"

namespace wfrho::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }
std::string vec(const Vec3& v) { return fmt::format("{},{},{}", num(v.x), num(v.y), num(v.z)); }

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

void write_trajectory(const fs::path& p, const MlsiSolution& sol) {
    std::ofstream out = open_out(p);
    out << "t,charge,qx,qy,qz,px,py,pz,vx,vy,vz,ax,ay,az\n";
    const std::size_t n = sol.trajectories.front()->samples().size();
    for (const auto& tr : sol.trajectories)
        if (tr->samples().size() != n) throw std::logic_error("charges sampled on different time grids");
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < sol.size(); ++i) {
            const TrajectorySample& s = sol.trajectories[i]->samples()[k];
            const double m = sol.charges[i].mass;
            out << num(s.t) << ',' << i << ',' << vec(s.q) << ',' << vec(s.p) << ',' << vec(v_of_p(s.p, m)) << ','
                << vec(accel_of(s.p, s.pdot, m)) << '\n';
        }
}

struct FieldRow {
    double t;
    Vec3 x;
    EB f;
    std::string source;
};

void write_fields(const fs::path& p, const std::vector<FieldRow>& rows) {
    std::ofstream out = open_out(p);
    out << "t,x,y,z,Ex,Ey,Ez,Bx,By,Bz,source\n";
    for (const auto& r : rows)
        out << num(r.t) << ',' << vec(r.x) << ',' << vec(r.f.E) << ',' << vec(r.f.B) << ',' << r.source << '\n';
}

// Deterministic probe points: the listed ones, then `count` uniform points in the probe ball.
std::vector<Vec3> probe_points(const Scenario& s) {
    Vec3 c;
    for (const auto& ch : s.charges) c += ch.q0;
    c /= static_cast<double>(s.charges.size());
    std::vector<Vec3> pts = s.output.probes.points;
    std::mt19937_64 rng(s.seed);
    // explicit mapping of raw draws so the sequence does not depend on the standard library
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    for (int k = 0; k < s.output.probes.count;) {
        const Vec3 u{unit(), unit(), unit()};
        if (norm2(u) > 1.0) continue;
        pts.push_back(c + u * s.output.probes.radius);
        ++k;
    }
    return pts;
}

std::vector<double> probe_times(const Scenario& s, double lo, double hi, std::vector<double> defaults) {
    std::vector<double> times = s.output.probes.times.empty() ? std::move(defaults) : s.output.probes.times;
    for (double t : times)
        if (t < lo || t > hi)
            throw InvalidInput(fmt::format("scenario.output.probes.times: {} outside [{}, {}] for mode {}", t, lo, hi,
                                           s.run.mode));
    return times;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out;
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
    return out;
}

std::vector<Vec3> initial_q(const Scenario& s) {
    std::vector<Vec3> q;
    for (const auto& c : s.charges) q.push_back(c.q0);
    return q;
}
std::vector<Vec3> initial_p(const Scenario& s) {
    std::vector<Vec3> p;
    for (const auto& c : s.charges) p.push_back(c.p0);
    return p;
}

double max_constraint(const MlsiSolution& sol) {
    double m = 0.0;
    for (const auto& r : sol.constraints) m = std::max(m, r.residual);
    return m;
}

int run_maxwell_probe(const Scenario& s, const fs::path& out, std::ostream& log) {
    const auto charges = s.charge_specs();
    const MlsiConfig cfg = s.mlsi_config();
    const auto q = initial_q(s);
    const MlsiSolution sol =
        mlsi_integrate(charges, PhasePoint{q, initial_p(s), coulomb_seed(charges, q)}, s.run.t0, s.run.t_end, cfg);
    const auto times = probe_times(s, s.run.t0, s.run.t_end, {s.run.t0, s.run.t_end});
    const auto pts = probe_points(s);

    std::vector<FieldRow> rows;
    for (double t : times)
        for (const Vec3& x : pts) {
            EB total;
            for (std::size_t i = 0; i < sol.size(); ++i) {
                const EB f = sol.fields[i]->eval(t, x);
                total += f;
                rows.push_back({t, x, f, fmt::format("charge{}", i)});
            }
            rows.push_back({t, x, total, "total"});
        }
    write_trajectory(out / s.output.trajectory, sol);
    write_fields(out / s.output.fields, rows);
    write_json(out / s.output.summary, {{"mode", s.run.mode},
                                        {"status", "ok"},
                                        {"max_speed", sol.max_speed},
                                        {"constraint_checks", sol.constraints.size()},
                                        {"constraint_max", max_constraint(sol)},
                                        {"constraint_at_end", constraint_residual(sol, s.run.t_end)}});
    log << fmt::format("maxwell-probe: {} steps, max speed {:.6g}\n", sol.trajectories[0]->samples().size() - 1,
                       sol.max_speed);
    return exit_ok;
}

int run_synge(const Scenario& s, const fs::path& out, std::ostream& log) {
    const auto charges = s.charge_specs();
    const MlsiConfig cfg = s.mlsi_config();
    std::vector<PastSpec> past;
    for (const auto& c : s.charges) past.push_back(c.past);
    const SyngeHistory h = build_history(charges, initial_q(s), initial_p(s), past, s.run.t0, cfg);
    const SyngeSolution sol = synge_solve(h, s.run.t_end, cfg);
    const auto times = probe_times(s, s.run.t0, s.run.t_end, linspace(s.run.t0, s.run.t_end, 5));
    const auto pts = probe_points(s);

    std::vector<FieldProbe> probes;
    std::vector<FieldRow> rows;
    for (double t : times)
        for (const Vec3& x : pts) {
            probes.push_back({t, x});
            for (std::size_t i = 0; i < h.size(); ++i) {
                rows.push_back({t, x, sol.mlsi.fields[i]->eval(t, x), fmt::format("evolved{}", i)});
                rows.push_back({t, x, lw_field(*sol.concatenated[i], charges[i].rho, t, x, TimeSign::retarded, cfg.quad),
                                fmt::format("retarded{}", i)});
            }
        }
    const ConsistencyReport rep = synge_self_consistency(sol, h, probes, cfg.quad);
    write_trajectory(out / s.output.trajectory, sol.mlsi);
    write_fields(out / s.output.fields, rows);
    write_json(out / s.output.summary, {{"mode", s.run.mode},
                                        {"status", "ok"},
                                        {"transition", h.transition},
                                        {"junction_jump", sol.junction_jump},
                                        {"junction_mismatch", junction_mismatch(h, cfg)},
                                        {"self_consistency_abs", rep.max_abs},
                                        {"self_consistency_rel", rep.max_rel},
                                        {"max_speed", sol.mlsi.max_speed},
                                        {"constraint_max", max_constraint(sol.mlsi)}});
    log << fmt::format("synge: junction jump {:.3g}, self-consistency {:.3g} (relative)\n", sol.junction_jump,
                       rep.max_rel);
    return exit_ok;
}

int run_fixed_point(const Scenario& s, const fs::path& out, std::ostream& log) {
    const auto charges = s.charge_specs();
    const WfConfig cfg = s.wf_config();
    const auto q = initial_q(s);
    const FixedPointResult r = fixed_point_solve(charges, q, initial_p(s), cfg);
    const auto times = probe_times(s, -cfg.T, cfg.T, linspace(-cfg.T, cfg.T, 3));
    const auto pts = probe_points(s);

    {
        std::ofstream rl = open_out(out / s.output.residual_log);
        for (const auto& it : r.diagnostics.iterations)
            rl << json{{"iter", it.iter}, {"residual_F1w", it.residual}, {"damping", it.damping}, {"wall_ms", it.wall_ms}}
                      .dump()
               << '\n';
    }
    const auto G = boundary_seeded_fields(r.solution, r.boundary, cfg.e_plus, cfg.e_minus, cfg.mlsi.quad);
    std::vector<FieldRow> rows;
    for (double t : times)
        for (const Vec3& x : pts)
            for (std::size_t i = 0; i < charges.size(); ++i) {
                rows.push_back({t, x, r.solution.fields[i]->eval(t, x), fmt::format("charge{}", i)});
                rows.push_back({t, x, G[i]->eval(t, x), fmt::format("seeded{}", i)});
            }
    const ForceResidual wf = wf_residual(r.solution, cfg, linspace(-cfg.T, cfg.T, cfg.T > 0 ? 11 : 1));

    json summary{{"mode", s.run.mode},
                 {"status", r.diagnostics.converged ? "converged" : "unconverged"},
                 {"iterations", r.diagnostics.iterations.size()},
                 {"final_residual", r.diagnostics.final_residual},
                 {"best_iter", r.diagnostics.best_iter},
                 {"wf_residual_abs", wf.max_abs},
                 {"wf_residual_rel", wf.relative()},
                 {"max_speed", r.solution.max_speed}};
    if (cfg.T > 0) {
        double dq = 0.0, R = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            R = std::max(R, charges[i].rho.R());
            for (std::size_t j = 0; j < i; ++j) dq = std::max(dq, norm(q[i] - q[j]));
        }
        const double v = velocity_bound({&r.solution});
        const InteractionWindow w = interaction_window(v, cfg.T, dq, R);
        summary["velocity_bound"] = v;
        summary["interaction_window"] = {{"L", w.L}, {"guaranteed", w.guaranteed}};
    }
    write_trajectory(out / s.output.trajectory, r.solution);
    write_fields(out / s.output.fields, rows);
    write_json(out / s.output.summary, summary);
    log << fmt::format("wf-fixed-point: {} after {} iterations, residual {:.3g}\n",
                       r.diagnostics.converged ? "converged" : "unconverged", r.diagnostics.iterations.size(),
                       r.diagnostics.final_residual);
    return r.diagnostics.converged ? exit_ok : exit_unconverged;
}

struct SuiteResult {
    std::string name;
    double value, tol;
    bool pass() const { return value <= tol; }
};

// Invariant suites on the scenario's first charge profile and quadrature. Each takes a few seconds at most.
int run_verify(const Scenario& s, const fs::path& out, std::ostream& log) {
    const auto charges = s.charge_specs();
    const MlsiConfig cfg = s.mlsi_config();
    const FieldQuad& quad = cfg.quad;
    const ChargeDensity& rho = charges[0].rho;
    const double R = rho.R(), e = std::abs(rho.e());
    std::mt19937_64 rng(s.seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    auto shell_point = [&](double rmin, double rmax) {
        for (;;) {
            const Vec3 u{unit(), unit(), unit()};
            const double n = norm(u);
            if (n > 1.0 || n < 1e-3) continue;
            return u / n * (rmin + (rmax - rmin) * (0.5 + 0.5 * unit()));
        }
    };
    std::vector<SuiteResult> suites;

    {  // static charge: both Lienard-Wiechert signs reduce to the Coulomb field
        const ChargeTrajectory rest = ChargeTrajectory::at_rest({}, charges[0].mass);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const Vec3 x = shell_point(0.1 * R, 4 * R);
            const EB ref = coulomb_field(rho, {}, x);
            for (TimeSign sg : {TimeSign::retarded, TimeSign::advanced})
                worst = std::max(worst, norm(lw_field(rest, rho, 0.7, x, sg, quad) - ref) / norm(ref.E));
        }
        suites.push_back({"static_oracle", worst, 1e-6});
    }
    {  // uniform motion at half the speed of light against the smeared boosted Coulomb field
        const Vec3 v{0.5, 0, 0};
        const ChargeTrajectory u = ChargeTrajectory::uniform({}, p_of_v(v, charges[0].mass), charges[0].mass);
        const BallQuadRule ball = BallQuadRule::product(24, SphereQuadRule::product(24, 48));
        double worst = 0.0;
        for (int k = 0; k < 4; ++k) {
            const double t = 0.5 * unit();
            const Vec3 x = u.position(t) + shell_point(1.5 * R, 4 * R);
            const EB ref = oracle::smeared_boosted(rho, u.position(t), v, x, ball);
            worst = std::max(worst, norm(lw_field(u, rho, t, x, TimeSign::retarded, quad) - ref) / norm(ref.E));
        }
        suites.push_back({"uniform_oracle", worst, 1e-4});
    }
    {  // a lone charge keeps its momentum
        const std::vector<ChargeSpec> one{charges[0]};
        const Vec3 q0 = s.charges[0].q0, p0 = s.charges[0].p0;
        MlsiConfig c1 = cfg;
        c1.dt = 0.1;
        const MlsiSolution sol = mlsi_integrate(one, PhasePoint{{q0}, {p0}, coulomb_seed(one, {q0})}, 0.0, 2.0, c1);
        const Vec3 v0 = v_of_p(p0, charges[0].mass);
        double dev = 0.0;
        for (const auto& smp : sol.trajectories[0]->samples())
            dev = std::max({dev, norm(smp.p - p0), norm(smp.q - (q0 + v0 * smp.t))});
        suites.push_back({"no_self_interaction", dev, 1e-8});
    }
    {  // Coulomb data at the initial positions satisfy the constraints
        const auto q = initial_q(s);
        const double h = cfg.stencil_h > 0 ? cfg.stencil_h : 1e-3 * R;
        suites.push_back({"initial_constraints", constraint_residual(charges, coulomb_seed(charges, q), q, 0.0, h), 1e-4});
    }
    {  // window arithmetic against a hand value
        const InteractionWindow w = interaction_window(0.5, 10.0, 1.0, 0.1);
        suites.push_back({"interaction_window", std::abs(w.L - 3.8 / 1.5), 1e-12});
    }
    {  // the boundary fields vanish deep inside the shadow
        const ShadowReport rep = shadow_check({}, {0.2, 0, 0}, rho, 5 * R, {{0.0, {}}, {0.5 * R, {R, 0, 0}}}, quad);
        suites.push_back({"shadow", rep.max() * R * R / e, 1e-6});
    }

    bool ok = true;
    json rows = json::array();
    for (const auto& r : suites) {
        ok = ok && r.pass();
        log << fmt::format("{} {} {:.3g} <= {:.1g}\n", r.pass() ? "PASS" : "FAIL", r.name, r.value, r.tol);
        rows.push_back({{"name", r.name}, {"value", r.value}, {"tol", r.tol}, {"pass", r.pass()}});
    }
    write_json(out / s.output.summary, {{"mode", s.run.mode}, {"status", ok ? "pass" : "fail"}, {"suites", rows}});
    return ok ? exit_ok : exit_check_failed;
}

}  // namespace

int report_error(const fs::path& out_dir, int code, const std::string& kind, const std::string& message,
                 std::ostream& log) {
    const json rec{{"status", "error"}, {"exit_code", code}, {"kind", kind}, {"message", message}};
    log << rec.dump() << '\n';
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!ec) {
        std::ofstream out(out_dir / "error.json", std::ios::binary);
        if (out) out << rec.dump(2) << '\n';
    }
    return code;
}

int run(const Scenario& s, const RunOptions& opt, std::ostream& log) {
#ifdef _OPENMP
    if (opt.threads > 0) omp_set_num_threads(opt.threads);
#endif
    try {
        validate(s);
        fs::create_directories(opt.out_dir);
        write_json(opt.out_dir / "scenario.json", emit_scenario(s));
        if (s.run.mode == "maxwell-probe") return run_maxwell_probe(s, opt.out_dir, log);
        if (s.run.mode == "synge") return run_synge(s, opt.out_dir, log);
        if (s.run.mode == "wf-fixed-point") return run_fixed_point(s, opt.out_dir, log);
        return run_verify(s, opt.out_dir, log);
    } catch (const InvalidInput& e) {
        return report_error(opt.out_dir, exit_invalid_scenario, "invalid_scenario", e.what(), log);
    } catch (const ConstraintViolation& e) {
        return report_error(opt.out_dir, exit_solver_abort, "constraint_violation", e.what(), log);
    } catch (const SolverAbort& e) {
        return report_error(opt.out_dir, exit_solver_abort, "solver_abort", e.what(), log);
    } catch (const DomainError& e) {
        return report_error(opt.out_dir, exit_solver_abort, "domain_error", e.what(), log);
    } catch (const std::exception& e) {
        return report_error(opt.out_dir, exit_solver_abort, "internal", e.what(), log);
    }
}

}  // namespace wfrho::cli
