#include "wfrho/maxwell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace wfrho {

namespace {

constexpr double kPi = std::numbers::pi;

// Newton iteration safeguarded by bisection for a monotone g on [lo, hi] with a sign change.
template <class G>
double bracketed_root(G&& g, double lo, double hi, double tol, int max_iter) {
    auto [glo, dlo] = g(lo);
    auto [ghi, dhi] = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0.0) == (ghi > 0.0)) throw SolverAbort("light-cone root is not bracketed");
    const bool increasing = ghi > glo;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        auto [gx, dx] = g(x);
        if (gx == 0.0) return x;
        if ((gx > 0.0) == increasing) hi = x; else lo = x;
        double next = (dx != 0.0) ? x - gx / dx : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) < tol || hi - lo < tol) return next;
        x = next;
    }
    throw SolverAbort("light-cone root did not converge");
}

// Distance function of the light-cone window on one side of t: sign (s - t) - |x - q_s|,
// together with its derivative in s.
struct ConeGap {
    const ChargeTrajectory& traj;
    const Vec3& x;
    double t;
    double sign;
    std::pair<double, double> operator()(double s) const {
        const TrajState st = traj.eval(s);
        const Vec3 dq = st.q - x;
        const double d = norm(dq);
        const double dd = d > 0.0 ? dot(dq, st.v) / d : 0.0;
        return {sign * (s - t) - d, sign - dd};
    }
};

double effective_speed_bound(const ChargeTrajectory& traj) {
    return 0.5 * (1.0 + traj.speed_bound());
}

// Sub-interval of [a, b] (entirely on one side of t) where the sphere of radius |t - s| about x
// meets the support ball of radius R about q_s.
std::optional<std::pair<double, double>> cone_window(const ChargeTrajectory& traj, const Vec3& x, double t,
                                                     double a, double b, double R, TimeSign side,
                                                     const FieldQuad& quad) {
    const double sg = side == TimeSign::advanced ? 1.0 : -1.0;
    ConeGap gap{traj, x, t, sg};
    const double vb = effective_speed_bound(traj);
    if (side == TimeSign::retarded) {
        if (!std::isfinite(a)) {
            const double gb = gap(b).first;
            double step = std::max(0.0, R - gb) / (1.0 - vb) + R + 1e-9;
            a = b - step;
            while (gap(a).first < R) { step *= 2.0; a = b - step; }
        }
        const double ga = gap(a).first, gb = gap(b).first;
        if (gb >= R || ga <= -R) return std::nullopt;
        auto shifted = [&](double target) {
            return [&, target](double s) { auto [v, dv] = gap(s); return std::pair<double, double>{v - target, dv}; };
        };
        const double lo = ga > R ? bracketed_root(shifted(R), a, b, quad.lightcone_tol, quad.lightcone_max_iter) : a;
        const double hi = gb < -R ? bracketed_root(shifted(-R), lo, b, quad.lightcone_tol, quad.lightcone_max_iter) : b;
        if (!(hi > lo)) return std::nullopt;
        return std::pair{lo, hi};
    }
    if (!std::isfinite(b)) {
        const double ga = gap(a).first;
        double step = std::max(0.0, R - ga) / (1.0 - vb) + R + 1e-9;
        b = a + step;
        while (gap(b).first < R) { step *= 2.0; b = a + step; }
    }
    const double ga = gap(a).first, gb = gap(b).first;
    if (ga >= R || gb <= -R) return std::nullopt;
    auto shifted = [&](double target) {
        return [&, target](double s) { auto [v, dv] = gap(s); return std::pair<double, double>{v - target, dv}; };
    };
    const double lo = ga < -R ? bracketed_root(shifted(-R), a, b, quad.lightcone_tol, quad.lightcone_max_iter) : a;
    const double hi = gb > R ? bracketed_root(shifted(R), lo, b, quad.lightcone_tol, quad.lightcone_max_iter) : b;
    if (!(hi > lo)) return std::nullopt;
    return std::pair{lo, hi};
}

// Integrand 4 pi |t - s| * sphere mean of (-grad rho_s - d_s j_s, curl j_s).
EB source_density(const ChargeDensity& rho, const ChargeTrajectory& traj, double s, double t, const Vec3& x,
                  const FieldQuad& quad) {
    const TrajState st = traj.eval(s);
    const Vec3 dq = st.q - x;
    const double d = norm(dq);
    const double r = std::abs(t - s);
    const ShellMeans m = shell_means(rho, r, d, quad);
    const Vec3 n = d > 0.0 ? dq / d : Vec3{};
    EB out;
    out.E = -m.m_grad * n - m.m0 * st.a + st.v * (dot(st.v, n) * m.m_grad);
    out.B = m.m_grad * cross(n, st.v);
    return out * (4.0 * kPi * r);
}

EB integrate_window(const ChargeDensity& rho, const ChargeTrajectory& traj, double lo, double hi, double t,
                    const Vec3& x, const FieldQuad& quad) {
    // split at velocity jumps, at asymptote attachments (the acceleration jumps there), at declared
    // breakpoints and where the sphere touches the support boundary from inside, where the integrand
    // is smooth but not analytic
    std::vector<double> cuts{lo};
    for (const auto& j : traj.jumps())
        if (j.t > lo && j.t < hi) cuts.push_back(j.t);
    for (double b : traj.breakpoints())
        if (b > lo && b < hi) cuts.push_back(b);
    if (traj.past() && traj.t_first() > lo && traj.t_first() < hi) cuts.push_back(traj.t_first());
    if (traj.future() && traj.t_last() > lo && traj.t_last() < hi) cuts.push_back(traj.t_last());
    auto tangency = [&](double s) {
        const TrajState st = traj.eval(s);
        const Vec3 dq = st.q - x;
        const double d = norm(dq);
        const double dd = d > 0.0 ? dot(dq, st.v) / d : 0.0;
        const double sg = s < t ? -1.0 : 1.0;
        return std::pair<double, double>{std::abs(t - s) + d - rho.R(), sg + dd};
    };
    const double f_lo = tangency(lo).first, f_hi = tangency(hi).first;
    if ((f_lo < 0.0) != (f_hi < 0.0) && f_lo != 0.0 && f_hi != 0.0)
        cuts.push_back(bracketed_root(tangency, lo, hi, quad.lightcone_tol, quad.lightcone_max_iter));
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    const GaussLegendre& gl = gauss_legendre(quad.n_time);
    EB acc;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        acc += gl.integrate(cuts[k], cuts[k + 1], [&](double s) { return source_density(rho, traj, s, t, x, quad); });
    return acc;
}

}  // namespace

FieldQuad FieldQuad::refined() const {
    FieldQuad q = *this;
    q.n_time *= 2;
    q.n_shell *= 2;
    q.smeared_radial *= 2;
    q.smeared_theta *= 2;
    q.smeared_phi *= 2;
    q.greens = GreensOptions(greens.sphere.n_theta * 2, greens.sphere.n_phi * 2, greens.n_radial * 2,
                             greens.n_time * 2, greens.h_stencil);
    return q;
}

ShellMeans shell_means(const ChargeDensity& rho, double r, double d, const FieldQuad& quad) {
    const double R = rho.R();
    if (rho.normalization() == 0.0) return {};
    if (r < 1e-14 * R) return {rho.value_r(d), 0.0, -rho.deriv_r(d)};
    if (d < 1e-12 * R) return {rho.value_r(r), 0.0, 0.0};
    const double lo = std::abs(r - d);
    if (lo >= R) return {};
    const double hi = std::min(r + d, R);
    ShellMeans m;
    if (hi - lo < 0.05 * R) {
        const GaussLegendre& gl = gauss_legendre(quad.n_shell);
        const double inv = 1.0 / (2.0 * r * d);
        for (int k = 0; k < gl.size(); ++k) {
            const double half = 0.5 * (hi - lo);
            const double rr = 0.5 * (hi + lo) + half * gl.nodes()[k];
            const double w = gl.weights()[k] * half * inv;
            const double val = rho.value_r(rr);
            m.m0 += w * val * rr;
            m.m_omega += w * val * rr * (r * r + d * d - rr * rr) / (2.0 * r * d);
            m.m_grad += w * rho.deriv_r(rr) * (r * r - d * d - rr * rr) / (2.0 * d);
        }
        return m;
    }
    const double i1 = rho.moment(1, hi) - rho.moment(1, lo);
    const double i3 = rho.moment(3, hi) - rho.moment(3, lo);
    const double vhi = rho.value_r(hi), vlo = rho.value_r(lo);
    m.m0 = i1 / (2.0 * r * d);
    m.m_omega = ((r * r + d * d) * i1 - i3) / (4.0 * r * r * d * d);
    m.m_grad = ((r * r - d * d) * (vhi - vlo) - (vhi * hi * hi - vlo * lo * lo) + 2.0 * i1) / (4.0 * r * d * d);
    return m;
}

double lightcone_time(const ChargeTrajectory& traj, const Vec3& x, double t, const Vec3& z_offset, TimeSign sign,
                      const FieldQuad& quad) {
    const Vec3 y = x - z_offset;
    const double sg = sign == TimeSign::advanced ? 1.0 : -1.0;
    ConeGap gap{traj, y, t, sg};
    const double g0 = gap(t).first;  // = -|y - q_t|
    if (g0 == 0.0) return t;
    const double vb = effective_speed_bound(traj);
    double step = -g0 / (1.0 - vb) + 1e-9;
    double far = t + sg * step;
    while (gap(far).first < 0.0) { step *= 2.0; far = t + sg * step; }
    const double lo = std::min(t, far), hi = std::max(t, far);
    const double root = bracketed_root(gap, lo, hi, quad.lightcone_tol, quad.lightcone_max_iter);
    const double resid = std::abs(gap(root).first);
    if (resid > 10.0 * quad.lightcone_tol)
        throw SolverAbort("light-cone residual " + std::to_string(resid) + " above tolerance");
    return root;
}

EB lw_point_integrand(const ChargeTrajectory& traj, double t, const Vec3& x, const Vec3& z, TimeSign sign,
                      const FieldQuad& quad, double R_scale) {
    const double tau = lightcone_time(traj, x, t, z, sign, quad);
    const TrajState st = traj.eval(tau);
    const Vec3 sep = x - z - st.q;
    const double D = norm(sep);
    if (D < quad.near_field_eps * R_scale) throw SolverAbort("light-cone distance below the near-field epsilon");
    const double s = sign == TimeSign::advanced ? 1.0 : -1.0;
    const Vec3 n = sep / D;
    const Vec3 nv = n + s * st.v;
    const double k = 1.0 + s * dot(n, st.v);
    const double k3 = k * k * k;
    EB out;
    out.E = nv * ((1.0 - norm2(st.v)) / (D * D * k3)) + cross(n, cross(nv, st.a)) / (D * k3);
    out.B = -s * cross(n, out.E);
    return out;
}

EB source_integral(const ChargeDensity& rho, const ChargeTrajectory& traj, double s_a, double s_b, double t,
                   const Vec3& x, const FieldQuad& quad) {
    if (s_a > s_b) std::swap(s_a, s_b);
    EB acc;
    if (rho.normalization() == 0.0 || s_a == s_b) return acc;
    const double R = rho.R();
    if (s_a < t) {
        if (auto w = cone_window(traj, x, t, s_a, std::min(s_b, t), R, TimeSign::retarded, quad))
            acc += integrate_window(rho, traj, w->first, w->second, t, x, quad);
    }
    if (s_b > t) {
        if (auto w = cone_window(traj, x, t, std::max(s_a, t), s_b, R, TimeSign::advanced, quad))
            acc += integrate_window(rho, traj, w->first, w->second, t, x, quad);
    }
    for (const auto& j : traj.jumps()) {
        if (!(j.t > s_a && j.t < s_b)) continue;
        const double r = std::abs(t - j.t);
        const double d = norm(traj.eval(j.t).q - x);
        const ShellMeans m = shell_means(rho, r, d, quad);
        acc.E -= j.dv * (4.0 * kPi * r * m.m0);
    }
    return acc;
}

EB coulomb_field(const ChargeDensity& rho, const Vec3& q, const Vec3& x) {
    const Vec3 dx = x - q;
    const double r = norm(dx);
    if (r == 0.0) return {};
    return {dx * (rho.enclosed_charge(r) / (r * r * r)), {}};
}

EB lw_field(const ChargeTrajectory& traj, const ChargeDensity& rho, double t, const Vec3& x, TimeSign sign,
            const FieldQuad& quad, LwRoute route) {
    const double inf = std::numeric_limits<double>::infinity();
    if (route == LwRoute::trajectory_integral) {
        return sign == TimeSign::retarded ? source_integral(rho, traj, -inf, t, t, x, quad)
                                          : source_integral(rho, traj, t, inf, t, x, quad);
    }
    const BallQuadRule ball =
        BallQuadRule::product(quad.smeared_radial, SphereQuadRule::product(quad.smeared_theta, quad.smeared_phi));
    const double R = rho.R();
    const double vol = 4.0 / 3.0 * kPi * R * R * R;
    EB acc;
    for (std::size_t k = 0; k < ball.points.size(); ++k) {
        const Vec3 z = ball.points[k] * R;
        const double w = ball.weights[k] * vol * rho(z);
        if (w == 0.0) continue;
        acc += lw_point_integrand(traj, t, x, z, sign, quad, R) * w;
    }
    return acc;
}

EB coulomb_kirchhoff_with_kick(const ChargeDensity& rho, const Vec3& q, const Vec3& v, double t_anchor, double t,
                               const Vec3& x, const FieldQuad& quad) {
    const double tau = t - t_anchor;
    const double r = std::abs(tau);
    const Vec3 dq = q - x;
    const double d = norm(dq);
    EB out = coulomb_field(rho, q, x);
    if (r == 0.0) return out;
    const Vec3 n = d > 0.0 ? dq / d : Vec3{};
    const double R = rho.R();
    // field of the charge inside the ball B_r(x), removed shell by shell
    const double u0 = std::max(0.0, d - R), u1 = std::min(r, d + R);
    double inner = 0.0;
    if (u1 > u0) {
        const GaussLegendre& gl = gauss_legendre(quad.n_time);
        auto f = [&](double u) { return shell_means(rho, u, d, quad).m_omega; };
        const double tangent = R - d;  // inner tangency of the sphere with the support boundary
        if (tangent > u0 && tangent < u1) inner = gl.integrate(u0, tangent, f) + gl.integrate(tangent, u1, f);
        else inner = gl.integrate(u0, u1, f);
    }
    const ShellMeans m = shell_means(rho, r, d, quad);
    out.E += n * (4.0 * kPi * (inner + r * m.m_omega));
    out.E -= v * (4.0 * kPi * tau * m.m0);
    return out;
}

// ---------------------------------------------------------------------------
// Field evaluators

double FieldEvaluator::divergence_source(double t, const Vec3& x) const {
    double acc = 0.0;
    for (const auto& s : sources()) acc += s.weight * s.rho(x - s.traj->eval(t).q);
    return 4.0 * kPi * acc;
}

CoulombField::CoulombField(ChargeDensity rho, const Vec3& q)
    : rho_(std::move(rho)), q_(q), rest_(std::make_shared<ChargeTrajectory>(ChargeTrajectory::at_rest(q, 1.0))) {}

std::vector<SourceTerm> CoulombField::sources() const { return {{1.0, rho_, rest_}}; }

LwField::LwField(std::shared_ptr<const ChargeTrajectory> traj, ChargeDensity rho, TimeSign sign, FieldQuad quad)
    : traj_(std::move(traj)), rho_(std::move(rho)), sign_(sign), quad_(std::move(quad)) {
    if (!traj_) throw InvalidInput("LW field needs a trajectory");
}

EB LwField::eval(double t, const Vec3& x) const { return lw_field(*traj_, rho_, t, x, sign_, quad_); }

namespace {

bool same_density(const ChargeDensity& a, const ChargeDensity& b) {
    return a.R() == b.R() && a.e() == b.e() && a.profile().sharpness == b.profile().sharpness;
}

}  // namespace

MaxwellSolution::MaxwellSolution(FieldPtr initial, double t0, std::shared_ptr<const ChargeTrajectory> traj,
                                 ChargeDensity rho, FieldQuad quad)
    : initial_(std::move(initial)), t0_(t0), traj_(std::move(traj)), rho_(std::move(rho)), quad_(std::move(quad)) {
    if (!initial_ || !traj_) throw InvalidInput("Maxwell solution needs initial field and trajectory");
    if (!traj_->covers(t0_)) throw DomainError("trajectory does not cover the initial time");
    const TrajState here = traj_->eval(t0_);
    std::vector<SourceTerm> src = initial_->sources();
    if (src.empty()) return;
    double wsum = 0.0;
    Vec3 vsum;
    for (const auto& s : src) {
        if (!same_density(s.rho, rho_) || !s.traj->covers(t0_)) return;
        const TrajState st = s.traj->eval(t0_);
        if (norm(st.q - here.q) > 1e-10 * (1.0 + norm(here.q))) return;
        wsum += s.weight;
        vsum += st.v * s.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12) return;
    // merge repeated trajectories
    for (const auto& s : src) {
        auto it = std::find_if(initial_sources_.begin(), initial_sources_.end(),
                               [&](const SourceTerm& o) { return o.traj == s.traj; });
        if (it != initial_sources_.end()) it->weight += s.weight;
        else initial_sources_.push_back(s);
    }
    reuse_sources_ = true;
    kick_velocity_ = here.v - vsum;
}

EB MaxwellSolution::eval(double t, const Vec3& x) const {
    if (!reuse_sources_) return eval_generic(t, x);
    EB out = initial_->eval(t, x);
    if (t == t0_) return out;
    out += source_integral(rho_, *traj_, t0_, t, t, x, quad_);
    for (const auto& s : initial_sources_) {
        if (s.weight == 0.0) continue;
        out -= source_integral(rho_, *s.traj, t0_, t, t, x, quad_) * s.weight;
    }
    if (norm2(kick_velocity_) > 0.0) {
        const double r = std::abs(t - t0_);
        const double d = norm(traj_->eval(t0_).q - x);
        out.E -= kick_velocity_ * (4.0 * kPi * (t - t0_) * shell_means(rho_, r, d, quad_).m0);
    }
    return out;
}

EB MaxwellSolution::eval_generic(double t, const Vec3& x) const {
    const double t0 = t0_;
    const FieldPtr F0 = initial_;
    if (t == t0) return F0->eval(t0, x);
    const GreensOptions& g = quad_.greens;
    const double h = g.h_stencil;
    VectorField3 E0{[F0, t0](const Vec3& y) { return F0->eval(t0, y).E; }, {}, {}};
    VectorField3 B0{[F0, t0](const Vec3& y) { return F0->eval(t0, y).B; }, {}, {}};
    E0.laplacian = [f = E0.value, h](const Vec3& y) { return stencil_laplacian(f, y, h); };
    B0.laplacian = [f = B0.value, h](const Vec3& y) { return stencil_laplacian(f, y, h); };
    const VectorField3 curlE{[f = E0.value, h](const Vec3& y) { return stencil_curl(f, y, h); }, {}, {}};
    const VectorField3 curlB{[f = B0.value, h](const Vec3& y) { return stencil_curl(f, y, h); }, {}, {}};
    const double tau = t - t0;
    EB out;
    out.E = dtK_conv(E0, tau, x, g) + K_conv(curlB, tau, x, g.sphere);
    out.B = dtK_conv(B0, tau, x, g) - K_conv(curlE, tau, x, g.sphere);
    const TrajState st = traj_->eval(t0);
    const double m0 = shell_means(rho_, std::abs(tau), norm(st.q - x), quad_).m0;
    out.E -= st.v * (4.0 * kPi * tau * m0);
    out += source_integral(rho_, *traj_, t0, t, t, x, quad_);
    return out;
}

Superposition::Superposition(std::vector<std::pair<double, FieldPtr>> terms) : terms_(std::move(terms)) {
    for (const auto& [w, f] : terms_)
        if (!f) throw InvalidInput("superposition term is empty");
}

EB Superposition::eval(double t, const Vec3& x) const {
    EB acc;
    for (const auto& [w, f] : terms_)
        if (w != 0.0) acc += f->eval(t, x) * w;
    return acc;
}

std::vector<SourceTerm> Superposition::sources() const {
    std::vector<SourceTerm> out;
    for (const auto& [w, f] : terms_) {
        auto s = f->sources();
        if (s.empty()) return {};
        for (auto& term : s) {
            term.weight *= w;
            out.push_back(std::move(term));
        }
    }
    return out;
}

std::vector<SourceTerm> ScaledField::sources() const {
    auto s = inner_->sources();
    for (auto& term : s) term.weight *= factor_;
    return s;
}

EB maxwell_evolve(const FieldPtr& F0, double t0, const std::shared_ptr<const ChargeTrajectory>& traj,
                  const ChargeDensity& rho, double t, const Vec3& x, const FieldQuad& quad) {
    return MaxwellSolution(F0, t0, traj, rho, quad).eval(t, x);
}

double MaxwellResidual::max() const { return std::max({ampere, faraday, gauss_e, gauss_b}); }

MaxwellResidual maxwell_residual(const FieldEvaluator& F, const ChargeDensity& rho, const ChargeTrajectory& traj,
                                 double t, const Vec3& x, double h, double dt) {
    auto E = [&](const Vec3& y) { return F.eval(t, y).E; };
    auto B = [&](const Vec3& y) { return F.eval(t, y).B; };
    const EB plus = F.eval(t + dt, x), minus = F.eval(t - dt, x);
    const Vec3 dE = (plus.E - minus.E) / (2 * dt);
    const Vec3 dB = (plus.B - minus.B) / (2 * dt);
    const TrajState st = traj.eval(t);
    const double dens = rho(x - st.q);
    MaxwellResidual r;
    r.ampere = norm(dE - stencil_curl(B, x, h) + st.v * (4.0 * kPi * dens));
    r.faraday = norm(dB + stencil_curl(E, x, h));
    r.gauss_e = std::abs(stencil_div(E, x, h) - 4.0 * kPi * dens);
    r.gauss_b = std::abs(stencil_div(B, x, h));
    return r;
}

}  // namespace wfrho
