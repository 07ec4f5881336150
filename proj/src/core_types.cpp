#include "wfrho/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "wfrho/parallel.hpp"
#include "wfrho/quadrature.hpp"

namespace wfrho {

Vec3 v_of_p(const Vec3& p, double m) {
    return p / std::sqrt(m * m + norm2(p));
}

Vec3 p_of_v(const Vec3& v, double m) {
    const double v2 = norm2(v);
    if (!(v2 < 1.0)) throw InvalidInput("velocity must be below the speed of light");
    return v * (std::abs(m) / std::sqrt(1.0 - v2));
}

Vec3 accel_of(const Vec3& p, const Vec3& pdot, double m) {
    const double en = std::sqrt(m * m + norm2(p));
    return pdot / en - p * (dot(p, pdot) / (en * en * en));
}

Vec3 pdot_of(const Vec3& v, const Vec3& a, double m) {
    const double g2 = 1.0 / (1.0 - norm2(v));
    const double g = std::sqrt(g2);
    return (a * g + v * (g * g2 * dot(v, a))) * std::abs(m);
}

// ---------------------------------------------------------------------------
// ChargeDensity

double ChargeDensity::shape(double u) const {
    if (u >= 1.0) return 0.0;
    return std::exp(-profile_.sharpness / (1.0 - u * u));
}

double ChargeDensity::value_r(double r) const {
    if (c_ == 0.0) return 0.0;
    return c_ * shape(std::abs(r) / R_);
}

double ChargeDensity::deriv_r(double r) const {
    const double u = std::abs(r) / R_;
    if (c_ == 0.0 || u >= 1.0) return 0.0;
    const double g = 1.0 - u * u;
    const double d = c_ * shape(u) * (-2.0 * profile_.sharpness * u / (g * g)) / R_;
    return r < 0.0 ? -d : d;
}

Vec3 ChargeDensity::gradient(const Vec3& x) const {
    const double r = norm(x);
    if (r == 0.0) return {};
    return x * (deriv_r(r) / r);
}

double ChargeDensity::moment(int k, double r) const {
    if (k < 1 || k > 3) throw InvalidInput("density moment order must be 1, 2 or 3");
    if (c_ == 0.0 || r <= 0.0) return 0.0;
    const double u = std::min(r / R_, 1.0);
    const std::vector<double>& cum = tables_->cumulative[k];
    const std::vector<double>& f = tables_->integrand[k];
    const double du = tables_->du;
    const std::size_t n = cum.size() - 1;
    std::size_t i = std::min(static_cast<std::size_t>(u / du), n - 1);
    const double s = (u - i * du) / du;
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    const double val = h00 * cum[i] + h10 * du * f[i] + h01 * cum[i + 1] + h11 * du * f[i + 1];
    return c_ * std::pow(R_, k + 1) * val;
}

double ChargeDensity::enclosed_charge(double r) const {
    return 4.0 * std::numbers::pi * moment(2, r);
}

ChargeDensity make_bump_density(double R, double e, BumpProfile profile, int table_intervals) {
    if (!(R > 0.0) || !std::isfinite(R)) throw InvalidInput("support radius R must be positive");
    if (!std::isfinite(e)) throw InvalidInput("total charge must be finite");
    if (!(profile.sharpness > 0.0)) throw InvalidInput("bump sharpness must be positive");
    if (table_intervals < 16) throw InvalidInput("too few moment table intervals");

    ChargeDensity rho;
    rho.e_ = e;
    rho.R_ = R;
    rho.profile_ = profile;

    auto tables = std::make_shared<ChargeDensity::Tables>();
    tables->du = 1.0 / table_intervals;
    const GaussLegendre& gl = gauss_legendre(10);
    for (int k = 1; k <= 3; ++k) {
        auto& cum = tables->cumulative[k];
        auto& f = tables->integrand[k];
        cum.assign(table_intervals + 1, 0.0);
        f.assign(table_intervals + 1, 0.0);
        for (int i = 0; i <= table_intervals; ++i) f[i] = rho.shape(i * tables->du) * std::pow(i * tables->du, k);
        for (int i = 0; i < table_intervals; ++i) {
            const double a = i * tables->du, b = a + tables->du;
            cum[i + 1] = cum[i] + gl.integrate(a, b, [&](double u) { return rho.shape(u) * std::pow(u, k); });
        }
    }
    rho.tables_ = tables;
    const double unit_charge = 4.0 * std::numbers::pi * R * R * R * tables->cumulative[2].back();
    rho.c_ = e / unit_charge;
    return rho;
}

// ---------------------------------------------------------------------------
// ChargeTrajectory

ChargeTrajectory::ChargeTrajectory(std::vector<TrajectorySample> samples, double mass,
                                   std::optional<AsymptoteSpec> past, std::optional<AsymptoteSpec> future)
    : samples_(std::move(samples)), mass_(mass), past_(past), future_(future) {
    finalize();
}

void ChargeTrajectory::finalize() {
    if (mass_ == 0.0 || !std::isfinite(mass_)) throw InvalidInput("mass must be nonzero");
    if (samples_.empty()) throw InvalidInput("trajectory needs at least one sample");
    if (samples_.size() == 1 && !past_ && !future_)
        throw InvalidInput("single-sample trajectory needs an asymptote");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        const auto& s = samples_[i];
        if (!std::isfinite(s.t) || !isfinite(s.q) || !isfinite(s.p) || !isfinite(s.pdot))
            throw InvalidInput("non-finite trajectory sample");
        if (i > 0 && !(s.t > samples_[i - 1].t)) throw InvalidInput("sample times must be strictly increasing");
    }
    speed_bound_ = 0.0;
    for (const auto& s : samples_) speed_bound_ = std::max(speed_bound_, norm(v_of_p(s.p, mass_)));
    if (!(speed_bound_ < 1.0)) throw InvalidInput("trajectory is not strictly time-like");

    jumps_.clear();
    auto attach = [&](const AsymptoteSpec& a, const TrajectorySample& s, bool before) {
        const TrajState st = eval_asymptote(a, s.t);
        const double tol = 1e-9 * (1.0 + norm(s.q));
        if (norm(st.q - s.q) > tol) throw InvalidInput("asymptote does not attach continuously to the samples");
        speed_bound_ = std::max(speed_bound_, norm(st.v));
        const Vec3 vs = v_of_p(s.p, mass_);
        const Vec3 dv = before ? vs - st.v : st.v - vs;
        if (norm(dv) > 1e-14) jumps_.push_back({s.t, dv});
    };
    if (past_) attach(*past_, samples_.front(), true);
    if (future_) attach(*future_, samples_.back(), false);
    if (!(speed_bound_ < 1.0)) throw InvalidInput("asymptote is not strictly time-like");
}

ChargeTrajectory ChargeTrajectory::from_states(const std::vector<TrajectorySample>& states, double mass,
                                               std::optional<AsymptoteSpec> past,
                                               std::optional<AsymptoteSpec> future) {
    std::vector<TrajectorySample> s = states;
    const std::size_t n = s.size();
    if (n == 2) {
        const Vec3 slope = (s[1].p - s[0].p) / (s[1].t - s[0].t);
        s[0].pdot = s[1].pdot = slope;
    } else if (n > 2) {
        // derivative of the quadratic through three consecutive nodes, evaluated at node j
        auto quad_deriv = [&](std::size_t i0, std::size_t j) {
            const double t0 = s[i0].t, t1 = s[i0 + 1].t, t2 = s[i0 + 2].t, t = s[j].t;
            const double l0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
            const double l1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
            const double l2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
            return states[i0].p * l0 + states[i0 + 1].p * l1 + states[i0 + 2].p * l2;
        };
        s[0].pdot = quad_deriv(0, 0);
        for (std::size_t j = 1; j + 1 < n; ++j) s[j].pdot = quad_deriv(j - 1, j);
        s[n - 1].pdot = quad_deriv(n - 3, n - 1);
    }
    return ChargeTrajectory(std::move(s), mass, past, future);
}

ChargeTrajectory ChargeTrajectory::uniform(const Vec3& q0, const Vec3& p, double mass, double t0) {
    const AsymptoteSpec a = AsymptoteSpec::uniform(t0, q0, p);
    return ChargeTrajectory({{t0, q0, p, {}}}, mass, a, a);
}

double ChargeTrajectory::domain_begin() const {
    return past_ ? -std::numeric_limits<double>::infinity() : samples_.front().t;
}

double ChargeTrajectory::domain_end() const {
    return future_ ? std::numeric_limits<double>::infinity() : samples_.back().t;
}

TrajState ChargeTrajectory::eval_asymptote(const AsymptoteSpec& a, double t) const {
    TrajState st;
    if (a.mode == AsymptoteMode::rest) {
        st.q = a.anchor_q;
        return st;
    }
    st.p = a.anchor_p;
    st.v = v_of_p(a.anchor_p, mass_);
    st.q = a.anchor_q + st.v * (t - a.anchor_t);
    return st;
}

TrajState ChargeTrajectory::eval(double t) const {
    if (!std::isfinite(t)) throw DomainError("trajectory queried at non-finite time");
    if (t < samples_.front().t) {
        if (!past_) throw DomainError("time " + std::to_string(t) + " before trajectory start");
        return eval_asymptote(*past_, t);
    }
    if (t > samples_.back().t) {
        if (!future_) throw DomainError("time " + std::to_string(t) + " after trajectory end");
        return eval_asymptote(*future_, t);
    }
    if (samples_.size() == 1) {
        const auto& s = samples_.front();
        return {s.q, s.p, v_of_p(s.p, mass_), accel_of(s.p, s.pdot, mass_)};
    }
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double tt, const TrajectorySample& s) { return tt < s.t; });
    std::size_t i = static_cast<std::size_t>(it - samples_.begin());
    i = std::clamp<std::size_t>(i, 1, samples_.size() - 1) - 1;
    const TrajectorySample& a = samples_[i];
    const TrajectorySample& b = samples_[i + 1];
    const double h = b.t - a.t;
    const double s = (t - a.t) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    const Vec3 va = v_of_p(a.p, mass_), vb = v_of_p(b.p, mass_);
    TrajState st;
    st.q = a.q * h00 + va * (h10 * h) + b.q * h01 + vb * (h11 * h);
    st.p = a.p * h00 + a.pdot * (h10 * h) + b.p * h01 + b.pdot * (h11 * h);
    const Vec3 pdot = (a.p * d00 + a.pdot * (d10 * h) + b.p * d01 + b.pdot * (d11 * h)) / h;
    st.v = v_of_p(st.p, mass_);
    st.a = accel_of(st.p, pdot, mass_);
    if (!(norm2(st.v) < 1.0)) throw SolverAbort("interpolated trajectory is not time-like");
    return st;
}

ChargeTrajectory ChargeTrajectory::extended(const TrajectorySample& s) const {
    std::vector<TrajectorySample> out;
    out.reserve(samples_.size() + 1);
    if (s.t > samples_.back().t) {
        out = samples_;
        out.push_back(s);
    } else if (s.t < samples_.front().t) {
        out.push_back(s);
        out.insert(out.end(), samples_.begin(), samples_.end());
    } else {
        throw InvalidInput("extension sample must lie outside the sampled range");
    }
    ChargeTrajectory r(std::move(out), mass_);
    r.breakpoints_ = breakpoints_;
    return r;
}

ChargeTrajectory ChargeTrajectory::with_asymptotes(std::optional<AsymptoteSpec> past,
                                                   std::optional<AsymptoteSpec> future) const {
    ChargeTrajectory r(samples_, mass_, past, future);
    r.breakpoints_ = breakpoints_;
    return r;
}

ChargeTrajectory ChargeTrajectory::with_breakpoints(std::vector<double> times) const {
    for (double t : times)
        if (!std::isfinite(t)) throw InvalidInput("breakpoints must be finite");
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    ChargeTrajectory r = *this;
    r.breakpoints_ = std::move(times);
    return r;
}

// ---------------------------------------------------------------------------

void PhasePoint::validate(const std::vector<double>& masses) const {
    if (q.size() != p.size() || q.size() != masses.size())
        throw InvalidInput("phase point lists must have equal length");
    if (!fields.empty() && fields.size() != q.size())
        throw InvalidInput("phase point needs one field per charge");
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (masses[i] == 0.0) throw InvalidInput("mass must be nonzero");
        if (!isfinite(q[i]) || !isfinite(p[i])) throw InvalidInput("non-finite phase point");
        if (!(norm(v_of_p(p[i], masses[i])) < 1.0)) throw InvalidInput("charge speed must be below 1");
    }
}

// ---------------------------------------------------------------------------
// Norm grids

NormGrid NormGrid::ball(const Vec3& center, double radius, double spacing, double h_stencil) {
    if (!(radius > 0.0) || !(spacing > 0.0)) throw InvalidInput("norm grid radius and spacing must be positive");
    NormGrid g;
    g.center = center;
    g.radius = radius;
    g.spacing = spacing;
    g.h_stencil = h_stencil > 0.0 ? h_stencil : std::min(1e-3, 0.1 * spacing);
    const int n = static_cast<int>(std::floor(radius / spacing));
    const double cell = spacing * spacing * spacing;
    for (int i = -n; i <= n; ++i)
        for (int j = -n; j <= n; ++j)
            for (int k = -n; k <= n; ++k) {
                const Vec3 off{i * spacing, j * spacing, k * spacing};
                if (norm(off) > radius) continue;
                const Vec3 x = center + off;
                g.nodes.push_back(x);
                g.mu.push_back(cell);
                g.w.push_back(norm_weight(x));
            }
    return g;
}

double NormGrid::tail_bound(double charge) const {
    const double r = radius - norm(center);
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    return 4.0 * std::numbers::pi * charge * charge / (3.0 * r * r * r);
}

Vec3 stencil_curl(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h) {
    const Vec3 ex{h, 0, 0}, ey{0, h, 0}, ez{0, 0, h};
    const Vec3 dx = (f(x + ex) - f(x - ex)) / (2 * h);
    const Vec3 dy = (f(x + ey) - f(x - ey)) / (2 * h);
    const Vec3 dz = (f(x + ez) - f(x - ez)) / (2 * h);
    return {dy.z - dz.y, dz.x - dx.z, dx.y - dy.x};
}

double stencil_div(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h) {
    const Vec3 ex{h, 0, 0}, ey{0, h, 0}, ez{0, 0, h};
    return ((f(x + ex) - f(x - ex)).x + (f(x + ey) - f(x - ey)).y + (f(x + ez) - f(x - ez)).z) / (2 * h);
}

GridSample sample_on_grid(const FieldAtTime& field, const NormGrid& grid, int order) {
    if (order != 0 && order != 1) throw InvalidInput("norm order must be 0 or 1");
    GridSample out;
    out.order = order;
    const std::size_t n = grid.size();
    out.value.resize(n);
    if (order == 1) out.curl.resize(n);
    const double h = grid.h_stencil;
    parallel_for(static_cast<long>(n), [&](long k) {
        const Vec3& x = grid.nodes[k];
        out.value[k] = field(x);
        if (order == 1) {
            const Vec3 ex{h, 0, 0}, ey{0, h, 0}, ez{0, 0, h};
            const EB fxp = field(x + ex), fxm = field(x - ex);
            const EB fyp = field(x + ey), fym = field(x - ey);
            const EB fzp = field(x + ez), fzm = field(x - ez);
            auto curl = [&](auto get) {
                const Vec3 dx = (get(fxp) - get(fxm)) / (2 * h);
                const Vec3 dy = (get(fyp) - get(fym)) / (2 * h);
                const Vec3 dz = (get(fzp) - get(fzm)) / (2 * h);
                return Vec3{dy.z - dz.y, dz.x - dx.z, dx.y - dy.x};
            };
            out.curl[k].E = curl([](const EB& f) { return f.E; });
            out.curl[k].B = curl([](const EB& f) { return f.B; });
        }
    });
    for (std::size_t k = 0; k < n; ++k) {
        bool ok = isfinite(out.value[k].E) && isfinite(out.value[k].B);
        if (order == 1) ok = ok && isfinite(out.curl[k].E) && isfinite(out.curl[k].B);
        if (!ok) throw SolverAbort("non-finite field value at a norm grid node");
    }
    return out;
}

namespace {

double weighted_sum(const NormGrid& grid, const std::vector<const GridSample*>& a,
                    const std::vector<const GridSample*>& b) {
    double total = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const GridSample& sa = *a[c];
        if (sa.value.size() != grid.size()) throw InvalidInput("grid sample does not match the norm grid");
        for (std::size_t k = 0; k < grid.size(); ++k) {
            EB v = sa.value[k];
            if (!b.empty()) v -= b[c]->value[k];
            double s = norm2(v.E) + norm2(v.B);
            if (sa.order == 1) {
                EB cu = sa.curl[k];
                if (!b.empty()) cu -= b[c]->curl[k];
                s += norm2(cu.E) + norm2(cu.B);
            }
            total += grid.mu[k] * grid.w[k] * s;
        }
    }
    return total;
}

}  // namespace

double discrete_norm(const std::vector<GridSample>& samples, const NormGrid& grid) {
    std::vector<const GridSample*> a;
    for (const auto& s : samples) a.push_back(&s);
    return std::sqrt(weighted_sum(grid, a, {}));
}

double discrete_norm(const FieldAtTime& field, const NormGrid& grid, int order) {
    return discrete_norm(std::vector<GridSample>{sample_on_grid(field, grid, order)}, grid);
}

double discrete_norm_diff(const std::vector<GridSample>& a, const std::vector<GridSample>& b, const NormGrid& grid) {
    if (a.size() != b.size()) throw InvalidInput("sample lists differ in length");
    std::vector<const GridSample*> pa, pb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].order != b[i].order) throw InvalidInput("sample orders differ");
        pa.push_back(&a[i]);
        pb.push_back(&b[i]);
    }
    return std::sqrt(weighted_sum(grid, pa, pb));
}

}  // namespace wfrho
