#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "wfrho/errors.hpp"
#include "wfrho/vec3.hpp"

namespace wfrho {

// Relativistic velocity p / sqrt(m^2 + p^2) (units with c = 1).
Vec3 v_of_p(const Vec3& p, double m);
// Inverse map, defined for |v| < 1.
Vec3 p_of_v(const Vec3& v, double m);
// d/dt v(p_t) given p and dp/dt.
Vec3 accel_of(const Vec3& p, const Vec3& pdot, double m);
// dp/dt given velocity and acceleration; inverse of accel_of.
Vec3 pdot_of(const Vec3& v, const Vec3& a, double m);

// Shape of the radial bump exp(-sharpness / (1 - (r/R)^2)).
struct BumpProfile {
    double sharpness = 1.0;
};

// Smooth, radially symmetric charge density with support in the closed ball of radius R
// and total charge e. Radial moments are tabulated once at construction.
class ChargeDensity {
public:
    double e() const { return e_; }
    double R() const { return R_; }
    const BumpProfile& profile() const { return profile_; }
    double normalization() const { return c_; }

    double value_r(double r) const;  // density at distance r from the center
    double deriv_r(double r) const;  // radial derivative
    double operator()(const Vec3& x) const { return value_r(norm(x)); }
    Vec3 gradient(const Vec3& x) const;
    double peak() const { return value_r(0.0); }

    // Integral of density(u) u^k du over [0, min(r, R)] for k in {1, 2, 3}.
    double moment(int k, double r) const;
    double enclosed_charge(double r) const;

private:
    friend ChargeDensity make_bump_density(double, double, BumpProfile, int);

    struct Tables {
        double du = 0.0;
        std::array<std::vector<double>, 4> cumulative;  // index by k, unnormalized shape
        std::array<std::vector<double>, 4> integrand;   // shape(u) u^k at the table nodes
    };

    double shape(double u) const;  // unnormalized profile at u = r / R
    double e_ = 0.0, R_ = 1.0, c_ = 0.0;
    BumpProfile profile_;
    std::shared_ptr<const Tables> tables_;
};

ChargeDensity make_bump_density(double R, double e, BumpProfile profile = {}, int table_intervals = 2048);

struct TrajectorySample {
    double t = 0.0;
    Vec3 q, p;
    Vec3 pdot;  // dp/dt at the sample, used by the momentum interpolant
};

struct TrajState {
    Vec3 q, p, v, a;
};

enum class AsymptoteMode { rest, uniform };

// Continuation of a trajectory beyond its sampled range.
struct AsymptoteSpec {
    AsymptoteMode mode = AsymptoteMode::rest;
    double anchor_t = 0.0;
    Vec3 anchor_q;
    Vec3 anchor_p;  // ignored for rest

    static AsymptoteSpec rest(double t, const Vec3& q) { return {AsymptoteMode::rest, t, q, {}}; }
    static AsymptoteSpec uniform(double t, const Vec3& q, const Vec3& p) { return {AsymptoteMode::uniform, t, q, p}; }
};

// Instantaneous change of velocity where an asymptote is attached with a different velocity.
struct VelocityJump {
    double t = 0.0;
    Vec3 dv;  // velocity after minus velocity before
};

// Strictly time-like charge path: cubic Hermite on (q, v(p)) and on (p, dp/dt) between samples,
// optionally continued by asymptotes before the first and after the last sample.
class ChargeTrajectory {
public:
    ChargeTrajectory(std::vector<TrajectorySample> samples, double mass,
                     std::optional<AsymptoteSpec> past = std::nullopt,
                     std::optional<AsymptoteSpec> future = std::nullopt);

    // Samples given as (t, q, p) only; dp/dt is estimated from the samples by
    // differentiating the quadratic through neighbouring nodes.
    static ChargeTrajectory from_states(const std::vector<TrajectorySample>& states, double mass,
                                        std::optional<AsymptoteSpec> past = std::nullopt,
                                        std::optional<AsymptoteSpec> future = std::nullopt);
    static ChargeTrajectory uniform(const Vec3& q0, const Vec3& p, double mass, double t0 = 0.0);
    static ChargeTrajectory at_rest(const Vec3& q, double mass) { return uniform(q, {}, mass); }

    TrajState eval(double t) const;
    Vec3 position(double t) const { return eval(t).q; }

    double mass() const { return mass_; }
    const std::vector<TrajectorySample>& samples() const { return samples_; }
    const std::optional<AsymptoteSpec>& past() const { return past_; }
    const std::optional<AsymptoteSpec>& future() const { return future_; }
    double t_first() const { return samples_.front().t; }
    double t_last() const { return samples_.back().t; }
    double domain_begin() const;
    double domain_end() const;
    bool covers(double t) const { return t >= domain_begin() && t <= domain_end(); }

    // Largest speed at any sample or on an asymptote.
    double speed_bound() const { return speed_bound_; }
    const std::vector<VelocityJump>& jumps() const { return jumps_; }

    // Copy with one more sample beyond the current last (or before the first) sample.
    ChargeTrajectory extended(const TrajectorySample& s) const;
    ChargeTrajectory with_asymptotes(std::optional<AsymptoteSpec> past, std::optional<AsymptoteSpec> future) const;

    // Times where the path is less smooth than the interpolant between samples (e.g. where two pieces
    // were joined); integrals over the path are split there.
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    ChargeTrajectory with_breakpoints(std::vector<double> times) const;

private:
    TrajState eval_asymptote(const AsymptoteSpec& a, double t) const;
    void finalize();

    std::vector<TrajectorySample> samples_;
    double mass_;
    std::optional<AsymptoteSpec> past_, future_;
    std::vector<VelocityJump> jumps_;
    std::vector<double> breakpoints_;
    double speed_bound_ = 0.0;
};

class FieldEvaluator;
using FieldPtr = std::shared_ptr<const FieldEvaluator>;

// ML-SI state: positions and momenta of all charges plus one field per charge.
struct PhasePoint {
    std::vector<Vec3> q, p;
    std::vector<FieldPtr> fields;

    std::size_t size() const { return q.size(); }
    void validate(const std::vector<double>& masses) const;
};

// Weight (1 + |x|^2)^-1 of the weighted L2 norms.
inline double norm_weight(const Vec3& x) { return 1.0 / (1.0 + norm2(x)); }

// Tensor grid clipped to a ball, realizing discrete weighted L2 and F1 norms.
struct NormGrid {
    std::vector<Vec3> nodes;
    std::vector<double> mu;  // quadrature weights
    std::vector<double> w;   // norm weight at the node
    Vec3 center;
    double radius = 0.0;
    double spacing = 0.0;
    double h_stencil = 0.0;

    static NormGrid ball(const Vec3& center, double radius, double spacing, double h_stencil = 0.0);
    std::size_t size() const { return nodes.size(); }

    // Bound on the omitted weighted L2 mass outside the ball for a field bounded by |charge| / r^2
    // around points near the origin (squared norm units).
    double tail_bound(double charge) const;
};

using FieldAtTime = std::function<EB(const Vec3&)>;

// Field values (and curls for order 1) sampled at all grid nodes.
struct GridSample {
    int order = 0;
    std::vector<EB> value;
    std::vector<EB> curl;
};

Vec3 stencil_curl(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h);
double stencil_div(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h);

GridSample sample_on_grid(const FieldAtTime& field, const NormGrid& grid, int order);
// Square root of sum_k mu_k w_k (|F|^2 [+ |curl F|^2]) summed over all samples (one per charge).
double discrete_norm(const std::vector<GridSample>& samples, const NormGrid& grid);
double discrete_norm(const FieldAtTime& field, const NormGrid& grid, int order);
double discrete_norm_diff(const std::vector<GridSample>& a, const std::vector<GridSample>& b, const NormGrid& grid);

}  // namespace wfrho
