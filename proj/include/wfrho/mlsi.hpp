#pragma once

#include <memory>
#include <vector>

#include "wfrho/core_types.hpp"
#include "wfrho/maxwell.hpp"

namespace wfrho {

// Rigid charge: inertial mass plus its density profile.
struct ChargeSpec {
    double mass = 1.0;
    ChargeDensity rho;
};

// Nodes z and weights w (summing to the total charge) for integrals of rho(z) g(q + z) d^3z.
struct SmearRule {
    std::vector<Vec3> z;
    std::vector<double> w;
    static SmearRule build(const ChargeDensity& rho, int n_radial, int n_theta, int n_phi);
};

struct MlsiConfig {
    double dt = 0.02;
    int order = 4;  // classical Runge-Kutta; the only supported value
    int force_radial = 3;
    int force_theta = 3;
    int force_phi = 6;
    int constraint_every = 10;      // steps between constraint checks; 0 disables the periodic checks
    double constraint_tol = 1e-4;   // relative to 4 pi max rho
    double stencil_h = 0.0;         // divergence stencil; 0 selects 1e-3 of the smallest support radius
    double v_guard = 0.99;
    FieldQuad quad;

    void validate() const;
};

struct ConstraintRecord {
    double t = 0.0;
    double residual = 0.0;  // relative to 4 pi max rho
};

struct MlsiSolution {
    std::vector<ChargeSpec> charges;
    std::vector<std::shared_ptr<const ChargeTrajectory>> trajectories;  // sampled on [t_begin, t_end]
    std::vector<FieldPtr> initial_fields;
    std::vector<FieldPtr> fields;  // Maxwell solution of each charge from its initial field
    double t0 = 0.0;               // time of the initial data
    double t_begin = 0.0, t_end = 0.0;
    std::vector<ConstraintRecord> constraints;
    double max_speed = 0.0;

    std::size_t size() const { return charges.size(); }
};

// Smeared Lorentz force on charge i at (q, v) from the fields of all partners k != i at time t.
// `fields[i]` is never evaluated.
Vec3 lorentz_force(std::size_t i, double t, const Vec3& q, const Vec3& v, const std::vector<FieldPtr>& fields,
                   const SmearRule& rule);

// Maxwell-Lorentz evolution without self-interaction from (q, p, F) at t0 to t_target (either direction).
// Throws ConstraintViolation if F violates the constraints at t0 and SolverAbort past the speed guard.
MlsiSolution mlsi_integrate(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, double t0,
                            double t_target, const MlsiConfig& cfg);

// Runs from t0 down to t_lo and up to t_hi and joins both halves into one solution on [t_lo, t_hi].
MlsiSolution mlsi_integrate_span(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, double t0,
                                 double t_lo, double t_hi, const MlsiConfig& cfg);

// Sample offsets (relative to each charge center) used by the constraint checks.
std::vector<Vec3> default_constraint_offsets(double R);

// max over charges and offsets of |div E_i - 4 pi rho_i| + |div B_i| at time t, divided by 4 pi max rho_i.
double constraint_residual(const std::vector<ChargeSpec>& charges, const std::vector<FieldPtr>& fields,
                           const std::vector<Vec3>& centers, double t, double h,
                           const std::vector<Vec3>& offsets = {});
double constraint_residual(const MlsiSolution& sol, double t, const std::vector<Vec3>& offsets = {},
                           double h = 0.0);

}  // namespace wfrho
