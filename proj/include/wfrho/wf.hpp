#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wfrho/mlsi.hpp"

namespace wfrho {

enum class BoundaryKind { coulomb, uniform_lw };

// Fields prescribed at +T (advanced side) and -T (retarded side), anchored at the ML-SI states there.
struct BoundaryFields {
    BoundaryKind kind = BoundaryKind::coulomb;
    double T = 0.0;
    std::vector<FieldPtr> plus, minus;
    std::vector<Vec3> q_plus, q_minus, p_plus, p_minus;
};

// Boundary fields read off an ML-SI solution covering [-T, T].
BoundaryFields make_boundary(const MlsiSolution& sol, double T, BoundaryKind kind, const FieldQuad& quad = {});
// Coulomb fields at the positions the ML-SI run from (p, F) reaches at -T and +T.
BoundaryFields coulomb_boundary(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, double T,
                                const MlsiConfig& cfg);

// Per charge e_plus * (Maxwell solution from X+ at +T) + e_minus * (Maxwell solution from X- at -T),
// both sourced by the ML-SI trajectory of that charge. A space-time field valid on [-T, T].
std::vector<FieldPtr> boundary_seeded_fields(const MlsiSolution& sol, const BoundaryFields& X, double e_plus,
                                             double e_minus, const FieldQuad& quad);

struct WfConfig {
    double T = 1.0;
    BoundaryKind boundary = BoundaryKind::coulomb;
    double e_plus = 0.5, e_minus = 0.5;  // must sum to one
    MlsiConfig mlsi;
    int max_iter = 30;
    double tol = 1e-6;
    double damping = 1.0;
    double grid_spacing = 0.2;
    double grid_radius = 0.0;  // 0 picks max |q_i - centroid| + R + 2T
    double grid_stencil = 0.0; // 0 keeps the norm grid default

    void validate() const;
};

// One application of the fixed point map.
struct StResult {
    std::vector<FieldPtr> fields;  // the new time-zero fields (as space-time evaluators)
    MlsiSolution solution;         // ML-SI run of (p, F) on [-T, T]
    BoundaryFields boundary;
};
StResult s_t_map(const std::vector<ChargeSpec>& charges, const PhasePoint& initial, const WfConfig& cfg);

std::vector<FieldPtr> coulomb_seed(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q);
NormGrid residual_grid(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q, const WfConfig& cfg);
std::vector<GridSample> sample_fields(const std::vector<FieldPtr>& fields, const NormGrid& grid, double t = 0.0);

struct IterationRecord {
    int iter = 0;
    double residual = 0.0;  // discrete F1_w norm of S_T[F_n] - F_n
    double damping = 1.0;
    double wall_ms = 0.0;
};

struct FixedPointDiagnostics {
    std::vector<IterationRecord> iterations;
    bool converged = false;
    double final_residual = 0.0;
    int best_iter = -1;
};

struct FixedPointResult {
    std::vector<FieldPtr> fields;  // F*
    MlsiSolution solution;         // ML-SI run of (p, F*) on [-T, T]
    BoundaryFields boundary;       // anchored on that run
    std::vector<GridSample> samples;
    NormGrid grid;
    FixedPointDiagnostics diagnostics;
};

// Damped iteration F <- (1 - lambda) F + lambda S_T[F]; lambda halves whenever the residual grows.
// Converged once the residual stays below tol for two consecutive iterations; otherwise the best
// iterate is returned with converged = false.
FixedPointResult fixed_point_solve(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q,
                                   const std::vector<Vec3>& p, const WfConfig& cfg,
                                   std::vector<FieldPtr> seed = {});

struct ForceResidual {
    double max_abs = 0.0;
    double force_scale = 0.0;  // max |e_i e_j| / |q_i - q_j|^2 over the probe times
    double relative() const { return force_scale > 0.0 ? max_abs / force_scale : max_abs; }
};

// max over probe times and charges of |dp_i/dt - smeared force of the boundary-seeded partner fields|.
ForceResidual wf_residual(const MlsiSolution& sol, const WfConfig& cfg, const std::vector<double>& times);

struct ShadowReport {
    double boundary = 0.0;  // free evolution of Coulomb data plus the current kick
    double relict = 0.0;    // source integral of a rest asymptote beyond +-T
    double max() const { return std::max(boundary, relict); }
};

bool in_shadow(const Vec3& q, double R, double T, double t, const Vec3& x);
// Both terms for one side (sign +1: anchored at +T, -1: at -T) at one point, without the region check.
ShadowReport shadow_terms(const Vec3& q, const Vec3& v, const ChargeDensity& rho, double T, int sign, double t,
                          const Vec3& x, const FieldQuad& quad = {});
// Max magnitudes over probes, which must all lie in the shadow region of both sides.
ShadowReport shadow_check(const Vec3& q, const Vec3& v, const ChargeDensity& rho, double T,
                          const std::vector<std::pair<double, Vec3>>& probes, const FieldQuad& quad = {});

struct InteractionWindow {
    double L = 0.0;
    bool guaranteed = false;  // L > 0
};
InteractionWindow interaction_window(double v_bound, double T, double dq_max, double R);

double velocity_bound(const std::vector<const MlsiSolution*>& runs);
double velocity_bound_estimate(const std::vector<ChargeSpec>& charges, const std::vector<PhasePoint>& scenarios,
                               double T, const MlsiConfig& cfg);

// Trajectories of the solution continued beyond both ends by uniform motion.
std::vector<std::shared_ptr<const ChargeTrajectory>> continued_uniformly(const MlsiSolution& sol);

// Within [-L, L]: smeared force on each charge from the boundary-seeded partner fields minus the force
// from e_plus advanced + e_minus retarded LW fields of the uniformly continued trajectories.
ForceResidual true_interaction_check(const MlsiSolution& sol, const WfConfig& cfg, double L,
                                     const std::vector<double>& times);

}  // namespace wfrho
