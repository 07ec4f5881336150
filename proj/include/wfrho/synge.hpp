#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "wfrho/mlsi.hpp"

namespace wfrho {

// Past motion of one charge before t0. The past is a straight line through (t0, q0 + offset) with the
// given velocity (zero for rest); a quintic transition of length `transition` joins it to the data at t0.
struct PastSpec {
    AsymptoteMode mode = AsymptoteMode::rest;
    Vec3 velocity;
    Vec3 offset;
    double transition = 0.0;  // 0 picks half of the largest window the light-cone condition admits

    bool operator==(const PastSpec&) const = default;
};

struct HistoryOptions {
    double t_min = -std::numeric_limits<double>::infinity();  // sampled range starts here when finite
    int transition_samples = 48;
    double line_spacing = 0.1;  // sample spacing of the straight part on [t_min, t0 - transition]
};

// Past trajectories on (-inf, t0] whose accelerations at t0 equal the retarded Lorentz force.
struct SyngeHistory {
    double t0 = 0.0;
    std::vector<ChargeSpec> charges;
    std::vector<std::shared_ptr<const ChargeTrajectory>> trajectories;
    std::vector<double> transition;  // window length per charge
    std::vector<Vec3> junction_accel;
    double a_max = 0.0;
    double v_max = 0.0;

    std::size_t size() const { return charges.size(); }
    std::vector<Vec3> positions() const;
    std::vector<Vec3> momenta() const;
};

// Largest transition window of each charge such that the backward light cones from the partner
// supports at t0 only meet its straight past.
std::vector<double> admissible_transitions(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q0,
                                           const std::vector<PastSpec>& past, double t0,
                                           const FieldQuad& quad = {});

SyngeHistory build_history(const std::vector<ChargeSpec>& charges, const std::vector<Vec3>& q0,
                           const std::vector<Vec3>& p0, const std::vector<PastSpec>& past, double t0,
                           const MlsiConfig& cfg, const HistoryOptions& opts = {});

// Retarded fields of the history at t0 (history continued uniformly after t0).
std::vector<FieldPtr> history_fields(const SyngeHistory& h, const FieldQuad& quad);

// max_i |a_i(t0) - accel from the retarded force of the partner histories at t0|.
double junction_mismatch(const SyngeHistory& h, const MlsiConfig& cfg);

struct SyngeSolution {
    MlsiSolution mlsi;  // on [t0, t_end]
    std::vector<std::shared_ptr<const ChargeTrajectory>> concatenated;
    double junction_jump = 0.0;  // max over charges of |a(t0-) - a(t0+)|
};

SyngeSolution synge_solve(const SyngeHistory& history, double t_end, const MlsiConfig& cfg);

// History followed by the forward trajectory (samples of both, history asymptote before).
std::vector<std::shared_ptr<const ChargeTrajectory>> concatenate(const SyngeHistory& history,
                                                                 const MlsiSolution& forward);

struct FieldProbe {
    double t = 0.0;
    Vec3 x;
};

struct ConsistencyReport {
    double max_abs = 0.0;
    double max_rel = 0.0;  // relative to |e_i| / max(|x - q_i(t)|, R_i)^2
};

// Compares each evolved field against the retarded field of the history joined to the forward solution.
ConsistencyReport synge_self_consistency(const SyngeSolution& sol, const SyngeHistory& history,
                                         const std::vector<FieldProbe>& probes, const FieldQuad& quad = {});

}  // namespace wfrho
