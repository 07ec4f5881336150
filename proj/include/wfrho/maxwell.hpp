#pragma once

#include <memory>
#include <vector>

#include "wfrho/core_types.hpp"
#include "wfrho/greens.hpp"

namespace wfrho {

enum class TimeSign { retarded = -1, advanced = +1 };

struct FieldQuad {
    int n_time = 32;              // Gauss-Legendre nodes across one light-cone window of a source integral
    int n_shell = 12;             // nodes for narrow radial intervals not served by the moment tables
    double lightcone_tol = 1e-12; // root tolerance in time units
    int lightcone_max_iter = 200;
    double near_field_eps = 1e-9; // relative to R; closer point-integrand evaluations raise
    int smeared_radial = 16;      // ball rule of the smeared point-integrand route
    int smeared_theta = 16;
    int smeared_phi = 32;
    GreensOptions greens{16, 32, 16, 16, 1e-4};  // generic Kirchhoff path for fields without a known source

    // Same rule with every order doubled.
    FieldQuad refined() const;
};

// Sphere means of the density (and its gradient) for a sphere of radius r whose center lies
// at distance d from the density center. Vector means point along the unit vector from the
// sphere center towards the density center.
struct ShellMeans {
    double m0 = 0.0;      // mean of rho
    double m_omega = 0.0; // mean of rho * (outward normal . n)
    double m_grad = 0.0;  // mean of grad rho . n
};
ShellMeans shell_means(const ChargeDensity& rho, double r, double d, const FieldQuad& quad = {});

// Root of |t - tau| = |x - z - q_tau| on the requested side.
double lightcone_time(const ChargeTrajectory& traj, const Vec3& x, double t, const Vec3& z_offset, TimeSign sign,
                      const FieldQuad& quad = {});

// Point-charge Lienard-Wiechert field at x - z, per unit charge.
EB lw_point_integrand(const ChargeTrajectory& traj, double t, const Vec3& x, const Vec3& z, TimeSign sign,
                      const FieldQuad& quad = {}, double R_scale = 1.0);

// 4 pi int over s in [s_a, s_b] of K_{t-s} * (-grad rho_s - d_s j_s, curl j_s) at x, with the
// orientation of the integral from the endpoint farther from t towards t. Only the light-cone
// window where the sphere of radius |t - s| meets the support is integrated. Velocity jumps strictly
// inside (s_a, s_b) contribute their impulse term.
EB source_integral(const ChargeDensity& rho, const ChargeTrajectory& traj, double s_a, double s_b, double t,
                   const Vec3& x, const FieldQuad& quad);

// Field of the density at rest at q.
EB coulomb_field(const ChargeDensity& rho, const Vec3& q, const Vec3& x);

enum class LwRoute { trajectory_integral, smeared_point };

EB lw_field(const ChargeTrajectory& traj, const ChargeDensity& rho, double t, const Vec3& x, TimeSign sign,
            const FieldQuad& quad = {}, LwRoute route = LwRoute::trajectory_integral);

// Evolution of the initial data (E0, B0) = F0 at t0 sourced by the free Coulomb data term, the
// current kick at t0 and the trajectory integral from t0 to t.
struct SourceTerm {
    double weight = 1.0;
    ChargeDensity rho;
    std::shared_ptr<const ChargeTrajectory> traj;
};

enum class FieldKind { coulomb, lw_smeared, maxwell_solution, superposition, scaled };

// Immutable space-time Maxwell field.
class FieldEvaluator {
public:
    virtual ~FieldEvaluator() = default;
    virtual EB eval(double t, const Vec3& x) const = 0;
    virtual FieldKind kind() const = 0;
    // Weighted charge sources whose Maxwell field this is; empty when not known.
    virtual std::vector<SourceTerm> sources() const { return {}; }
    // 4 pi rho_t(x) implied by the sources, i.e. the expected divergence of E.
    double divergence_source(double t, const Vec3& x) const;
};

class CoulombField final : public FieldEvaluator {
public:
    CoulombField(ChargeDensity rho, const Vec3& q);
    EB eval(double, const Vec3& x) const override { return coulomb_field(rho_, q_, x); }
    FieldKind kind() const override { return FieldKind::coulomb; }
    std::vector<SourceTerm> sources() const override;
    const Vec3& center() const { return q_; }

private:
    ChargeDensity rho_;
    Vec3 q_;
    std::shared_ptr<const ChargeTrajectory> rest_;
};

class LwField final : public FieldEvaluator {
public:
    LwField(std::shared_ptr<const ChargeTrajectory> traj, ChargeDensity rho, TimeSign sign, FieldQuad quad = {});
    EB eval(double t, const Vec3& x) const override;
    FieldKind kind() const override { return FieldKind::lw_smeared; }
    std::vector<SourceTerm> sources() const override { return {{1.0, rho_, traj_}}; }

private:
    std::shared_ptr<const ChargeTrajectory> traj_;
    ChargeDensity rho_;
    TimeSign sign_;
    FieldQuad quad_;
};

class MaxwellSolution final : public FieldEvaluator {
public:
    MaxwellSolution(FieldPtr initial, double t0, std::shared_ptr<const ChargeTrajectory> traj, ChargeDensity rho,
                    FieldQuad quad = {});
    EB eval(double t, const Vec3& x) const override;
    FieldKind kind() const override { return FieldKind::maxwell_solution; }
    std::vector<SourceTerm> sources() const override { return {{1.0, rho_, traj_}}; }

    // The literal evaluation with spherical-mean quadrature of the initial data, ignoring any known
    // source structure of the initial field.
    EB eval_generic(double t, const Vec3& x) const;
    bool uses_source_identity() const { return reuse_sources_; }
    const FieldPtr& initial() const { return initial_; }
    double t0() const { return t0_; }
    const std::shared_ptr<const ChargeTrajectory>& trajectory() const { return traj_; }

private:
    FieldPtr initial_;
    double t0_;
    std::shared_ptr<const ChargeTrajectory> traj_;
    ChargeDensity rho_;
    FieldQuad quad_;
    bool reuse_sources_ = false;
    std::vector<SourceTerm> initial_sources_;
    Vec3 kick_velocity_;  // v_traj(t0) minus the weighted source velocities at t0
};

class Superposition final : public FieldEvaluator {
public:
    explicit Superposition(std::vector<std::pair<double, FieldPtr>> terms);
    EB eval(double t, const Vec3& x) const override;
    FieldKind kind() const override { return FieldKind::superposition; }
    std::vector<SourceTerm> sources() const override;
    const std::vector<std::pair<double, FieldPtr>>& terms() const { return terms_; }

private:
    std::vector<std::pair<double, FieldPtr>> terms_;
};

class ScaledField final : public FieldEvaluator {
public:
    ScaledField(double factor, FieldPtr inner) : factor_(factor), inner_(std::move(inner)) {}
    EB eval(double t, const Vec3& x) const override { return inner_->eval(t, x) * factor_; }
    FieldKind kind() const override { return FieldKind::scaled; }
    std::vector<SourceTerm> sources() const override;

private:
    double factor_;
    FieldPtr inner_;
};

// Maxwell evolution from initial fields and source trajectory, evaluated pointwise.
EB maxwell_evolve(const FieldPtr& F0, double t0, const std::shared_ptr<const ChargeTrajectory>& traj,
                  const ChargeDensity& rho, double t, const Vec3& x, const FieldQuad& quad = {});

// Free evolution of Coulomb data centered at q from time t_anchor plus the current kick of a
// charge moving with velocity v at that time (the boundary-data part of a Maxwell solution).
EB coulomb_kirchhoff_with_kick(const ChargeDensity& rho, const Vec3& q, const Vec3& v, double t_anchor, double t,
                               const Vec3& x, const FieldQuad& quad = {});

// Stencil residuals of the four Maxwell equations at (t, x), each divided by `scale`.
struct MaxwellResidual {
    double ampere = 0.0, faraday = 0.0, gauss_e = 0.0, gauss_b = 0.0;
    double max() const;
};
MaxwellResidual maxwell_residual(const FieldEvaluator& F, const ChargeDensity& rho, const ChargeTrajectory& traj,
                                 double t, const Vec3& x, double h, double dt);

}  // namespace wfrho
