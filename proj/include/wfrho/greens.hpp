#pragma once

#include <functional>

#include "wfrho/core_types.hpp"
#include "wfrho/quadrature.hpp"

namespace wfrho {

struct ScalarField3 {
    std::function<double(const Vec3&)> value;
    std::function<double(const Vec3&)> laplacian;  // optional
};

struct VectorField3 {
    std::function<Vec3(const Vec3&)> value;
    std::function<Vec3(const Vec3&)> laplacian;  // optional
    std::function<Vec3(const Vec3&)> curl;       // optional
};

struct GreensOptions {
    SphereQuadRule sphere = SphereQuadRule::product(16, 32);
    int n_radial = 16;        // radial nodes of ball means
    int n_time = 16;          // Gauss-Legendre nodes of the divergence-correction time integral
    double h_stencil = 0.0;   // 7-point stencil spacing when no analytic derivative exists; 0 forbids stencils

    GreensOptions() { rebuild(); }
    GreensOptions(int n_theta, int n_phi, int n_radial_, int n_time_, double h = 0.0)
        : sphere(SphereQuadRule::product(n_theta, n_phi)), n_radial(n_radial_), n_time(n_time_), h_stencil(h) {
        rebuild();
    }
    const BallQuadRule& ball() const { return ball_; }
    void rebuild() { ball_ = BallQuadRule::product(n_radial, sphere); }

private:
    BallQuadRule ball_;
};

double sphere_mean(const std::function<double(const Vec3&)>& f, const Vec3& center, double radius,
                   const SphereQuadRule& rule);
Vec3 sphere_mean(const std::function<Vec3(const Vec3&)>& f, const Vec3& center, double radius,
                 const SphereQuadRule& rule);
double ball_mean(const std::function<double(const Vec3&)>& f, const Vec3& center, double radius,
                 const BallQuadRule& rule);
Vec3 ball_mean(const std::function<Vec3(const Vec3&)>& f, const Vec3& center, double radius,
               const BallQuadRule& rule);

// Propagator K_t * f (x) = t * (mean of f over the sphere of radius |t| about x); odd in t.
double K_conv(const ScalarField3& f, double t, const Vec3& x, const SphereQuadRule& rule);
Vec3 K_conv(const VectorField3& f, double t, const Vec3& x, const SphereQuadRule& rule);

// d/dt (K_t * f)(x) = sphere mean + t^2/3 * ball mean of the Laplacian.
double dtK_conv(const ScalarField3& f, double t, const Vec3& x, const GreensOptions& opts);
Vec3 dtK_conv(const VectorField3& f, double t, const Vec3& x, const GreensOptions& opts);

// Solution of the homogeneous wave equation with A(0) = A0, dA/dt(0) = dA0.
double kirchhoff_homogeneous(const ScalarField3& A0, const ScalarField3& dA0, double t, const Vec3& x,
                             const GreensOptions& opts);
Vec3 kirchhoff_homogeneous(const VectorField3& A0, const VectorField3& dA0, double t, const Vec3& x,
                           const GreensOptions& opts);

// Free Maxwell group applied to (E0, B0). grad_div_E is the gradient of div E0 (= 4 pi grad rho).
EB free_maxwell_evolve(const VectorField3& E0, const VectorField3& B0, const VectorField3& grad_div_E, double t,
                       const Vec3& x, const GreensOptions& opts);

// Stencil helpers usable by any module.
double stencil_laplacian(const std::function<double(const Vec3&)>& f, const Vec3& x, double h);
Vec3 stencil_laplacian(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h);

}  // namespace wfrho
