#pragma once

#include <vector>

#include "wfrho/vec3.hpp"

namespace wfrho {

// Gauss-Legendre rule on [-1, 1].
class GaussLegendre {
public:
    explicit GaussLegendre(int n);

    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    // Integrate f over [a, b]; f is called with increasing abscissae.
    template <class F>
    auto integrate(double a, double b, F&& f) const -> decltype(f(0.0) * 1.0) {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        decltype(f(0.0) * 1.0) acc{};
        for (std::size_t k = 0; k < nodes_.size(); ++k) acc += f(mid + half * nodes_[k]) * (weights_[k] * half);
        return acc;
    }

private:
    std::vector<double> nodes_, weights_;
};

// Cached rule for a given order; the returned reference stays valid for the program lifetime.
const GaussLegendre& gauss_legendre(int n);

// Product Gauss-Legendre (in cos theta) x trapezoid (in phi) rule on the unit sphere.
// Weights are normalized to sum to 1, so a weighted sum is a surface mean.
struct SphereQuadRule {
    int n_theta = 16;
    int n_phi = 32;
    std::vector<Vec3> directions;
    std::vector<double> weights;

    static SphereQuadRule product(int n_theta, int n_phi);
    int order() const { return n_theta; }
};

// Ball rule: Gauss-Legendre in the radius times a sphere rule. Weights are normalized
// so that the sum over nodes of weight * f equals the volume mean of f over the unit ball.
struct BallQuadRule {
    std::vector<Vec3> points;  // inside the unit ball
    std::vector<double> weights;

    static BallQuadRule product(int n_radial, const SphereQuadRule& sphere);
};

}  // namespace wfrho
