#include "wfrho/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace wfrho {

GaussLegendre::GaussLegendre(int n) {
    if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
    if (!table) throw std::runtime_error("cannot allocate Gauss-Legendre table");
    nodes_.resize(n);
    weights_.resize(n);
    for (int i = 0; i < n; ++i) {
        double xi = 0.0, wi = 0.0;
        gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &xi, &wi, table);
        nodes_[i] = xi;
        weights_[i] = wi;
    }
    gsl_integration_glfixed_table_free(table);
}

const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(n);
    return *slot;
}

SphereQuadRule SphereQuadRule::product(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("sphere rule orders must be positive");
    SphereQuadRule rule;
    rule.n_theta = n_theta;
    rule.n_phi = n_phi;
    const GaussLegendre& gl = gauss_legendre(n_theta);
    rule.directions.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    for (int i = 0; i < n_theta; ++i) {
        const double ct = gl.nodes()[i];
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_phi;
            rule.directions.push_back({st * std::cos(phi), st * std::sin(phi), ct});
            rule.weights.push_back(0.5 * gl.weights()[i] / n_phi);
        }
    }
    return rule;
}

BallQuadRule BallQuadRule::product(int n_radial, const SphereQuadRule& sphere) {
    BallQuadRule rule;
    const GaussLegendre& gl = gauss_legendre(n_radial);
    for (int k = 0; k < n_radial; ++k) {
        // radial measure 3 u^2 du on [0, 1]
        const double u = 0.5 * (gl.nodes()[k] + 1.0);
        const double wr = 0.5 * gl.weights()[k] * 3.0 * u * u;
        for (std::size_t j = 0; j < sphere.directions.size(); ++j) {
            rule.points.push_back(sphere.directions[j] * u);
            rule.weights.push_back(wr * sphere.weights[j]);
        }
    }
    return rule;
}

}  // namespace wfrho
