#pragma once

// Closed-form reference fields, kept apart from the library so checks against them stay independent.

#include <cmath>
#include <numbers>

#include "wfrho/core_types.hpp"
#include "wfrho/quadrature.hpp"

namespace wfrho::oracle {

// Field of a unit point charge in uniform motion with velocity v, at offset r from its present position.
inline EB boosted_point(const Vec3& r, const Vec3& v) {
    const double v2 = norm2(v);
    const double rn = norm(r);
    const double sin2 = v2 > 0 ? norm2(cross(r, v)) / (rn * rn * v2) : 0.0;
    const Vec3 E = r * ((1 - v2) / (rn * rn * rn * std::pow(1 - v2 * sin2, 1.5)));
    return {E, cross(v, E)};
}

// The same field smeared over rho centered at q (rigid in the lab frame), by a fine ball rule.
inline EB smeared_boosted(const ChargeDensity& rho, const Vec3& q, const Vec3& v, const Vec3& x,
                          const BallQuadRule& ball) {
    const double vol = 4.0 / 3.0 * std::numbers::pi * std::pow(rho.R(), 3);
    EB out;
    for (std::size_t k = 0; k < ball.points.size(); ++k) {
        const Vec3 y = ball.points[k] * rho.R();
        out += boosted_point(x - q - y, v) * (ball.weights[k] * vol * rho(y));
    }
    return out;
}

}  // namespace wfrho::oracle
