#include "wfrho/greens.hpp"

#include <cmath>

namespace wfrho {

namespace {

template <class T, class F>
T sphere_mean_impl(const F& f, const Vec3& center, double radius, const SphereQuadRule& rule) {
    if (!(radius >= 0.0)) throw InvalidInput("sphere radius must be non-negative");
    if (radius == 0.0) return f(center);
    T acc{};
    for (std::size_t k = 0; k < rule.directions.size(); ++k) {
        const T v = f(center + rule.directions[k] * radius);
        acc += v * rule.weights[k];
    }
    if constexpr (std::is_same_v<T, double>) {
        if (!std::isfinite(acc)) throw SolverAbort("non-finite value on sphere");
    } else {
        if (!isfinite(acc)) throw SolverAbort("non-finite value on sphere");
    }
    return acc;
}

template <class T, class F>
T ball_mean_impl(const F& f, const Vec3& center, double radius, const BallQuadRule& rule) {
    if (radius == 0.0) return f(center);
    T acc{};
    for (std::size_t k = 0; k < rule.points.size(); ++k) acc += f(center + rule.points[k] * radius) * rule.weights[k];
    return acc;
}

template <class Field>
auto laplacian_of(const Field& f, double h) {
    using R = decltype(f.value(Vec3{}));
    if (f.laplacian) return std::function<R(const Vec3&)>(f.laplacian);
    if (!(h > 0.0)) throw InvalidInput("field has no Laplacian and stencils are disabled");
    auto value = f.value;
    return std::function<R(const Vec3&)>([value, h](const Vec3& x) { return stencil_laplacian(value, x, h); });
}

std::function<Vec3(const Vec3&)> curl_of(const VectorField3& f, double h) {
    if (f.curl) return f.curl;
    if (!(h > 0.0)) throw InvalidInput("field has no curl and stencils are disabled");
    auto value = f.value;
    return [value, h](const Vec3& x) { return stencil_curl(value, x, h); };
}

}  // namespace

double sphere_mean(const std::function<double(const Vec3&)>& f, const Vec3& c, double r, const SphereQuadRule& rule) {
    return sphere_mean_impl<double>(f, c, r, rule);
}
Vec3 sphere_mean(const std::function<Vec3(const Vec3&)>& f, const Vec3& c, double r, const SphereQuadRule& rule) {
    return sphere_mean_impl<Vec3>(f, c, r, rule);
}
double ball_mean(const std::function<double(const Vec3&)>& f, const Vec3& c, double r, const BallQuadRule& rule) {
    return ball_mean_impl<double>(f, c, r, rule);
}
Vec3 ball_mean(const std::function<Vec3(const Vec3&)>& f, const Vec3& c, double r, const BallQuadRule& rule) {
    return ball_mean_impl<Vec3>(f, c, r, rule);
}

double K_conv(const ScalarField3& f, double t, const Vec3& x, const SphereQuadRule& rule) {
    if (t == 0.0) return 0.0;
    return t * sphere_mean(f.value, x, std::abs(t), rule);
}

Vec3 K_conv(const VectorField3& f, double t, const Vec3& x, const SphereQuadRule& rule) {
    if (t == 0.0) return {};
    return t * sphere_mean(f.value, x, std::abs(t), rule);
}

double dtK_conv(const ScalarField3& f, double t, const Vec3& x, const GreensOptions& opts) {
    const double r = std::abs(t);
    const double surface = sphere_mean(f.value, x, r, opts.sphere);
    if (r == 0.0) return surface;
    return surface + t * t / 3.0 * ball_mean(laplacian_of(f, opts.h_stencil), x, r, opts.ball());
}

Vec3 dtK_conv(const VectorField3& f, double t, const Vec3& x, const GreensOptions& opts) {
    const double r = std::abs(t);
    const Vec3 surface = sphere_mean(f.value, x, r, opts.sphere);
    if (r == 0.0) return surface;
    return surface + t * t / 3.0 * ball_mean(laplacian_of(f, opts.h_stencil), x, r, opts.ball());
}

double kirchhoff_homogeneous(const ScalarField3& A0, const ScalarField3& dA0, double t, const Vec3& x,
                             const GreensOptions& opts) {
    return dtK_conv(A0, t, x, opts) + K_conv(dA0, t, x, opts.sphere);
}

Vec3 kirchhoff_homogeneous(const VectorField3& A0, const VectorField3& dA0, double t, const Vec3& x,
                           const GreensOptions& opts) {
    return dtK_conv(A0, t, x, opts) + K_conv(dA0, t, x, opts.sphere);
}

EB free_maxwell_evolve(const VectorField3& E0, const VectorField3& B0, const VectorField3& grad_div_E, double t,
                       const Vec3& x, const GreensOptions& opts) {
    if (t == 0.0) return {E0.value(x), B0.value(x)};
    const VectorField3 curlE{curl_of(E0, opts.h_stencil), {}, {}};
    const VectorField3 curlB{curl_of(B0, opts.h_stencil), {}, {}};
    EB out;
    out.E = dtK_conv(E0, t, x, opts) + K_conv(curlB, t, x, opts.sphere);
    out.B = dtK_conv(B0, t, x, opts) - K_conv(curlE, t, x, opts.sphere);
    // - int_0^t ds K_{t-s} * grad div E0
    const GaussLegendre& gl = gauss_legendre(opts.n_time);
    out.E -= gl.integrate(0.0, t, [&](double s) { return K_conv(grad_div_E, t - s, x, opts.sphere); });
    return out;
}

double stencil_laplacian(const std::function<double(const Vec3&)>& f, const Vec3& x, double h) {
    const Vec3 ex{h, 0, 0}, ey{0, h, 0}, ez{0, 0, h};
    return (f(x + ex) + f(x - ex) + f(x + ey) + f(x - ey) + f(x + ez) + f(x - ez) - 6.0 * f(x)) / (h * h);
}

Vec3 stencil_laplacian(const std::function<Vec3(const Vec3&)>& f, const Vec3& x, double h) {
    const Vec3 ex{h, 0, 0}, ey{0, h, 0}, ez{0, 0, h};
    return (f(x + ex) + f(x - ex) + f(x + ey) + f(x - ey) + f(x + ez) + f(x - ez) - 6.0 * f(x)) / (h * h);
}

}  // namespace wfrho
