#pragma once

// Reference values computed independently of the library: closed forms,
// finite differences and brute-force scans.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

// Planar system x1' = -|x2| x2, x2' = |x2| x1. Radii are conserved and theta
// only increases, so a point above the x1-axis ends at (-r, 0), one below at
// (r, 0), and points on the axis are equilibria.
inline Vec eq4_field(const Vec& x) { return {-std::fabs(x[1]) * x[1], std::fabs(x[1]) * x[0]}; }

inline Vec eq4_omega(const Vec& x0) {
    const double r = std::hypot(x0[0], x0[1]);
    if (x0[1] > 0.0) return {-r, 0.0};
    if (x0[1] < 0.0) return {r, 0.0};
    return x0;
}

// Harmonic oscillator x1' = x2, x2' = -x1.
inline Vec harmonic(const Vec& x0, double t) {
    return {x0[0] * std::cos(t) + x0[1] * std::sin(t), -x0[0] * std::sin(t) + x0[1] * std::cos(t)};
}

// x' = x^2 from x0 > 0 escapes at t = 1 / x0.
inline double quadratic_escape_time(double x0) { return 1.0 / x0; }

// Classical fourth-order Runge-Kutta with a fixed step: an integrator that
// shares no code with the library.
inline Vec rk4(const std::function<Vec(const Vec&)>& f, Vec x, double t_end, double h) {
    const int steps = static_cast<int>(std::ceil(t_end / h));
    h = t_end / steps;
    auto axpy = [](const Vec& a, double s, const Vec& b) {
        Vec out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * b[i];
        return out;
    };
    for (int k = 0; k < steps; ++k) {
        Vec k1 = f(x);
        Vec k2 = f(axpy(x, h / 2, k1));
        Vec k3 = f(axpy(x, h / 2, k2));
        Vec k4 = f(axpy(x, h, k3));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return x;
}

// Central difference of a scalar function along coordinate i, with a step
// scaled to the coordinate.
inline double central_difference(const std::function<double(const Vec&)>& g, Vec x, std::size_t i) {
    const double h = 1e-5 * std::max(1.0, std::fabs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    return (g(xp) - g(xm)) / (2 * h);
}

// Brute-force nearest distance to a parametrised curve.
inline double distance_to_curve(const Vec& x, const std::function<Vec(double)>& curve, double t0, double t1,
                                int samples = 200000) {
    double best = INFINITY;
    for (int k = 0; k <= samples; ++k) {
        const Vec p = curve(t0 + (t1 - t0) * k / samples);
        best = std::min(best, std::hypot(x[0] - p[0], x[1] - p[1]));
    }
    return best;
}

inline Vec polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

}  // namespace oracle
