#pragma once

// Test-only generators and analytic oracles, independent of the library's
// tracing / curvature machinery.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "stencilfit/contour.hpp"
#include "stencilfit/geometry.hpp"

namespace oracles {

using stencilfit::Vec2;

inline constexpr double kPi = std::numbers::pi;

inline std::vector<Vec2> circle_points(Vec2 center, double radius, double ang0,
                                       double ang1, std::size_t n) {
    std::vector<Vec2> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = ang0 + (ang1 - ang0) * static_cast<double>(i) / (n - 1);
        pts.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
    }
    return pts;
}

// Two tangent-continuous circular arcs: radius r1 for arc length L1, then
// radius r2 for L2, both curving the same way, starting at the origin heading
// +x. Returns points at spacing `h`.
inline std::vector<Vec2> two_arc_points(double r1, double L1, double r2, double L2,
                                        double h) {
    std::vector<Vec2> pts;
    Vec2 p{0, 0};
    double heading = 0.0;
    const auto emit_arc = [&](double r, double L) {
        const std::size_t steps = static_cast<std::size_t>(std::round(L / h));
        for (std::size_t i = 1; i <= steps; ++i) {
            const double dphi = h / r;
            // rotate heading by dphi about the instantaneous center (left turn)
            const Vec2 center{p.x - std::sin(heading) * r, p.y + std::cos(heading) * r};
            const double a0 = std::atan2(p.y - center.y, p.x - center.x);
            const double a1 = a0 + dphi;
            p = {center.x + r * std::cos(a1), center.y + r * std::sin(a1)};
            heading += dphi;
        }
    };
    pts.push_back(p);
    const auto emit_collect = [&](double r, double L) {
        const std::size_t steps = static_cast<std::size_t>(std::round(L / h));
        for (std::size_t i = 1; i <= steps; ++i) {
            const double dphi = h / r;
            const Vec2 center{p.x - std::sin(heading) * r, p.y + std::cos(heading) * r};
            const double a0 = std::atan2(p.y - center.y, p.x - center.x);
            const double a1 = a0 + dphi;
            p = {center.x + r * std::cos(a1), center.y + r * std::sin(a1)};
            heading += dphi;
            pts.push_back(p);
        }
    };
    (void)emit_arc;
    emit_collect(r1, L1);
    emit_collect(r2, L2);
    return pts;
}

// Piecewise arcs with given radii and lengths, tangent continuous.
inline std::vector<Vec2> multi_arc_points(const std::vector<std::pair<double, double>>& arcs,
                                          double h) {
    std::vector<Vec2> pts;
    Vec2 p{0, 0};
    double heading = 0.0;
    pts.push_back(p);
    for (const auto& [r, L] : arcs) {
        const std::size_t steps = static_cast<std::size_t>(std::round(L / h));
        for (std::size_t i = 1; i <= steps; ++i) {
            const double dphi = h / r;
            const Vec2 center{p.x - std::sin(heading) * r, p.y + std::cos(heading) * r};
            const double a0 = std::atan2(p.y - center.y, p.x - center.x);
            const double a1 = a0 + dphi;
            p = {center.x + r * std::cos(a1), center.y + r * std::sin(a1)};
            heading += dphi;
            pts.push_back(p);
        }
    }
    return pts;
}

// --- analytic curvature magnitudes -------------------------------------

inline double ellipse_curvature(double a, double b, double t) {
    const double s = std::sin(t), c = std::cos(t);
    return a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
}

inline double hyperbola_curvature(double a, double b, double t) {
    const double sh = std::sinh(t), ch = std::cosh(t);
    return a * b / std::pow(a * a * sh * sh + b * b * ch * ch, 1.5);
}

inline double parabola_curvature(double a, double b, double x) {
    const double u = a * x + b;
    return 2.0 * a * a / std::pow(1.0 + 4.0 * a * a * u * u, 1.5);
}

inline double linear_spiral_curvature(double k, double theta) {
    return (theta * theta + 2.0) / (k * std::pow(theta * theta + 1.0, 1.5));
}

inline double exp_spiral_curvature(double a, double b, double theta) {
    const double r = a * std::exp(b * theta);
    return 1.0 / (r * std::sqrt(1.0 + b * b));
}

// point of the involute variant r = a sqrt(1 + u^2), theta = u + atan(u)
inline Vec2 involute_point(double a, double u) {
    const double r = a * std::sqrt(1.0 + u * u);
    const double th = u + std::atan(u);
    return {r * std::cos(th), r * std::sin(th)};
}

// curvature of that variant by central differences on the parametric form
inline double involute_curvature(double a, double u) {
    const double h = 1e-5;
    const Vec2 p0 = involute_point(a, u - h), p1 = involute_point(a, u),
               p2 = involute_point(a, u + h);
    const Vec2 d1 = (p2 - p0) / (2 * h);
    const Vec2 d2 = (p2 - p1 * 2.0 + p0) / (h * h);
    return std::abs(d1.x * d2.y - d1.y * d2.x) / std::pow(d1.norm(), 3);
}

// --- parametric points ---------------------------------------------------

inline Vec2 ellipse_point(double a, double b, double t) {
    return {a * std::cos(t), b * std::sin(t)};
}

inline Vec2 hyperbola_point(double a, double b, double t) {
    return {a * std::cosh(t), b * std::sinh(t)};
}

inline Vec2 linear_spiral_point(double k, double theta) {
    return {k * theta * std::cos(theta), k * theta * std::sin(theta)};
}

inline Vec2 exp_spiral_point(double a, double b, double theta) {
    const double r = a * std::exp(b * theta);
    return {r * std::cos(theta), r * std::sin(theta)};
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace oracles
