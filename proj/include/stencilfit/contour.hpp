#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "stencilfit/geometry.hpp"

namespace stencilfit {

// Ordered planar point sequence with cumulative arc lengths (cm).
// arc_lengths[0] = 0 and arc_lengths[i] is the polyline length up to point i.
struct Contour {
    std::vector<Vec2> points;
    std::vector<double> arc_lengths;
    double scale = 1.0;  // cm per input unit, kept for provenance

    double length() const { return arc_lengths.empty() ? 0.0 : arc_lengths.back(); }
    std::size_t size() const { return points.size(); }

    bool is_closed(double tol = 1e-9) const {
        return points.size() > 2 && distance(points.front(), points.back()) < tol;
    }
};

inline Contour make_contour(std::vector<Vec2> points, double scale = 1.0) {
    if (points.size() < 2) throw input_error("contour needs at least 2 points");
    for (const auto& p : points)
        if (!p.finite()) throw input_error("contour has non-finite coordinates");
    Contour c;
    c.points = std::move(points);
    c.scale = scale;
    c.arc_lengths.resize(c.points.size());
    c.arc_lengths[0] = 0.0;
    for (std::size_t i = 1; i < c.points.size(); ++i)
        c.arc_lengths[i] = c.arc_lengths[i - 1] + distance(c.points[i], c.points[i - 1]);
    return c;
}

// Point at arc length s by linear interpolation; s clamped to [0, length].
inline Vec2 point_at_arclength(const Contour& c, double s) {
    const auto& al = c.arc_lengths;
    if (s <= 0.0) return c.points.front();
    if (s >= al.back()) return c.points.back();
    auto it = std::upper_bound(al.begin(), al.end(), s);
    std::size_t i = static_cast<std::size_t>(it - al.begin());
    // al[i-1] <= s < al[i]
    double seg = al[i] - al[i - 1];
    if (seg <= 0.0) return c.points[i];
    double t = (s - al[i - 1]) / seg;
    return c.points[i - 1] + (c.points[i] - c.points[i - 1]) * t;
}

// Uniform arc-length resampling by linear interpolation. Endpoints are kept;
// the final interval may be shorter than `spacing`.
inline Contour resample_arclength(const Contour& c, double spacing) {
    if (spacing <= 0.0) throw input_error("resample spacing must be positive");
    if (c.points.size() < 2) throw input_error("contour needs at least 2 points");
    const double total = c.length();
    if (total <= 0.0) throw input_error("zero-length contour");

    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(total / spacing) + 2);
    const double tail = 1e-9 * std::max(1.0, total);
    for (double s = 0.0; s < total - tail; s += spacing)
        pts.push_back(point_at_arclength(c, s));
    pts.push_back(c.points.back());
    if (pts.size() < 2) pts.insert(pts.begin(), c.points.front());
    return make_contour(std::move(pts), c.scale);
}

// Signed curvature profile of a polyline via moving least-squares quadratics
// x(s), y(s) over a window of +-halfwidth samples. Sign follows
// c = x'' y' - y'' x' for the stored point order. Windows shrink one-sided at
// the ends, so the estimate is a pure function of the local points; identical
// point subsets produce bit-identical values.
inline std::vector<double> curvature_profile(const std::vector<Vec2>& pts,
                                             const std::vector<double>& arc,
                                             int halfwidth) {
    const std::size_t n = pts.size();
    std::vector<double> curv(n, 0.0);
    if (n < 3) return curv;
    halfwidth = std::max(halfwidth, 2);

    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= static_cast<std::size_t>(halfwidth) ? i - halfwidth : 0;
        std::size_t hi = std::min(n - 1, i + halfwidth);
        if (hi - lo < 2) {  // widen degenerate windows
            lo = i >= 1 ? i - 1 : 0;
            hi = std::min(n - 1, lo + 2);
            lo = hi >= 2 ? hi - 2 : 0;
        }
        // LS quadratic in u = s - s_i with coordinates centered on point i.
        // The two coordinates share one 3x3 normal-equation matrix.
        double S0 = 0, S1 = 0, S2 = 0, S3 = 0, S4 = 0;
        double bx0 = 0, bx1 = 0, bx2 = 0, by0 = 0, by1 = 0, by2 = 0;
        for (std::size_t j = lo; j <= hi; ++j) {
            const double u = arc[j] - arc[i];
            const double u2 = u * u;
            const double px = pts[j].x - pts[i].x, py = pts[j].y - pts[i].y;
            S0 += 1.0; S1 += u; S2 += u2; S3 += u2 * u; S4 += u2 * u2;
            bx0 += px; bx1 += px * u; bx2 += px * u2;
            by0 += py; by1 += py * u; by2 += py * u2;
        }
        // Cramer on the symmetric system [[S0 S1 S2][S1 S2 S3][S2 S3 S4]]
        const double det = S0 * (S2 * S4 - S3 * S3) - S1 * (S1 * S4 - S2 * S3) +
                           S2 * (S1 * S3 - S2 * S2);
        if (std::abs(det) < 1e-30) continue;
        auto solve = [&](double b0, double b1, double b2, double& c1, double& c2) {
            const double d1 = S0 * (b1 * S4 - b2 * S3) - b0 * (S1 * S4 - S2 * S3) +
                              S2 * (b2 * S1 - S2 * b1);
            const double d2 = S0 * (S2 * b2 - S3 * b1) - S1 * (S1 * b2 - S2 * b1) +
                              b0 * (S1 * S3 - S2 * S2);
            c1 = d1 / det;
            c2 = d2 / det;
        };
        double x1, x2, y1, y2;
        solve(bx0, bx1, bx2, x1, x2);
        solve(by0, by1, by2, y1, y2);
        const double speed2 = x1 * x1 + y1 * y1;
        if (speed2 < 1e-24) continue;
        curv[i] = (2.0 * x2 * y1 - 2.0 * y2 * x1) / std::pow(speed2, 1.5);
    }
    return curv;
}

inline std::vector<double> curvature_profile(const Contour& c, int halfwidth) {
    return curvature_profile(c.points, c.arc_lengths, halfwidth);
}

struct PointCloud {
    std::vector<Vec2> points;
};

inline PointCloud make_point_cloud(std::vector<Vec2> pts) {
    if (pts.size() < 3) throw input_error("point cloud needs at least 3 points");
    return PointCloud{std::move(pts)};
}

}  // namespace stencilfit
