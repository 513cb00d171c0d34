#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "stencilfit/contour.hpp"
#include "stencilfit/geometry.hpp"

namespace stencilfit {

// Envelope mean curve of a point cloud scattered around a contour. The
// envelope is the set of cloud points that are farthest from some cloud point
// within an angular sector, i.e. the boundary of the cloud as seen from
// inside; it splits into two opposing chains whose pointwise mean tracks the
// underlying curve.
inline Contour envelope_mean_curve(const PointCloud& cloud, int directions = 64) {
    if (cloud.points.size() < 3) throw input_error("point cloud needs at least 3 points");
    if (directions < 8) throw input_error("need at least 8 directions");
    const auto& pts = cloud.points;
    const std::size_t n = pts.size();

    const BoundingBox box = bounding_box(pts);
    const Vec2 ext = box.extent();
    if (std::max(ext.x, ext.y) < 1e-12) throw input_error("degenerate cloud");

    // mark, per viewpoint and angular sector, the farthest cloud point
    std::vector<bool> marked(n, false);
    const double sector = 2.0 * std::numbers::pi / directions;
    std::vector<double> best_d(directions);
    std::vector<std::size_t> best_i(directions);
    for (std::size_t q = 0; q < n; ++q) {
        std::fill(best_d.begin(), best_d.end(), -1.0);
        for (std::size_t p = 0; p < n; ++p) {
            if (p == q) continue;
            const Vec2 d = pts[p] - pts[q];
            const double dist2 = d.squared_norm();
            if (dist2 <= 0.0) continue;
            int k = static_cast<int>(std::floor((std::atan2(d.y, d.x) + std::numbers::pi) / sector));
            k = std::clamp(k, 0, directions - 1);
            if (dist2 > best_d[k]) {
                best_d[k] = dist2;
                best_i[k] = p;
            }
        }
        for (int k = 0; k < directions; ++k)
            if (best_d[k] > 0.0) marked[best_i[k]] = true;
    }

    std::vector<Vec2> env;
    for (std::size_t i = 0; i < n; ++i)
        if (marked[i]) env.push_back(pts[i]);
    if (env.size() < 2) env = pts;

    // principal axis of the envelope
    Vec2 mean{0, 0};
    for (const auto& p : env) mean += p;
    mean = mean / static_cast<double>(env.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : env) {
        const Vec2 d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    const double ang = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Vec2 axis{std::cos(ang), std::sin(ang)};
    const Vec2 perp = axis.perp();

    struct Proj {
        double t, u;  // along-axis, perpendicular
    };
    std::vector<Proj> proj;
    proj.reserve(env.size());
    double tmin = 1e300, tmax = -1e300;
    for (const auto& p : env) {
        const Vec2 d = p - mean;
        const Proj pr{d.dot(axis), d.dot(perp)};
        tmin = std::min(tmin, pr.t);
        tmax = std::max(tmax, pr.t);
        proj.push_back(pr);
    }
    const double span = tmax - tmin;
    if (span < 1e-12) throw input_error("degenerate cloud");

    // slice along the axis; the two chains are the per-slice perpendicular
    // extremes of the envelope, the mean curve their midpoints. The two
    // outermost points per side are averaged to tame order-statistic noise.
    const int bins = static_cast<int>(std::clamp<double>(env.size() / 16.0, 3.0, 48.0));
    std::vector<std::vector<Proj>> slices(bins);
    for (const auto& pr : proj) {
        int b = static_cast<int>((pr.t - tmin) / span * bins);
        b = std::clamp(b, 0, bins - 1);
        slices[b].push_back(pr);
    }

    std::vector<Vec2> curve;
    for (auto& s : slices) {
        if (s.empty()) continue;
        std::sort(s.begin(), s.end(), [](const Proj& a, const Proj& b) { return a.u < b.u; });
        // split the slice into its lower and upper chain halves; the mean
        // curve is the midpoint of the per-chain means
        const std::size_t k = std::max<std::size_t>(1, s.size() / 2);
        double u_hi = 0, u_lo = 0, t_acc = 0;
        for (std::size_t j = 0; j < k; ++j) {
            u_lo += s[j].u;
            u_hi += s[s.size() - 1 - j].u;
            t_acc += s[j].t + s[s.size() - 1 - j].t;
        }
        const double u = 0.5 * (u_hi + u_lo) / static_cast<double>(k);
        const double t = t_acc / static_cast<double>(2 * k);
        curve.push_back(mean + axis * t + perp * u);
    }
    if (curve.size() < 2) throw input_error("degenerate cloud");
    if (curve.size() >= 5) {  // 3-point smoothing knocks down slice noise
        std::vector<Vec2> smooth(curve.size());
        smooth.front() = curve.front();
        smooth.back() = curve.back();
        for (std::size_t i = 1; i + 1 < curve.size(); ++i)
            smooth[i] = (curve[i - 1] + curve[i] * 2.0 + curve[i + 1]) / 4.0;
        curve = std::move(smooth);
    }
    return make_contour(std::move(curve));
}

}  // namespace stencilfit
