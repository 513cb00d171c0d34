#pragma once

#include <cmath>
#include <vector>

#include "stencilfit/contour.hpp"
#include "stencilfit/geometry.hpp"

namespace stencilfit {

struct RigidAlignment {
    RigidTransform transform;       // maps the second sequence onto the first
    std::vector<double> distances;  // post-alignment pointwise distances
    double mean_distance = 0.0;
    double max_distance = 0.0;
};

namespace detail {

inline std::vector<Vec2> resample_points(const std::vector<Vec2>& pts, std::size_t n) {
    Contour c = make_contour(pts);
    std::vector<Vec2> out;
    out.reserve(n);
    const double L = c.length();
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(point_at_arclength(c, L * static_cast<double>(i) /
                                                static_cast<double>(n - 1)));
    return out;
}

}  // namespace detail

// Closed-form least-squares rigid registration (rotation + translation, no
// scaling) of ordered point sequences. Unequal counts are resampled by arc
// length to the shorter sequence.
inline RigidAlignment rigid_align(std::vector<Vec2> target, std::vector<Vec2> source) {
    if (target.size() < 2 || source.size() < 2)
        throw input_error("rigid alignment needs at least 2 points");
    const std::size_t n = std::min(target.size(), source.size());
    if (target.size() != n) target = detail::resample_points(target, n);
    if (source.size() != n) source = detail::resample_points(source, n);

    Vec2 mt{0, 0}, ms{0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        mt += target[i];
        ms += source[i];
    }
    mt = mt / static_cast<double>(n);
    ms = ms / static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;  // cross-covariance terms
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = source[i] - ms;
        const Vec2 b = target[i] - mt;
        sxx += a.dot(b);
        sxy += a.cross(b);
    }
    RigidAlignment out;
    out.transform.angle = std::atan2(sxy, sxx);
    const double c = std::cos(out.transform.angle), s = std::sin(out.transform.angle);
    out.transform.translation = {mt.x - (c * ms.x - s * ms.y),
                                 mt.y - (s * ms.x + c * ms.y)};

    out.distances.reserve(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = distance(target[i], out.transform.apply(source[i]));
        out.distances.push_back(d);
        acc += d;
        out.max_distance = std::max(out.max_distance, d);
    }
    out.mean_distance = acc / static_cast<double>(n);
    return out;
}

inline RigidAlignment rigid_align(const ObjectPart& part,
                                  const std::vector<Vec2>& stencil_points) {
    return rigid_align(part.contour.points, stencil_points);
}

}  // namespace stencilfit
