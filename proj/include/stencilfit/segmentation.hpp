#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "stencilfit/contour.hpp"
#include "stencilfit/geometry.hpp"

namespace stencilfit {

// A contour segment of continuous curvature: the unit attributed to one
// stencil stroke.
struct ObjectPart {
    Contour contour;
    double length = 0.0;
    int source_object_id = 0;
    std::vector<double> curvature_samples;  // aligned with contour.points
};

// Least-squares cubic (left of point i) and tangent-constrained quintic
// (right of point i) in local arc length, with the curvature estimates they
// imply at the junction.
struct PolyPairFit {
    // polynomial coefficients in u = s_local / L_S, ascending powers
    Eigen::Vector4d left_x, left_y;
    Eigen::Matrix<double, 6, 1> right_x, right_y;
    double window = 0.0;      // L_S
    double c_left = 0.0;      // curvature of the cubic at u = 1
    double c_right = 0.0;     // curvature of the quintic at u = 0
    double constraint_residual = 0.0;
};

namespace detail {

inline double poly_curvature(double x1, double x2, double y1, double y2) {
    const double speed2 = x1 * x1 + y1 * y1;
    if (speed2 < 1e-24) return 0.0;
    return (x2 * y1 - y2 * x1) / std::pow(speed2, 1.5);
}

// indices with arc length in [s_lo, s_hi]; circular for closed contours
inline std::vector<std::size_t> window_indices(const Contour& c, double s_lo, double s_hi,
                                               bool circular) {
    std::vector<std::size_t> idx;
    const double L = c.length();
    const std::size_t n = c.points.size();
    if (!circular) {
        for (std::size_t i = 0; i < n; ++i)
            if (c.arc_lengths[i] >= s_lo - 1e-12 && c.arc_lengths[i] <= s_hi + 1e-12)
                idx.push_back(i);
        return idx;
    }
    const std::size_t last = c.is_closed() ? n - 1 : n;  // skip duplicate endpoint
    for (std::size_t i = 0; i < last; ++i) {
        for (int wrap = -1; wrap <= 1; ++wrap) {
            const double s = c.arc_lengths[i] + wrap * L;
            if (s >= s_lo - 1e-12 && s <= s_hi + 1e-12) {
                idx.push_back(i);
                break;
            }
        }
    }
    return idx;
}

}  // namespace detail

// Fits the 3rd degree polynomials over [s_i - L_S, s_i] and the 5th degree
// polynomials over [s_i, s_i + L_S] whose first derivative at the junction
// matches the cubic's, solved as equality-constrained least squares by
// eliminating the linear coefficient.
inline PolyPairFit fit_poly_pair(const Contour& c, std::size_t i, double window,
                                 bool circular = false) {
    const double si = c.arc_lengths[i];
    const double L = c.length();
    if (!circular && (si < window - 1e-9 || si > L - window + 1e-9))
        throw input_error("window exceeds contour ends");

    auto rel = [&](std::size_t j, double center) {
        double d = c.arc_lengths[j] - center;
        if (circular) {
            if (d > L / 2) d -= L;
            if (d < -L / 2) d += L;
        }
        return d;
    };

    const auto left_idx = detail::window_indices(
        c, circular ? si - window : std::max(0.0, si - window), si, circular);
    const auto right_idx = detail::window_indices(
        c, si, circular ? si + window : std::min(L, si + window), circular);
    if (left_idx.size() < 4 || right_idx.size() < 6)
        throw input_error("window too sparse");

    PolyPairFit out;
    out.window = window;

    // left cubic in u = (s - (s_i - L_S)) / L_S
    {
        const std::size_t m = left_idx.size();
        Eigen::MatrixXd A(m, 4);
        Eigen::VectorXd bx(m), by(m);
        for (std::size_t r = 0; r < m; ++r) {
            const double u = (rel(left_idx[r], si) + window) / window;
            A(r, 0) = 1.0;
            A(r, 1) = u;
            A(r, 2) = u * u;
            A(r, 3) = u * u * u;
            bx(r) = c.points[left_idx[r]].x;
            by(r) = c.points[left_idx[r]].y;
        }
        const auto qr = A.colPivHouseholderQr();
        out.left_x = qr.solve(bx);
        out.left_y = qr.solve(by);
    }

    // derivative of the cubic at u = 1 (in u units)
    const double dxu = out.left_x(1) + 2.0 * out.left_x(2) + 3.0 * out.left_x(3);
    const double dyu = out.left_y(1) + 2.0 * out.left_y(2) + 3.0 * out.left_y(3);

    // right quintic in u = (s - s_i) / L_S with q'(0) fixed to the cubic's
    // derivative: the linear coefficient is eliminated.
    {
        const std::size_t m = right_idx.size();
        Eigen::MatrixXd A(m, 5);
        Eigen::VectorXd bx(m), by(m);
        for (std::size_t r = 0; r < m; ++r) {
            const double u = rel(right_idx[r], si) / window;
            double pw = u * u;
            A(r, 0) = 1.0;
            for (int k = 1; k < 5; ++k) {
                A(r, k) = pw;
                pw *= u;
            }
            bx(r) = c.points[right_idx[r]].x - dxu * u;
            by(r) = c.points[right_idx[r]].y - dyu * u;
        }
        const auto qr = A.colPivHouseholderQr();
        const Eigen::VectorXd cx = qr.solve(bx);
        const Eigen::VectorXd cy = qr.solve(by);
        out.right_x << cx(0), dxu, cx(1), cx(2), cx(3), cx(4);
        out.right_y << cy(0), dyu, cy(1), cy(2), cy(3), cy(4);
    }

    // curvatures at the junction (u-scaling cancels in the curvature ratio)
    {
        const double x1 = dxu, y1 = dyu;
        const double x2 = 2.0 * out.left_x(2) + 6.0 * out.left_x(3);
        const double y2 = 2.0 * out.left_y(2) + 6.0 * out.left_y(3);
        out.c_left = detail::poly_curvature(x1 / window, x2 / (window * window),
                                            y1 / window, y2 / (window * window));
    }
    {
        const double x1 = out.right_x(1), y1 = out.right_y(1);
        const double x2 = 2.0 * out.right_x(2), y2 = 2.0 * out.right_y(2);
        out.c_right = detail::poly_curvature(x1 / window, x2 / (window * window),
                                             y1 / window, y2 / (window * window));
    }
    out.constraint_residual =
        std::abs(out.right_x(1) - dxu) + std::abs(out.right_y(1) - dyu);
    return out;
}

struct SegmentationOptions {
    double delta_theta = 0.15;      // curvature-jump threshold (1/cm)
    double window_fraction = 0.05;  // L_S as a fraction of the object length
    double min_part_length = 1.0;   // cm
    int min_window_points = 6;
};

struct SegmentationResult {
    std::vector<ObjectPart> parts;
    std::vector<double> junctions;            // arc lengths of detected stencil changes
    std::vector<std::pair<double, double>> dropped;  // transition zones left unassigned
};

namespace detail {

inline ObjectPart make_part(const Contour& c, std::size_t lo, std::size_t hi,
                            const std::vector<double>& curv, int object_id) {
    std::vector<Vec2> pts(c.points.begin() + lo, c.points.begin() + hi + 1);
    ObjectPart part;
    part.contour = make_contour(std::move(pts), c.scale);
    part.length = part.contour.length();
    part.source_object_id = object_id;
    part.curvature_samples.assign(curv.begin() + lo, curv.begin() + hi + 1);
    return part;
}

}  // namespace detail

// Scans the contour for curvature discontinuities between the left cubic and
// right quintic estimates. A part ends at the first index whose jump reaches
// delta_theta and the next part begins where the jump falls back below it;
// the transition zone between them is dropped and its jump maximum is
// reported as the junction location. Closed contours with no jump yield one
// closed part.
inline SegmentationResult segment_object_parts(const Contour& object,
                                               const SegmentationOptions& opt = {},
                                               int object_id = 0) {
    if (!(opt.window_fraction > 0.0 && opt.window_fraction < 0.5))
        throw input_error("window fraction must lie in (0, 0.5)");
    const double L = object.length();
    const double window = opt.window_fraction * L;
    const bool circular = object.is_closed(1e-6);
    const std::size_t n = object.points.size();

    SegmentationResult result;

    // per-index jump statistic and averaged curvature estimate
    std::vector<double> jump(n, 0.0);
    std::vector<double> curv(n, 0.0);
    std::vector<bool> valid(n, false);
    double mean_spacing = L / static_cast<double>(n - 1);
    if (window < (opt.min_window_points - 1) * mean_spacing)
        throw input_error("window spans fewer points than required");

    for (std::size_t i = 0; i < n; ++i) {
        const double si = object.arc_lengths[i];
        if (!circular && (si < window - 1e-12 || si > L - window + 1e-12)) continue;
        try {
            const PolyPairFit f = fit_poly_pair(object, i, window, circular);
            jump[i] = std::abs(f.c_left - f.c_right);
            curv[i] = 0.5 * (f.c_left + f.c_right);
            valid[i] = true;
        } catch (const input_error&) {
            // sparse window; leave invalid
        }
    }
    // extend curvature estimates to untested indices
    {
        std::size_t first = 0;
        while (first < n && !valid[first]) ++first;
        if (first == n) {
            // nothing testable: whole object is one part
            std::vector<double> zero(n, 0.0);
            result.parts.push_back(detail::make_part(object, 0, n - 1, zero, object_id));
            return result;
        }
        for (std::size_t i = 0; i < first; ++i) curv[i] = curv[first];
        std::size_t last = n - 1;
        while (last > 0 && !valid[last]) --last;
        for (std::size_t i = last + 1; i < n; ++i) curv[i] = curv[last];
    }

    // exceeding runs; runs closer than one window belong to one junction
    struct Run {
        std::size_t first, last, peak;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < n;) {
        if (valid[i] && jump[i] >= opt.delta_theta) {
            Run r{i, i, i};
            std::size_t j = i;
            while (j < n && valid[j] && jump[j] > opt.delta_theta) {
                if (jump[j] > jump[r.peak]) r.peak = j;
                r.last = j;
                ++j;
            }
            if (!runs.empty() &&
                object.arc_lengths[r.first] - object.arc_lengths[runs.back().last] < window) {
                auto& prev = runs.back();
                prev.last = r.last;
                if (jump[r.peak] > jump[prev.peak]) prev.peak = r.peak;
            } else {
                runs.push_back(r);
            }
            i = j;
        } else {
            ++i;
        }
    }

    // localize each junction at the peak of an offset-window signature
    // difference: symmetric around a curvature step, unlike the raw jump
    std::vector<double> sig;
    if (!runs.empty()) {
        const int m = std::max(3, static_cast<int>(0.4 * window / mean_spacing));
        sig = curvature_profile(object.points, object.arc_lengths, m);
        for (auto& r : runs) {
            const std::size_t lo = r.first > static_cast<std::size_t>(m) ? r.first - m : 0;
            const std::size_t hi = std::min(n - 1, r.last + static_cast<std::size_t>(m));
            double best = -1.0;
            for (std::size_t i = lo; i <= hi; ++i) {
                const std::size_t ip = std::min(n - 1, i + static_cast<std::size_t>(m));
                const std::size_t im = i > static_cast<std::size_t>(m) ? i - m : 0;
                const double d = std::abs(sig[ip] - sig[im]);
                if (d > best) {
                    best = d;
                    r.peak = i;
                }
            }
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end] inclusive
    std::size_t begin = 0;
    for (const auto& r : runs) {
        result.junctions.push_back(object.arc_lengths[r.peak]);
        if (r.first > begin) ranges.emplace_back(begin, r.first);
        if (r.last > r.first)
            result.dropped.emplace_back(object.arc_lengths[r.first],
                                        object.arc_lengths[r.last]);
        begin = std::min(r.last + 1, n - 1);
    }
    if (begin + 1 < n) ranges.emplace_back(begin, n - 1);

    // closed contour with no jump: one closed part
    if (circular && result.junctions.empty()) {
        result.parts.push_back(detail::make_part(object, 0, n - 1, curv, object_id));
        return result;
    }

    for (const auto& [lo, hi] : ranges) {
        const double len = object.arc_lengths[hi] - object.arc_lengths[lo];
        if (len < opt.min_part_length) continue;  // discard short fragments
        result.parts.push_back(detail::make_part(object, lo, hi, curv, object_id));
    }
    return result;
}

}  // namespace stencilfit
