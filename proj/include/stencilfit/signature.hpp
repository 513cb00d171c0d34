#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "stencilfit/contour.hpp"
#include "stencilfit/segmentation.hpp"
#include "stencilfit/trace.hpp"

namespace stencilfit {

// Default half-width (in samples) of the moving-LS curvature window used for
// signature matching.
inline constexpr int kSignatureHalfwidth = 9;

// Curvature signature of a trace treated as a standalone polyline. The same
// estimator produces part signatures, so a part that is an exact sub-polyline
// of a trace has a bit-identical signature over that window.
inline std::vector<double> trace_signature(const std::vector<CurveSample>& samples,
                                           int halfwidth = kSignatureHalfwidth) {
    std::vector<Vec2> pts = sample_points(samples);
    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        arc[i] = arc[i - 1] + distance(pts[i], pts[i - 1]);
    return curvature_profile(pts, arc, halfwidth);
}

inline std::vector<double> window_signature(const std::vector<CurveSample>& samples,
                                            std::size_t begin, std::size_t count,
                                            int halfwidth = kSignatureHalfwidth) {
    std::vector<Vec2> pts;
    pts.reserve(count);
    for (std::size_t i = begin; i < begin + count; ++i) pts.push_back(samples[i].point);
    std::vector<double> arc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        arc[i] = arc[i - 1] + distance(pts[i], pts[i - 1]);
    return curvature_profile(pts, arc, halfwidth);
}

// Reversing traversal flips the sign of the signed curvature.
inline std::vector<double> reversed_signature(const std::vector<double>& sig) {
    std::vector<double> out(sig.rbegin(), sig.rend());
    for (double& v : out) v = -v;
    return out;
}

struct AlignResult {
    double s0 = 0.0;       // prototype arc length of the best window start
    std::size_t index = 0; // sample index of that start
    bool reversed = false; // part traversed against the trace direction
    double score = std::numeric_limits<double>::infinity();  // sum |c_p - c_S|
};

namespace detail {

inline void scan_alignment(const std::vector<double>& part_sig,
                           const std::vector<double>& proto_sig,
                           const std::vector<CurveSample>& proto, bool reversed,
                           AlignResult& best) {
    const std::size_t n = part_sig.size(), m = proto_sig.size();
    if (m < n) return;
    for (std::size_t j = 0; j + n <= m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::abs(part_sig[i] - proto_sig[j + i]);
        if (s < best.score - 1e-15) {
            best = {proto[j].xi, j, reversed, s};
        }
    }
}

}  // namespace detail

// Exhaustive curvature-signature alignment: the window start minimizing
// sum |c_p(s_i) - c_S(s_i + s0)|. Both traversal directions of the part are
// scanned (reversal flips the curvature sign). Deterministic tie-break:
// forward orientation first, then the smallest start.
inline AlignResult curvature_signature_align(const std::vector<double>& part_signature,
                                             const std::vector<CurveSample>& prototype,
                                             int halfwidth = kSignatureHalfwidth) {
    if (prototype.size() < part_signature.size())
        throw input_error("prototype too short");
    if (part_signature.empty()) throw input_error("empty part signature");
    const std::vector<double> proto_sig = trace_signature(prototype, halfwidth);
    AlignResult best;
    detail::scan_alignment(part_signature, proto_sig, prototype, false, best);
    detail::scan_alignment(reversed_signature(part_signature), proto_sig, prototype, true,
                           best);
    return best;
}

inline AlignResult curvature_signature_align(const ObjectPart& part,
                                             const std::vector<CurveSample>& prototype,
                                             int halfwidth = kSignatureHalfwidth) {
    return curvature_signature_align(part.curvature_samples, prototype, halfwidth);
}

// Discrete I2: trapezoidal accumulation of |c_p - c_S| over the aligned
// window of the prototype, with the window's signature recomputed standalone
// so both sides go through the same estimator.
inline double compute_I2(const std::vector<double>& part_signature, double spacing,
                         const std::vector<CurveSample>& prototype, const AlignResult& at,
                         int halfwidth = kSignatureHalfwidth) {
    const std::size_t n = part_signature.size();
    if (at.index + n > prototype.size()) throw input_error("prototype too short");
    const std::vector<double> win = window_signature(prototype, at.index, n, halfwidth);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cp =
            at.reversed ? -part_signature[n - 1 - i] : part_signature[i];
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        acc += w * std::abs(cp - win[i]) * spacing;
    }
    return acc;
}

inline double compute_I2(const ObjectPart& part, const std::vector<CurveSample>& prototype,
                         const AlignResult& at, int halfwidth = kSignatureHalfwidth) {
    const double spacing = part.contour.length() / std::max<std::size_t>(1, part.contour.size() - 1);
    return compute_I2(part.curvature_samples, spacing, prototype, at, halfwidth);
}

// Normalized fitting error Err = sqrt(I2) / L_p.
inline double fitting_error_from_I2(double I2, double part_length) {
    return part_length > 0.0 ? std::sqrt(I2) / part_length : 0.0;
}

}  // namespace stencilfit
