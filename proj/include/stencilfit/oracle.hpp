#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stencilfit/algorithm1.hpp"
#include "stencilfit/registration.hpp"
#include "stencilfit/signature.hpp"
#include "stencilfit/trace.hpp"

namespace stencilfit {

// Recipe for a reproducible synthetic object part drawn from a catalog
// family: the curve segment, a rigid pose, and isotropic Gaussian noise.
struct SyntheticSpec {
    std::string family_id = "hyperbola";
    PrimaryParams params = PrimaryParams::pair(1.0, 1.0);
    double xi_start = 0.0;  // anchor-relative arc length of the segment start
    double length = 5.0;    // cm
    RigidTransform transform;
    double noise_sigma = 0.0;  // cm
    std::uint64_t seed = 0;
    double spacing = 0.05;       // resampling spacing of the part
    double gen_step = 0.00625;   // fine trace step before resampling
    int signature_halfwidth = kSignatureHalfwidth;
};

// Traces the prototype over the requested segment, applies the rigid
// transform, perturbs with seeded Gaussian noise, resamples, and attaches
// curvature samples. Identical specs produce bit-identical parts.
inline ObjectPart generate_part(const SyntheticSpec& spec) {
    if (spec.length <= 0.0) throw input_error("segment length must be positive");
    if (spec.noise_sigma < 0.0) throw input_error("noise sigma must be nonnegative");
    const CurveFamily& fam = family_by_id(spec.family_id);
    auto samples = trace_span(fam, spec.params, spec.xi_start,
                              spec.xi_start + spec.length, spec.gen_step);
    if (samples.size() < 4) throw numeric_error("segment too short to generate");

    std::vector<Vec2> pts = sample_points(samples);
    pts = apply_transform(spec.transform, pts);
    if (spec.noise_sigma > 0.0) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (auto& p : pts) {
            p.x += noise(rng);
            p.y += noise(rng);
        }
    }
    Contour fine = make_contour(std::move(pts));
    ObjectPart part;
    part.contour = resample_arclength(fine, spec.spacing);
    part.length = part.contour.length();
    part.curvature_samples = curvature_profile(part.contour, spec.signature_halfwidth);
    return part;
}

// ---------------------------------------------------------------------------
// Brute-force Euclidean fitting oracle
// ---------------------------------------------------------------------------

struct OracleGrids {
    std::vector<PrimaryParams> alphas;
    std::vector<double> xi_starts;          // window starts on the prototype
    std::vector<RigidTransform> transforms; // explicit pose candidates
    bool procrustes_candidates = true;      // add the correspondence-optimal pose
};

struct OracleFit {
    PrimaryParams alpha;
    RigidTransform transform;  // maps the prototype segment onto the part
    double xi_start = 0.0;
    double mean_distance = std::numeric_limits<double>::infinity();
};

namespace detail {

// Newton projection distance of a point to the zero level set; falls back to
// the distance to a dense trace polyline when Newton leaves the domain.
inline double point_to_curve_distance(const CurveFamily& fam, const Vec2& pt,
                                      const PrimaryParams& p,
                                      const std::vector<CurveSample>& fallback,
                                      const EvalCtx* ctx) {
    Vec2 q = pt;
    bool ok = true;
    for (int it = 0; it < 20; ++it) {
        if (!fam.in_domain(q, p, ctx)) {
            ok = false;
            break;
        }
        const double f = fam.eval(q, p, ctx);
        if (std::abs(f) < 1e-12) break;
        const Vec2 g = fam.grad(q, p, ctx).chi;
        const double g2 = g.squared_norm();
        if (g2 < 1e-24) {
            ok = false;
            break;
        }
        q -= g * (f / g2);
    }
    if (ok && fam.in_domain(q, p, ctx) && std::abs(fam.eval(q, p, ctx)) < 1e-8)
        return distance(pt, q);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : fallback) best = std::min(best, distance(pt, s.point));
    return best;
}

}  // namespace detail

// Exhaustive scan over (alpha, segment start, pose) of the mean Euclidean
// point-to-curve distance. Desk scale only: every candidate is evaluated.
inline OracleFit brute_force_fit(const ObjectPart& part, const CurveFamily& fam,
                                 const OracleGrids& grids) {
    if (grids.alphas.empty() || grids.xi_starts.empty())
        throw input_error("oracle grids are empty");
    const std::size_t n = part.contour.size();
    const double L_p = part.contour.length();
    const double step = L_p / static_cast<double>(n - 1);

    OracleFit best;
    for (const auto& alpha : grids.alphas) {
        for (double xi_s : grids.xi_starts) {
            std::vector<CurveSample> seg;
            try {
                seg = trace_span(fam, alpha, xi_s, xi_s + L_p, step);
            } catch (const numeric_error&) {
                continue;
            } catch (const input_error&) {
                continue;
            }
            if (seg.size() < 2) continue;

            std::vector<RigidTransform> poses = grids.transforms;
            if (grids.procrustes_candidates && seg.size() >= n) {
                // correspondence-optimal pose for this window, both part
                // traversal directions
                std::vector<Vec2> proto_pts;
                for (std::size_t i = 0; i < n; ++i) proto_pts.push_back(seg[i].point);
                poses.push_back(
                    rigid_align(part.contour.points, proto_pts).transform);
                std::vector<Vec2> rev(part.contour.points.rbegin(),
                                      part.contour.points.rend());
                poses.push_back(rigid_align(rev, proto_pts).transform);
            }
            for (const auto& pose : poses) {
                // pose maps the prototype onto the part: measure the part in
                // the prototype frame
                const RigidTransform inv = pose.inverse();
                double acc = 0.0;
                EvalCtx ctx = seg.empty() ? EvalCtx{} : EvalCtx::at_theta(seg[0].theta);
                for (const auto& p : part.contour.points) {
                    const Vec2 q = inv.apply(p);
                    ctx.active = true;
                    acc += detail::point_to_curve_distance(fam, q, alpha, seg, &ctx);
                }
                const double mean = acc / static_cast<double>(n);
                if (mean < best.mean_distance) {
                    best = {alpha, pose, xi_s, mean};
                }
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Discrete check that minimizing I2 minimizes I1
// ---------------------------------------------------------------------------

struct AppendixAReport {
    int instances = 0;
    int agreements = 0;
    double agreement_fraction = 0.0;
    double worst_gap = 0.0;  // relative I1 excess of the I2-argmin placement
};

// Per instance: a noisy segment of a random prototype stays in the
// prototype's frame; placements are window starts along the curve. I1 is the
// correspondence-normal distance sum (the Stokes boundary form), I2 the
// |curvature difference| sum; agreement means the I2-argmin attains I1
// within 2% of the I1 minimum.
inline AppendixAReport check_appendix_a(int instances, std::uint64_t seed) {
    if (instances < 1) throw input_error("need at least one instance");
    AppendixAReport rep;
    rep.instances = instances;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const std::vector<std::string> ids = {"ellipse", "hyperbola", "parabola",
                                          "linear-spiral"};

    for (int inst = 0; inst < instances; ++inst) {
        const std::string id = ids[rng() % ids.size()];
        const CurveFamily& fam = family_by_id(id);
        PrimaryParams alpha = fam.param_dim() == 2
                                  ? PrimaryParams::pair(1.5 + 4.0 * uni(rng),
                                                        1.5 + 4.0 * uni(rng))
                                  : PrimaryParams::single(0.15 + 0.3 * uni(rng));
        const double L_p = 3.0 + 2.0 * uni(rng);
        const double span = 2.5 * L_p;
        const double xi_start = -span * 0.5 + (span - L_p) * uni(rng);
        const double spacing = 0.05;

        SyntheticSpec spec;
        spec.family_id = id;
        spec.params = alpha;
        spec.xi_start = spacing * std::round(xi_start / spacing);
        spec.length = L_p;
        spec.noise_sigma = 0.004;
        spec.seed = rng();
        spec.spacing = spacing;
        ObjectPart part;
        std::vector<CurveSample> trace;
        try {
            part = generate_part(spec);
            trace = trace_span(fam, alpha, -0.5 * span - L_p, 0.5 * span + L_p, spacing);
        } catch (const numeric_error&) {
            --inst;  // resample a feasible instance
            continue;
        }
        const std::size_t n = part.contour.size();
        if (trace.size() < n + 4) {
            --inst;
            continue;
        }

        double best_I1 = std::numeric_limits<double>::infinity();
        double best_I2 = std::numeric_limits<double>::infinity();
        double I1_at_I2argmin = 0.0;
        for (std::size_t j = 0; j + n <= trace.size(); ++j) {
            // discrete I1: 2 sum |(r_p - r_S) . n_S| dxi over the window
            double I1 = 0.0;
            bool ok = true;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& s = trace[j + i];
                EvalCtx ctx = EvalCtx::at_theta(s.theta);
                Vec2 g;
                try {
                    g = fam.grad(s.point, alpha, &ctx).chi;
                } catch (const numeric_error&) {
                    ok = false;
                    break;
                }
                const double T = g.norm();
                if (T < 1e-12) {
                    ok = false;
                    break;
                }
                const Vec2 d = part.contour.points[i] - s.point;
                I1 += 2.0 * std::abs(d.dot(g) / T) * spacing;
            }
            if (!ok) continue;
            // discrete I2 from the curvature signatures
            AlignResult at;
            at.index = j;
            at.s0 = trace[j].xi;
            const double I2 = compute_I2(part, trace, at, spec.signature_halfwidth);
            if (I2 < best_I2) {
                best_I2 = I2;
                I1_at_I2argmin = I1;
            }
            best_I1 = std::min(best_I1, I1);
        }
        const double gap =
            (I1_at_I2argmin - best_I1) / std::max(best_I1, 1e-9);
        rep.worst_gap = std::max(rep.worst_gap, gap);
        if (gap <= 0.02) ++rep.agreements;
    }
    rep.agreement_fraction =
        static_cast<double>(rep.agreements) / static_cast<double>(rep.instances);
    return rep;
}

}  // namespace stencilfit
