#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stencilfit/contour.hpp"
#include "stencilfit/families.hpp"
#include "stencilfit/geometry.hpp"

namespace stencilfit {

// A point of a traced curve: arc length xi along the chi level set, measured
// from the trace origin, for fixed primary parameters. theta carries the
// unwrapped branch angle at the point (0 for non-spiral families) so branch
// contexts can be reseeded from any sample.
struct CurveSample {
    double xi = 0.0;
    Vec2 point;
    PrimaryParams params;
    double theta = 0.0;
};

namespace detail {

// Newton projection of chi onto {f = level} along grad f. Throws when the
// residual cannot be brought down.
inline Vec2 project_to_level(const CurveFamily& fam, Vec2 chi, const PrimaryParams& p,
                             const EvalCtx* ctx, double level, double xi_for_msg) {
    double f0 = std::abs(fam.eval(chi, p, ctx) - level);
    for (int it = 0; it < 40; ++it) {
        const double f = fam.eval(chi, p, ctx) - level;
        if (std::abs(f) < 1e-11) return chi;
        const Vec2 g = fam.grad(chi, p, ctx).chi;
        const double g2 = g.squared_norm();
        if (g2 < 1e-24) break;
        chi -= g * (f / g2);
        if (!fam.in_domain(chi, p, ctx)) break;
    }
    const double ff = fam.in_domain(chi, p, ctx) ? std::abs(fam.eval(chi, p, ctx) - level)
                                                 : std::numeric_limits<double>::infinity();
    if (ff < 1e-9 * std::max(1.0, f0)) return chi;
    throw numeric_error("tracing failed at xi=" + std::to_string(xi_for_msg));
}

// Unit tangent (f_y, -f_x)/T; the direction whose parametric curvature
// x'' y' - y'' x' matches the flat curvature of f.
inline Vec2 level_tangent(const CurveFamily& fam, const Vec2& chi, const PrimaryParams& p,
                          const EvalCtx* ctx) {
    const Vec2 g = fam.grad(chi, p, ctx).chi;
    const double T = g.norm();
    if (T < 1e-15) throw numeric_error("curvature singularity");
    return Vec2{g.y, -g.x} / T;
}

// One signed arc-length step with adaptive substeps. A Heun predictor is
// polished by a 2x2 Newton solve so each substep lands exactly on the level
// set at chord distance h; xi then agrees with the polyline arc length.
inline Vec2 advance_on_level(const CurveFamily& fam, Vec2 chi, const PrimaryParams& p,
                             EvalCtx& ctx, double level, double ds, double xi_for_msg) {
    double remaining = std::abs(ds);
    const double dir = ds >= 0.0 ? 1.0 : -1.0;
    while (remaining > 1e-14) {
        double cmag = 0.0;
        try {
            cmag = std::abs(flat_curvature(fam, chi, p, &ctx));
        } catch (const numeric_error&) {
            cmag = 0.0;
        }
        double h = remaining;
        if (cmag > 1e-12) h = std::min(h, 0.1 / cmag);
        const Vec2 t0 = level_tangent(fam, chi, p, &ctx) * dir;
        Vec2 mid = chi + t0 * h;
        if (!fam.in_domain(mid, p, &ctx))
            throw numeric_error("tracing failed at xi=" + std::to_string(xi_for_msg));
        const Vec2 t1 = level_tangent(fam, mid, p, &ctx) * dir;
        Vec2 next = chi + (t0 + t1) * (0.5 * h);

        // solve f(next) = level, |next - chi| = h
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            if (!fam.in_domain(next, p, &ctx)) break;
            const double rf = fam.eval(next, p, &ctx) - level;
            const Vec2 d = next - chi;
            const double rc = d.squared_norm() - h * h;
            if (std::abs(rf) < 1e-11 && std::abs(rc) < 1e-13 * std::max(1.0, h * h)) {
                ok = true;
                break;
            }
            const Vec2 g = fam.grad(next, p, &ctx).chi;
            // J = [g; 2 d]
            const double det = 2.0 * (g.x * d.y - g.y * d.x);
            if (std::abs(det) < 1e-18) break;
            next.x -= (2.0 * (rf * d.y) - g.y * rc) / det;
            next.y -= (g.x * rc - 2.0 * rf * d.x) / det;
        }
        if (!ok || (next - chi).dot(t0) <= 0.0)
            throw numeric_error("tracing failed at xi=" + std::to_string(xi_for_msg));
        chi = next;
        ctx.prev_theta = fam.theta(chi, &ctx);
        remaining -= h;
    }
    return chi;
}

}  // namespace detail

// Traces the level set of f through `start` (level = f(start), normally 0)
// for `length` cm with samples every `step` cm. Negative length runs the
// tangent backwards. The returned xi starts at xi0 and is signed.
inline std::vector<CurveSample> trace_curve(const CurveFamily& fam, const PrimaryParams& p,
                                            const Vec2& start, double length, double step,
                                            EvalCtx ctx = {}, double xi0 = 0.0) {
    if (step <= 0.0) throw input_error("trace step must be positive");
    if (!fam.in_domain(start, p, &ctx)) throw numeric_error("point outside family domain");
    ctx.active = true;
    ctx.prev_theta = fam.theta(start, &ctx);
    const double level = fam.eval(start, p, &ctx);

    std::vector<CurveSample> out;
    const double dir = length >= 0.0 ? 1.0 : -1.0;
    const double total = std::abs(length);
    const std::size_t n_steps = static_cast<std::size_t>(std::floor(total / step + 1e-9));
    const double tail = total - static_cast<double>(n_steps) * step;
    out.reserve(n_steps + 2);
    Vec2 chi = detail::project_to_level(fam, start, p, &ctx, level, xi0);
    ctx.prev_theta = fam.theta(chi, &ctx);
    out.push_back({xi0, chi, p, ctx.prev_theta});
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double xi = xi0 + dir * static_cast<double>(i) * step;
        if (!fam.trace_ok(chi, p, &ctx)) return out;
        chi = detail::advance_on_level(fam, chi, p, ctx, level, dir * step, xi);
        out.push_back({xi, chi, p, ctx.prev_theta});
    }
    if (tail > 1e-9 * std::max(1.0, total) && fam.trace_ok(chi, p, &ctx)) {
        chi = detail::advance_on_level(fam, chi, p, ctx, level, dir * tail,
                                       xi0 + dir * total);
        out.push_back({xi0 + dir * total, chi, p, ctx.prev_theta});
    }
    return out;
}

// Trace covering [xi_lo, xi_hi] in anchor-relative arc length, built from the
// family's canonical anchor. Stops early at trace guards; samples are sorted
// by xi. Throws if nothing could be traced.
inline std::vector<CurveSample> trace_span(const CurveFamily& fam, const PrimaryParams& p,
                                           double xi_lo, double xi_hi, double step) {
    if (xi_hi <= xi_lo) throw input_error("empty trace span");
    // round outward to step multiples so all samples are uniformly spaced
    xi_lo = step * std::floor(xi_lo / step + 1e-9);
    xi_hi = step * std::ceil(xi_hi / step - 1e-9);
    EvalCtx ctx;
    const Vec2 a = fam.anchor(p, ctx);
    std::vector<CurveSample> fwd, bwd;
    if (xi_hi > 0.0) fwd = trace_curve(fam, p, a, xi_hi, step, ctx, 0.0);
    if (xi_lo < 0.0) bwd = trace_curve(fam, p, a, xi_lo, step, ctx, 0.0);
    std::vector<CurveSample> out;
    out.reserve(fwd.size() + bwd.size());
    for (std::size_t i = bwd.size(); i > 1; --i) out.push_back(bwd[i - 1]);
    if (!fwd.empty())
        out.insert(out.end(), fwd.begin(), fwd.end());
    else if (!bwd.empty())
        out.push_back(bwd.front());
    if (out.size() < 2) throw numeric_error("trace produced too few samples");
    // keep only the requested window
    std::vector<CurveSample> clipped;
    clipped.reserve(out.size());
    for (const auto& s : out)
        if (s.xi >= xi_lo - 1e-9 && s.xi <= xi_hi + 1e-9) clipped.push_back(s);
    return clipped;
}

// The alpha-plane analogue of trace_curve: the level set
// {alpha : f(chi, alpha) = f(chi, alpha0)} stepped by d beta in the (a, b)
// plane. One-parameter families degenerate to the single point alpha0.
inline std::vector<PrimaryParams> trace_param_curve(const CurveFamily& fam, const Vec2& chi,
                                                    const PrimaryParams& alpha0,
                                                    double length, double dbeta,
                                                    const EvalCtx* ctx = nullptr,
                                                    std::vector<double>* betas = nullptr) {
    std::vector<PrimaryParams> out;
    if (betas) betas->clear();
    if (fam.param_dim() == 1 || std::abs(length) < 1e-15) {
        out.push_back(alpha0);
        if (betas) betas->push_back(0.0);
        return out;
    }
    if (dbeta <= 0.0) throw input_error("trace step must be positive");
    const double level = fam.eval(chi, alpha0, ctx);

    auto project = [&](PrimaryParams q) {
        for (int it = 0; it < 40; ++it) {
            const double g = fam.eval(chi, q, ctx) - level;
            if (std::abs(g) < 1e-11) return q;
            const Vec2 ga = fam.grad(chi, q, ctx).alpha;
            const double n2 = ga.squared_norm();
            if (n2 < 1e-24) break;
            q.a -= ga.x * g / n2;
            q.b -= ga.y * g / n2;
            if (!(q.a > 0.0 && q.b > 0.0)) throw numeric_error("tracing failed at beta");
        }
        if (std::abs(fam.eval(chi, q, ctx) - level) < 1e-8) return q;
        throw numeric_error("tracing failed at beta");
    };

    const double dir = length >= 0.0 ? 1.0 : -1.0;
    const std::size_t n_steps =
        static_cast<std::size_t>(std::floor(std::abs(length) / dbeta + 1e-9));
    PrimaryParams q = alpha0;
    out.push_back(q);
    if (betas) betas->push_back(0.0);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const Vec2 ga = fam.grad(chi, q, ctx).alpha;
        const double Ta = ga.norm();
        if (Ta < 1e-15) throw numeric_error("tracing failed at beta");
        // d(a, b) = (-f_b, f_a) / T_alpha * d beta
        const Vec2 t0 = Vec2{-ga.y, ga.x} / Ta * dir;
        PrimaryParams mid = q;
        mid.a += t0.x * dbeta;
        mid.b += t0.y * dbeta;
        if (!(mid.a > 0.0 && mid.b > 0.0)) break;
        const Vec2 gm = fam.grad(chi, mid, ctx).alpha;
        const double Tm = gm.norm();
        if (Tm < 1e-15) break;
        const Vec2 t1 = Vec2{-gm.y, gm.x} / Tm * dir;
        PrimaryParams next = q;
        next.a += 0.5 * (t0.x + t1.x) * dbeta;
        next.b += 0.5 * (t0.y + t1.y) * dbeta;
        if (!(next.a > 0.0 && next.b > 0.0)) break;
        q = project(next);
        out.push_back(q);
        if (betas) betas->push_back(dir * static_cast<double>(i) * dbeta);
    }
    return out;
}

inline std::vector<Vec2> sample_points(const std::vector<CurveSample>& samples) {
    std::vector<Vec2> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) pts.push_back(s.point);
    return pts;
}

}  // namespace stencilfit
