#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "stencilfit/families.hpp"
#include "stencilfit/geometry.hpp"

namespace stencilfit {

// Frame of the level-set manifold of f over r = (x, y, a, b): the unit
// normal, the gradient norms of the two sub-planes, their pairing, and the
// three tangent-space curvature forms whose Euclidean norm is K_S.
struct FrameQuantities {
    Vec2 n_chi;
    Vec2 n_alpha;        // unit sign in .x for one-parameter families
    double T_chi = 0.0;  // |grad_chi f|
    double T_alpha = 0.0;
    double c_chi_alpha = 0.0;  // n_chi . n_alpha under the (x,a),(y,b) pairing
    double kappa_gamma = 0.0;
    double kappa_r = 0.0;   // kappa_{r_chi^alpha}
    double kappa_gb = 0.0;  // kappa_{gamma_xi^beta}; zero for 1-parameter
    double K_S = 0.0;
};

namespace detail {

using Vec4 = std::array<double, 4>;

inline double dot4(const Vec4& a, const Vec4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline Vec4 hess_apply(const Hessian4& H, const Vec4& v) {
    Vec4 r{};
    for (int i = 0; i < 4; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += H.at(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

}  // namespace detail

// d n_S / d r applied to a vector: (I - n n^T) H v / |grad_r f|.
inline detail::Vec4 normal_jacobian_apply(const CurveFamily& fam, const Vec2& chi,
                                          const PrimaryParams& p, const detail::Vec4& v,
                                          const EvalCtx* ctx = nullptr) {
    const Grad4 g = fam.grad(chi, p, ctx);
    detail::Vec4 g4{g.chi.x, g.chi.y, g.alpha.x, fam.param_dim() == 2 ? g.alpha.y : 0.0};
    const double gn = std::sqrt(detail::dot4(g4, g4));
    if (gn < 1e-15) throw numeric_error("curvature singularity");
    const detail::Vec4 n{g4[0] / gn, g4[1] / gn, g4[2] / gn, g4[3] / gn};
    const Hessian4 H = fam.hessian(chi, p, ctx);
    detail::Vec4 Hv = detail::hess_apply(H, v);
    const double nHv = detail::dot4(n, Hv);
    detail::Vec4 out{};
    for (int i = 0; i < 4; ++i) out[i] = (Hv[i] - n[i] * nHv) / gn;
    return out;
}

inline FrameQuantities frame_quantities(const CurveFamily& fam, const Vec2& chi,
                                        const PrimaryParams& p,
                                        const EvalCtx* ctx = nullptr) {
    if (!fam.in_domain(chi, p, ctx)) throw numeric_error("point outside family domain");
    const Grad4 g = fam.grad(chi, p, ctx);
    const bool one_param = fam.param_dim() == 1;
    const double fx = g.chi.x, fy = g.chi.y;
    const double fa = g.alpha.x, fb = one_param ? 0.0 : g.alpha.y;

    FrameQuantities fr;
    fr.T_chi = std::hypot(fx, fy);
    fr.T_alpha = one_param ? std::abs(fa) : std::hypot(fa, fb);
    if (fr.T_chi < 1e-12) throw numeric_error("singular gradient");
    if (fr.T_alpha < 1e-15) throw numeric_error("singular gradient");
    fr.n_chi = {fx / fr.T_chi, fy / fr.T_chi};
    fr.n_alpha = one_param ? Vec2{fa >= 0.0 ? 1.0 : -1.0, 0.0}
                           : Vec2{fa / fr.T_alpha, fb / fr.T_alpha};
    fr.c_chi_alpha = (fx * fa + fy * fb) / (fr.T_chi * fr.T_alpha);

    detail::Vec4 g4{fx, fy, fa, fb};
    const double gn = std::sqrt(detail::dot4(g4, g4));
    const detail::Vec4 n{fx / gn, fy / gn, fa / gn, fb / gn};
    const Hessian4 H = fam.hessian(chi, p, ctx);

    // tangent basis from the component pattern of the paper's frame; each
    // has norm |grad_r f| before normalization
    const detail::Vec4 l1{-fy / gn, fx / gn, -fb / gn, fa / gn};
    const detail::Vec4 l2{-fa / gn, -fb / gn, fx / gn, fy / gn};
    const detail::Vec4 l3{-fb / gn, fa / gn, -fy / gn, fx / gn};

    auto kappa = [&](const detail::Vec4& l) {
        const detail::Vec4 Hl = detail::hess_apply(H, l);
        const double nHl = detail::dot4(n, Hl);
        return (detail::dot4(l, Hl) - detail::dot4(l, n) * nHl) / gn;
    };
    fr.kappa_gamma = kappa(l1);
    fr.kappa_r = kappa(l2);
    fr.kappa_gb = one_param ? 0.0 : kappa(l3);
    fr.K_S = std::sqrt(fr.kappa_gamma * fr.kappa_gamma + fr.kappa_r * fr.kappa_r +
                       fr.kappa_gb * fr.kappa_gb);
    return fr;
}

// The bracket of the epsilon_chi density: K_S (c_chi^alpha)^2 (1 + T_a^2/T_x^2).
inline double epsilon_chi_term(const CurveFamily& fam, const Vec2& chi,
                               const PrimaryParams& p, const EvalCtx* ctx = nullptr) {
    const FrameQuantities fr = frame_quantities(fam, chi, p, ctx);
    const double ratio = fr.T_alpha / fr.T_chi;
    return fr.K_S * fr.c_chi_alpha * fr.c_chi_alpha * (1.0 + ratio * ratio);
}

// The bracket of the epsilon_alpha density: K_S (c_chi^alpha)^2 (1 + T_x^2/T_a^2).
inline double epsilon_alpha_term(const CurveFamily& fam, const Vec2& chi,
                                 const PrimaryParams& p, const EvalCtx* ctx = nullptr) {
    const FrameQuantities fr = frame_quantities(fam, chi, p, ctx);
    const double ratio = fr.T_chi / fr.T_alpha;
    return fr.K_S * fr.c_chi_alpha * fr.c_chi_alpha * (1.0 + ratio * ratio);
}

// epsilon_chi between the data-point boundary r^+ and the prototype boundary
// r^-: the bracket difference evaluated at the two points for the same alpha.
inline double epsilon_chi(const CurveFamily& fam, const Vec2& part_point,
                          const Vec2& proto_point, const PrimaryParams& p,
                          const EvalCtx* ctx = nullptr) {
    return epsilon_chi_term(fam, part_point, p, ctx) -
           epsilon_chi_term(fam, proto_point, p, ctx);
}

// epsilon_alpha between the alpha-strip boundaries at a fixed planar point.
inline double epsilon_alpha(const CurveFamily& fam, const Vec2& chi,
                            const PrimaryParams& alpha_hi, const PrimaryParams& alpha_lo,
                            const EvalCtx* ctx = nullptr) {
    return epsilon_alpha_term(fam, chi, alpha_hi, ctx) -
           epsilon_alpha_term(fam, chi, alpha_lo, ctx);
}

// ---------------------------------------------------------------------------
// Curvature-matched image of a data point on the manifold
// ---------------------------------------------------------------------------
//
// A drawn point is represented on the f_S level-set foliation by the point on
// the prototype's normal line whose flat curvature equals the drawn
// curvature. The representation depends only on rigid-motion invariants of
// the data, which is what makes the whole fitting error pose-free.

struct CurvatureImage {
    double eta = 0.0;  // signed offset along the unit normal
    Vec2 point;
    bool clamped = false;  // target unreachable within the cap
};

inline CurvatureImage curvature_image(const CurveFamily& fam, const Vec2& base,
                                      const PrimaryParams& p, double c_target,
                                      double eta_cap, const EvalCtx* ctx = nullptr) {
    const Grad4 g = fam.grad(base, p, ctx);
    const double T = g.chi.norm();
    if (T < 1e-15) throw numeric_error("singular gradient");
    const Vec2 nhat = g.chi / T;

    auto c_at = [&](double eta) -> double {
        const Vec2 q = base + nhat * eta;
        return flat_curvature(fam, q, p, ctx);
    };

    double c0;
    try {
        c0 = c_at(0.0);
    } catch (const numeric_error&) {
        throw;
    }
    CurvatureImage img;
    if (std::abs(c0 - c_target) < 1e-14) {
        img.point = base;
        return img;
    }

    // grow a bracket outward from 0 in the direction that reduces the gap
    auto safe_c = [&](double eta, bool& ok) -> double {
        try {
            const double c = c_at(eta);
            ok = true;
            return c;
        } catch (const numeric_error&) {
            ok = false;
            return 0.0;
        }
    };

    double lo = 0.0, hi = 0.0;
    double g_lo = c0 - c_target, g_hi = g_lo;
    bool bracketed = false;
    const int kProbes = 24;
    double best_eta = 0.0, best_gap = std::abs(g_lo);
    for (int sgn = -1; sgn <= 1 && !bracketed; sgn += 2) {
        double prev_eta = 0.0, prev_g = c0 - c_target;
        for (int i = 1; i <= kProbes; ++i) {
            const double eta = sgn * eta_cap * static_cast<double>(i) / kProbes;
            bool ok;
            const double c = safe_c(eta, ok);
            if (!ok) break;
            const double gg = c - c_target;
            if (std::abs(gg) < best_gap) {
                best_gap = std::abs(gg);
                best_eta = eta;
            }
            if (gg == 0.0 || gg * prev_g < 0.0) {
                lo = prev_eta;
                hi = eta;
                g_lo = prev_g;
                g_hi = gg;
                bracketed = true;
                break;
            }
            prev_eta = eta;
            prev_g = gg;
        }
    }

    if (!bracketed) {
        img.eta = best_eta;
        img.point = base + nhat * best_eta;
        img.clamped = true;
        return img;
    }

    // bisection with a secant accelerant
    for (int it = 0; it < 80; ++it) {
        double mid = (std::abs(g_hi - g_lo) > 1e-300)
                         ? (lo - g_lo * (hi - lo) / (g_hi - g_lo))
                         : 0.5 * (lo + hi);
        if (!(mid > std::min(lo, hi) && mid < std::max(lo, hi)))
            mid = 0.5 * (lo + hi);
        bool ok;
        const double gm = safe_c(mid, ok) - c_target;
        if (!ok) break;
        if (std::abs(gm) < 1e-12 * std::max(1.0, std::abs(c_target)) ||
            std::abs(hi - lo) < 1e-14) {
            lo = hi = mid;
            break;
        }
        if (gm * g_lo < 0.0) {
            hi = mid;
            g_hi = gm;
        } else {
            lo = mid;
            g_lo = gm;
        }
    }
    img.eta = 0.5 * (lo + hi);
    img.point = base + nhat * img.eta;
    return img;
}

// Exact epsilon_chi for a data point known only through its curvature: the
// bracket difference between its curvature-matched image and the prototype
// point itself.
inline double epsilon_chi_at_curvature(const CurveFamily& fam, const Vec2& proto_point,
                                       const PrimaryParams& p, double c_part,
                                       double eta_cap, const EvalCtx* ctx = nullptr) {
    const CurvatureImage img = curvature_image(fam, proto_point, p, c_part, eta_cap, ctx);
    return epsilon_chi(fam, img.point, proto_point, p, ctx);
}

// ---------------------------------------------------------------------------
// Quadratic response model per trace sample
// ---------------------------------------------------------------------------
//
// The grid search evaluates epsilon_chi for every (window, part sample,
// pencil member) combination; root-finding each image is far too slow there.
// c(eta) and W(eta) along the normal are modelled by quadratics probed once
// per trace sample, and the model is anchored at the trace's own discrete
// signature curvature so the estimator bias common to both curves cancels.

struct EpsilonSampleModel {
    double c_sig = 0.0;  // discrete signature curvature at the sample
    double c1 = 0.0, c2 = 0.0;  // d c/d eta and quadratic term
    double W0 = 0.0, W1 = 0.0, W2 = 0.0;
    double eta_cap = 0.0;
    double j_weight = 0.0;  // c_chi_alpha T_chi / T_alpha at the sample
    double response = 0.0;  // |epsilon| produced by a reference curvature gap
    bool valid = false;

    // signed offset eta reproducing the curvature gap dc, clamped to the cap
    double eta_for_gap(double dc) const {
        double eta;
        if (std::abs(c2) < 1e-12 * std::max(1.0, std::abs(c1))) {
            eta = std::abs(c1) > 1e-14 ? dc / c1 : (dc > 0 ? eta_cap : -eta_cap);
        } else {
            const double disc = c1 * c1 + 4.0 * c2 * dc;
            if (disc >= 0.0) {
                const double root = std::sqrt(disc);
                const double e1 = (-c1 + root) / (2.0 * c2);
                const double e2 = (-c1 - root) / (2.0 * c2);
                eta = std::abs(e1) < std::abs(e2) ? e1 : e2;
            } else {
                // no real solution: fall back to the vertex of the parabola
                eta = -c1 / (2.0 * c2);
            }
        }
        return std::clamp(eta, -eta_cap, eta_cap);
    }

    double epsilon(double c_part) const {
        const double eta = eta_for_gap(c_part - c_sig);
        return W1 * eta + W2 * eta * eta;
    }
};

inline EpsilonSampleModel build_epsilon_model(const CurveFamily& fam, const Vec2& base,
                                              const PrimaryParams& p, double c_signature,
                                              const EvalCtx* ctx = nullptr) {
    EpsilonSampleModel m;
    m.c_sig = c_signature;
    try {
        const FrameQuantities fr = frame_quantities(fam, base, p, ctx);
        m.j_weight = fr.c_chi_alpha * fr.T_chi / fr.T_alpha;
        const double c0 = flat_curvature(fam, base, p, ctx);
        m.eta_cap = std::min(0.6 / std::max(std::abs(c0), 0.05), 4.0);
        const Grad4 g = fam.grad(base, p, ctx);
        const Vec2 nhat = g.chi / fr.T_chi;
        // probe close to the curve: the quadratic must be locally exact,
        // far-field fidelity only matters for ranking
        const double h = std::min(0.08, 0.2 * m.eta_cap);
        const Vec2 qp = base + nhat * h, qm = base - nhat * h;
        const double cp = flat_curvature(fam, qp, p, ctx);
        const double cm = flat_curvature(fam, qm, p, ctx);
        const double Wp = epsilon_chi_term(fam, qp, p, ctx);
        const double Wm = epsilon_chi_term(fam, qm, p, ctx);
        const double W0 = epsilon_chi_term(fam, base, p, ctx);
        m.c1 = (cp - cm) / (2.0 * h);
        m.c2 = (cp - 2.0 * c0 + cm) / (2.0 * h * h);
        m.W0 = W0;
        m.W1 = (Wp - Wm) / (2.0 * h);
        m.W2 = (Wp - 2.0 * W0 + Wm) / (2.0 * h * h);
        m.valid = true;
        const double dc_ref = 0.01;
        m.response = 0.5 *
                     (std::abs(m.epsilon(c_signature + dc_ref)) +
                      std::abs(m.epsilon(c_signature - dc_ref))) /
                     dc_ref;
    } catch (const numeric_error&) {
        m.valid = false;
    }
    return m;
}

}  // namespace stencilfit
