#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "stencilfit/geometry.hpp"

namespace stencilfit {

// Primary parameters (a, b) in cm. One-parameter families store the single
// parameter in `a` (spiral pitch k or involute radius) and have dim == 1.
struct PrimaryParams {
    double a = 1.0;
    double b = 1.0;
    int dim = 2;

    static PrimaryParams single(double k) { return {k, 0.0, 1}; }
    static PrimaryParams pair(double a, double b) { return {a, b, 2}; }

    bool valid() const {
        if (!(std::isfinite(a) && a > 0.0)) return false;
        if (dim == 2 && !(std::isfinite(b) && b > 0.0)) return false;
        return true;
    }
    double distance(const PrimaryParams& o) const {
        if (dim == 1) return std::abs(a - o.a);
        return std::hypot(a - o.a, b - o.b);
    }
};

// Branch context for spiral families: carries the unwrapped polar angle of
// the previous point so multi-turn traces evaluate f on a continuous branch.
// Without a context the principal branch theta in (-pi/2, 3*pi/2] is used.
struct EvalCtx {
    bool active = false;
    double prev_theta = 0.0;

    static EvalCtx at_theta(double theta) { return {true, theta}; }
};

// Symmetric 4x4 Hessian of f over r = (x, y, a, b), packed row-major upper.
struct Hessian4 {
    // order: xx, xy, xa, xb, yy, ya, yb, aa, ab, bb
    std::array<double, 10> v{};
    double xx() const { return v[0]; }
    double xy() const { return v[1]; }
    double xa() const { return v[2]; }
    double xb() const { return v[3]; }
    double yy() const { return v[4]; }
    double ya() const { return v[5]; }
    double yb() const { return v[6]; }
    double aa() const { return v[7]; }
    double ab() const { return v[8]; }
    double bb() const { return v[9]; }

    double at(int i, int j) const {
        static constexpr int idx[4][4] = {
            {0, 1, 2, 3}, {1, 4, 5, 6}, {2, 5, 7, 8}, {3, 6, 8, 9}};
        return v[idx[i][j]];
    }
};

struct Grad4 {
    Vec2 chi;    // (f_x, f_y)
    Vec2 alpha;  // (f_a, f_b); one-parameter families put f_k in .x, 0 in .y
};

namespace detail {

inline constexpr double kPi = std::numbers::pi;

// theta(x, y) = arctan(y/x) + (1 - sgn(x)) * pi / 2, i.e. atan2 shifted to
// the principal branch (-pi/2, 3*pi/2] with the cut on the negative y-axis.
inline double theta_principal(const Vec2& p) {
    double t = std::atan2(p.y, p.x);
    if (t <= -kPi / 2.0) t += 2.0 * kPi;
    return t;
}

inline double unwrap_theta(const Vec2& p, const EvalCtx* ctx) {
    double t = theta_principal(p);
    if (ctx && ctx->active) {
        const double k = std::round((ctx->prev_theta - t) / (2.0 * kPi));
        t += 2.0 * kPi * k;
    }
    return t;
}

// Solves u + arctan(u) = t; the left side is strictly increasing.
inline double involute_parameter(double t) {
    if (t <= 0.0) throw numeric_error("point outside family domain");
    double u = std::max(0.5 * t, t - kPi / 2.0);
    for (int it = 0; it < 60; ++it) {
        const double g = u + std::atan(u) - t;
        const double dg = 1.0 + 1.0 / (1.0 + u * u);
        const double step = g / dg;
        u -= step;
        if (u < 0.0) u = 0.5 * (u + step);  // stay in [0, inf)
        if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(u))) break;
    }
    return u;
}

}  // namespace detail

// One member of the prototype curve catalog: the implicit form f(chi, alpha),
// its first derivatives in chi and alpha, a 4x4 Hessian over (x, y, a, b)
// (analytic for the conic-type families, central differences on the analytic
// gradient for the spiral ones), and a domain guard.
class CurveFamily {
  public:
    virtual ~CurveFamily() = default;

    virtual std::string_view id() const = 0;
    virtual int param_dim() const = 0;

    virtual bool in_domain(const Vec2& chi, const PrimaryParams& p,
                           const EvalCtx* ctx = nullptr) const = 0;
    virtual double eval(const Vec2& chi, const PrimaryParams& p,
                        const EvalCtx* ctx = nullptr) const = 0;
    virtual Grad4 grad(const Vec2& chi, const PrimaryParams& p,
                       const EvalCtx* ctx = nullptr) const = 0;

    virtual Hessian4 hessian(const Vec2& chi, const PrimaryParams& p,
                             const EvalCtx* ctx = nullptr) const {
        return fd_hessian(chi, p, ctx);
    }

    // Unwrapped polar angle for spiral families, 0 elsewhere. Traces use it
    // to advance their branch context.
    virtual double theta(const Vec2& chi, const EvalCtx* ctx = nullptr) const {
        (void)chi;
        (void)ctx;
        return 0.0;
    }

    // A canonical on-curve point that anchors arc length 0 for traces and
    // grids, plus a branch context seeded there.
    virtual Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const = 0;

    // Arc-length guards for tracing away from singular regions (spiral
    // centers, involute cusp). Default: unrestricted.
    virtual bool trace_ok(const Vec2& chi, const PrimaryParams& p,
                          const EvalCtx* ctx = nullptr) const {
        return in_domain(chi, p, ctx);
    }

  protected:
    Hessian4 fd_hessian(const Vec2& chi, const PrimaryParams& p,
                        const EvalCtx* ctx) const {
        auto grad_at = [&](int dir, double h) {
            Vec2 c = chi;
            PrimaryParams q = p;
            switch (dir) {
                case 0: c.x += h; break;
                case 1: c.y += h; break;
                case 2: q.a += h; break;
                default: q.b += h; break;
            }
            return grad(c, q, ctx);
        };
        const double base[4] = {chi.x, chi.y, p.a, p.b};
        Hessian4 H;
        double g[4][4];
        for (int i = 0; i < 4; ++i) {
            if (param_dim() == 1 && i == 3) {
                g[i][0] = g[i][1] = g[i][2] = g[i][3] = 0.0;
                continue;
            }
            const double h = 1e-5 * std::max(1.0, std::abs(base[i]));
            const Grad4 gp = grad_at(i, h), gm = grad_at(i, -h);
            g[i][0] = (gp.chi.x - gm.chi.x) / (2.0 * h);
            g[i][1] = (gp.chi.y - gm.chi.y) / (2.0 * h);
            g[i][2] = (gp.alpha.x - gm.alpha.x) / (2.0 * h);
            g[i][3] = (gp.alpha.y - gm.alpha.y) / (2.0 * h);
        }
        // symmetrize
        H.v = {g[0][0],
               0.5 * (g[0][1] + g[1][0]),
               0.5 * (g[0][2] + g[2][0]),
               0.5 * (g[0][3] + g[3][0]),
               g[1][1],
               0.5 * (g[1][2] + g[2][1]),
               0.5 * (g[1][3] + g[3][1]),
               g[2][2],
               0.5 * (g[2][3] + g[3][2]),
               g[3][3]};
        return H;
    }
};

// Divergence of the normalized chi-gradient. On the zero level set this is
// the curve's signed curvature for the (f_y, -f_x) traversal direction.
inline double flat_curvature(const CurveFamily& fam, const Vec2& chi,
                             const PrimaryParams& p, const EvalCtx* ctx = nullptr) {
    if (!fam.in_domain(chi, p, ctx)) throw numeric_error("point outside family domain");
    const Grad4 g = fam.grad(chi, p, ctx);
    const double fx = g.chi.x, fy = g.chi.y;
    const double T2 = fx * fx + fy * fy;
    if (T2 < 1e-24) throw numeric_error("curvature singularity");
    const Hessian4 H = fam.hessian(chi, p, ctx);
    return (H.xx() * fy * fy - 2.0 * H.xy() * fx * fy + H.yy() * fx * fx) /
           (T2 * std::sqrt(T2));
}

inline double eval_f(const CurveFamily& fam, const Vec2& chi, const PrimaryParams& p,
                     const EvalCtx* ctx = nullptr) {
    if (!fam.in_domain(chi, p, ctx)) throw numeric_error("point outside family domain");
    return fam.eval(chi, p, ctx);
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

class Ellipse final : public CurveFamily {
  public:
    std::string_view id() const override { return "ellipse"; }
    int param_dim() const override { return 2; }

    bool in_domain(const Vec2& chi, const PrimaryParams& p,
                   const EvalCtx*) const override {
        if (!p.valid()) return false;
        return chi.squared_norm() > 1e-18;  // gradient vanishes at the origin
    }
    double eval(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double u = c.x / p.a, v = c.y / p.b;
        return u * u + v * v - 1.0;
    }
    Grad4 grad(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double a2 = p.a * p.a, b2 = p.b * p.b;
        return {{2.0 * c.x / a2, 2.0 * c.y / b2},
                {-2.0 * c.x * c.x / (a2 * p.a), -2.0 * c.y * c.y / (b2 * p.b)}};
    }
    Hessian4 hessian(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double a2 = p.a * p.a, b2 = p.b * p.b;
        Hessian4 H;
        H.v = {2.0 / a2,
               0.0,
               -4.0 * c.x / (a2 * p.a),
               0.0,
               2.0 / b2,
               0.0,
               -4.0 * c.y / (b2 * p.b),
               6.0 * c.x * c.x / (a2 * a2),
               0.0,
               6.0 * c.y * c.y / (b2 * b2)};
        return H;
    }
    Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const override {
        ctx = EvalCtx{};
        return {p.a, 0.0};
    }
};

class Hyperbola final : public CurveFamily {
  public:
    std::string_view id() const override { return "hyperbola"; }
    int param_dim() const override { return 2; }

    bool in_domain(const Vec2& chi, const PrimaryParams& p,
                   const EvalCtx*) const override {
        if (!p.valid()) return false;
        return chi.squared_norm() > 1e-18;
    }
    double eval(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double u = c.x / p.a, v = c.y / p.b;
        return u * u - v * v - 1.0;
    }
    Grad4 grad(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double a2 = p.a * p.a, b2 = p.b * p.b;
        return {{2.0 * c.x / a2, -2.0 * c.y / b2},
                {-2.0 * c.x * c.x / (a2 * p.a), 2.0 * c.y * c.y / (b2 * p.b)}};
    }
    Hessian4 hessian(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double a2 = p.a * p.a, b2 = p.b * p.b;
        Hessian4 H;
        H.v = {2.0 / a2,
               0.0,
               -4.0 * c.x / (a2 * p.a),
               0.0,
               -2.0 / b2,
               0.0,
               4.0 * c.y / (b2 * p.b),
               6.0 * c.x * c.x / (a2 * a2),
               0.0,
               -6.0 * c.y * c.y / (b2 * b2)};
        return H;
    }
    Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const override {
        ctx = EvalCtx{};
        return {p.a, 0.0};  // right-branch vertex
    }
};

class Parabola final : public CurveFamily {
  public:
    std::string_view id() const override { return "parabola"; }
    int param_dim() const override { return 2; }

    bool in_domain(const Vec2&, const PrimaryParams& p, const EvalCtx*) const override {
        return p.valid();  // gradient never vanishes (f_y = -1)
    }
    double eval(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double u = p.a * c.x + p.b;
        return u * u - c.y;
    }
    Grad4 grad(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double u = p.a * c.x + p.b;
        return {{2.0 * p.a * u, -1.0}, {2.0 * c.x * u, 2.0 * u}};
    }
    Hessian4 hessian(const Vec2& c, const PrimaryParams& p, const EvalCtx*) const override {
        const double u = p.a * c.x + p.b;
        Hessian4 H;
        H.v = {2.0 * p.a * p.a,
               0.0,
               2.0 * (u + p.a * c.x),
               2.0 * p.a,
               0.0,
               0.0,
               0.0,
               2.0 * c.x * c.x,
               2.0 * c.x,
               2.0};
        return H;
    }
    Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const override {
        ctx = EvalCtx{};
        return {-p.b / p.a, 0.0};  // vertex
    }
};

class ExponentialSpiral final : public CurveFamily {
  public:
    std::string_view id() const override { return "exp-spiral"; }
    int param_dim() const override { return 2; }

    bool in_domain(const Vec2& chi, const PrimaryParams& p,
                   const EvalCtx* ctx) const override {
        if (!p.valid()) return false;
        if (std::abs(chi.x) < 1e-9 && std::abs(chi.y) < 1e-9) return false;
        const double t = detail::unwrap_theta(chi, ctx);
        return std::abs(2.0 * p.b * t) < 60.0;  // exp overflow guard
    }
    double eval(const Vec2& c, const PrimaryParams& p, const EvalCtx* ctx) const override {
        const double t = detail::unwrap_theta(c, ctx);
        return c.squared_norm() - p.a * p.a * std::exp(2.0 * p.b * t);
    }
    Grad4 grad(const Vec2& c, const PrimaryParams& p, const EvalCtx* ctx) const override {
        const double t = detail::unwrap_theta(c, ctx);
        const double E = p.a * p.a * std::exp(2.0 * p.b * t);
        const double r2 = c.squared_norm();
        // grad theta = (-y, x) / r^2
        return {{2.0 * c.x + 2.0 * p.b * E * c.y / r2,
                 2.0 * c.y - 2.0 * p.b * E * c.x / r2},
                {-2.0 * E / p.a, -2.0 * t * E}};
    }
    double theta(const Vec2& chi, const EvalCtx* ctx) const override {
        return detail::unwrap_theta(chi, ctx);
    }
    Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const override {
        ctx = EvalCtx::at_theta(0.0);
        return {p.a, 0.0};
    }
    bool trace_ok(const Vec2& chi, const PrimaryParams& p,
                  const EvalCtx* ctx) const override {
        return in_domain(chi, p, ctx) && chi.norm() > 0.02;
    }
};

class LinearSpiral final : public CurveFamily {
  public:
    std::string_view id() const override { return "linear-spiral"; }
    int param_dim() const override { return 1; }

    bool in_domain(const Vec2& chi, const PrimaryParams& p,
                   const EvalCtx* ctx) const override {
        if (!(std::isfinite(p.a) && p.a > 0.0)) return false;
        if (std::abs(chi.x) < 1e-9 && std::abs(chi.y) < 1e-9) return false;
        return detail::unwrap_theta(chi, ctx) > 1e-6;
    }
    double eval(const Vec2& c, const PrimaryParams& p, const EvalCtx* ctx) const override {
        const double t = detail::unwrap_theta(c, ctx);
        return c.squared_norm() - p.a * p.a * t * t;
    }
    Grad4 grad(const Vec2& c, const PrimaryParams& p, const EvalCtx* ctx) const override {
        const double t = detail::unwrap_theta(c, ctx);
        const double r2 = c.squared_norm();
        const double k2t = p.a * p.a * t;
        return {{2.0 * c.x + 2.0 * k2t * c.y / r2, 2.0 * c.y - 2.0 * k2t * c.x / r2},
                {-2.0 * p.a * t * t, 0.0}};
    }
    double theta(const Vec2& chi, const EvalCtx* ctx) const override {
        return detail::unwrap_theta(chi, ctx);
    }
    Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const override {
        const double t0 = 2.0 * detail::kPi;
        ctx = EvalCtx::at_theta(t0);
        return {p.a * t0, 0.0};
    }
    bool trace_ok(const Vec2& chi, const PrimaryParams& p,
                  const EvalCtx* ctx) const override {
        if (!in_domain(chi, p, ctx)) return false;
        return detail::unwrap_theta(chi, ctx) > 0.35;  // keep off the center
    }
};

class Involute final : public CurveFamily {
  public:
    std::string_view id() const override { return "involute"; }
    int param_dim() const override { return 1; }

    bool in_domain(const Vec2& chi, const PrimaryParams& p,
                   const EvalCtx* ctx) const override {
        if (!(std::isfinite(p.a) && p.a > 0.0)) return false;
        if (std::abs(chi.x) < 1e-9 && std::abs(chi.y) < 1e-9) return false;
        return detail::unwrap_theta(chi, ctx) > 1e-6;
    }
    double eval(const Vec2& c, const PrimaryParams& p, const EvalCtx* ctx) const override {
        const double t = detail::unwrap_theta(c, ctx);
        const double u = detail::involute_parameter(t);
        return c.squared_norm() - p.a * p.a * (1.0 + u * u);
    }
    Grad4 grad(const Vec2& c, const PrimaryParams& p, const EvalCtx* ctx) const override {
        const double t = detail::unwrap_theta(c, ctx);
        const double u = detail::involute_parameter(t);
        const double du = (1.0 + u * u) / (2.0 + u * u);  // du/dtheta
        const double w = p.a * p.a * 2.0 * u * du;        // -df/dtheta
        const double r2 = c.squared_norm();
        return {{2.0 * c.x + w * c.y / r2, 2.0 * c.y - w * c.x / r2},
                {-2.0 * p.a * (1.0 + u * u), 0.0}};
    }
    double theta(const Vec2& chi, const EvalCtx* ctx) const override {
        return detail::unwrap_theta(chi, ctx);
    }
    Vec2 anchor(const PrimaryParams& p, EvalCtx& ctx) const override {
        const double u0 = 2.0;
        const double t0 = u0 + std::atan(u0);
        ctx = EvalCtx::at_theta(t0);
        const double r = p.a * std::sqrt(1.0 + u0 * u0);
        return {r * std::cos(t0), r * std::sin(t0)};
    }
    bool trace_ok(const Vec2& chi, const PrimaryParams& p,
                  const EvalCtx* ctx) const override {
        if (!in_domain(chi, p, ctx)) return false;
        // curvature ~ 1/(a u); keep away from the cusp at u = 0
        const double t = detail::unwrap_theta(chi, ctx);
        return t > 0.55;  // u + atan(u) at u ~ 0.3
    }
};

inline const CurveFamily& family_by_id(std::string_view id) {
    static const Ellipse ellipse;
    static const Hyperbola hyperbola;
    static const Parabola parabola;
    static const ExponentialSpiral exp_spiral;
    static const LinearSpiral linear_spiral;
    static const Involute involute;
    if (id == "ellipse") return ellipse;
    if (id == "hyperbola") return hyperbola;
    if (id == "parabola") return parabola;
    if (id == "exp-spiral") return exp_spiral;
    if (id == "linear-spiral") return linear_spiral;
    if (id == "involute") return involute;
    throw input_error("unknown curve family: " + std::string(id));
}

inline const std::vector<std::string>& all_family_ids() {
    static const std::vector<std::string> ids = {
        "exp-spiral", "involute", "linear-spiral", "ellipse", "parabola", "hyperbola"};
    return ids;
}

// ---------------------------------------------------------------------------
// Primary-parameter analysis
// ---------------------------------------------------------------------------

struct AnisotropicScaling {
    double inv_a = 1.0;  // (x, y) -> (x / a, y / b)
    double inv_b = 1.0;
    Vec2 apply(const Vec2& p) const { return {p.x * inv_a, p.y * inv_b}; }
};

struct PullbackResult {
    AnisotropicScaling map;
    double curvature_ratio = 1.0;  // c(scaled) / c(original)
};

// The affine action of the primary parameters on the flat curvature:
// c(chi_T) = (a b)^2 c(chi) |grad f|^3 / |diag(a, b) grad f|^3.
inline PullbackResult primary_param_pullback(const CurveFamily& fam, const Vec2& chi,
                                             const PrimaryParams& p,
                                             const EvalCtx* ctx = nullptr) {
    if (!fam.in_domain(chi, p, ctx)) throw numeric_error("point outside family domain");
    const double a = p.a;
    const double b = p.dim == 2 ? p.b : p.a;
    const Grad4 g = fam.grad(chi, p, ctx);
    const double T = g.chi.norm();
    if (T < 1e-15) throw numeric_error("curvature singularity");
    const Vec2 scaled{a * g.chi.x, b * g.chi.y};
    PullbackResult r;
    r.map = {1.0 / a, 1.0 / b};
    r.curvature_ratio = (a * b) * (a * b) * std::pow(T, 3) / std::pow(scaled.norm(), 3);
    return r;
}

// Implicit family with an arbitrary number of parameters, for the rank
// analysis: supplies grad_chi of each partial derivative d f / d a_n.
struct ExtendedImplicitFamily {
    int n_params = 0;
    // grad_chi of d f / d a_n at (chi, A)
    std::function<Vec2(const Vec2&, const std::vector<double>&, int)> grad_chi_dparam;
    std::function<bool(const Vec2&, const std::vector<double>&)> in_domain;
};

// Maximum numerical rank over sample points of the 2 x N matrix whose
// columns are grad_chi(d f / d a_n). Always <= 2: two parameters suffice to
// span all curvature deformations of a planar implicit family.
inline int curvature_param_rank(const ExtendedImplicitFamily& fam,
                                const std::vector<Vec2>& sample_points,
                                const std::vector<double>& params) {
    if (fam.n_params < 1 || !fam.grad_chi_dparam)
        throw input_error("extended family supplies no parameter gradients");
    int best = 0;
    int used = 0;
    for (const auto& chi : sample_points) {
        if (fam.in_domain && !fam.in_domain(chi, params)) continue;
        ++used;
        // Gram matrix of the 2 x N column set; singular values from its
        // closed-form eigenvalues.
        double gxx = 0, gxy = 0, gyy = 0;
        for (int n = 0; n < fam.n_params; ++n) {
            const Vec2 v = fam.grad_chi_dparam(chi, params, n);
            gxx += v.x * v.x;
            gxy += v.x * v.y;
            gyy += v.y * v.y;
        }
        const double tr = gxx + gyy;
        const double det = gxx * gyy - gxy * gxy;
        const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
        const double l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
        const double smax = std::sqrt(std::max(l1, 0.0));
        if (smax <= 0.0) continue;
        const double cutoff = 1e-8 * smax;
        int rank = 0;
        if (std::sqrt(std::max(l1, 0.0)) > cutoff) ++rank;
        if (std::sqrt(std::max(l2, 0.0)) > cutoff) ++rank;
        best = std::max(best, rank);
    }
    if (used == 0) throw numeric_error("all rank samples outside family domain");
    return best;
}

}  // namespace stencilfit
