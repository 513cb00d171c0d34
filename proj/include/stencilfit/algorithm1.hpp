#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stencilfit/manifold.hpp"
#include "stencilfit/segmentation.hpp"
#include "stencilfit/signature.hpp"
#include "stencilfit/trace.hpp"

namespace stencilfit {

// Search configuration for the object-part fitting grid. The lattice is
// log-uniform in the primary parameters; after the first pass the range is
// re-centered on the winner and shrunk for each refinement round, keeping the
// scan itself exhaustive at every scale.
struct FitGrid {
    double alpha_min = 0.5;   // cm
    double alpha_max = 30.0;  // cm
    int lattice2 = 24;        // per-axis count, 2-parameter families
    int lattice1 = 48;        // count, 1-parameter families
    int refine_rounds = 2;    // extra zoomed rounds after the first
    double dxi = 0.1;         // trace step and window stride (cm)
    int beta_nodes = 2;       // pencil members per side of alpha0
    double l_alpha_rel = 0.4; // pencil arc length relative to |alpha0|
    double xi_margin = 2.0;   // xi0 span each side of the anchor, in L_p units
    int signature_halfwidth = 9;
    double min_part_length = 1.0;
    bool collect_grid = false;  // record per-candidate E2 of the first round
};

struct PlacementResult {
    std::string family_id;
    PrimaryParams alpha;   // alpha_c*
    double xi0 = 0.0;      // optimal window start on the final trace
    double xi_c = 0.0;     // intersection arc length
    Vec2 chi0;             // r_S(xi0*, alpha_c*)
    double E2 = std::numeric_limits<double>::infinity();
    double err = std::numeric_limits<double>::infinity();  // (1/L_p) sqrt(I2)
    bool reversed = false;
    bool no_crossing = false;
};

struct GridCell {
    PrimaryParams alpha;
    double xi0 = 0.0;
    bool reversed = false;
    double E2 = std::numeric_limits<double>::infinity();
};

namespace alg1 {

struct MemberGrid {
    PrimaryParams alpha;
    double beta_weight = 1.0;  // trapezoid weight x d beta
    std::vector<EpsilonSampleModel> models;  // indexed on the global xi grid
    std::vector<char> valid;
};

// Center-curve data of one lattice candidate, aligned on the global xi grid.
struct CenterData {
    PrimaryParams alpha0;
    std::vector<Vec2> points;
    std::vector<double> theta;
    std::vector<double> sig;
    std::vector<char> valid;
    double xi_lo = 0.0;
    double dxi = 0.0;
    int K = 0;
};

struct CandidateEval {
    CenterData center;
    std::vector<MemberGrid> members;  // pencil order -M..0..+M
    std::size_t center_index = 0;     // index of the alpha0 member
    double xi_lo = 0.0;
    double dxi = 0.0;
    int K = 0;
};

// Traces the candidate's center curve and evaluates its standalone
// signature; cheap enough to run for every lattice point.
inline std::optional<CenterData> build_center(const CurveFamily& fam,
                                              const PrimaryParams& alpha0, double xi_lo,
                                              double xi_hi, const FitGrid& cfg,
                                              std::size_t min_samples,
                                              std::vector<CurveSample>* keep = nullptr) {
    CenterData cd;
    cd.alpha0 = alpha0;
    cd.dxi = cfg.dxi;
    cd.xi_lo = xi_lo;
    cd.K = static_cast<int>(std::lround((xi_hi - xi_lo) / cfg.dxi)) + 1;
    if (cd.K < static_cast<int>(min_samples) + 1) return std::nullopt;
    std::vector<CurveSample> tr;
    try {
        tr = trace_span(fam, alpha0, xi_lo, xi_hi, cfg.dxi);
    } catch (const numeric_error&) {
        return std::nullopt;
    } catch (const input_error&) {
        return std::nullopt;
    }
    if (tr.size() < min_samples + 1) return std::nullopt;
    const std::vector<double> sig = trace_signature(tr, cfg.signature_halfwidth);
    cd.points.assign(cd.K, Vec2{});
    cd.theta.assign(cd.K, 0.0);
    cd.sig.assign(cd.K, 0.0);
    cd.valid.assign(cd.K, 0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const int k = static_cast<int>(std::lround((tr[i].xi - xi_lo) / cfg.dxi));
        if (k < 0 || k >= cd.K) continue;
        cd.points[k] = tr[i].point;
        cd.theta[k] = tr[i].theta;
        cd.sig[k] = sig[i];
        cd.valid[k] = 1;
    }
    if (keep) *keep = std::move(tr);
    return cd;
}

// Signature distance of a window: the placement criterion of the curvature
// alignment step, reused as a plausibility gate before the manifold scan.
inline std::optional<double> window_signature_distance(const CenterData& cd, int k0,
                                                       const std::vector<double>& part_curv,
                                                       int trim) {
    const int n_w = static_cast<int>(part_curv.size());
    if (k0 < 0 || k0 + n_w > cd.K) return std::nullopt;
    double acc = 0.0;
    for (int n = trim; n < n_w - trim; ++n) {
        if (!cd.valid[k0 + n]) return std::nullopt;
        acc += std::abs(part_curv[n] - cd.sig[k0 + n]);
    }
    return acc;
}

// Completes a candidate: the pencil of parameter deformations anchored at
// the trace midpoint, one trace per pencil member, and a quadratic epsilon
// model per (member, grid sample).
inline std::optional<CandidateEval> build_candidate(const CurveFamily& fam,
                                                    const PrimaryParams& alpha0,
                                                    double xi_lo, double xi_hi,
                                                    const FitGrid& cfg,
                                                    std::size_t min_samples) {
    std::vector<CurveSample> center;
    auto cd = build_center(fam, alpha0, xi_lo, xi_hi, cfg, min_samples, &center);
    if (!cd) return std::nullopt;
    CandidateEval cand;
    cand.center = std::move(*cd);
    cand.dxi = cfg.dxi;
    cand.xi_lo = xi_lo;
    cand.K = cand.center.K;

    auto k_of = [&](double xi) {
        return static_cast<int>(std::lround((xi - xi_lo) / cfg.dxi));
    };

    // pencil anchored at the midpoint of the traced center span
    const CurveSample& anchor = center[center.size() / 2];
    EvalCtx anchor_ctx = EvalCtx::at_theta(anchor.theta);
    std::vector<PrimaryParams> pencil{alpha0};
    std::vector<double> weights{1.0};
    std::size_t center_idx = 0;
    if (fam.param_dim() == 2 && cfg.beta_nodes > 0) {
        const double L_alpha = cfg.l_alpha_rel * std::hypot(alpha0.a, alpha0.b);
        const double dbeta = 0.5 * L_alpha / cfg.beta_nodes;
        pencil.clear();
        try {
            auto up = trace_param_curve(fam, anchor.point, alpha0, 0.5 * L_alpha, dbeta,
                                        &anchor_ctx);
            auto dn = trace_param_curve(fam, anchor.point, alpha0, -0.5 * L_alpha, dbeta,
                                        &anchor_ctx);
            // order: -M..0..+M; clipped traces shrink the strip
            for (std::size_t i = dn.size(); i > 1; --i) pencil.push_back(dn[i - 1]);
            center_idx = pencil.size();
            for (auto& q : up) pencil.push_back(q);
        } catch (const numeric_error&) {
            pencil = {alpha0};
            center_idx = 0;
        }
        if (pencil.empty()) {
            pencil = {alpha0};
            center_idx = 0;
        }
        weights.assign(pencil.size(), dbeta);
        if (pencil.size() > 1) {
            weights.front() *= 0.5;
            weights.back() *= 0.5;
        } else {
            weights[0] = 1.0;
        }
    }

    const double back_len = anchor.xi - xi_lo;
    const double fwd_len = (xi_lo + (cand.K - 1) * cfg.dxi) - anchor.xi;
    for (std::size_t pi = 0; pi < pencil.size(); ++pi) {
        MemberGrid mg;
        mg.alpha = pencil[pi];
        mg.beta_weight = weights[pi];
        mg.models.resize(cand.K);
        mg.valid.assign(cand.K, 0);

        std::vector<CurveSample> tr;
        if (pi == center_idx) {
            cand.center_index = cand.members.size();
            tr = center;
        } else {
            try {
                EvalCtx ctx = EvalCtx::at_theta(anchor.theta);
                auto fwd = trace_curve(fam, mg.alpha, anchor.point, fwd_len, cfg.dxi, ctx,
                                       anchor.xi);
                auto bwd = trace_curve(fam, mg.alpha, anchor.point, -back_len, cfg.dxi, ctx,
                                       anchor.xi);
                tr.reserve(fwd.size() + bwd.size());
                for (std::size_t i = bwd.size(); i > 1; --i) tr.push_back(bwd[i - 1]);
                tr.insert(tr.end(), fwd.begin(), fwd.end());
            } catch (const numeric_error&) {
                continue;
            }
        }
        if (tr.size() < 3) continue;
        const std::vector<double> sig = trace_signature(tr, cfg.signature_halfwidth);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const int k = k_of(tr[i].xi);
            if (k < 0 || k >= cand.K) continue;
            EvalCtx ctx = EvalCtx::at_theta(tr[i].theta);
            EpsilonSampleModel m =
                build_epsilon_model(fam, tr[i].point, mg.alpha, sig[i], &ctx);
            if (!m.valid) continue;
            mg.models[k] = m;
            mg.valid[k] = 1;
        }
        cand.members.push_back(std::move(mg));
    }
    if (cand.members.empty()) return std::nullopt;
    return cand;
}

// E2(xi0) = sum_m w_m sum_n |epsilon(xi_n, beta_m)| dxi dbeta over the
// window of n_w part samples starting at grid index k0. The first and last
// `trim` samples are excluded: there the part's curvature estimator runs on
// one-sided windows while the trace models carry central-window signatures,
// and that estimator mismatch would swamp the basin of the true placement.
inline int signature_trim(int n_w, int halfwidth) {
    return std::min(halfwidth, std::max(0, (n_w - 5) / 2));
}

// Each member's accumulation is normalized by its window-mean curvature
// response |d epsilon / d c|: the raw bracket density scales with the local
// manifold curvature, so without the normalization candidates sitting on a
// nearly flat stretch of the manifold would win on vanishing density alone.
inline std::optional<double> window_e2(const CandidateEval& cand, int k0,
                                       const std::vector<double>& part_curv, int trim) {
    const int n_w = static_cast<int>(part_curv.size());
    if (k0 < 0 || k0 + n_w > cand.K) return std::nullopt;
    double E2 = 0.0;
    bool center_ok = false;
    for (std::size_t mi = 0; mi < cand.members.size(); ++mi) {
        const auto& m = cand.members[mi];
        double acc = 0.0;
        double resp = 0.0;
        int used = 0;
        bool full = true;
        for (int n = trim; n < n_w - trim; ++n) {
            if (!m.valid[k0 + n]) {
                full = false;
                break;
            }
            acc += std::abs(m.models[k0 + n].epsilon(part_curv[n]));
            resp += m.models[k0 + n].response;
            ++used;
        }
        // strip members clipped by domain guards drop out of the
        // quadrature; the center member is mandatory
        if (!full || used == 0) {
            if (mi == cand.center_index) return std::nullopt;
            continue;
        }
        if (mi == cand.center_index) center_ok = true;
        const double mean_resp = resp / static_cast<double>(used);
        E2 += m.beta_weight * (acc / std::max(mean_resp, 1e-9)) * cand.dxi;
    }
    if (!center_ok) return std::nullopt;
    return E2;
}

}  // namespace alg1

// Fits one object part to a family of prototype curves: exhaustive E2
// minimization over the (xi0, alpha0) grid, the J0 stationarity scan for the
// intersection point xi_c, the primary-parameter refinement through the
// intersection level set, and the I2-based fitting error of the final
// placement. Both traversal orientations of the part are scanned.
inline PlacementResult algorithm1_fit(const ObjectPart& part, const CurveFamily& fam,
                                      const FitGrid& cfg = {},
                                      std::vector<GridCell>* grid_table = nullptr) {
    if (part.contour.size() < 4) throw input_error("part too short to fit");
    const double L_p = part.contour.length();
    if (L_p < cfg.min_part_length) throw input_error("part below minimum length");

    // fitting-resolution copy of the part; stride subsampling keeps the
    // points exactly on the input samples (interpolation sag would poison
    // the curvature signature), with interpolation as the fallback for
    // non-integral spacing ratios
    Contour fit_contour;
    {
        const double h0 = part.contour.arc_lengths[1] - part.contour.arc_lengths[0];
        bool uniform = h0 > 0.0;
        for (std::size_t i = 2; uniform && i + 1 < part.contour.size(); ++i)
            uniform = std::abs((part.contour.arc_lengths[i] -
                                part.contour.arc_lengths[i - 1]) - h0) < 1e-5 * h0;
        const double ratio = h0 > 0.0 ? cfg.dxi / h0 : 0.0;
        const long m = std::lround(ratio);
        if (uniform && m >= 1 && std::abs(ratio - static_cast<double>(m)) < 1e-3) {
            std::vector<Vec2> pts;
            for (std::size_t i = 0; i < part.contour.size(); i += m)
                pts.push_back(part.contour.points[i]);
            if (pts.size() >= 2)
                fit_contour = make_contour(std::move(pts), part.contour.scale);
            else
                fit_contour = part.contour;
        } else {
            fit_contour = resample_arclength(part.contour, cfg.dxi);
        }
    }
    const std::vector<double> sig_fwd =
        curvature_profile(fit_contour, cfg.signature_halfwidth);
    std::vector<double> sig_rev(sig_fwd.rbegin(), sig_fwd.rend());
    for (double& v : sig_rev) v = -v;
    const int n_w = static_cast<int>(sig_fwd.size());
    const int trim = alg1::signature_trim(n_w, cfg.signature_halfwidth);

    struct Best {
        double E2 = std::numeric_limits<double>::infinity();
        PrimaryParams alpha;
        int k0 = -1;
        double xi0 = 0.0;
        bool reversed = false;
        bool found = false;
    };

    auto scan_round = [&](double lo_a, double hi_a, double lo_b, double hi_b,
                          double xi_lo, double xi_hi, int count,
                          std::vector<GridCell>* table) -> Best {
        Best best;
        auto lattice = [&](double lo, double hi, int n) {
            std::vector<double> v;
            if (n == 1) {
                v.push_back(std::sqrt(lo * hi));
                return v;
            }
            const double llo = std::log(lo), lhi = std::log(hi);
            for (int i = 0; i < n; ++i)
                v.push_back(std::exp(llo + (lhi - llo) * i / (n - 1)));
            return v;
        };
        std::vector<PrimaryParams> alphas;
        if (fam.param_dim() == 1) {
            for (double k : lattice(lo_a, hi_a, count)) alphas.push_back(PrimaryParams::single(k));
        } else {
            for (double a : lattice(lo_a, hi_a, count))
                for (double b : lattice(lo_b, hi_b, count))
                    alphas.push_back(PrimaryParams::pair(a, b));
        }

        // phase 1: center curves and their signature distances. The best
        // curvature alignment gates the expensive manifold scan; without the
        // gate, candidates whose manifold happens to be nearly flat would
        // win on a vanishing error density regardless of geometric fit.
        std::vector<alg1::CenterData> centers;
        centers.reserve(alphas.size());
        double best_D = std::numeric_limits<double>::infinity();
        struct DCell {
            std::size_t alpha_idx;
            double min_D;
        };
        std::vector<DCell> dcells;
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            auto cd = alg1::build_center(fam, alphas[ai], xi_lo, xi_hi, cfg, n_w);
            if (!cd) continue;
            double min_D = std::numeric_limits<double>::infinity();
            for (int k0 = 0; k0 + n_w <= cd->K; ++k0) {
                for (int orient = 0; orient < 2; ++orient) {
                    const auto D = alg1::window_signature_distance(
                        *cd, k0, orient ? sig_rev : sig_fwd, trim);
                    if (D) min_D = std::min(min_D, *D);
                }
            }
            if (!std::isfinite(min_D)) continue;
            best_D = std::min(best_D, min_D);
            dcells.push_back({ai, min_D});
            centers.push_back(std::move(*cd));
        }
        if (dcells.empty()) return best;
        const int n_used = std::max(1, n_w - 2 * trim);
        // a narrow band above the best curvature alignment: the manifold
        // criterion only compares candidates that already explain the
        // signature about as well as the best one
        const double gate = std::max(1.02 * best_D, best_D + 2e-4 * n_used);

        // phase 2: full epsilon-density scan over the plausible candidates;
        // if the band leaves nothing evaluable, rerun it ungated
        for (int pass = 0; pass < 2 && !best.found; ++pass) {
            const double limit = pass == 0 ? gate : std::numeric_limits<double>::infinity();
            for (std::size_t ci = 0; ci < dcells.size(); ++ci) {
                if (dcells[ci].min_D > limit) continue;
                const auto& alpha0 = alphas[dcells[ci].alpha_idx];
                auto cand = alg1::build_candidate(fam, alpha0, xi_lo, xi_hi, cfg, n_w);
                if (!cand) continue;
                for (int k0 = 0; k0 + n_w <= cand->K; ++k0) {
                    for (int orient = 0; orient < 2; ++orient) {
                        const auto D = alg1::window_signature_distance(
                            centers[ci], k0, orient ? sig_rev : sig_fwd, trim);
                        if (!D || *D > limit) continue;
                        const auto e2 =
                            alg1::window_e2(*cand, k0, orient ? sig_rev : sig_fwd, trim);
                        if (!e2) continue;
                        const double xi0 = cand->xi_lo + k0 * cfg.dxi;
                        if (table)
                            table->push_back({alpha0, xi0, orient != 0, *e2});
                        const bool better =
                            *e2 < best.E2 ||
                            (*e2 == best.E2 &&
                             std::tie(xi0, alpha0.a, alpha0.b) <
                                 std::tie(best.xi0, best.alpha.a, best.alpha.b));
                        if (better) {
                            best = {*e2, alpha0, k0, xi0, orient != 0, true};
                        }
                    }
                }
            }
        }
        return best;
    };

    // round 1 over the configured range, then zoomed exhaustive rounds
    const int count0 = fam.param_dim() == 1 ? cfg.lattice1 : cfg.lattice2;
    double lo_a = cfg.alpha_min, hi_a = cfg.alpha_max;
    double lo_b = cfg.alpha_min, hi_b = cfg.alpha_max;
    double xi_lo = -cfg.xi_margin * L_p, xi_hi = cfg.xi_margin * L_p + L_p;
    Best best = scan_round(lo_a, hi_a, lo_b, hi_b, xi_lo, xi_hi, count0, grid_table);
    if (!best.found) throw numeric_error("empty grid: no admissible prototype candidate");

    for (int round = 0; round < cfg.refine_rounds; ++round) {
        const double step_log = (std::log(hi_a) - std::log(lo_a)) / std::max(1, count0 - 1);
        const double widen = std::exp(1.75 * step_log);
        lo_a = best.alpha.a / widen;
        hi_a = best.alpha.a * widen;
        if (fam.param_dim() == 2) {
            const double step_b = (std::log(hi_b) - std::log(lo_b)) / std::max(1, count0 - 1);
            const double widen_b = std::exp(1.75 * step_b);
            lo_b = best.alpha.b / widen_b;
            hi_b = best.alpha.b * widen_b;
        }
        xi_lo = best.xi0 - L_p;
        xi_hi = best.xi0 + 2.0 * L_p;
        const Best refined =
            scan_round(lo_a, hi_a, lo_b, hi_b, xi_lo, xi_hi, count0, nullptr);
        if (refined.found && refined.E2 < best.E2) best = refined;
    }

    // rebuild the winner's tables for the stationarity scan
    auto cand = alg1::build_candidate(fam, best.alpha, best.xi0 - L_p, best.xi0 + 2.0 * L_p,
                                      cfg, n_w);
    if (!cand) throw numeric_error("winner candidate no longer traceable");
    const int k0 = static_cast<int>(std::lround((best.xi0 - cand->xi_lo) / cfg.dxi));
    const auto& part_curv = best.reversed ? sig_rev : sig_fwd;

    // J0(xi_c) = sum_m [c_chi^alpha T_chi/T_alpha]_(xi_c, beta_m) P_m
    std::vector<double> J0(n_w, 0.0);
    std::vector<char> J0_ok(n_w, 0);
    {
        std::vector<double> P(cand->members.size(), 0.0);
        for (std::size_t m = 0; m < cand->members.size(); ++m) {
            const auto& mg = cand->members[m];
            double acc = 0.0;
            bool all = true;
            for (int n = trim; n < n_w - trim; ++n) {
                if (k0 + n >= cand->K || !mg.valid[k0 + n]) {
                    all = false;
                    break;
                }
                acc += std::abs(mg.models[k0 + n].epsilon(part_curv[n]));
            }
            P[m] = all ? acc * cand->dxi : 0.0;
        }
        for (int j = 0; j < n_w; ++j) {
            if (k0 + j >= cand->K) break;
            double v = 0.0;
            bool ok = true;
            for (std::size_t m = 0; m < cand->members.size(); ++m) {
                const auto& mg = cand->members[m];
                if (!mg.valid[k0 + j]) {
                    ok = false;
                    break;
                }
                v += mg.beta_weight * mg.models[k0 + j].j_weight * P[m];
            }
            J0[j] = v;
            J0_ok[j] = ok ? 1 : 0;
        }
    }
    int j_c = -1;
    bool no_crossing = true;
    for (int j = 0; j + 1 < n_w; ++j) {
        if (!J0_ok[j] || !J0_ok[j + 1]) continue;
        if (J0[j] == 0.0 || J0[j] * J0[j + 1] < 0.0) {
            j_c = j + (J0[j] == 0.0 ? 0 : 1);
            no_crossing = false;
            break;
        }
    }
    if (j_c < 0) {
        double bestJ = std::numeric_limits<double>::infinity();
        j_c = 0;
        for (int j = 0; j < n_w; ++j) {
            if (!J0_ok[j]) continue;
            if (std::abs(J0[j]) < bestJ) {
                bestJ = std::abs(J0[j]);
                j_c = j;
            }
        }
    }

    // alpha_c* = alpha_S(0, r_p(xi_c)): the parameters whose curve passes
    // through the curvature-matched image of the part's intersection point.
    // The projection fixes one combination of (a, b); the remaining degree
    // of freedom runs along the level-set curve through the image and is
    // resolved by minimizing the fitting error I2 along it.
    PrimaryParams alpha_c = best.alpha;
    const double native =
        part.contour.length() / static_cast<double>(part.contour.size() - 1);

    // fitting error of the part against the curve of a given alpha, using
    // the signature alignment around the winning window
    auto part_err = [&](const PrimaryParams& q) -> double {
        try {
            auto tr = trace_span(fam, q, best.xi0 - 0.75 * L_p, best.xi0 + 1.75 * L_p,
                                 native);
            const auto at = curvature_signature_align(part.curvature_samples, tr,
                                                      cfg.signature_halfwidth);
            const double I2 = compute_I2(part.curvature_samples, native, tr, at,
                                         cfg.signature_halfwidth);
            return fitting_error_from_I2(I2, L_p);
        } catch (const numeric_error&) {
            return std::numeric_limits<double>::infinity();
        } catch (const input_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Vec2 image_point;
    EvalCtx image_ctx;
    bool have_image = false;
    if (k0 + j_c < cand->K && cand->center.valid[k0 + j_c]) {
        const Vec2 base = cand->center.points[k0 + j_c];
        EvalCtx ctx = EvalCtx::at_theta(cand->center.theta[k0 + j_c]);
        try {
            const double c_flat0 = flat_curvature(fam, base, best.alpha, &ctx);
            const double dc = part_curv[j_c] - cand->center.sig[k0 + j_c];
            const double cap = std::min(0.6 / std::max(std::abs(c_flat0), 0.05), 4.0);
            const auto img = curvature_image(fam, base, best.alpha, c_flat0 + dc, cap, &ctx);
            if (!img.clamped) {
                image_point = img.point;
                image_ctx = ctx;
                have_image = true;
            }
        } catch (const numeric_error&) {
        }
    }

    if (have_image) {
        // project the winning parameters onto {alpha : f(chi_img, alpha) = 0}
        PrimaryParams q = alpha_c;
        bool projected = false;
        for (int it = 0; it < 40; ++it) {
            const double f = fam.eval(image_point, q, &image_ctx);
            if (std::abs(f) < 1e-12) {
                projected = true;
                break;
            }
            const Vec2 ga = fam.grad(image_point, q, &image_ctx).alpha;
            const double n2 = fam.param_dim() == 1 ? ga.x * ga.x : ga.squared_norm();
            if (n2 < 1e-24) break;
            q.a -= ga.x * f / n2;
            if (fam.param_dim() == 2) q.b -= ga.y * f / n2;
            if (!(q.a > 0.0) || (fam.param_dim() == 2 && !(q.b > 0.0))) break;
        }
        if (projected && q.valid()) alpha_c = q;
    }

    if (fam.param_dim() == 2) {
        // polish by the fitting error itself: zoomed local lattices around
        // the winner (seeded with the level-set projection), strictly
        // improving so an exact lattice hit is never abandoned
        PrimaryParams center_q = best.alpha;
        double best_err = part_err(center_q);
        {
            const double proj_err = part_err(alpha_c);
            if (proj_err < best_err) {
                best_err = proj_err;
                center_q = alpha_c;
            }
        }
        // the first pass must reach past half a round-1 lattice step; when
        // the best sits on the scan edge the minimum lies further along a
        // valley, so re-center at the same scale instead of shrinking
        const double step0 = std::log(cfg.alpha_max / cfg.alpha_min) /
                             std::max(1, cfg.lattice2 - 1);
        double reach = std::max(0.10, 0.6 * step0);
        for (int pass = 0; pass < 14 && reach > 2e-4; ++pass) {
            PrimaryParams pass_center = center_q;
            int best_ia = 0, best_ib = 0;
            for (int ia = -4; ia <= 4; ++ia) {
                for (int ib = -4; ib <= 4; ++ib) {
                    if (ia == 0 && ib == 0) continue;
                    PrimaryParams cq = PrimaryParams::pair(
                        pass_center.a * std::exp(reach * ia / 4.0),
                        pass_center.b * std::exp(reach * ib / 4.0));
                    const double e = part_err(cq);
                    if (e < best_err) {
                        best_err = e;
                        center_q = cq;
                        best_ia = ia;
                        best_ib = ib;
                    }
                }
            }
            const bool at_edge = std::abs(best_ia) == 4 || std::abs(best_ib) == 4;
            if (!(at_edge && (best_ia != 0 || best_ib != 0))) reach *= 0.3;
        }
        alpha_c = center_q;
    } else {
        // the projection pins the single parameter; polish with zoomed
        // 1D fitting-error scans around it, strictly improving
        PrimaryParams center_q = best.alpha;
        double best_err = part_err(center_q);
        {
            const double proj_err = part_err(alpha_c);
            if (proj_err < best_err) {
                best_err = proj_err;
                center_q = alpha_c;
            }
        }
        double reach = 0.06 * center_q.a;
        for (int pass = 0; pass < 3; ++pass) {
            PrimaryParams pass_center = center_q;
            for (int i = -6; i <= 6; ++i) {
                if (i == 0) continue;
                PrimaryParams cq = PrimaryParams::single(
                    pass_center.a + reach * static_cast<double>(i) / 6.0);
                if (!(cq.a > 0.0)) continue;
                const double e = part_err(cq);
                if (e < best_err) {
                    best_err = e;
                    center_q = cq;
                }
            }
            reach *= 0.2;
        }
        alpha_c = center_q;
    }

    // final placement on the refined curve at the part's native resolution
    PlacementResult out;
    out.family_id = std::string(fam.id());
    out.alpha = alpha_c;
    out.reversed = best.reversed;
    out.no_crossing = no_crossing;
    out.E2 = best.E2;

    try {
        auto final_trace = trace_span(fam, alpha_c, best.xi0 - 0.75 * L_p,
                                      best.xi0 + 1.75 * L_p, native);
        const auto at = curvature_signature_align(part.curvature_samples, final_trace,
                                                  cfg.signature_halfwidth);
        const double I2 = compute_I2(part.curvature_samples, native, final_trace, at,
                                     cfg.signature_halfwidth);
        out.err = fitting_error_from_I2(I2, L_p);
        out.xi0 = at.s0;
        out.xi_c = at.s0 + j_c * cfg.dxi;
        out.chi0 = final_trace[at.index].point;
        out.reversed = at.reversed;
    } catch (const numeric_error&) {
        // refined curve unusable at native resolution: report the grid fit
        out.xi0 = best.xi0;
        out.xi_c = best.xi0 + j_c * cfg.dxi;
        if (k0 < cand->K && cand->center.valid[k0]) out.chi0 = cand->center.points[k0];
    }
    if (out.xi_c > out.xi0 + L_p) out.xi_c = out.xi0 + L_p;
    return out;
}

// Among per-family fits below the acceptance threshold, the smallest error
// wins; none qualifies when all exceed it.
inline std::optional<std::string> assign_prototype(
    const std::map<std::string, PlacementResult>& results, double threshold) {
    if (results.empty()) throw input_error("no fit results to assign");
    std::optional<std::string> best;
    double best_err = threshold;
    for (const auto& [id, r] : results) {
        if (r.err < best_err) {
            best_err = r.err;
            best = id;
        }
    }
    return best;
}

}  // namespace stencilfit
