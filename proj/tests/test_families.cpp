#include <catch2/catch_amalgamated.hpp>

#include "stencilfit/families.hpp"
#include "stencilfit/trace.hpp"
#include "test_helpers.hpp"

using namespace stencilfit;

TEST_CASE("on-curve evaluations vanish") {
    CHECK(eval_f(family_by_id("hyperbola"), {1, 0}, PrimaryParams::pair(1, 1)) ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK(eval_f(family_by_id("ellipse"), {0, 1}, PrimaryParams::pair(2, 1)) ==
          Catch::Approx(0.0).margin(1e-12));
    // linear spiral at theta = pi, r = k pi (Naked Boys pitch)
    const double k = 0.3175;
    CHECK(eval_f(family_by_id("linear-spiral"), {-k * oracles::kPi, 0},
                 PrimaryParams::single(k)) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("on-curve evaluations vanish for transcendental families") {
    const auto& inv = family_by_id("involute");
    for (double u : {0.8, 1.7, 3.2}) {
        const Vec2 p = oracles::involute_point(1.3, u);
        CHECK(eval_f(inv, p, PrimaryParams::single(1.3)) == Catch::Approx(0.0).margin(1e-9));
    }
    const auto& es = family_by_id("exp-spiral");
    for (double t : {0.2, 0.9, 1.4}) {
        const Vec2 p = oracles::exp_spiral_point(0.8, 0.25, t);
        CHECK(eval_f(es, p, PrimaryParams::pair(0.8, 0.25)) ==
              Catch::Approx(0.0).margin(1e-9));
    }
}

TEST_CASE("domain guard rejects the spiral center") {
    const auto& ls = family_by_id("linear-spiral");
    CHECK_THROWS_AS(eval_f(ls, {0, 0}, PrimaryParams::single(0.3)), numeric_error);
}

TEST_CASE("flat curvature of circles is 1/R") {
    const auto& el = family_by_id("ellipse");
    for (double R : {0.5, 1.0, 2.0, 5.0, 11.0}) {
        const auto p = PrimaryParams::pair(R, R);
        for (double t : {0.0, 0.7, 2.2, 4.0}) {
            const Vec2 chi{R * std::cos(t), R * std::sin(t)};
            CHECK(flat_curvature(el, chi, p) == Catch::Approx(1.0 / R).margin(1e-8));
        }
    }
}

TEST_CASE("flat curvature of ellipse at major vertex is a/b^2") {
    const auto& el = family_by_id("ellipse");
    CHECK(flat_curvature(el, {2, 0}, PrimaryParams::pair(2, 1)) ==
          Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("flat curvature of linear spiral matches polar oracle") {
    const auto& ls = family_by_id("linear-spiral");
    const double k = 0.169;  // Naked Boys spiral pitch
    const double theta = 2 * oracles::kPi;
    const Vec2 chi = oracles::linear_spiral_point(k, theta);
    EvalCtx ctx = EvalCtx::at_theta(theta);
    const double expect = oracles::linear_spiral_curvature(k, theta);
    CHECK(std::abs(flat_curvature(ls, chi, PrimaryParams::single(k), &ctx)) ==
          Catch::Approx(expect).epsilon(1e-5));
}

TEST_CASE("flat curvature magnitudes match parametric oracles across the catalog") {
    {
        const auto p = PrimaryParams::pair(2.0, 1.2);
        for (double t : {0.2, 1.0, 2.5})
            CHECK(std::abs(flat_curvature(family_by_id("ellipse"),
                                          oracles::ellipse_point(p.a, p.b, t), p)) ==
                  Catch::Approx(oracles::ellipse_curvature(p.a, p.b, t)).epsilon(1e-8));
    }
    {
        const auto p = PrimaryParams::pair(11.583, 12.6025);
        for (double t : {-0.8, 0.1, 0.9})
            CHECK(std::abs(flat_curvature(family_by_id("hyperbola"),
                                          oracles::hyperbola_point(p.a, p.b, t), p)) ==
                  Catch::Approx(oracles::hyperbola_curvature(p.a, p.b, t)).epsilon(1e-8));
    }
    {
        const auto p = PrimaryParams::pair(0.7, 0.4);
        for (double x : {-1.0, 0.0, 1.3}) {
            const Vec2 chi{x, std::pow(p.a * x + p.b, 2)};
            CHECK(std::abs(flat_curvature(family_by_id("parabola"), chi, p)) ==
                  Catch::Approx(oracles::parabola_curvature(p.a, p.b, x)).epsilon(1e-8));
        }
    }
    {
        const auto p = PrimaryParams::pair(0.9, 0.3);
        for (double t : {0.5, 1.5, 3.0}) {
            EvalCtx ctx = EvalCtx::at_theta(t);
            CHECK(std::abs(flat_curvature(family_by_id("exp-spiral"),
                                          oracles::exp_spiral_point(p.a, p.b, t), p, &ctx)) ==
                  Catch::Approx(oracles::exp_spiral_curvature(p.a, p.b, t)).epsilon(1e-4));
        }
    }
    {
        const auto p = PrimaryParams::single(1.1);
        for (double u : {1.0, 2.0, 3.5}) {
            const double th = u + std::atan(u);
            EvalCtx ctx = EvalCtx::at_theta(th);
            CHECK(std::abs(flat_curvature(family_by_id("involute"),
                                          oracles::involute_point(p.a, u), p, &ctx)) ==
                  Catch::Approx(oracles::involute_curvature(p.a, u)).epsilon(1e-4));
        }
    }
}

TEST_CASE("analytic gradients agree with finite differences") {
    auto rng = oracles::rng(99);
    std::uniform_real_distribution<double> uu(0.3, 3.0);
    const double h = 1e-6;
    for (const auto& id : all_family_ids()) {
        const auto& fam = family_by_id(id);
        int checked = 0;
        while (checked < 200) {
            PrimaryParams p = fam.param_dim() == 2 ? PrimaryParams::pair(uu(rng), uu(rng))
                                                   : PrimaryParams::single(uu(rng));
            const Vec2 chi{uu(rng) * (rng() % 2 ? 1.0 : -1.0), uu(rng)};
            EvalCtx ctx = EvalCtx::at_theta(detail::theta_principal(chi));
            if (!fam.in_domain(chi, p, &ctx)) continue;
            // keep clear of the branch cut so the +-h probes stay on branch
            if (fam.theta(chi, &ctx) != 0.0 && chi.norm() < 0.2) continue;
            ++checked;
            const Grad4 g = fam.grad(chi, p, &ctx);
            auto at = [&](double dx, double dy, double da, double db) {
                PrimaryParams q = p;
                q.a += da;
                q.b += db;
                return fam.eval({chi.x + dx, chi.y + dy}, q, &ctx);
            };
            const double fx = (at(h, 0, 0, 0) - at(-h, 0, 0, 0)) / (2 * h);
            const double fy = (at(0, h, 0, 0) - at(0, -h, 0, 0)) / (2 * h);
            const double fa = (at(0, 0, h, 0) - at(0, 0, -h, 0)) / (2 * h);
            const double scale = std::max({1.0, std::abs(g.chi.x), std::abs(g.chi.y),
                                           std::abs(g.alpha.x)});
            CHECK(std::abs(g.chi.x - fx) / scale < 1e-5);
            CHECK(std::abs(g.chi.y - fy) / scale < 1e-5);
            CHECK(std::abs(g.alpha.x - fa) / scale < 1e-5);
            if (fam.param_dim() == 2) {
                const double fb = (at(0, 0, 0, h) - at(0, 0, 0, -h)) / (2 * h);
                CHECK(std::abs(g.alpha.y - fb) / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("primary parameter pullback") {
    const auto& el = family_by_id("ellipse");
    SECTION("identity scaling") {
        auto r = primary_param_pullback(el, {std::sqrt(0.5), std::sqrt(0.5)},
                                        PrimaryParams::pair(1, 1));
        CHECK(r.curvature_ratio == Catch::Approx(1.0).margin(1e-12));
        CHECK(r.map.inv_a == 1.0);
    }
    SECTION("uniform scaling of the unit circle") {
        // a = b = 2: ratio = (ab)^2 |grad|^3 / |diag(a,b) grad|^3 = 16 / 8 = 2
        auto r = primary_param_pullback(el, {1, 0}, PrimaryParams::pair(2, 2));
        CHECK(r.curvature_ratio == Catch::Approx(2.0).margin(1e-10));
    }
    SECTION("anisotropic ratio from the gradient norms") {
        const auto p = PrimaryParams::pair(2.0, 1.0);
        const Vec2 chi{0.0, 1.0};
        auto r = primary_param_pullback(el, chi, p);
        const Grad4 g = el.grad(chi, p, nullptr);
        const Vec2 scaled{p.a * g.chi.x, p.b * g.chi.y};
        const double expected = std::pow(p.a * p.b, 2) *
                                std::pow(g.chi.norm(), 3) / std::pow(scaled.norm(), 3);
        CHECK(r.curvature_ratio == Catch::Approx(expected).margin(1e-9));
    }
}

TEST_CASE("curvature parameter rank of the general conic is 2") {
    // f = A1 x^2 + A2 y^2 + A3 xy + A4 x + A5 y - 1
    ExtendedImplicitFamily conic;
    conic.n_params = 5;
    conic.grad_chi_dparam = [](const Vec2& c, const std::vector<double>&, int n) -> Vec2 {
        switch (n) {
            case 0: return {2 * c.x, 0};
            case 1: return {0, 2 * c.y};
            case 2: return {c.y, c.x};
            case 3: return {1, 0};
            default: return {0, 1};
        }
    };
    auto rng = oracles::rng(5);
    std::uniform_real_distribution<double> u(-3, 3);
    std::vector<Vec2> pts;
    for (int i = 0; i < 50; ++i) pts.push_back({u(rng), u(rng)});
    CHECK(curvature_param_rank(conic, pts, {1, 1, 0.3, 0.1, -0.2}) == 2);
}

TEST_CASE("rank bound holds for one-parameter and translate families") {
    std::vector<Vec2> pts{{1, 0}, {0, 1}, {0.6, 0.8}};
    for (int i = 0; i < 7; ++i) pts.push_back({0.1 * i + 0.2, 0.3});

    // circle radius family: d f/dR = -2R has vanishing chi-gradient
    ExtendedImplicitFamily circle;
    circle.n_params = 1;
    circle.grad_chi_dparam = [](const Vec2&, const std::vector<double>&, int) -> Vec2 {
        return {0.0, 0.0};
    };
    CHECK(curvature_param_rank(circle, pts, {1.0}) <= 2);

    // translates f(x - t, y) of a cubic level set: d f/dt = -3 (x-t)^2
    ExtendedImplicitFamily translates;
    translates.n_params = 1;
    translates.grad_chi_dparam = [](const Vec2& c, const std::vector<double>& A,
                                    int) -> Vec2 {
        return {-6.0 * (c.x - A[0]), 0.0};
    };
    CHECK(curvature_param_rank(translates, pts, {0.4}) <= 2);
}

TEST_CASE("catalog families as extended families have rank at most 2") {
    auto rng = oracles::rng(31);
    std::uniform_real_distribution<double> u(0.3, 2.5);
    for (const auto* id : {"ellipse", "hyperbola", "parabola"}) {
        const auto& fam = family_by_id(id);
        ExtendedImplicitFamily ext;
        ext.n_params = 2;
        ext.grad_chi_dparam = [&fam](const Vec2& c, const std::vector<double>& A,
                                     int n) -> Vec2 {
            const auto p = PrimaryParams::pair(A[0], A[1]);
            const Hessian4 H = fam.hessian(c, p, nullptr);
            return n == 0 ? Vec2{H.xa(), H.ya()} : Vec2{H.xb(), H.yb()};
        };
        std::vector<Vec2> pts;
        for (int i = 0; i < 12; ++i) pts.push_back({u(rng), u(rng)});
        CHECK(curvature_param_rank(ext, pts, {u(rng), u(rng)}) <= 2);
    }
}
