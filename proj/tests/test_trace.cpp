#include <catch2/catch_amalgamated.hpp>

#include "stencilfit/families.hpp"
#include "stencilfit/trace.hpp"
#include "test_helpers.hpp"

using namespace stencilfit;

TEST_CASE("tracing the unit circle closes on itself") {
    const auto& el = family_by_id("ellipse");
    auto samples = trace_curve(el, PrimaryParams::pair(1, 1), {1, 0}, 2 * oracles::kPi, 0.01);
    REQUIRE(samples.size() >= 628);
    CHECK(distance(samples.back().point, {1, 0}) < 1e-4);
    for (const auto& s : samples)
        CHECK(std::abs(s.point.norm() - 1.0) < 1e-9);
}

TEST_CASE("parabola trace stays on y = x^2") {
    const auto& pa = family_by_id("parabola");
    auto samples = trace_curve(pa, PrimaryParams::pair(1, 1e-12), {0, 0}, 1.0, 0.01);
    REQUIRE(samples.size() > 50);
    for (const auto& s : samples)
        CHECK(std::abs(s.point.y - s.point.x * s.point.x) < 1e-8);
}

TEST_CASE("hyperbola 1 traced over the longest reported stencil part") {
    // Lady of Mycenae hyperbola 1 and the 16.6597 cm max segment length
    const auto& hy = family_by_id("hyperbola");
    const auto p = PrimaryParams::pair(11.583, 12.6025);
    EvalCtx ctx;
    const Vec2 a = hy.anchor(p, ctx);
    auto samples = trace_curve(hy, p, a, 16.66, 0.01);
    CHECK(samples.size() == 1667);
    for (const auto& s : samples)
        CHECK(std::abs(hy.eval(s.point, p, nullptr)) < 1e-9);
}

TEST_CASE("multi-turn spiral traces keep a continuous branch") {
    const auto& ls = family_by_id("linear-spiral");
    const auto p = PrimaryParams::single(0.3175);
    EvalCtx ctx;
    const Vec2 a = ls.anchor(p, ctx);
    // negative arc length runs outward (increasing theta) from the anchor
    auto samples = trace_curve(ls, p, a, -18.0, 0.02, ctx);
    REQUIRE(samples.size() > 800);
    // every sample satisfies r = k theta for the unwrapped branch
    double prev_theta = 2 * oracles::kPi;
    for (const auto& s : samples) {
        double t = detail::theta_principal(s.point);
        const double k = std::round((prev_theta - t) / (2 * oracles::kPi));
        t += 2 * oracles::kPi * k;
        CHECK(std::abs(s.point.norm() - p.a * t) < 1e-6);
        prev_theta = t;
    }
    CHECK(prev_theta > 3.5 * oracles::kPi);  // genuinely multi-turn
}

TEST_CASE("trace arc length spacing matches the requested step") {
    const auto& el = family_by_id("ellipse");
    auto samples = trace_curve(el, PrimaryParams::pair(3, 2), {3, 0}, 4.0, 0.05);
    for (std::size_t i = 1; i < samples.size(); ++i) {
        CHECK(distance(samples[i].point, samples[i - 1].point) ==
              Catch::Approx(0.05).epsilon(0.01));
        CHECK(samples[i].xi - samples[i - 1].xi == Catch::Approx(0.05));
    }
}

TEST_CASE("trace_span is bidirectional around the anchor") {
    const auto& hy = family_by_id("hyperbola");
    const auto p = PrimaryParams::pair(2, 3);
    auto samples = trace_span(hy, p, -3.0, 3.0, 0.05);
    CHECK(samples.front().xi == Catch::Approx(-3.0).margin(1e-9));
    CHECK(samples.back().xi == Catch::Approx(3.0).margin(1e-9));
    for (std::size_t i = 1; i < samples.size(); ++i)
        CHECK(samples[i].xi > samples[i - 1].xi);
    // xi = 0 sits at the vertex
    bool found = false;
    for (const auto& s : samples)
        if (std::abs(s.xi) < 1e-12) {
            CHECK(distance(s.point, {2, 0}) < 1e-9);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("alpha level set of the ellipse through (2, 0) keeps a = 2") {
    // f(chi, alpha) = 0 at chi = (2, 0) forces a = 2 regardless of b
    const auto& el = family_by_id("ellipse");
    auto alphas = trace_param_curve(el, {2, 0}, PrimaryParams::pair(2, 1), 0.8, 0.01);
    REQUIRE(alphas.size() > 10);
    for (const auto& q : alphas) CHECK(q.a == Catch::Approx(2.0).margin(1e-8));
}

TEST_CASE("alpha level set of the hyperbola preserves the level") {
    const auto& hy = family_by_id("hyperbola");
    const auto p0 = PrimaryParams::pair(1, 1);
    const Vec2 chi = oracles::hyperbola_point(1, 1, 0.5);
    auto alphas = trace_param_curve(hy, chi, p0, 0.5, 0.005);
    REQUIRE(alphas.size() > 20);
    for (const auto& q : alphas)
        CHECK(std::abs(hy.eval(chi, q, nullptr)) < 1e-10);
}

TEST_CASE("one-parameter families degenerate to a single alpha sample") {
    const auto& ls = family_by_id("linear-spiral");
    std::vector<double> betas;
    auto alphas = trace_param_curve(ls, {1, 1}, PrimaryParams::single(0.3), 1.0, 0.01,
                                    nullptr, &betas);
    REQUIRE(alphas.size() == 1);
    CHECK(alphas[0].a == 0.3);
    CHECK(betas == std::vector<double>{0.0});
}

namespace {
// circumscribed-circle curvature of three consecutive samples: an
// estimator independent of the library's moving-LS profile. Negated to the
// x'' y' - y'' x' sign convention used throughout.
double circumcircle_curvature(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 ab = b - a, bc = c - b, ca = a - c;
    const double area2 = ab.cross(bc);  // 2 * signed area, left-turn positive
    const double d = ab.norm() * bc.norm() * ca.norm();
    return d > 0 ? -2.0 * area2 / d : 0.0;
}
}  // namespace

TEST_CASE("traced polyline curvature equals flat curvature along the curve") {
    for (const auto* id : {"ellipse", "hyperbola", "parabola"}) {
        const auto& fam = family_by_id(id);
        const auto p = PrimaryParams::pair(2.2, 1.4);
        EvalCtx ctx;
        const Vec2 a = fam.anchor(p, ctx);
        auto samples = trace_curve(fam, p, a, 2.5, 0.005, ctx);
        for (std::size_t i = 10; i + 10 < samples.size(); i += 17) {
            const double analytic = flat_curvature(fam, samples[i].point, p, nullptr);
            const double disc = circumcircle_curvature(
                samples[i - 1].point, samples[i].point, samples[i + 1].point);
            CHECK(disc == Catch::Approx(analytic).epsilon(1e-3));
        }
    }
}
