#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace stencilfit {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }

    Vec2 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec2{x / n, y / n} : Vec2{0.0, 0.0};
    }
    // 90 degree counterclockwise rotation
    Vec2 perp() const { return {-y, x}; }

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Rotation by `angle` about the origin followed by `translation`; det = +1,
// no scaling.
struct RigidTransform {
    double angle = 0.0;
    Vec2 translation{0.0, 0.0};

    Vec2 apply(const Vec2& p) const {
        const double c = std::cos(angle), s = std::sin(angle);
        return {c * p.x - s * p.y + translation.x,
                s * p.x + c * p.y + translation.y};
    }

    RigidTransform inverse() const {
        const double c = std::cos(angle), s = std::sin(angle);
        // R^T * (-t)
        return {-angle, Vec2{-(c * translation.x + s * translation.y),
                             -(-s * translation.x + c * translation.y)}};
    }

    RigidTransform compose(const RigidTransform& inner) const {
        // apply(inner.apply(p))
        return {angle + inner.angle, apply(inner.translation)};
    }
};

inline std::vector<Vec2> apply_transform(const RigidTransform& t,
                                         const std::vector<Vec2>& pts) {
    std::vector<Vec2> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(t.apply(p));
    return out;
}

struct BoundingBox {
    Vec2 lo{0, 0}, hi{0, 0};
    bool empty = true;

    void expand(const Vec2& p) {
        if (empty) {
            lo = hi = p;
            empty = false;
            return;
        }
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    Vec2 extent() const { return hi - lo; }
    Vec2 center() const { return (lo + hi) * 0.5; }
};

inline BoundingBox bounding_box(const std::vector<Vec2>& pts) {
    BoundingBox box;
    for (const auto& p : pts) box.expand(p);
    return box;
}

// Error taxonomy: input_error -> exit code 2, numeric_error -> exit code 3.
class input_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class numeric_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace stencilfit
