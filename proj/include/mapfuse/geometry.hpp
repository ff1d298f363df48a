#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "mapfuse/common.hpp"

namespace mapfuse {

// 2-D point / vector, coordinates in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2() = default;
    Point2(double x_, double y_) : x(x_), y(y_) {
        if (!is_finite(x) || !is_finite(y))
            throw DataError("Point2: non-finite coordinate");
    }

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {s * x, s * y}; }
    bool operator==(const Point2& o) const = default;
};

inline double dot(const Point2& a, const Point2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point2& a, const Point2& b) { return a.x * b.y - a.y * b.x; }
inline double norm2(const Point2& a) { return dot(a, a); }
inline double norm(const Point2& a) { return std::hypot(a.x, a.y); }
inline double dist(const Point2& a, const Point2& b) { return norm(a - b); }

// Quarter-turn matrix applied to a point: [[0,-1],[1,0]] * p.
// Together with the identity these two matrices generate every rotation:
// r(theta) = cos(theta) * I + sin(theta) * quarter_turn.
inline Point2 quarter_turn(const Point2& p) { return {-p.y, p.x}; }

// Wrap an angle to (-pi, pi].
inline double wrap_angle(double theta) {
    const double pi = std::numbers::pi;
    double a = std::remainder(theta, 2.0 * pi); // [-pi, pi]
    if (a <= -pi) a = pi;
    return a;
}

// r(theta) * p with r(theta) = [[cos,-sin],[sin,cos]].
inline Point2 rotate_point(double theta, const Point2& p) {
    if (!is_finite(theta)) throw DataError("rotate_point: non-finite angle");
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Planar rigid transform: p' = r(theta) * p + t. theta is kept in (-pi, pi].
struct Rigid2 {
    double theta = 0.0;
    Point2 t{};

    Rigid2() = default;
    Rigid2(double theta_, Point2 t_) : theta(wrap_angle(theta_)), t(t_) {
        if (!is_finite(theta_)) throw DataError("Rigid2: non-finite angle");
    }

    static Rigid2 identity() { return {}; }

    Point2 apply(const Point2& p) const { return rotate_point(theta, p) + t; }

    // Inverse transform: p = r(-theta) * (p' - t).
    Point2 apply_inverse(const Point2& p) const { return rotate_point(-theta, p - t); }

    Rigid2 inverse() const { return {wrap_angle(-theta), rotate_point(-theta, t) * -1.0}; }

    // this ∘ other: first apply other, then this.
    Rigid2 compose(const Rigid2& other) const {
        return {wrap_angle(theta + other.theta), rotate_point(theta, other.t) + t};
    }
};

inline Point2 apply_rigid(const Rigid2& g, const Point2& p) { return g.apply(p); }

// Centroid of a point list and the list re-expressed about it. Subtracting the
// centroid from a stacked map is exactly the action of the centering projector
// I - F (F^T F)^{-1} F^T, so every projector product in the estimators reduces
// to this O(n) operation.
inline std::pair<Point2, std::vector<Point2>> centroid_center(const std::vector<Point2>& points) {
    if (points.empty()) throw DataError("centroid_center: empty point list");
    Point2 c{};
    for (const auto& p : points) c = c + p;
    c = c * (1.0 / static_cast<double>(points.size()));
    std::vector<Point2> centered;
    centered.reserve(points.size());
    for (const auto& p : points) centered.push_back(p - c);
    return {c, std::move(centered)};
}

} // namespace mapfuse
