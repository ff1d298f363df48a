// Test-only oracles, kept independent of the library's computation paths:
// explicit stacked-matrix constructions, grid searches and brute-force
// enumerations that the closed-form implementations are checked against.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "mapfuse/geometry.hpp"
#include "mapfuse/rng.hpp"

namespace oracles {

using mapfuse::Point2;

// F1 = e_n (x) I_2, the stacked translation selector (2n x 2).
inline Eigen::MatrixXd make_f1(int n) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * n, 2);
    for (int i = 0; i < n; ++i) f.block(2 * i, 0, 2, 2) = Eigen::Matrix2d::Identity();
    return f;
}

// Q = I_2n - F1 (F1^T F1)^{-1} F1^T, built literally from its definition.
inline Eigen::MatrixXd make_q(int n) {
    const Eigen::MatrixXd f = make_f1(n);
    const Eigen::MatrixXd gram = f.transpose() * f;
    return Eigen::MatrixXd::Identity(2 * n, 2 * n) - f * gram.inverse() * f.transpose();
}

inline Eigen::VectorXd stack(const std::vector<Point2>& pts) {
    Eigen::VectorXd v(2 * pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        v(2 * i) = pts[i].x;
        v(2 * i + 1) = pts[i].y;
    }
    return v;
}

// Kronecker product I_n (x) B for 2x2 B.
inline Eigen::MatrixXd block_diag(int n, const Eigen::Matrix2d& b) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) m.block(2 * i, 2 * i, 2, 2) = b;
    return m;
}

// The printed closed form for the rotation MLE:
// sgn(beta) * (acos(alpha / sqrt(alpha^2 + beta^2)) - pi). Valid for beta != 0.
inline double theta_star_printed_form(double alpha, double beta) {
    const double s = beta > 0.0 ? 1.0 : (beta < 0.0 ? -1.0 : 0.0);
    return s * (std::acos(alpha / std::hypot(alpha, beta)) - 3.14159265358979323846);
}

// J1 evaluated along the theta axis with the per-theta minimizers
// t_bar(theta) = cq - r(theta) cp and mu_bar(theta) the per-landmark weighted
// mean, then minimized over a uniform theta grid. Independent route to the
// global minimum of J1.
inline double j1_grid_min(const std::vector<Point2>& xp, const std::vector<Point2>& xq,
                          double sp2, double sq2, int grid_points) {
    const std::size_t n = xp.size();
    Point2 cp{}, cq{};
    for (std::size_t i = 0; i < n; ++i) {
        cp = cp + xp[i];
        cq = cq + xq[i];
    }
    cp = cp * (1.0 / static_cast<double>(n));
    cq = cq * (1.0 / static_cast<double>(n));

    const double var_sum = sp2 + sq2;
    const double wq = var_sum > 0.0 ? sq2 / var_sum : 0.5; // weight on x_p
    const double wp = 1.0 - wq;                            // weight on back-rotated x_q
    const double pi = 3.14159265358979323846;

    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid_points; ++k) {
        const double theta = -pi + 2.0 * pi * (static_cast<double>(k) + 0.5) /
                                       static_cast<double>(grid_points);
        const double c = std::cos(theta), s = std::sin(theta);
        const Point2 t{cq.x - (c * cp.x - s * cp.y), cq.y - (s * cp.x + c * cp.y)};
        double j = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 qb{xq[i].x - t.x, xq[i].y - t.y};
            const Point2 qrot{c * qb.x + s * qb.y, -s * qb.x + c * qb.y}; // r(theta)^T qb
            const Point2 mu{wq * xp[i].x + wp * qrot.x, wq * xp[i].y + wp * qrot.y};
            const double rpx = xp[i].x - mu.x, rpy = xp[i].y - mu.y;
            const double mx = c * mu.x - s * mu.y + t.x, my = s * mu.x + c * mu.y + t.y;
            const double rqx = xq[i].x - mx, rqy = xq[i].y - my;
            if (sp2 > 0.0) j += (rpx * rpx + rpy * rpy) / sp2;
            if (sq2 > 0.0) j += (rqx * rqx + rqy * rqy) / sq2;
        }
        best = std::min(best, j);
    }
    return best;
}

// Circumcircle test by direct construction: center from the perpendicular
// bisector equations, then a guarded radius comparison.
struct Circumcircle {
    Point2 center;
    double radius2;
    bool ok;
};

inline Circumcircle circumcircle(const Point2& a, const Point2& b, const Point2& c) {
    const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if (d == 0.0) return {{}, 0.0, false};
    const double a2 = a.x * a.x + a.y * a.y;
    const double b2 = b.x * b.x + b.y * b.y;
    const double c2 = c.x * c.x + c.y * c.y;
    Circumcircle out;
    out.center = {(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
                  (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
    out.radius2 = mapfuse::norm2(a - out.center);
    out.ok = true;
    return out;
}

// True when no point of `pts` other than the triangle's own vertices lies
// strictly inside the circumcircle (relative slack for roundoff).
inline bool empty_circumcircle(const std::vector<Point2>& pts, std::size_t ia, std::size_t ib,
                               std::size_t ic, double rel_tol = 1e-9) {
    const Circumcircle cc = circumcircle(pts[ia], pts[ib], pts[ic]);
    if (!cc.ok) return false;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k == ia || k == ib || k == ic) continue;
        if (mapfuse::norm2(pts[k] - cc.center) < cc.radius2 * (1.0 - rel_tol)) return false;
    }
    return true;
}

// Exhaustive max-weight assignment over all permutations (small n).
inline double brute_force_assignment_max(const std::vector<double>& w, std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w[i * n + perm[i]];
        best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Convex hull vertex count by gift wrapping (collinear hull points skipped).
inline std::size_t hull_vertex_count(const std::vector<Point2>& pts) {
    const std::size_t n = pts.size();
    std::size_t start = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (pts[i].x < pts[start].x || (pts[i].x == pts[start].x && pts[i].y < pts[start].y))
            start = i;
    std::size_t count = 0, cur = start;
    do {
        ++count;
        std::size_t next = (cur + 1) % n;
        for (std::size_t cand = 0; cand < n; ++cand) {
            if (cand == cur) continue;
            const double cr = mapfuse::cross(pts[next] - pts[cur], pts[cand] - pts[cur]);
            if (cr < 0.0 ||
                (cr == 0.0 && mapfuse::norm2(pts[cand] - pts[cur]) > mapfuse::norm2(pts[next] - pts[cur])))
                next = cand;
        }
        cur = next;
    } while (cur != start && count <= n);
    return count;
}

inline std::vector<Point2> random_points(mapfuse::RandomStream& rng, std::size_t n, double extent) {
    std::vector<Point2> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.emplace_back(rng.uniform(0.0, extent), rng.uniform(0.0, extent));
    return pts;
}

} // namespace oracles
