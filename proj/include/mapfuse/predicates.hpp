#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mapfuse/geometry.hpp"

// Exact-sign orientation and in-circle predicates.
//
// Each predicate first evaluates a floating-point filter with a forward error
// bound; when the filter cannot certify the sign, the determinant is
// re-evaluated exactly with multi-component expansion arithmetic
// (nonoverlapping sums of doubles). incircle_perturbed additionally resolves
// exactly cocircular inputs by a symbolic perturbation of the lifted
// coordinates ordered by landmark id, so no in-circle query is ever
// ambiguous and the triangulation built on top of these predicates is unique.

namespace mapfuse::predicates {

inline constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0; // 2^-53
inline constexpr double kCcwErrBoundA = (3.0 + 16.0 * kEps) * kEps;
inline constexpr double kIccErrBoundA = (10.0 + 96.0 * kEps) * kEps;
inline constexpr double kSplitter = 134217729.0; // 2^27 + 1

namespace detail {

using Expansion = std::vector<double>;

inline void two_sum(double a, double b, double& x, double& y) {
    x = a + b;
    const double bvirt = x - a;
    const double avirt = x - bvirt;
    y = (a - avirt) + (b - bvirt);
}

inline void split(double a, double& hi, double& lo) {
    const double c = kSplitter * a;
    const double abig = c - a;
    hi = c - abig;
    lo = a - hi;
}

inline void two_product(double a, double b, double& x, double& y) {
    x = a * b;
    double ahi, alo, bhi, blo;
    split(a, ahi, alo);
    split(b, bhi, blo);
    const double err1 = x - ahi * bhi;
    const double err2 = err1 - alo * bhi;
    const double err3 = err2 - ahi * blo;
    y = alo * blo - err3;
}

// e + b, zero components eliminated; components in increasing magnitude.
inline Expansion grow_expansion(const Expansion& e, double b) {
    Expansion h;
    h.reserve(e.size() + 1);
    double q = b;
    for (double ei : e) {
        double qnew, hh;
        two_sum(q, ei, qnew, hh);
        q = qnew;
        if (hh != 0.0) h.push_back(hh);
    }
    if (q != 0.0 || h.empty()) h.push_back(q);
    return h;
}

inline Expansion expansion_add(const Expansion& e, const Expansion& f) {
    Expansion h = e;
    for (double fi : f) h = grow_expansion(h, fi);
    return h;
}

inline Expansion expansion_scale(const Expansion& e, double b) {
    Expansion h;
    if (b == 0.0) return {0.0};
    h.reserve(2 * e.size());
    double q, hh;
    two_product(e[0], b, q, hh);
    if (hh != 0.0) h.push_back(hh);
    for (std::size_t i = 1; i < e.size(); ++i) {
        double p1, p0;
        two_product(e[i], b, p1, p0);
        double sum;
        two_sum(q, p0, sum, hh);
        if (hh != 0.0) h.push_back(hh);
        two_sum(p1, sum, q, hh);
        if (hh != 0.0) h.push_back(hh);
    }
    if (q != 0.0 || h.empty()) h.push_back(q);
    return h;
}

inline Expansion expansion_mul(const Expansion& e, const Expansion& f) {
    Expansion acc{0.0};
    for (double fi : f) acc = expansion_add(acc, expansion_scale(e, fi));
    return acc;
}

inline Expansion expansion_negate(Expansion e) {
    for (double& v : e) v = -v;
    return e;
}

inline int expansion_sign(const Expansion& e) {
    const double top = e.back(); // largest-magnitude component carries the sign
    return (top > 0.0) - (top < 0.0);
}

inline Expansion product_pair(double a, double b) {
    double x, y;
    two_product(a, b, x, y);
    if (y == 0.0) return {x};
    return {y, x};
}

// Exact expansion of det [[px,py,1],[qx,qy,1],[rx,ry,1]].
inline Expansion orient_expansion(const Point2& p, const Point2& q, const Point2& r) {
    Expansion d = product_pair(p.x, q.y);
    d = expansion_add(d, expansion_negate(product_pair(p.x, r.y)));
    d = expansion_add(d, expansion_negate(product_pair(p.y, q.x)));
    d = expansion_add(d, product_pair(p.y, r.x));
    d = expansion_add(d, product_pair(q.x, r.y));
    d = expansion_add(d, expansion_negate(product_pair(q.y, r.x)));
    return d;
}

// Exact expansion of |p|^2 = px^2 + py^2.
inline Expansion lift_expansion(const Point2& p) {
    return expansion_add(product_pair(p.x, p.x), product_pair(p.y, p.y));
}

} // namespace detail

// Sign of twice the signed area of (a, b, c): +1 counterclockwise,
// -1 clockwise, 0 collinear. Exact.
inline int orient2d_sign(const Point2& a, const Point2& b, const Point2& c) {
    const double detleft = (a.x - c.x) * (b.y - c.y);
    const double detright = (a.y - c.y) * (b.x - c.x);
    const double det = detleft - detright;
    double detsum;
    if (detleft > 0.0) {
        if (detright <= 0.0) return (det > 0.0) - (det < 0.0);
        detsum = detleft + detright;
    } else if (detleft < 0.0) {
        if (detright >= 0.0) return (det > 0.0) - (det < 0.0);
        detsum = -detleft - detright;
    } else {
        return (det > 0.0) - (det < 0.0);
    }
    const double errbound = kCcwErrBoundA * detsum;
    if (det >= errbound || -det >= errbound) return (det > 0.0) - (det < 0.0);
    return detail::expansion_sign(detail::orient_expansion(a, b, c));
}

// Sign of the lifted 4x4 in-circle determinant: with (a, b, c) counterclockwise,
// +1 means d lies strictly inside the circumcircle, 0 exactly on it. Exact.
inline int incircle_sign(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) +
                       clift * (adxbdy - bdxady);
    const double permanent = (std::fabs(bdxcdy) + std::fabs(cdxbdy)) * alift +
                             (std::fabs(cdxady) + std::fabs(adxcdy)) * blift +
                             (std::fabs(adxbdy) + std::fabs(bdxady)) * clift;
    const double errbound = kIccErrBoundA * permanent;
    if (det > errbound || -det > errbound) return (det > 0.0) - (det < 0.0);

    // Exact evaluation, cofactor expansion of the lifted determinant along the
    // |p|^2 column: L = za*O(b,c,d) - zb*O(a,c,d) + zc*O(a,b,d) - zd*O(a,b,c).
    using namespace detail;
    Expansion l = expansion_mul(lift_expansion(a), orient_expansion(b, c, d));
    l = expansion_add(l, expansion_negate(expansion_mul(lift_expansion(b), orient_expansion(a, c, d))));
    l = expansion_add(l, expansion_mul(lift_expansion(c), orient_expansion(a, b, d)));
    l = expansion_add(l, expansion_negate(expansion_mul(lift_expansion(d), orient_expansion(a, b, c))));
    return expansion_sign(l);
}

// In-circle with symbolic perturbation: exactly cocircular quadruples are
// resolved by conceptually lowering each lifted coordinate |p|^2 by a weight
// that decays with the point's id rank (smaller id = larger weight). The
// perturbed determinant keeps the sign of -s_i * O_i for the smallest-id
// point whose cofactor O_i is nonzero, where s = (+,-,+,-) over rows
// (a,b,c,d). Never returns 0 for four points that are not all collinear.
inline int incircle_perturbed(const Point2& a, std::int64_t ida,
                              const Point2& b, std::int64_t idb,
                              const Point2& c, std::int64_t idc,
                              const Point2& d, std::int64_t idd) {
    const int s0 = incircle_sign(a, b, c, d);
    if (s0 != 0) return s0;

    struct Row {
        std::int64_t id;
        int sign;
        const Point2* p[3];
    };
    const Row rows[4] = {
        {ida, +1, {&b, &c, &d}},
        {idb, -1, {&a, &c, &d}},
        {idc, +1, {&a, &b, &d}},
        {idd, -1, {&a, &b, &c}},
    };
    int order[4] = {0, 1, 2, 3};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            if (rows[order[j]].id < rows[order[i]].id) std::swap(order[i], order[j]);
    for (int k = 0; k < 4; ++k) {
        const Row& r = rows[order[k]];
        const int o = orient2d_sign(*r.p[0], *r.p[1], *r.p[2]);
        if (o != 0) return -r.sign * o;
    }
    return 0; // all four points collinear
}

} // namespace mapfuse::predicates
