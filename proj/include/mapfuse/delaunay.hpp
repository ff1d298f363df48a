#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapfuse/common.hpp"
#include "mapfuse/geometry.hpp"
#include "mapfuse/predicates.hpp"

namespace mapfuse {

// A triangle of the output triangulation, as indices into the input point
// list, in counterclockwise order.
using TriangleIndices = std::array<std::size_t, 3>;

namespace detail {

// Incremental Bowyer-Watson triangulation over a finite vertex set plus one
// infinite vertex. Infinite triangles (hull edge, INF) close the structure so
// the conflict region of a new point is always a nonempty edge-connected disk,
// points outside or on the current hull included. All conflict decisions go
// through the exact perturbed predicates, which makes the result unique and
// independent of insertion order.
class DelaunayBuilder {
    static constexpr int kInf = -1;

    struct Tri {
        int v[3];  // vertex indices, kInf allowed, counterclockwise cyclic order
        int nb[3]; // nb[i] faces edge (v[i+1], v[i+2])
        bool alive = true;
    };

public:
    DelaunayBuilder(const std::vector<Point2>& pts, const std::vector<std::int64_t>& ids)
        : pts_(pts), ids_(ids) {}

    std::vector<TriangleIndices> run() {
        const std::size_t n = pts_.size();
        if (n < 3) throw DegenerateGeometryError("triangulation requires at least 3 points");
        check_duplicates();

        // Seed triangle: the first two points plus the first point not
        // collinear with them.
        std::size_t k = 2;
        int ori = 0;
        for (; k < n; ++k) {
            ori = predicates::orient2d_sign(pts_[0], pts_[1], pts_[k]);
            if (ori != 0) break;
        }
        if (k == n) throw DegenerateGeometryError("triangulation undefined: all points are collinear");

        int a = 0, b = 1, c = static_cast<int>(k);
        if (ori < 0) std::swap(b, c);
        make_initial(a, b, c);

        for (std::size_t i = 2; i < n; ++i) {
            if (i == k) continue;
            insert(static_cast<int>(i));
        }

        std::vector<TriangleIndices> out;
        for (const Tri& t : tris_) {
            if (!t.alive || t.v[0] == kInf || t.v[1] == kInf || t.v[2] == kInf) continue;
            TriangleIndices tri{static_cast<std::size_t>(t.v[0]),
                                static_cast<std::size_t>(t.v[1]),
                                static_cast<std::size_t>(t.v[2])};
            // canonical rotation: smallest index first, orientation preserved
            std::size_t lo = 0;
            if (tri[1] < tri[lo]) lo = 1;
            if (tri[2] < tri[lo]) lo = 2;
            out.push_back({tri[lo], tri[(lo + 1) % 3], tri[(lo + 2) % 3]});
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    void check_duplicates() const {
        std::vector<std::size_t> idx(pts_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
            if (pts_[i].x != pts_[j].x) return pts_[i].x < pts_[j].x;
            return pts_[i].y < pts_[j].y;
        });
        for (std::size_t i = 1; i < idx.size(); ++i) {
            if (pts_[idx[i - 1]] == pts_[idx[i]])
                throw DataError("triangulation input has coincident points (ids " +
                                std::to_string(ids_[idx[i - 1]]) + " and " +
                                std::to_string(ids_[idx[i]]) + ")");
        }
    }

    void make_initial(int a, int b, int c) {
        // finite (a,b,c) plus three infinite triangles, one per hull edge
        tris_.push_back({{a, b, c}, {2, 3, 1}, true});      // 0
        tris_.push_back({{b, a, kInf}, {3, 2, 0}, true});   // 1, across (a,b)
        tris_.push_back({{c, b, kInf}, {1, 3, 0}, true});   // 2, across (b,c)
        tris_.push_back({{a, c, kInf}, {2, 1, 0}, true});   // 3, across (c,a)
    }

    std::int64_t id_of(int v) const { return ids_[static_cast<std::size_t>(v)]; }
    const Point2& pt(int v) const { return pts_[static_cast<std::size_t>(v)]; }

    static bool strictly_between_collinear(const Point2& u, const Point2& v, const Point2& p) {
        if (std::fabs(u.x - v.x) >= std::fabs(u.y - v.y)) {
            const double lo = std::min(u.x, v.x), hi = std::max(u.x, v.x);
            return lo < p.x && p.x < hi;
        }
        const double lo = std::min(u.y, v.y), hi = std::max(u.y, v.y);
        return lo < p.y && p.y < hi;
    }

    bool in_conflict(const Tri& t, int p) const {
        int infpos = -1;
        for (int i = 0; i < 3; ++i)
            if (t.v[i] == kInf) infpos = i;
        if (infpos < 0) {
            return predicates::incircle_perturbed(pt(t.v[0]), id_of(t.v[0]), pt(t.v[1]),
                                                  id_of(t.v[1]), pt(t.v[2]), id_of(t.v[2]),
                                                  pt(p), id_of(p)) > 0;
        }
        const int u = t.v[(infpos + 1) % 3];
        const int w = t.v[(infpos + 2) % 3];
        const int o = predicates::orient2d_sign(pt(u), pt(w), pt(p));
        if (o > 0) return true;
        if (o < 0) return false;
        // p on the supporting line of a hull edge: in conflict only if it
        // falls strictly inside the edge (it then also conflicts with the
        // finite triangle behind the edge, and becomes a hull vertex).
        return strictly_between_collinear(pt(u), pt(w), pt(p));
    }

    void insert(int p) {
        // seed: any triangle in conflict with p
        int seed = -1;
        for (std::size_t ti = 0; ti < tris_.size(); ++ti) {
            if (tris_[ti].alive && in_conflict(tris_[ti], p)) {
                seed = static_cast<int>(ti);
                break;
            }
        }
        require(seed >= 0, "triangulation insertion failed to locate point");

        // grow the conflict cavity by adjacency
        std::vector<int> cavity{seed};
        std::vector<char> in_cavity(tris_.size(), 0);
        in_cavity[seed] = 1;
        for (std::size_t qi = 0; qi < cavity.size(); ++qi) {
            const Tri t = tris_[cavity[qi]];
            for (int e = 0; e < 3; ++e) {
                const int nbi = t.nb[e];
                if (nbi < 0 || in_cavity[nbi]) continue;
                if (in_conflict(tris_[nbi], p)) {
                    in_cavity[nbi] = 1;
                    cavity.push_back(nbi);
                }
            }
        }

        // boundary edges, directed as stored in their cavity triangle
        struct Boundary {
            int u, w, outside;
        };
        std::vector<Boundary> boundary;
        for (int ci : cavity) {
            const Tri& t = tris_[ci];
            for (int e = 0; e < 3; ++e) {
                const int nbi = t.nb[e];
                if (nbi >= 0 && in_cavity[nbi]) continue;
                boundary.push_back({t.v[(e + 1) % 3], t.v[(e + 2) % 3], nbi});
            }
        }

        for (int ci : cavity) tris_[ci].alive = false;

        // fan the cavity from p; each boundary edge (u,w) spawns (u,w,p)
        std::unordered_map<int, int> tri_starting_at, tri_ending_at;
        std::vector<int> created;
        created.reserve(boundary.size());
        for (const Boundary& be : boundary) {
            const int ni = static_cast<int>(tris_.size());
            tris_.push_back({{be.u, be.w, p}, {-1, -1, be.outside}, true});
            if (be.outside >= 0) set_neighbor(be.outside, be.u, be.w, ni);
            tri_starting_at[be.u] = ni;
            tri_ending_at[be.w] = ni;
            created.push_back(ni);
        }
        for (int ni : created) {
            Tri& t = tris_[ni];
            t.nb[0] = tri_starting_at.at(t.v[1]); // across (w, p)
            t.nb[1] = tri_ending_at.at(t.v[0]);   // across (p, u)
        }
    }

    // point the neighbor link of `ti` that faces undirected edge {u, w} at `val`
    void set_neighbor(int ti, int u, int w, int val) {
        Tri& t = tris_[ti];
        for (int e = 0; e < 3; ++e) {
            const int x = t.v[(e + 1) % 3], y = t.v[(e + 2) % 3];
            if ((x == u && y == w) || (x == w && y == u)) {
                t.nb[e] = val;
                return;
            }
        }
        require(false, "triangulation adjacency inconsistency");
    }

    const std::vector<Point2>& pts_;
    const std::vector<std::int64_t>& ids_;
    std::vector<Tri> tris_;
};

} // namespace detail

// Delaunay triangulation of a planar point set: every returned triangle's
// circumcircle has no input point strictly inside it, and the triangles
// cover the convex hull. Cocircular ties are broken deterministically by the
// accompanying ids. Throws DegenerateGeometryError for fewer than 3 points or
// fully collinear input, DataError for coincident points.
inline std::vector<TriangleIndices> delaunay_triangulate(const std::vector<Point2>& points,
                                                         const std::vector<std::int64_t>& ids) {
    require(points.size() == ids.size(), "delaunay_triangulate: points/ids size mismatch");
    return detail::DelaunayBuilder(points, ids).run();
}

} // namespace mapfuse
