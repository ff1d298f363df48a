#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "mapfuse/common.hpp"
#include "mapfuse/delaunay.hpp"
#include "mapfuse/geometry.hpp"
#include "mapfuse/map_model.hpp"

namespace mapfuse {

// A Delaunay triangle in the directed (Groth) labeling: the unique vertex
// order a, b, c with ||a-b|| < ||b-c|| < ||c-a||. The labeling depends only
// on edge lengths, so it is invariant under rigid motion of the map; a common
// triangle observed in two frames gets the same vertex order in both, which
// is what turns triangle matches into landmark-level correspondences.
struct DirectedTriangle {
    std::int64_t a = 0, b = 0, c = 0;
    std::array<double, 3> edge_lengths{}; // ||a-b||, ||b-c||, ||c-a||
    double perimeter = 0.0;
};

struct TriangleHypergraph {
    std::vector<std::int64_t> vertices;    // landmark ids, ascending
    std::vector<DirectedTriangle> edges;   // ascending perimeter
    std::size_t dropped_degenerate = 0;    // triangles lost to edge-length ties
};

// Relative tolerance under which two edge lengths count as tied. Ties violate
// the strict Groth inequality; such triangles carry no usable direction.
inline constexpr double kGrothTieRelTol = 1e-9;

// Orders the vertices of one triangle by the Groth convention. Throws
// DegenerateGeometryError for duplicate or collinear points and for
// edge-length ties within kGrothTieRelTol relative.
inline DirectedTriangle groth_order(const Landmark& p1, const Landmark& p2, const Landmark& p3) {
    struct E {
        double len;
        int i, j; // vertex slots 0..2
    };
    const Landmark* v[3] = {&p1, &p2, &p3};
    if (cross(v[1]->pos - v[0]->pos, v[2]->pos - v[0]->pos) == 0.0)
        throw DegenerateGeometryError("groth_order: degenerate (collinear or coincident) triangle");

    E e[3] = {{dist(p1.pos, p2.pos), 0, 1},
              {dist(p2.pos, p3.pos), 1, 2},
              {dist(p3.pos, p1.pos), 2, 0}};
    std::sort(e, e + 3, [](const E& x, const E& y) { return x.len < y.len; });
    const double tie = kGrothTieRelTol * e[2].len;
    if (e[1].len - e[0].len <= tie || e[2].len - e[1].len <= tie)
        throw DegenerateGeometryError("groth_order: triangle has (near-)equal edge lengths");

    // shortest edge = (a,b), middle = (b,c), longest = (c,a)
    auto shares = [](const E& x, const E& y, int slot) {
        return (x.i == slot || x.j == slot) && (y.i == slot || y.j == slot);
    };
    int sa = -1, sb = -1, sc = -1;
    for (int slot = 0; slot < 3; ++slot) {
        if (shares(e[0], e[2], slot)) sa = slot;
        if (shares(e[0], e[1], slot)) sb = slot;
        if (shares(e[1], e[2], slot)) sc = slot;
    }

    DirectedTriangle t;
    t.a = v[sa]->id;
    t.b = v[sb]->id;
    t.c = v[sc]->id;
    t.edge_lengths = {dist(v[sa]->pos, v[sb]->pos), dist(v[sb]->pos, v[sc]->pos),
                      dist(v[sc]->pos, v[sa]->pos)};
    t.perimeter = t.edge_lengths[0] + t.edge_lengths[1] + t.edge_lengths[2];
    return t;
}

// Directed hypergraph of a map: Groth-ordered Delaunay triangles sorted by
// ascending perimeter (ties broken by vertex ids). Triangles dropped for
// edge-length ties are counted, not fatal; Delaunay failures propagate.
inline TriangleHypergraph build_hypergraph(const StochasticMap& map) {
    map.validate();
    const auto pts = map.positions();
    const auto ids = map.ids();
    const auto tris = delaunay_triangulate(pts, ids);

    TriangleHypergraph g;
    g.vertices = ids;
    std::sort(g.vertices.begin(), g.vertices.end());
    for (const TriangleIndices& t : tris) {
        try {
            g.edges.push_back(groth_order({ids[t[0]], pts[t[0]]}, {ids[t[1]], pts[t[1]]},
                                          {ids[t[2]], pts[t[2]]}));
        } catch (const DegenerateGeometryError&) {
            ++g.dropped_degenerate;
        }
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const DirectedTriangle& x, const DirectedTriangle& y) {
        return std::tie(x.perimeter, x.a, x.b, x.c) < std::tie(y.perimeter, y.a, y.b, y.c);
    });
    return g;
}

} // namespace mapfuse
