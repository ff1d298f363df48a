#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mapfuse/alignment.hpp"
#include "mapfuse/assignment.hpp"
#include "mapfuse/common.hpp"
#include "mapfuse/geometry.hpp"
#include "mapfuse/hypergraph.hpp"
#include "mapfuse/map_model.hpp"
#include "mapfuse/parallel.hpp"

namespace mapfuse {

// One scored triangle pair. lambda is the generalized likelihood ratio
// exp(-j1_min/2) in (0, 1]; 1 means the two triangles are exactly rigidly
// consistent. theta/t are the pair's own transform MLEs. theta_sigma/t_sigma
// are first-order standard deviations of those MLEs under the noise model;
// the consensus step uses them to decide whether a cluster's scatter is
// explained by measurement noise. degenerate flags pairs whose alignment was
// unobservable (lambda forced to 0).
struct ScoredPair {
    std::size_t i = 0; // index into E_p
    std::size_t j = 0; // index into E_q
    double lambda = 0.0;
    double theta = 0.0;
    Point2 t{};
    double theta_sigma = 0.0;
    double t_sigma = 0.0;
    bool degenerate = false;
};

inline std::array<Point2, 3> triangle_coords(const DirectedTriangle& tri,
                                             const std::unordered_map<std::int64_t, Point2>& pos) {
    std::array<Point2, 3> out;
    const std::int64_t ids[3] = {tri.a, tri.b, tri.c};
    for (int k = 0; k < 3; ++k) {
        const auto it = pos.find(ids[k]);
        require(it != pos.end(), "triangle vertex id " + std::to_string(ids[k]) + " not in map");
        out[k] = it->second;
    }
    return out;
}

// Generalized likelihood ratio for one directed triangle pair, vertices
// matched positionally (a-a, b-b, c-c). Under the uncommon-triangle
// hypothesis every mean is free, so the denominator's maximized likelihood
// has zero residual and the ratio reduces to exp(-j1_min/2) with j1_min the
// minimized common-triangle cost from the closed-form alignment.
inline ScoredPair glr_statistic(const std::array<Point2, 3>& y_p, const std::array<Point2, 3>& y_q,
                                double sigma_p2, double sigma_q2) {
    ScoredPair sp;
    const std::vector<Point2> xp(y_p.begin(), y_p.end());
    const std::vector<Point2> xq(y_q.begin(), y_q.end());
    AlignmentEstimate est;
    try {
        est = align_matched_points(xp, xq, sigma_p2, sigma_q2);
    } catch (const DegenerateGeometryError&) {
        sp.degenerate = true;
        sp.lambda = 0.0;
        return sp;
    }
    sp.lambda = std::exp(-0.5 * est.j1_min);
    sp.theta = est.theta_star;
    sp.t = est.t_star;

    const auto [cp, p_cent] = centroid_center(xp);
    double spread2 = 0.0;
    for (const Point2& d : p_cent) spread2 += norm2(d);
    const double sigma_c2 = sigma_p2 + sigma_q2;
    const double var_theta = spread2 > 0.0 ? sigma_c2 / spread2 : 0.0;
    sp.theta_sigma = std::sqrt(var_theta);
    // t* = cq - r(theta*) cp: centroid noise plus the theta error levered by
    // the triangle centroid, split evenly over the two coordinates.
    sp.t_sigma = std::sqrt(sigma_c2 / 3.0 + norm2(cp) * var_theta / 2.0);
    return sp;
}

// Square score matrix of the triangle assignment problem, padded with zeros
// beyond the real index ranges so that padded assignments are worthless.
struct ScoreMatrix {
    std::size_t m = 0;  // max(|E_p|, |E_q|)
    std::size_t np = 0; // |E_p|
    std::size_t nq = 0; // |E_q|
    std::vector<double> f;         // m x m, row-major
    std::vector<ScoredPair> pairs; // np x nq sidecar of per-pair MLEs

    double at(std::size_t i, std::size_t j) const { return f[i * m + j]; }
    const ScoredPair& pair(std::size_t i, std::size_t j) const { return pairs[i * nq + j]; }
};

// Fills the GLR score matrix for two hypergraphs. Entries are data-parallel
// over rows; every (i, j) is written exactly once, so the result does not
// depend on the worker count. band >= 0 restricts scoring to entries with
// |i - j| <= band (perimeter ranks are aligned when both maps see mostly the
// same triangles); entries outside the band keep score zero.
inline ScoreMatrix score_matrix(const TriangleHypergraph& g_p, const TriangleHypergraph& g_q,
                                const StochasticMap& map_p, const StochasticMap& map_q,
                                long band = -1, unsigned threads = 1) {
    require(!g_p.edges.empty() && !g_q.edges.empty(), "score_matrix: empty hypergraph");
    ScoreMatrix c;
    c.np = g_p.edges.size();
    c.nq = g_q.edges.size();
    c.m = std::max(c.np, c.nq);
    c.f.assign(c.m * c.m, 0.0);
    c.pairs.assign(c.np * c.nq, ScoredPair{});

    const auto pos_p = map_p.position_by_id();
    const auto pos_q = map_q.position_by_id();
    std::vector<std::array<Point2, 3>> tri_p(c.np), tri_q(c.nq);
    for (std::size_t i = 0; i < c.np; ++i) tri_p[i] = triangle_coords(g_p.edges[i], pos_p);
    for (std::size_t j = 0; j < c.nq; ++j) tri_q[j] = triangle_coords(g_q.edges[j], pos_q);

    const double sp2 = map_p.noise_var, sq2 = map_q.noise_var;
    parallel_for_ranges(c.np, threads, [&](std::size_t ib, std::size_t ie) {
        for (std::size_t i = ib; i < ie; ++i) {
            for (std::size_t j = 0; j < c.nq; ++j) {
                if (band >= 0 &&
                    std::llabs(static_cast<long long>(i) - static_cast<long long>(j)) > band)
                    continue;
                ScoredPair sp = glr_statistic(tri_p[i], tri_q[j], sp2, sq2);
                sp.i = i;
                sp.j = j;
                c.f[i * c.m + j] = sp.lambda;
                c.pairs[i * c.nq + j] = sp;
            }
        }
    });
    return c;
}

// One-to-one triangle assignment maximizing the summed score. Pairs that land
// on padded rows/columns are dropped; the result is a partial permutation
// over the real triangle index ranges, sorted by i.
inline std::vector<std::pair<std::size_t, std::size_t>> solve_assignment(const ScoreMatrix& c) {
    const std::vector<std::size_t> row_to_col = max_weight_assignment(c.f, c.m);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < c.np; ++i)
        if (row_to_col[i] < c.nq) out.emplace_back(i, row_to_col[i]);
    return out;
}

// Triangle matches surviving consensus rejection, with the consensus
// transform of the survivors.
struct InlierSet {
    std::vector<ScoredPair> accepted;
    double consensus_theta = 0.0;
    Point2 consensus_t{};
    std::size_t iterations = 0;
    bool converged = false;      // pooled variance reached the threshold
    double pooled_variance = 0.0;
    std::vector<double> pooled_history; // pooled variance before each round
};

namespace detail {

inline double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (n % 2 == 1) return *mid;
    const double hi = *mid;
    auto lo_it = std::max_element(v.begin(), mid);
    return 0.5 * (*lo_it + hi);
}

// 1.4826 * MAD: consistent with the standard deviation under normality.
inline double robust_scale(const std::vector<double>& v) {
    const double med = median_of(v);
    std::vector<double> dev(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) dev[k] = std::fabs(v[k] - med);
    return 1.4826 * median_of(dev);
}

} // namespace detail

// Consensus filter over per-pair transform MLEs.
//
// Each round computes the survivors' consensus (arithmetic mean of t,
// unit-vector circular mean of theta) and removes the pair farthest from it,
// where distance mixes the three dimensions after standardizing each by its
// robust scale (1.4826 * median absolute deviation, theta deviations wrapped).
// Rounds continue until the pooled noise-standardized variance -- squared
// deviations divided by the pairs' own estimator variances, averaged over
// survivors and dimensions -- drops to var_threshold, or only min_inliers
// remain. A set whose scatter noise cannot explain therefore ends
// unconverged, which is what fusion reports as "no consensus". Iteration
// count is bounded by the input size.
inline InlierSet reject_outliers(const std::vector<ScoredPair>& scored, double var_threshold,
                                 std::size_t min_inliers) {
    require(min_inliers >= 1, "reject_outliers: min_inliers must be >= 1");
    require(scored.size() >= min_inliers,
            "reject_outliers: need at least " + std::to_string(min_inliers) + " scored pairs, got " +
                std::to_string(scored.size()));

    InlierSet result;
    std::vector<ScoredPair> work = scored;
    while (true) {
        const std::size_t n = work.size();
        double sx = 0.0, sy = 0.0, cs = 0.0, sn = 0.0;
        for (const ScoredPair& p : work) {
            sx += p.t.x;
            sy += p.t.y;
            cs += std::cos(p.theta);
            sn += std::sin(p.theta);
        }
        const Point2 t_mean{sx / static_cast<double>(n), sy / static_cast<double>(n)};
        const double theta_mean = (cs == 0.0 && sn == 0.0) ? 0.0 : std::atan2(sn, cs);

        std::vector<double> dx(n), dy(n), dth(n);
        for (std::size_t k = 0; k < n; ++k) {
            dx[k] = work[k].t.x - t_mean.x;
            dy[k] = work[k].t.y - t_mean.y;
            dth[k] = wrap_angle(work[k].theta - theta_mean);
        }

        const double t_floor = 1e-12 * (1.0 + norm(t_mean));
        double pooled = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double st = std::max(work[k].t_sigma, t_floor);
            const double sth = std::max(work[k].theta_sigma, 1e-12);
            pooled += (dx[k] * dx[k] + dy[k] * dy[k]) / (st * st) + (dth[k] / sth) * (dth[k] / sth);
        }
        pooled /= 3.0 * static_cast<double>(n);

        result.consensus_theta = theta_mean;
        result.consensus_t = t_mean;
        result.pooled_variance = pooled;
        result.pooled_history.push_back(pooled);
        if (pooled <= var_threshold) {
            result.converged = true;
            break;
        }
        if (n <= min_inliers) {
            result.converged = false;
            break;
        }

        const double rx = std::max(detail::robust_scale(dx), t_floor);
        const double ry = std::max(detail::robust_scale(dy), t_floor);
        const double rth = std::max(detail::robust_scale(dth), 1e-12);
        std::size_t worst = 0;
        double worst_d = -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double d =
                (dx[k] / rx) * (dx[k] / rx) + (dy[k] / ry) * (dy[k] / ry) + (dth[k] / rth) * (dth[k] / rth);
            if (d > worst_d) {
                worst_d = d;
                worst = k;
            }
        }
        work.erase(work.begin() + static_cast<std::ptrdiff_t>(worst));
        ++result.iterations;
    }
    result.accepted = std::move(work);
    return result;
}

// Landmark correspondence implied by the inlier triangles: Groth order pairs
// vertices positionally, each pairing weighted by the cumulative lambda of
// the triangles supporting it. Conflicting pairings (one id proposed with two
// partners) are resolved greedily in favor of the heavier pairing.
inline Correspondence correspondences_from_inliers(const InlierSet& inliers,
                                                   const TriangleHypergraph& g_p,
                                                   const TriangleHypergraph& g_q) {
    require(!inliers.accepted.empty(), "correspondences_from_inliers: empty inlier set");
    struct Cand {
        std::int64_t ip, iq;
        double weight;
    };
    std::unordered_map<std::int64_t, std::unordered_map<std::int64_t, double>> cum;
    for (const ScoredPair& sp : inliers.accepted) {
        const DirectedTriangle& tp = g_p.edges.at(sp.i);
        const DirectedTriangle& tq = g_q.edges.at(sp.j);
        cum[tp.a][tq.a] += sp.lambda;
        cum[tp.b][tq.b] += sp.lambda;
        cum[tp.c][tq.c] += sp.lambda;
    }
    std::vector<Cand> cands;
    for (const auto& [ip, partners] : cum)
        for (const auto& [iq, w] : partners) cands.push_back({ip, iq, w});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(b.weight, a.ip, a.iq) < std::tie(a.weight, b.ip, b.iq);
    });
    Correspondence corr;
    std::unordered_set<std::int64_t> used_p, used_q;
    for (const Cand& cd : cands) {
        if (used_p.count(cd.ip) || used_q.count(cd.iq)) continue;
        used_p.insert(cd.ip);
        used_q.insert(cd.iq);
        corr.pairs.emplace_back(cd.ip, cd.iq);
    }
    std::sort(corr.pairs.begin(), corr.pairs.end());
    return corr;
}

// Augments a correspondence with matches missed by the triangle stage:
// unmatched q landmarks are carried into frame p by the estimated transform,
// then mutually nearest unmatched landmarks within
// gate_sigmas * sqrt(sigma_p2 + sigma_q2) are paired, repeatedly until no
// pair qualifies. The enlarged correspondence stays one-to-one; callers
// re-run the alignment afterwards.
inline Correspondence recover_missed(const StochasticMap& map_p, const StochasticMap& map_q,
                                     const Correspondence& corr, const AlignmentEstimate& est,
                                     double gate_sigmas) {
    std::unordered_set<std::int64_t> matched_p, matched_q;
    for (const auto& [ip, iq] : corr.pairs) {
        matched_p.insert(ip);
        matched_q.insert(iq);
    }
    std::vector<Landmark> free_p, free_q;
    for (const Landmark& lm : map_p.landmarks)
        if (!matched_p.count(lm.id)) free_p.push_back(lm);
    const Rigid2 g(est.theta_star, est.t_star);
    double coord_scale = 1.0;
    for (const Landmark& lm : map_q.landmarks) {
        if (!matched_q.count(lm.id)) free_q.push_back({lm.id, g.apply_inverse(lm.pos)});
    }
    for (const Landmark& lm : map_p.landmarks)
        coord_scale = std::max({coord_scale, std::fabs(lm.pos.x), std::fabs(lm.pos.y)});

    // Small absolute slack keeps exactly-overlapping landmarks (zero-noise
    // maps) inside a nominally zero gate despite rounding in the transform.
    const double gate = std::max(gate_sigmas * std::sqrt(map_p.noise_var + map_q.noise_var),
                                 1e-9 * coord_scale);

    Correspondence out = corr;
    bool added = true;
    while (added && !free_p.empty() && !free_q.empty()) {
        added = false;
        std::vector<std::size_t> nearest_q_of_p(free_p.size());
        for (std::size_t a = 0; a < free_p.size(); ++a) {
            std::size_t best = 0;
            double bd = dist(free_p[a].pos, free_q[0].pos);
            for (std::size_t b = 1; b < free_q.size(); ++b) {
                const double d = dist(free_p[a].pos, free_q[b].pos);
                if (d < bd) {
                    bd = d;
                    best = b;
                }
            }
            nearest_q_of_p[a] = best;
        }
        std::vector<char> take_p(free_p.size(), 0), take_q(free_q.size(), 0);
        for (std::size_t b = 0; b < free_q.size(); ++b) {
            std::size_t best = 0;
            double bd = dist(free_q[b].pos, free_p[0].pos);
            for (std::size_t a = 1; a < free_p.size(); ++a) {
                const double d = dist(free_q[b].pos, free_p[a].pos);
                if (d < bd) {
                    bd = d;
                    best = a;
                }
            }
            if (nearest_q_of_p[best] == b && bd <= gate) {
                out.pairs.emplace_back(free_p[best].id, free_q[b].id);
                take_p[best] = 1;
                take_q[b] = 1;
                added = true;
            }
        }
        if (added) {
            std::vector<Landmark> np, nq;
            for (std::size_t a = 0; a < free_p.size(); ++a)
                if (!take_p[a]) np.push_back(free_p[a]);
            for (std::size_t b = 0; b < free_q.size(); ++b)
                if (!take_q[b]) nq.push_back(free_q[b]);
            free_p = std::move(np);
            free_q = std::move(nq);
        }
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    return out;
}

struct PipelineConfig {
    double var_threshold = 1.0;  // consensus pooled-variance acceptance level
    std::size_t min_inliers = 3; // smallest surviving triangle set
    double gate_sigmas = 3.0;    // missed-detection gate, in noise sigmas
    long band = -1;              // optional band pruning of the score matrix
    unsigned threads = 1;
};

struct FusionDiagnostics {
    std::size_t edges_p = 0;
    std::size_t edges_q = 0;
    std::size_t dropped_p = 0;
    std::size_t dropped_q = 0;
    std::size_t assignment_size = 0;
    std::size_t scored_pairs = 0;
    std::size_t inlier_count = 0;
    std::size_t outlier_iterations = 0;
    double pooled_variance = 0.0;
    std::size_t corr_initial = 0;
    std::size_t corr_final = 0;
    double j1_min = 0.0;
};

struct FusionResult {
    FusedMap fused;
    AlignmentEstimate estimate;
    Correspondence correspondence;
    FusionDiagnostics diagnostics;
};

// End-to-end fusion: hypergraphs -> GLR scores -> assignment -> consensus ->
// landmark correspondence -> alignment -> missed-detection recovery ->
// final alignment -> combined map. Throws NoConsensusError when the triangle
// matches never cluster (the signature of environments with many equally
// likely triangles), so callers can tell that outcome from data errors.
inline FusionResult fuse_pipeline(const StochasticMap& map_p, const StochasticMap& map_q,
                                  const PipelineConfig& cfg = {}) {
    map_p.validate();
    map_q.validate();
    require(map_p.landmarks.size() >= 3 && map_q.landmarks.size() >= 3,
            "fuse: both maps need at least 3 landmarks");

    FusionResult r;
    const TriangleHypergraph g_p = build_hypergraph(map_p);
    const TriangleHypergraph g_q = build_hypergraph(map_q);
    r.diagnostics.edges_p = g_p.edges.size();
    r.diagnostics.edges_q = g_q.edges.size();
    r.diagnostics.dropped_p = g_p.dropped_degenerate;
    r.diagnostics.dropped_q = g_q.dropped_degenerate;
    if (g_p.edges.empty() || g_q.edges.empty())
        throw DegenerateGeometryError("fuse: a map produced no usable directed triangles");

    const ScoreMatrix c = score_matrix(g_p, g_q, map_p, map_q, cfg.band, cfg.threads);
    const auto assigned = solve_assignment(c);
    r.diagnostics.assignment_size = assigned.size();

    std::vector<ScoredPair> scored;
    scored.reserve(assigned.size());
    for (const auto& [i, j] : assigned) {
        const ScoredPair& sp = c.pair(i, j);
        if (!sp.degenerate) scored.push_back(sp);
    }
    r.diagnostics.scored_pairs = scored.size();
    if (scored.size() < cfg.min_inliers)
        throw NoConsensusError("fusion failed: no consensus (" + std::to_string(scored.size()) +
                               " usable triangle matches, need " + std::to_string(cfg.min_inliers) +
                               ")");

    const InlierSet inliers = reject_outliers(scored, cfg.var_threshold, cfg.min_inliers);
    r.diagnostics.inlier_count = inliers.accepted.size();
    r.diagnostics.outlier_iterations = inliers.iterations;
    r.diagnostics.pooled_variance = inliers.pooled_variance;
    if (!inliers.converged)
        throw NoConsensusError("fusion failed: no consensus (transform estimates never clustered; "
                               "pooled variance " + std::to_string(inliers.pooled_variance) + ")");

    Correspondence corr = correspondences_from_inliers(inliers, g_p, g_q);
    r.diagnostics.corr_initial = corr.pairs.size();
    AlignmentEstimate est = align_mle(map_p, map_q, corr);
    corr = recover_missed(map_p, map_q, corr, est, cfg.gate_sigmas);
    est = align_mle(map_p, map_q, corr);
    r.diagnostics.corr_final = corr.pairs.size();
    r.diagnostics.j1_min = est.j1_min;

    r.fused = combine_maps(map_p, map_q, corr, est);
    r.estimate = std::move(est);
    r.correspondence = std::move(corr);
    return r;
}

} // namespace mapfuse
