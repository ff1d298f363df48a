#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mapfuse/common.hpp"
#include "mapfuse/geometry.hpp"
#include "mapfuse/map_model.hpp"

namespace mapfuse {

// One-to-one pairing of landmark ids between two maps: (id in map p, id in map q).
struct Correspondence {
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;

    void validate() const {
        std::unordered_set<std::int64_t> seen_p, seen_q;
        for (const auto& [ip, iq] : pairs) {
            require(seen_p.insert(ip).second,
                    "correspondence: id " + std::to_string(ip) + " in map p is paired twice");
            require(seen_q.insert(iq).second,
                    "correspondence: id " + std::to_string(iq) + " in map q is paired twice");
        }
    }
};

// Closed-form ML alignment of matched landmark lists.
//
// theta_star/t_star carry frame-p coordinates into frame q; mu_star are the
// fused common-landmark estimates in frame p. alpha, beta, gamma are the
// coefficients of the concentrated cost alpha*cos(theta) + beta*sin(theta) +
// gamma whose minimizer is theta_star; j1_min is the weighted squared error
// at the optimum (zero exactly when the two views are rigidly consistent).
struct AlignmentEstimate {
    double theta_star = 0.0;
    Point2 t_star{};
    std::vector<Point2> mu_star;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double j1_min = 0.0;
    std::size_t n_common = 0;
};

// Minimizer of alpha*cos(theta) + beta*sin(theta) over (-pi, pi].
// atan2(-beta, -alpha) points opposite the phase of the sinusoid, which is
// where the cosine form attains its minimum; the boundary minimizer at +-pi
// maps to +pi. Requires (alpha, beta) != (0, 0).
inline double mle_theta_from_coeffs(double alpha, double beta) {
    if (alpha == 0.0 && beta == 0.0)
        throw DegenerateGeometryError(
            "rotation unobservable: sinusoidal cost coefficients are both zero");
    return wrap_angle(std::atan2(-beta, -alpha));
}

// Weighted squared alignment error of a candidate (mu, t, theta):
//   (1/sigma_p2) sum ||xp1_i - mu_i||^2 + (1/sigma_q2) sum ||xq1_i - r(theta) mu_i - t||^2
inline double j1_cost(const std::vector<Point2>& mu, const Point2& t, double theta,
                      const std::vector<Point2>& xp1, const std::vector<Point2>& xq1,
                      double sigma_p2, double sigma_q2) {
    require(mu.size() == xp1.size() && xp1.size() == xq1.size(),
            "j1_cost: point list length mismatch");
    require(sigma_p2 > 0.0 && sigma_q2 > 0.0, "j1_cost: variances must be > 0");
    double rss_p = 0.0, rss_q = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        rss_p += norm2(xp1[i] - mu[i]);
        rss_q += norm2(xq1[i] - rotate_point(theta, mu[i]) - t);
    }
    return rss_p / sigma_p2 + rss_q / sigma_q2;
}

// Closed-form ML alignment of pre-matched point lists (xp1[i] pairs with
// xq1[i]). All estimator algebra runs in O(n) centroid form: subtracting the
// per-list centroid is the action of the centering projector, so no stacked
// 2n x 2n matrix is ever formed.
inline AlignmentEstimate align_matched_points(const std::vector<Point2>& xp1,
                                              const std::vector<Point2>& xq1, double sigma_p2,
                                              double sigma_q2) {
    require(xp1.size() == xq1.size(), "align: matched point lists differ in length");
    if (xp1.size() < 2)
        throw DegenerateGeometryError("align: at least 2 matched landmarks required");
    require(sigma_p2 >= 0.0 && sigma_q2 >= 0.0, "align: variances must be >= 0");

    const auto [cp, p_cent] = centroid_center(xp1);
    const auto [cq, q_cent] = centroid_center(xq1);

    AlignmentEstimate est;
    est.n_common = xp1.size();
    double sum_p2 = 0.0, sum_q2 = 0.0;
    for (std::size_t i = 0; i < xp1.size(); ++i) {
        est.alpha -= dot(q_cent[i], p_cent[i]);
        est.beta -= dot(q_cent[i], quarter_turn(p_cent[i]));
        sum_p2 += norm2(p_cent[i]);
        sum_q2 += norm2(q_cent[i]);
    }
    est.gamma = 0.5 * (sum_p2 + sum_q2);

    est.theta_star = mle_theta_from_coeffs(est.alpha, est.beta);
    est.t_star = cq - rotate_point(est.theta_star, cp);

    // mu*_i = xp_i - w (xp_i - cp) + w r(theta*)^T (xq_i - cq),
    // w = sigma_p2 / (sigma_p2 + sigma_q2); equal weights in the noiseless limit.
    const double var_sum = sigma_p2 + sigma_q2;
    const double w = var_sum > 0.0 ? sigma_p2 / var_sum : 0.5;
    est.mu_star.reserve(xp1.size());
    for (std::size_t i = 0; i < xp1.size(); ++i)
        est.mu_star.push_back(xp1[i] - p_cent[i] * w +
                              rotate_point(-est.theta_star, q_cent[i]) * w);

    double rss_p = 0.0, rss_q = 0.0;
    for (std::size_t i = 0; i < xp1.size(); ++i) {
        rss_p += norm2(xp1[i] - est.mu_star[i]);
        rss_q += norm2(xq1[i] - rotate_point(est.theta_star, est.mu_star[i]) - est.t_star);
    }
    // A zero-variance side pins mu* to its own observations, so its residual
    // is zero and contributes nothing; with both variances zero the residuals
    // enter unweighted.
    if (sigma_p2 > 0.0 && sigma_q2 > 0.0)
        est.j1_min = rss_p / sigma_p2 + rss_q / sigma_q2;
    else if (sigma_p2 > 0.0)
        est.j1_min = rss_p / sigma_p2;
    else if (sigma_q2 > 0.0)
        est.j1_min = rss_q / sigma_q2;
    else
        est.j1_min = rss_p + rss_q;
    return est;
}

// ML alignment of two maps under a known correspondence.
inline AlignmentEstimate align_mle(const StochasticMap& map_p, const StochasticMap& map_q,
                                   const Correspondence& corr) {
    corr.validate();
    if (corr.pairs.size() < 2)
        throw DataError("align: correspondence must contain at least 2 pairs (got " +
                        std::to_string(corr.pairs.size()) + ")");
    const auto pos_p = map_p.position_by_id();
    const auto pos_q = map_q.position_by_id();
    std::vector<Point2> xp1, xq1;
    xp1.reserve(corr.pairs.size());
    xq1.reserve(corr.pairs.size());
    for (const auto& [ip, iq] : corr.pairs) {
        const auto itp = pos_p.find(ip);
        require(itp != pos_p.end(), "align: id " + std::to_string(ip) + " not in map p");
        const auto itq = pos_q.find(iq);
        require(itq != pos_q.end(), "align: id " + std::to_string(iq) + " not in map q");
        xp1.push_back(itp->second);
        xq1.push_back(itq->second);
    }
    return align_matched_points(xp1, xq1, map_p.noise_var, map_q.noise_var);
}

// Combined global map and the origin of each fused landmark.
struct FusedMap {
    enum class Source { common, only_p, only_q };
    struct Entry {
        std::int64_t fused_id;
        Source source;
        std::int64_t id_p; // -1 when absent
        std::int64_t id_q; // -1 when absent
    };
    StochasticMap map;               // frame p
    std::vector<Entry> provenance;   // one entry per fused landmark, same order
};

inline const char* to_string(FusedMap::Source s) {
    switch (s) {
        case FusedMap::Source::common: return "common";
        case FusedMap::Source::only_p: return "only_p";
        default: return "only_q";
    }
}

// Assembles the fused map from an alignment: matched pairs contribute mu*,
// unmatched p landmarks pass through, unmatched q landmarks are carried into
// frame p by the inverse estimated transform. Fused ids are fresh and the
// provenance table records the source ids.
inline FusedMap combine_maps(const StochasticMap& map_p, const StochasticMap& map_q,
                             const Correspondence& corr, const AlignmentEstimate& est) {
    corr.validate();
    require(est.n_common == corr.pairs.size() && est.mu_star.size() == corr.pairs.size(),
            "combine_maps: estimate does not match the correspondence");
    const auto pos_p = map_p.position_by_id();
    const auto pos_q = map_q.position_by_id();
    std::unordered_set<std::int64_t> matched_p, matched_q;
    for (const auto& [ip, iq] : corr.pairs) {
        require(pos_p.count(ip) != 0, "combine_maps: id " + std::to_string(ip) + " not in map p");
        require(pos_q.count(iq) != 0, "combine_maps: id " + std::to_string(iq) + " not in map q");
        matched_p.insert(ip);
        matched_q.insert(iq);
    }

    const Rigid2 g(est.theta_star, est.t_star);
    FusedMap fused;
    fused.map.frame = map_p.frame;
    fused.map.noise_var = std::max(map_p.noise_var, map_q.noise_var);
    std::int64_t next_id = 0;
    for (std::size_t i = 0; i < corr.pairs.size(); ++i) {
        fused.map.landmarks.push_back({next_id, est.mu_star[i]});
        fused.provenance.push_back(
            {next_id, FusedMap::Source::common, corr.pairs[i].first, corr.pairs[i].second});
        ++next_id;
    }
    for (const Landmark& lm : map_p.landmarks) {
        if (matched_p.count(lm.id)) continue;
        fused.map.landmarks.push_back({next_id, lm.pos});
        fused.provenance.push_back({next_id, FusedMap::Source::only_p, lm.id, -1});
        ++next_id;
    }
    for (const Landmark& lm : map_q.landmarks) {
        if (matched_q.count(lm.id)) continue;
        fused.map.landmarks.push_back({next_id, g.apply_inverse(lm.pos)});
        fused.provenance.push_back({next_id, FusedMap::Source::only_q, -1, lm.id});
        ++next_id;
    }
    return fused;
}

} // namespace mapfuse
