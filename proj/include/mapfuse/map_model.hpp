#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mapfuse/common.hpp"
#include "mapfuse/delaunay.hpp"
#include "mapfuse/geometry.hpp"
#include "mapfuse/rng.hpp"

namespace mapfuse {

struct Landmark {
    std::int64_t id = 0;
    Point2 pos{};
};

// An agent's landmark map: identified 2-D position estimates in one named
// frame, with isotropic per-coordinate noise variance.
struct StochasticMap {
    std::string frame;
    std::vector<Landmark> landmarks;
    double noise_var = 0.0; // meters^2, per coordinate

    void validate() const {
        require(is_finite(noise_var) && noise_var >= 0.0,
                "map '" + frame + "': noise_var must be finite and >= 0");
        std::unordered_set<std::int64_t> seen;
        for (const Landmark& lm : landmarks) {
            require(is_finite(lm.pos.x) && is_finite(lm.pos.y),
                    "map '" + frame + "': landmark " + std::to_string(lm.id) +
                        " has a non-finite coordinate");
            require(seen.insert(lm.id).second,
                    "map '" + frame + "': duplicate landmark id " + std::to_string(lm.id));
        }
    }

    std::vector<Point2> positions() const {
        std::vector<Point2> out;
        out.reserve(landmarks.size());
        for (const Landmark& lm : landmarks) out.push_back(lm.pos);
        return out;
    }

    std::vector<std::int64_t> ids() const {
        std::vector<std::int64_t> out;
        out.reserve(landmarks.size());
        for (const Landmark& lm : landmarks) out.push_back(lm.id);
        return out;
    }

    std::unordered_map<std::int64_t, Point2> position_by_id() const {
        std::unordered_map<std::int64_t, Point2> out;
        out.reserve(landmarks.size());
        for (const Landmark& lm : landmarks) out.emplace(lm.id, lm.pos);
        return out;
    }
};

// Ground truth of a two-agent scene, all coordinates in frame p. `transform`
// carries frame-p coordinates into frame-q observations. Agent p sees
// common ++ only_p, agent q sees common ++ only_q (common block first).
struct GroundTruthScene {
    std::vector<Landmark> common;
    std::vector<Landmark> only_p;
    std::vector<Landmark> only_q;
    Rigid2 transform{};

    void validate() const {
        std::unordered_set<std::int64_t> seen;
        for (const auto* block : {&common, &only_p, &only_q})
            for (const Landmark& lm : *block)
                require(seen.insert(lm.id).second,
                        "scene: landmark id " + std::to_string(lm.id) +
                            " appears in more than one block");
    }

    std::vector<Landmark> truth_p() const {
        std::vector<Landmark> out = common;
        out.insert(out.end(), only_p.begin(), only_p.end());
        return out;
    }

    std::vector<Landmark> truth_q() const {
        std::vector<Landmark> out = common;
        out.insert(out.end(), only_q.begin(), only_q.end());
        return out;
    }

    std::vector<Landmark> all() const {
        std::vector<Landmark> out = common;
        out.insert(out.end(), only_p.begin(), only_p.end());
        out.insert(out.end(), only_q.begin(), only_q.end());
        return out;
    }
};

// Draws one matched pair of noisy maps from the scene:
//   X_p = u_p + N(0, sigma_p2 I)            (frame p)
//   X_q = r(theta) u_q + t + N(0, sigma_q2 I)  (frame q)
// Noise for p and q comes from independent substreams of `seed` (tags 0/1),
// so the pair is reproducible and the two maps are independent. Landmark ids
// and block order are preserved; matching never reads them, evaluation may.
inline std::pair<StochasticMap, StochasticMap> synthesize_maps(const GroundTruthScene& scene,
                                                               double sigma_p2, double sigma_q2,
                                                               std::uint64_t seed) {
    require(is_finite(sigma_p2) && sigma_p2 >= 0.0, "synthesize_maps: sigma_p2 must be >= 0");
    require(is_finite(sigma_q2) && sigma_q2 >= 0.0, "synthesize_maps: sigma_q2 must be >= 0");
    scene.validate();

    RandomStream root(seed);
    RandomStream noise_p = root.substream(0);
    RandomStream noise_q = root.substream(1);

    StochasticMap map_p{"p", {}, sigma_p2};
    const double sp = std::sqrt(sigma_p2);
    for (const Landmark& lm : scene.truth_p())
        map_p.landmarks.push_back(
            {lm.id, lm.pos + Point2{noise_p.normal(0.0, sp), noise_p.normal(0.0, sp)}});

    StochasticMap map_q{"q", {}, sigma_q2};
    const double sq = std::sqrt(sigma_q2);
    for (const Landmark& lm : scene.truth_q())
        map_q.landmarks.push_back(
            {lm.id, scene.transform.apply(lm.pos) +
                        Point2{noise_q.normal(0.0, sq), noise_q.normal(0.0, sq)}});

    return {std::move(map_p), std::move(map_q)};
}

// Mean squared Delaunay edge length of the scene's combined ground truth.
// This is the signal variance of the SNR definition.
inline double scene_signal_variance(const GroundTruthScene& scene) {
    const std::vector<Landmark> lms = scene.all();
    std::vector<Point2> pts;
    std::vector<std::int64_t> ids;
    for (const Landmark& lm : lms) {
        pts.push_back(lm.pos);
        ids.push_back(lm.id);
    }
    const auto tris = delaunay_triangulate(pts, ids);
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const TriangleIndices& t : tris)
        for (int e = 0; e < 3; ++e) {
            std::size_t u = t[e], v = t[(e + 1) % 3];
            if (u > v) std::swap(u, v);
            edges.emplace(u, v);
        }
    double sum = 0.0;
    for (const auto& [u, v] : edges) sum += norm2(pts[u] - pts[v]);
    return sum / static_cast<double>(edges.size());
}

// SNR in decibels: 10 log10(sigma_s^2 / (2 sigma^2)), where sigma_s^2 is the
// mean squared ground-truth Delaunay edge length and 2 sigma^2 is the noise
// variance of an edge length (noise is additive on both endpoints).
inline double snr_db(const GroundTruthScene& scene, double sigma2) {
    require(is_finite(sigma2) && sigma2 > 0.0, "snr_db: sigma2 must be > 0");
    return 10.0 * std::log10(scene_signal_variance(scene) / (2.0 * sigma2));
}

// Inverse of snr_db in sigma2: the per-coordinate noise variance that puts the
// scene at the target SNR. An infinite target yields exactly zero noise.
inline double sigma2_for_snr_db(const GroundTruthScene& scene, double target_snr_db) {
    const double s2 = scene_signal_variance(scene);
    return s2 / (2.0 * std::pow(10.0, target_snr_db / 10.0));
}

enum class SceneKind { uniform, grid };

// Builds a ground-truth scene of n_total landmarks, the first n_common shared
// by both agents and the remainder split between the exclusive blocks (agent p
// first, ids sequential in generation order). `uniform` draws i.i.d. positions
// on [0, extent]^2 from substream 2 of the seed; `grid` places a regular
// sqrt(n) x sqrt(n) lattice spanning [0, extent]^2 and requires n_total to be
// a perfect square.
inline GroundTruthScene generate_scene(SceneKind kind, std::size_t n_total, std::size_t n_common,
                                       double extent, const Rigid2& transform,
                                       std::uint64_t seed) {
    require(n_common <= n_total, "generate_scene: n_common exceeds n_total");
    require(is_finite(extent) && extent > 0.0, "generate_scene: extent must be > 0");

    std::vector<Point2> positions;
    positions.reserve(n_total);
    if (kind == SceneKind::uniform) {
        RandomStream geom = RandomStream(seed).substream(2);
        for (std::size_t i = 0; i < n_total; ++i)
            positions.emplace_back(geom.uniform(0.0, extent), geom.uniform(0.0, extent));
    } else {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_total))));
        require(side * side == n_total, "generate_scene: grid size " + std::to_string(n_total) +
                                            " is not a perfect square");
        const double step = side > 1 ? extent / static_cast<double>(side - 1) : 0.0;
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c)
                positions.emplace_back(static_cast<double>(c) * step, static_cast<double>(r) * step);
    }

    GroundTruthScene scene;
    scene.transform = transform;
    const std::size_t rest = n_total - n_common;
    const std::size_t n_only_p = (rest + 1) / 2;
    for (std::size_t i = 0; i < n_total; ++i) {
        const Landmark lm{static_cast<std::int64_t>(i), positions[i]};
        if (i < n_common)
            scene.common.push_back(lm);
        else if (i < n_common + n_only_p)
            scene.only_p.push_back(lm);
        else
            scene.only_q.push_back(lm);
    }
    return scene;
}

} // namespace mapfuse
