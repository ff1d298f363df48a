#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mapfuse/common.hpp"
#include "mapfuse/hypergraph.hpp"
#include "mapfuse/map_model.hpp"
#include "mapfuse/matching.hpp"
#include "mapfuse/parallel.hpp"
#include "mapfuse/rng.hpp"

namespace mapfuse {

// Deterministic per-trial seed from (experiment seed, stream, trial).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial) {
    std::uint64_t s = seed;
    splitmix64(s);
    s ^= 0x9e3779b97f4a7c15ULL * (stream + 1);
    splitmix64(s);
    s ^= 0xd1b54a32d192ed03ULL * (trial + 1);
    return splitmix64(s);
}

struct ExperimentConfig {
    std::vector<double> snr_list; // decibels; +inf means exactly zero noise
    std::size_t trials = 200;
    std::uint64_t seed = 1;
    SceneKind kind = SceneKind::uniform;
    std::size_t n_total = 30;
    std::size_t n_common = 30;
    double extent = 100.0;
    Rigid2 transform{0.7854, {100.0, 5.0}};
    PipelineConfig pipeline{};
    unsigned threads = 1;

    void validate() const {
        require(trials >= 1, "experiment: trials must be >= 1");
        require(!snr_list.empty(), "experiment: snr_list must not be empty");
    }
};

// One aggregate output row; every experiment reports these.
struct SummaryRow {
    std::string experiment;
    double snr_db = 0.0;
    std::string metric;
    double value = 0.0;
    std::size_t count = 0;
};

struct RocSweepRow {
    double snr_db = 0.0;
    double tau = 0.0;
    double p_d = 0.0;
    double p_fa = 0.0;
};

struct RocResult {
    std::vector<RocSweepRow> sweep;
    std::vector<SummaryRow> summary; // auc per SNR
};

struct TableResult {
    std::vector<SummaryRow> summary;
};

inline constexpr double kMseFloorDb = -180.0;

inline double mse_to_db(double mse) {
    if (!(mse > 0.0)) return kMseFloorDb;
    return std::max(10.0 * std::log10(mse), kMseFloorDb);
}

namespace harness_detail {

inline std::string fmt(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), ptr);
}

// Mann-Whitney AUC with average ranks on ties; equals the trapezoidal area
// under the full ROC sweep.
inline double auc_from_scores(const std::vector<double>& h1, const std::vector<double>& h0) {
    std::vector<std::pair<double, int>> all;
    all.reserve(h1.size() + h0.size());
    for (double v : h1) all.emplace_back(v, 1);
    for (double v : h0) all.emplace_back(v, 0);
    std::sort(all.begin(), all.end());
    double rank_sum_h1 = 0.0;
    std::size_t k = 0;
    while (k < all.size()) {
        std::size_t e = k;
        while (e < all.size() && all[e].first == all[k].first) ++e;
        const double avg_rank = 0.5 * static_cast<double>(k + 1 + e); // 1-based average
        for (std::size_t t = k; t < e; ++t)
            if (all[t].second == 1) rank_sum_h1 += avg_rank;
        k = e;
    }
    const double n1 = static_cast<double>(h1.size());
    const double n0 = static_cast<double>(h0.size());
    return (rank_sum_h1 - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

inline std::array<Point2, 3> noisy_triangle(const std::array<Point2, 3>& coords, double sigma,
                                            RandomStream& rng) {
    std::array<Point2, 3> out;
    for (int k = 0; k < 3; ++k)
        out[k] = coords[k] + Point2{rng.normal(0.0, sigma), rng.normal(0.0, sigma)};
    return out;
}

// Re-derives the Groth order of a noisy vertex triple. Returns false when the
// noisy triangle is degenerate (tied or collinear), which the callers treat
// as a redraw.
inline bool groth_coords(const std::array<Point2, 3>& in, std::array<Point2, 3>& out) {
    try {
        const DirectedTriangle t = groth_order({0, in[0]}, {1, in[1]}, {2, in[2]});
        const Point2 by_slot[3] = {in[0], in[1], in[2]};
        out = {by_slot[t.a], by_slot[t.b], by_slot[t.c]};
        return true;
    } catch (const DegenerateGeometryError&) {
        return false;
    }
}

} // namespace harness_detail

// ROC study of the GLR statistic as a common-triangle detector.
//
// Per trial, a fresh scene provides ground-truth directed triangles. A
// common-hypothesis sample observes one triangle in both frames (independent
// noise, random rigid frame offset); an uncommon-hypothesis sample observes
// two distinct triangles of the scene (they share at most two landmarks) in
// independent frames. Each noisy triple is re-ordered by the Groth rule
// before scoring, exactly as the matching front end would see it. The tau
// sweep visits every distinct observed statistic plus tau = 0.
inline RocResult roc_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RocResult out;
    for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
        const double snr = cfg.snr_list[si];
        std::vector<double> lam_h1(cfg.trials, 0.0), lam_h0(cfg.trials, 0.0);
        std::vector<char> ok(cfg.trials, 0);

        parallel_for_ranges(cfg.trials, cfg.threads, [&](std::size_t tb, std::size_t te) {
            for (std::size_t trial = tb; trial < te; ++trial) {
                RandomStream rng(derive_seed(cfg.seed, 1000 + si, trial));
                for (int attempt = 0; attempt < 64; ++attempt) {
                    const GroundTruthScene scene =
                        generate_scene(cfg.kind, cfg.n_total, cfg.n_total, cfg.extent,
                                       cfg.transform, rng.next_u64());
                    StochasticMap gt{"gt", scene.all(), 0.0};
                    const TriangleHypergraph g = build_hypergraph(gt);
                    if (g.edges.size() < 2) continue;
                    const double sigma = std::sqrt(sigma2_for_snr_db(scene, snr));
                    const auto pos = gt.position_by_id();

                    const Rigid2 frame{rng.uniform(-3.141592653589793, 3.141592653589793),
                                       {rng.uniform(-cfg.extent, cfg.extent),
                                        rng.uniform(-cfg.extent, cfg.extent)}};
                    auto observe = [&](const DirectedTriangle& tri, bool in_q,
                                       std::array<Point2, 3>& ordered) {
                        std::array<Point2, 3> c = triangle_coords(tri, pos);
                        if (in_q)
                            for (Point2& v : c) v = frame.apply(v);
                        c = harness_detail::noisy_triangle(c, sigma, rng);
                        return harness_detail::groth_coords(c, ordered);
                    };

                    const std::size_t i1 = rng.uniform_index(g.edges.size());
                    std::size_t i2 = rng.uniform_index(g.edges.size() - 1);
                    if (i2 >= i1) ++i2;

                    std::array<Point2, 3> h1_p{}, h1_q{}, h0_p{}, h0_q{};
                    if (!observe(g.edges[i1], false, h1_p) || !observe(g.edges[i1], true, h1_q) ||
                        !observe(g.edges[i1], false, h0_p) || !observe(g.edges[i2], true, h0_q))
                        continue;
                    const double s2 = sigma * sigma;
                    const ScoredPair sp1 = glr_statistic(h1_p, h1_q, s2, s2);
                    const ScoredPair sp0 = glr_statistic(h0_p, h0_q, s2, s2);
                    if (sp1.degenerate || sp0.degenerate) continue;
                    lam_h1[trial] = sp1.lambda;
                    lam_h0[trial] = sp0.lambda;
                    ok[trial] = 1;
                    break;
                }
            }
        });

        std::vector<double> h1, h0;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            if (!ok[t]) continue;
            h1.push_back(lam_h1[t]);
            h0.push_back(lam_h0[t]);
        }
        require(!h1.empty(), "roc_experiment: no valid trials");

        std::vector<double> thresholds = h1;
        thresholds.insert(thresholds.end(), h0.begin(), h0.end());
        std::sort(thresholds.begin(), thresholds.end());
        thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

        std::vector<double> s1 = h1, s0 = h0;
        std::sort(s1.begin(), s1.end());
        std::sort(s0.begin(), s0.end());
        auto frac_geq = [](const std::vector<double>& v, double tau) {
            const auto it = std::lower_bound(v.begin(), v.end(), tau);
            return static_cast<double>(v.end() - it) / static_cast<double>(v.size());
        };
        out.sweep.push_back({snr, 0.0, 1.0, 1.0});
        for (double tau : thresholds)
            out.sweep.push_back({snr, tau, frac_geq(s1, tau), frac_geq(s0, tau)});

        out.summary.push_back(
            {"roc", snr, "auc", harness_detail::auc_from_scores(h1, h0), h1.size()});
    }
    return out;
}

// Fraction of ground-truth directed triangles present in both noisy
// hypergraphs (landmark ids are preserved by synthesis, so triples compare by
// id). Requires a full-overlap scene; the scene is fixed by the seed and only
// the noise varies across trials.
inline TableResult triangle_fraction_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    require(cfg.n_common == cfg.n_total,
            "triangle_fraction_experiment: scene must have complete overlap");
    const GroundTruthScene scene =
        generate_scene(cfg.kind, cfg.n_total, cfg.n_common, cfg.extent, cfg.transform, cfg.seed);
    StochasticMap gt{"gt", scene.all(), 0.0};
    const TriangleHypergraph g_gt = build_hypergraph(gt);
    require(!g_gt.edges.empty(), "triangle_fraction_experiment: ground truth has no triangles");

    using Triple = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
    auto triples = [](const TriangleHypergraph& g) {
        std::vector<Triple> v;
        v.reserve(g.edges.size());
        for (const DirectedTriangle& t : g.edges) v.emplace_back(t.a, t.b, t.c);
        std::sort(v.begin(), v.end());
        return v;
    };
    const std::vector<Triple> gt_triples = triples(g_gt);

    TableResult out;
    for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
        const double sigma2 = sigma2_for_snr_db(scene, cfg.snr_list[si]);
        std::vector<double> frac(cfg.trials, 0.0);
        parallel_for_ranges(cfg.trials, cfg.threads, [&](std::size_t tb, std::size_t te) {
            for (std::size_t trial = tb; trial < te; ++trial) {
                const auto [mp, mq] =
                    synthesize_maps(scene, sigma2, sigma2, derive_seed(cfg.seed, 2000 + si, trial));
                const std::vector<Triple> tp = triples(build_hypergraph(mp));
                const std::vector<Triple> tq = triples(build_hypergraph(mq));
                std::size_t hits = 0;
                for (const Triple& t : gt_triples)
                    if (std::binary_search(tp.begin(), tp.end(), t) &&
                        std::binary_search(tq.begin(), tq.end(), t))
                        ++hits;
                frac[trial] = static_cast<double>(hits) / static_cast<double>(gt_triples.size());
            }
        });
        double mean = 0.0;
        for (double f : frac) mean += f;
        mean /= static_cast<double>(cfg.trials);
        out.summary.push_back(
            {"trifrac", cfg.snr_list[si], "mean_common_fraction", mean, cfg.trials});
    }
    return out;
}

// MSE sweep of the alignment estimators versus ground truth, in dB.
//
// known_correspondence = true scores the closed-form estimators with the true
// pairing (the baseline); false runs the full matching pipeline and counts
// its failures separately. Fused landmarks are charged against the truth of
// their provenance-primary id (the p-side id when present), so mismatched
// pairings show up as error rather than being silently excluded.
inline TableResult mse_sweep(const ExperimentConfig& cfg, bool known_correspondence) {
    cfg.validate();
    const GroundTruthScene scene =
        generate_scene(cfg.kind, cfg.n_total, cfg.n_common, cfg.extent, cfg.transform, cfg.seed);
    std::unordered_map<std::int64_t, Point2> truth;
    for (const Landmark& lm : scene.all()) truth.emplace(lm.id, lm.pos);

    Correspondence known_corr;
    for (const Landmark& lm : scene.common) known_corr.pairs.emplace_back(lm.id, lm.id);

    const std::string name = known_correspondence ? "mse_known" : "mse_pipeline";
    TableResult out;
    for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
        const double sigma2 = sigma2_for_snr_db(scene, cfg.snr_list[si]);
        std::vector<double> err_u(cfg.trials, 0.0), err_th(cfg.trials, 0.0), err_t(cfg.trials, 0.0);
        std::vector<char> succeeded(cfg.trials, 0);

        parallel_for_ranges(cfg.trials, cfg.threads, [&](std::size_t tb, std::size_t te) {
            for (std::size_t trial = tb; trial < te; ++trial) {
                const auto [mp, mq] =
                    synthesize_maps(scene, sigma2, sigma2, derive_seed(cfg.seed, 3000 + si, trial));
                FusedMap fused;
                AlignmentEstimate est;
                try {
                    if (known_correspondence) {
                        est = align_mle(mp, mq, known_corr);
                        fused = combine_maps(mp, mq, known_corr, est);
                    } else {
                        FusionResult res = fuse_pipeline(mp, mq, cfg.pipeline);
                        est = std::move(res.estimate);
                        fused = std::move(res.fused);
                    }
                } catch (const Error&) {
                    continue; // counted as a pipeline failure
                }
                double sum = 0.0;
                for (std::size_t k = 0; k < fused.map.landmarks.size(); ++k) {
                    const FusedMap::Entry& pe = fused.provenance[k];
                    const std::int64_t src = pe.id_p >= 0 ? pe.id_p : pe.id_q;
                    sum += norm2(fused.map.landmarks[k].pos - truth.at(src));
                }
                err_u[trial] = sum / static_cast<double>(fused.map.landmarks.size());
                const double dth = wrap_angle(est.theta_star - scene.transform.theta);
                err_th[trial] = dth * dth;
                err_t[trial] = norm2(est.t_star - scene.transform.t);
                succeeded[trial] = 1;
            }
        });

        double mu = 0.0, mth = 0.0, mt = 0.0;
        std::size_t n_ok = 0;
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            if (!succeeded[t]) continue;
            mu += err_u[t];
            mth += err_th[t];
            mt += err_t[t];
            ++n_ok;
        }
        const std::size_t failures = cfg.trials - n_ok;
        const double inv = n_ok > 0 ? 1.0 / static_cast<double>(n_ok) : 0.0;
        const double snr = cfg.snr_list[si];
        out.summary.push_back({name, snr, "mse_u_db", mse_to_db(mu * inv), n_ok});
        out.summary.push_back({name, snr, "mse_theta_db", mse_to_db(mth * inv), n_ok});
        out.summary.push_back({name, snr, "mse_t_db", mse_to_db(mt * inv), n_ok});
        out.summary.push_back({name, snr, "failures", static_cast<double>(failures), cfg.trials});
    }
    return out;
}

// --- CSV / manifest serialization -----------------------------------------

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string s = "experiment,snr_db,metric,value,count\n";
    for (const SummaryRow& r : rows) {
        s += r.experiment;
        s += ',';
        s += harness_detail::fmt(r.snr_db);
        s += ',';
        s += r.metric;
        s += ',';
        s += harness_detail::fmt(r.value);
        s += ',';
        s += std::to_string(r.count);
        s += '\n';
    }
    return s;
}

inline std::string roc_sweep_csv(const std::vector<RocSweepRow>& rows) {
    std::string s = "snr_db,tau,p_d,p_fa\n";
    for (const RocSweepRow& r : rows) {
        s += harness_detail::fmt(r.snr_db);
        s += ',';
        s += harness_detail::fmt(r.tau);
        s += ',';
        s += harness_detail::fmt(r.p_d);
        s += ',';
        s += harness_detail::fmt(r.p_fa);
        s += '\n';
    }
    return s;
}

inline nlohmann::json manifest_json(const std::string& experiment, const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["snr_list"] = cfg.snr_list;
    j["scene"] = {{"kind", cfg.kind == SceneKind::uniform ? "uniform" : "grid"},
                  {"n_total", cfg.n_total},
                  {"n_common", cfg.n_common},
                  {"extent", cfg.extent},
                  {"theta", cfg.transform.theta},
                  {"t", {cfg.transform.t.x, cfg.transform.t.y}}};
    j["pipeline"] = {{"var_threshold", cfg.pipeline.var_threshold},
                     {"min_inliers", cfg.pipeline.min_inliers},
                     {"gate_sigmas", cfg.pipeline.gate_sigmas},
                     {"band", cfg.pipeline.band}};
    return j;
}

} // namespace mapfuse
