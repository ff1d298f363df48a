// mapfuse command-line front end: triangulation, matching, alignment, fusion
// and Monte Carlo experiment tables over the JSON map format.
//
// Exit codes: 0 success, 1 usage error, 2 data/geometry error,
// 3 fusion failed (no consensus).

#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mapfuse/alignment.hpp"
#include "mapfuse/harness.hpp"
#include "mapfuse/hypergraph.hpp"
#include "mapfuse/map_io.hpp"
#include "mapfuse/map_model.hpp"
#include "mapfuse/matching.hpp"

namespace {

using namespace mapfuse;

std::string fmt(double v) { return harness_detail::fmt(v); }

std::string triangles_csv(const TriangleHypergraph& g) {
    std::string s = "a_id,b_id,c_id,e_ab,e_bc,e_ca,perimeter\n";
    for (const DirectedTriangle& t : g.edges) {
        s += std::to_string(t.a) + ',' + std::to_string(t.b) + ',' + std::to_string(t.c) + ',' +
             fmt(t.edge_lengths[0]) + ',' + fmt(t.edge_lengths[1]) + ',' + fmt(t.edge_lengths[2]) +
             ',' + fmt(t.perimeter) + '\n';
    }
    return s;
}

std::string correspondence_csv(const Correspondence& corr) {
    std::string s = "id_p,id_q\n";
    for (const auto& [ip, iq] : corr.pairs)
        s += std::to_string(ip) + ',' + std::to_string(iq) + '\n';
    return s;
}

Correspondence read_correspondence(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    Correspondence corr;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.rfind("id_p", 0) == 0)) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'id_p,id_q'");
        try {
            corr.pairs.emplace_back(std::stoll(line.substr(0, comma)),
                                    std::stoll(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'id_p,id_q'");
        }
    }
    return corr;
}

std::string score_matrix_csv(const ScoreMatrix& c) {
    std::string s;
    for (std::size_t i = 0; i < c.m; ++i) {
        for (std::size_t j = 0; j < c.m; ++j) {
            if (j) s += ',';
            s += fmt(c.at(i, j));
        }
        s += '\n';
    }
    return s;
}

std::string diagnostics_csv(const FusionDiagnostics& d) {
    std::string s =
        "edges_p,edges_q,dropped_p,dropped_q,assignment_size,scored_pairs,inlier_count,"
        "outlier_iterations,pooled_variance,corr_initial,corr_final,j1_min\n";
    s += std::to_string(d.edges_p) + ',' + std::to_string(d.edges_q) + ',' +
         std::to_string(d.dropped_p) + ',' + std::to_string(d.dropped_q) + ',' +
         std::to_string(d.assignment_size) + ',' + std::to_string(d.scored_pairs) + ',' +
         std::to_string(d.inlier_count) + ',' + std::to_string(d.outlier_iterations) + ',' +
         fmt(d.pooled_variance) + ',' + std::to_string(d.corr_initial) + ',' +
         std::to_string(d.corr_final) + ',' + fmt(d.j1_min) + '\n';
    return s;
}

std::string provenance_csv(const FusedMap& fused) {
    std::string s = "fused_id,source,id_p,id_q\n";
    for (const FusedMap::Entry& e : fused.provenance)
        s += std::to_string(e.fused_id) + ',' + to_string(e.source) + ',' +
             std::to_string(e.id_p) + ',' + std::to_string(e.id_q) + '\n';
    return s;
}

struct SceneOptions {
    std::string kind = "uniform";
    std::size_t n_total = 30;
    std::size_t n_common = 30;
    double extent = 100.0;
    double theta = 0.7854;
    std::vector<double> t{100.0, 5.0};

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kind", kind, "scene kind")
            ->check(CLI::IsMember({"uniform", "grid"}))
            ->capture_default_str();
        cmd->add_option("--n-total", n_total, "total landmark count")->capture_default_str();
        cmd->add_option("--n-common", n_common, "landmarks seen by both agents")
            ->capture_default_str();
        cmd->add_option("--extent", extent, "scene side length, meters")->capture_default_str();
        cmd->add_option("--theta", theta, "true rotation, radians")->capture_default_str();
        cmd->add_option("--t", t, "true translation, meters")->expected(2)->capture_default_str();
    }

    SceneKind scene_kind() const {
        return kind == "grid" ? SceneKind::grid : SceneKind::uniform;
    }
    Rigid2 transform() const { return Rigid2(theta, {t[0], t[1]}); }
};

struct PipelineOptions {
    PipelineConfig cfg;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--var-threshold", cfg.var_threshold,
                        "consensus pooled-variance acceptance level")
            ->capture_default_str();
        cmd->add_option("--min-inliers", cfg.min_inliers, "smallest inlier triangle set")
            ->capture_default_str();
        cmd->add_option("--gate-sigmas", cfg.gate_sigmas,
                        "missed-detection gate in noise sigmas")
            ->capture_default_str();
        cmd->add_option("--band", cfg.band,
                        "score only |i-j| <= band perimeter ranks (-1 = full matrix)")
            ->capture_default_str();
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Fusion of stochastic landmark maps: triangle matching and closed-form alignment"};
    app.require_subcommand(1);

    // --- simulate ---
    auto* sim = app.add_subcommand("simulate", "generate a scene and a pair of noisy maps");
    SceneOptions sim_scene;
    sim_scene.add_to(sim);
    std::uint64_t sim_seed = 1;
    double sim_snr = 30.0;
    double sim_sigma_p2 = -1.0, sim_sigma_q2 = -1.0;
    std::string sim_out_p = "map_p.json", sim_out_q = "map_q.json", sim_out_truth = "truth.json";
    sim->add_option("--seed", sim_seed, "random seed")->capture_default_str();
    sim->add_option("--snr-db", sim_snr, "target SNR in dB (inf = no noise)")->capture_default_str();
    sim->add_option("--sigma-p2", sim_sigma_p2, "override map p noise variance, m^2");
    sim->add_option("--sigma-q2", sim_sigma_q2, "override map q noise variance, m^2");
    sim->add_option("--out-p", sim_out_p, "output map p path")->capture_default_str();
    sim->add_option("--out-q", sim_out_q, "output map q path")->capture_default_str();
    sim->add_option("--out-truth", sim_out_truth, "output ground-truth path")->capture_default_str();
    sim->callback([&] {
        const GroundTruthScene scene =
            generate_scene(sim_scene.scene_kind(), sim_scene.n_total, sim_scene.n_common,
                           sim_scene.extent, sim_scene.transform(), sim_seed);
        double sp2 = sim_sigma_p2, sq2 = sim_sigma_q2;
        if (sp2 < 0.0 || sq2 < 0.0) {
            const double s2 = sigma2_for_snr_db(scene, sim_snr);
            if (sp2 < 0.0) sp2 = s2;
            if (sq2 < 0.0) sq2 = s2;
        }
        const auto [mp, mq] = synthesize_maps(scene, sp2, sq2, sim_seed);
        write_map(mp, sim_out_p);
        write_map(mq, sim_out_q);
        write_scene(scene, sim_out_truth);
    });

    // --- triangulate ---
    auto* tri = app.add_subcommand("triangulate", "directed-triangle hypergraph of a map as CSV");
    std::string tri_map, tri_out = "triangles.csv";
    tri->add_option("--map", tri_map, "input map path")->required();
    tri->add_option("--out", tri_out, "output CSV path")->capture_default_str();
    tri->callback([&] {
        const TriangleHypergraph g = build_hypergraph(read_map(tri_map));
        io_detail::write_text_atomic(tri_out, triangles_csv(g));
    });

    // --- match ---
    auto* match = app.add_subcommand("match", "triangle matching -> landmark correspondence CSV");
    std::string match_p, match_q, match_out = "correspondence.csv", match_scores;
    PipelineOptions match_pipe;
    match->add_option("--map-p", match_p, "input map p")->required();
    match->add_option("--map-q", match_q, "input map q")->required();
    match->add_option("--out", match_out, "output correspondence CSV")->capture_default_str();
    match->add_option("--score-matrix", match_scores, "optional score-matrix CSV dump");
    match_pipe.add_to(match);
    match->add_option("--threads", match_pipe.cfg.threads, "worker threads")->capture_default_str();
    match->callback([&] {
        const StochasticMap mp = read_map(match_p), mq = read_map(match_q);
        const TriangleHypergraph gp = build_hypergraph(mp), gq = build_hypergraph(mq);
        const ScoreMatrix c =
            score_matrix(gp, gq, mp, mq, match_pipe.cfg.band, match_pipe.cfg.threads);
        if (!match_scores.empty())
            io_detail::write_text_atomic(match_scores, score_matrix_csv(c));
        const auto assigned = solve_assignment(c);
        std::vector<ScoredPair> scored;
        for (const auto& [i, j] : assigned)
            if (!c.pair(i, j).degenerate) scored.push_back(c.pair(i, j));
        if (scored.size() < match_pipe.cfg.min_inliers)
            throw NoConsensusError("matching failed: only " + std::to_string(scored.size()) +
                                   " usable triangle matches");
        const InlierSet inliers =
            reject_outliers(scored, match_pipe.cfg.var_threshold, match_pipe.cfg.min_inliers);
        if (!inliers.converged)
            throw NoConsensusError("matching failed: no consensus among triangle matches");
        io_detail::write_text_atomic(match_out,
                                     correspondence_csv(correspondences_from_inliers(inliers, gp, gq)));
    });

    // --- align ---
    auto* align = app.add_subcommand("align", "closed-form ML alignment for a known correspondence");
    std::string align_p, align_q, align_corr, align_out = "alignment.json";
    align->add_option("--map-p", align_p, "input map p")->required();
    align->add_option("--map-q", align_q, "input map q")->required();
    align->add_option("--corr", align_corr, "correspondence CSV (id_p,id_q)")->required();
    align->add_option("--out", align_out, "output alignment JSON")->capture_default_str();
    align->callback([&] {
        const AlignmentEstimate est =
            align_mle(read_map(align_p), read_map(align_q), read_correspondence(align_corr));
        io_detail::write_text_atomic(align_out, to_json(est).dump(2) + "\n");
    });

    // --- fuse ---
    auto* fuse = app.add_subcommand("fuse", "full pipeline: match, align, combine");
    std::string fuse_p, fuse_q, fuse_out = "fused.json";
    std::string fuse_align_out, fuse_diag_out, fuse_prov_out;
    PipelineOptions fuse_pipe;
    fuse->add_option("--map-p", fuse_p, "input map p")->required();
    fuse->add_option("--map-q", fuse_q, "input map q")->required();
    fuse->add_option("--out", fuse_out, "output fused map path")->capture_default_str();
    fuse->add_option("--out-alignment", fuse_align_out,
                     "alignment JSON path (default: <out>.alignment.json)");
    fuse->add_option("--out-diagnostics", fuse_diag_out,
                     "diagnostics CSV path (default: <out>.diagnostics.csv)");
    fuse->add_option("--out-provenance", fuse_prov_out,
                     "provenance CSV path (default: <out>.provenance.csv)");
    fuse_pipe.add_to(fuse);
    fuse->add_option("--threads", fuse_pipe.cfg.threads, "worker threads")->capture_default_str();
    fuse->callback([&] {
        const StochasticMap mp = read_map(fuse_p), mq = read_map(fuse_q);
        const FusionResult res = fuse_pipeline(mp, mq, fuse_pipe.cfg);
        const std::string align_path =
            fuse_align_out.empty() ? fuse_out + ".alignment.json" : fuse_align_out;
        const std::string diag_path =
            fuse_diag_out.empty() ? fuse_out + ".diagnostics.csv" : fuse_diag_out;
        const std::string prov_path =
            fuse_prov_out.empty() ? fuse_out + ".provenance.csv" : fuse_prov_out;
        write_map(res.fused.map, fuse_out);
        io_detail::write_text_atomic(align_path, to_json(res.estimate).dump(2) + "\n");
        io_detail::write_text_atomic(diag_path, diagnostics_csv(res.diagnostics));
        io_detail::write_text_atomic(prov_path, provenance_csv(res.fused));
    });

    // --- harness commands ---
    struct HarnessOptions {
        ExperimentConfig cfg;
        SceneOptions scene;
        std::string out_prefix;
    };
    auto add_harness = [&](CLI::App* cmd, HarnessOptions& opt, const char* default_prefix,
                           std::vector<double> default_snrs, std::size_t default_trials) {
        opt.cfg.snr_list = std::move(default_snrs);
        opt.cfg.trials = default_trials;
        opt.out_prefix = default_prefix;
        cmd->add_option("--snr-db", opt.cfg.snr_list, "SNR levels in dB")
            ->capture_default_str();
        cmd->add_option("--trials", opt.cfg.trials, "Monte Carlo trials per SNR")
            ->capture_default_str();
        cmd->add_option("--seed", opt.cfg.seed, "random seed")->capture_default_str();
        cmd->add_option("--threads", opt.cfg.threads, "worker threads")->capture_default_str();
        cmd->add_option("--out-prefix", opt.out_prefix,
                        "output prefix for CSV tables and manifest")
            ->capture_default_str();
        opt.scene.add_to(cmd);
    };
    auto finish_harness = [&](HarnessOptions& opt) {
        opt.cfg.kind = opt.scene.scene_kind();
        opt.cfg.n_total = opt.scene.n_total;
        opt.cfg.n_common = opt.scene.n_common;
        opt.cfg.extent = opt.scene.extent;
        opt.cfg.transform = opt.scene.transform();
    };

    auto* roc = app.add_subcommand("roc", "ROC study of the triangle-match likelihood ratio");
    HarnessOptions roc_opt;
    add_harness(roc, roc_opt, "roc", {10.0, 20.0, 30.0, 60.0}, 2000);
    roc->callback([&] {
        finish_harness(roc_opt);
        const RocResult res = roc_experiment(roc_opt.cfg);
        io_detail::write_text_atomic(roc_opt.out_prefix + ".csv", roc_sweep_csv(res.sweep));
        io_detail::write_text_atomic(roc_opt.out_prefix + "_auc.csv", summary_csv(res.summary));
        io_detail::write_text_atomic(roc_opt.out_prefix + "_manifest.json",
                                     manifest_json("roc", roc_opt.cfg).dump(2) + "\n");
    });

    auto* trifrac = app.add_subcommand("trifrac", "fraction of common directed triangles vs SNR");
    HarnessOptions tf_opt;
    add_harness(trifrac, tf_opt, "trifrac", {40.0, 30.0, 20.0, 10.0}, 200);
    trifrac->callback([&] {
        finish_harness(tf_opt);
        const TableResult res = triangle_fraction_experiment(tf_opt.cfg);
        io_detail::write_text_atomic(tf_opt.out_prefix + ".csv", summary_csv(res.summary));
        io_detail::write_text_atomic(tf_opt.out_prefix + "_manifest.json",
                                     manifest_json("trifrac", tf_opt.cfg).dump(2) + "\n");
    });

    auto* mse = app.add_subcommand("mse", "MSE of map and transform estimates vs SNR");
    HarnessOptions mse_opt;
    std::string mse_mode = "both";
    add_harness(mse, mse_opt, "mse", {10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0}, 200);
    mse->add_option("--mode", mse_mode, "known | pipeline | both")
        ->check(CLI::IsMember({"known", "pipeline", "both"}))
        ->capture_default_str();
    PipelineOptions mse_pipe;
    mse_pipe.add_to(mse);
    mse->callback([&] {
        finish_harness(mse_opt);
        mse_opt.cfg.pipeline = mse_pipe.cfg;
        mse_opt.cfg.pipeline.threads = 1; // trials already run in parallel
        std::vector<SummaryRow> rows;
        if (mse_mode != "pipeline") {
            const TableResult known = mse_sweep(mse_opt.cfg, true);
            rows.insert(rows.end(), known.summary.begin(), known.summary.end());
        }
        if (mse_mode != "known") {
            const TableResult pipe = mse_sweep(mse_opt.cfg, false);
            rows.insert(rows.end(), pipe.summary.begin(), pipe.summary.end());
        }
        io_detail::write_text_atomic(mse_opt.out_prefix + ".csv", summary_csv(rows));
        io_detail::write_text_atomic(mse_opt.out_prefix + "_manifest.json",
                                     manifest_json("mse", mse_opt.cfg).dump(2) + "\n");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mapfuse::NoConsensusError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const mapfuse::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
