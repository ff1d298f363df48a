#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mapfuse/alignment.hpp"
#include "mapfuse/common.hpp"
#include "mapfuse/map_model.hpp"

namespace mapfuse {

// Map file: UTF-8 JSON document
//   { "frame": <string>, "noise_var": <number >= 0>,
//     "landmarks": [ { "id": <integer>, "x": <number>, "y": <number> }, ... ] }
// Doubles are serialized with round-trip-exact shortest decimal form, so
// write -> read is the identity.

inline nlohmann::json to_json(const StochasticMap& map) {
    nlohmann::json j;
    j["frame"] = map.frame;
    j["noise_var"] = map.noise_var;
    j["landmarks"] = nlohmann::json::array();
    for (const Landmark& lm : map.landmarks)
        j["landmarks"].push_back({{"id", lm.id}, {"x", lm.pos.x}, {"y", lm.pos.y}});
    return j;
}

namespace io_detail {

inline double finite_number(const nlohmann::json& j, const std::string& key,
                            const std::string& where) {
    if (!j.contains(key)) throw DataError(where + ": missing field '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw DataError(where + ": field '" + key + "' is not a number");
    const double d = v.get<double>();
    if (!is_finite(d)) throw DataError(where + ": field '" + key + "' is not finite");
    return d;
}

inline nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

// Stage-then-rename so readers never observe a partial file.
inline void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw DataError("cannot open '" + tmp + "' for writing");
        out << text;
        if (!out) throw DataError("failed writing '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("failed to move '" + tmp + "' to '" + path + "': " + ec.message());
}

} // namespace io_detail

inline StochasticMap map_from_json(const nlohmann::json& j, const std::string& where) {
    StochasticMap map;
    if (!j.contains("frame") || !j.at("frame").is_string())
        throw DataError(where + ": missing or non-string field 'frame'");
    map.frame = j.at("frame").get<std::string>();
    map.noise_var = io_detail::finite_number(j, "noise_var", where);
    if (!j.contains("landmarks") || !j.at("landmarks").is_array())
        throw DataError(where + ": missing or non-array field 'landmarks'");
    std::size_t idx = 0;
    for (const auto& e : j.at("landmarks")) {
        const std::string rec = where + ": landmark record " + std::to_string(idx);
        if (!e.contains("id") || !e.at("id").is_number_integer())
            throw DataError(rec + ": missing or non-integer field 'id'");
        Landmark lm;
        lm.id = e.at("id").get<std::int64_t>();
        const double x = io_detail::finite_number(e, "x", rec + " (id " + std::to_string(lm.id) + ")");
        const double y = io_detail::finite_number(e, "y", rec + " (id " + std::to_string(lm.id) + ")");
        lm.pos = {x, y};
        map.landmarks.push_back(lm);
        ++idx;
    }
    try {
        map.validate();
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    }
    return map;
}

inline StochasticMap read_map(const std::string& path) {
    return map_from_json(io_detail::parse_file(path), path);
}

inline void write_map(const StochasticMap& map, const std::string& path) {
    map.validate();
    io_detail::write_text_atomic(path, to_json(map).dump(2) + "\n");
}

// Ground-truth scene file (used by `simulate` and the experiment harness):
//   { "transform": {"theta": <rad>, "t": [x, y]},
//     "common": [landmarks], "only_p": [landmarks], "only_q": [landmarks] }

inline nlohmann::json to_json(const GroundTruthScene& scene) {
    nlohmann::json j;
    j["transform"] = {{"theta", scene.transform.theta},
                      {"t", {scene.transform.t.x, scene.transform.t.y}}};
    const std::pair<const char*, const std::vector<Landmark>*> blocks[] = {
        {"common", &scene.common}, {"only_p", &scene.only_p}, {"only_q", &scene.only_q}};
    for (const auto& [key, block] : blocks) {
        j[key] = nlohmann::json::array();
        for (const Landmark& lm : *block)
            j[key].push_back({{"id", lm.id}, {"x", lm.pos.x}, {"y", lm.pos.y}});
    }
    return j;
}

inline GroundTruthScene scene_from_json(const nlohmann::json& j, const std::string& where) {
    GroundTruthScene scene;
    if (!j.contains("transform"))
        throw DataError(where + ": missing field 'transform'");
    const auto& tr = j.at("transform");
    const double theta = io_detail::finite_number(tr, "theta", where + ": transform");
    if (!tr.contains("t") || !tr.at("t").is_array() || tr.at("t").size() != 2)
        throw DataError(where + ": transform field 't' must be [x, y]");
    scene.transform = Rigid2(theta, {tr.at("t")[0].get<double>(), tr.at("t")[1].get<double>()});
    const std::pair<const char*, std::vector<Landmark>*> blocks[] = {
        {"common", &scene.common}, {"only_p", &scene.only_p}, {"only_q", &scene.only_q}};
    for (const auto& [key, block] : blocks) {
        if (!j.contains(key) || !j.at(key).is_array())
            throw DataError(where + ": missing or non-array field '" + std::string(key) + "'");
        std::size_t idx = 0;
        for (const auto& e : j.at(key)) {
            const std::string rec = where + ": " + key + " record " + std::to_string(idx);
            if (!e.contains("id") || !e.at("id").is_number_integer())
                throw DataError(rec + ": missing or non-integer field 'id'");
            Landmark lm;
            lm.id = e.at("id").get<std::int64_t>();
            lm.pos = {io_detail::finite_number(e, "x", rec), io_detail::finite_number(e, "y", rec)};
            block->push_back(lm);
            ++idx;
        }
    }
    try {
        scene.validate();
    } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
    }
    return scene;
}

inline GroundTruthScene read_scene(const std::string& path) {
    return scene_from_json(io_detail::parse_file(path), path);
}

inline void write_scene(const GroundTruthScene& scene, const std::string& path) {
    scene.validate();
    io_detail::write_text_atomic(path, to_json(scene).dump(2) + "\n");
}

// Alignment result as JSON (CLI output).
inline nlohmann::json to_json(const AlignmentEstimate& est) {
    nlohmann::json j;
    j["theta"] = est.theta_star;
    j["t"] = {est.t_star.x, est.t_star.y};
    j["alpha"] = est.alpha;
    j["beta"] = est.beta;
    j["gamma"] = est.gamma;
    j["j1_min"] = est.j1_min;
    j["n_common"] = est.n_common;
    j["mu"] = nlohmann::json::array();
    for (const Point2& m : est.mu_star) j["mu"].push_back({m.x, m.y});
    return j;
}

} // namespace mapfuse
