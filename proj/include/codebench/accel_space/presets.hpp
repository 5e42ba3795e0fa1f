#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/accel_sim/constants.hpp"
#include "codebench/accel_space/space.hpp"

namespace codebench::accel {

/// A published accelerator mapped to its nearest in-space configuration.
struct Preset {
    std::string name;
    int tech_node_nm = 0;
    double clock_mhz = 0;
    double reported_area_mm2 = 0;
    int reported_pes = 0;
    int reported_macs_per_pe = 0;
    int reported_multipliers_per_mac = 0;
    AcceleratorConfig config;
};

inline std::vector<Preset> presets_from_json(const nlohmann::json& j) {
    std::vector<Preset> out;
    try {
        for (const auto& e : j.at("presets")) {
            Preset p;
            p.name = e.at("name").get<std::string>();
            p.tech_node_nm = e.at("tech_node_nm").get<int>();
            p.clock_mhz = e.at("clock_mhz").get<double>();
            p.reported_area_mm2 = e.at("reported_area_mm2").get<double>();
            p.reported_pes = e.at("reported_pes").get<int>();
            p.reported_macs_per_pe = e.at("reported_macs_per_pe").get<int>();
            p.reported_multipliers_per_mac = e.at("reported_multipliers_per_mac").get<int>();
            p.config = accel_from_json(e.at("config"));
            out.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad presets file: ") + e.what());
    }
    return out;
}

inline std::vector<Preset> load_presets(const std::string& path = data_dir() + "/presets.json") {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot open presets file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("presets file " + path + ": " + e.what());
    }
    return presets_from_json(j);
}

inline Preset find_preset(const std::vector<Preset>& presets, const std::string& name) {
    auto lower = [](std::string s) {
        for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        return s;
    };
    for (const auto& p : presets)
        if (lower(p.name) == lower(name)) return p;
    throw LookupError("unknown accelerator preset '" + name + "'");
}

}  // namespace codebench::accel
