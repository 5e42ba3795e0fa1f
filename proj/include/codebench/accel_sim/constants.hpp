#pragma once

#include <array>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "codebench/accel_space/space.hpp"
#include "codebench/common.hpp"
#include "codebench/sha256.hpp"

#ifndef CODEBENCH_DEFAULT_DATA_DIR
#define CODEBENCH_DEFAULT_DATA_DIR "data"
#endif

namespace codebench {

/// Directory holding shipped data files; CODEBENCH_DATA_DIR overrides.
inline std::string data_dir() {
    if (const char* env = std::getenv("CODEBENCH_DATA_DIR"); env && *env) return env;
    return CODEBENCH_DEFAULT_DATA_DIR;
}

}  // namespace codebench

namespace codebench::accel {

struct MemoryCosts {
    double bandwidth_gbps = 0;   // sustained main-memory bandwidth
    double read_pj_per_byte = 0;
    double write_pj_per_byte = 0;
};

struct MemoryTypeCosts {
    double controller_area_mm2 = 0;
    double interface_leak_mw = 0;
    std::vector<MemoryCosts> configs;  // parallel to mem_configs(type)
};

/// Energy (pJ), area (mm^2), and leakage constants of the analytic model.
struct CostConstants {
    std::string version = "1";
    double clock_hz = 700e6;

    double mac_pj_per_multiply = 0.35;
    double adder_tree_pj_per_mac_op = 0.10;
    double rounding_pj_per_mac_op = 0.05;
    double pool_pj_per_op = 0.08;
    double elementwise_pj_per_op = 0.05;
    double mask_pj_per_mac_op = 0.01;

    double buffer_read_pj_per_byte = 0.6;    // for a 1 MB buffer
    double buffer_write_pj_per_byte = 0.8;
    double buffer_size_exponent = 0.5;       // access energy grows as size^exponent
    double buffer_usable_fraction = 0.95;

    double area_per_multiplier_mm2 = 3.0e-4;
    double area_per_mac_overhead_mm2 = 1.0e-3;  // adder tree, rounding, activation
    double area_per_pe_mm2 = 0.05;              // FIFOs, sparsity, pooling, bn, upsampling
    double area_per_mb_act_mm2 = 3.0;
    double area_per_mb_wgt_mm2 = 3.0;
    double area_per_mb_mask_mm2 = 3.0;
    double control_area_mm2 = 1.0;              // control block + DMA

    double leak_mw_per_mm2 = 0.4;

    std::map<MemType, MemoryTypeCosts> memory{
        {MemType::rram,
         {2.0, 20.0, {{400, 10, 14}, {480, 10.5, 14.5}, {560, 11, 15}, {600, 11.5, 15.5}, {320, 9.5, 13.5}, {640, 12, 16}}}},
        {MemType::dram, {5.0, 60.0, {{25.6, 120, 130}, {38.4, 125, 135}, {12.8, 115, 125}, {19.2, 118, 128}}}},
        {MemType::hbm, {8.0, 80.0, {{256, 30, 34}}}},
    };

    const MemoryCosts& memory_costs(const AcceleratorConfig& c) const {
        return memory.at(c.mem_type).configs.at(static_cast<std::size_t>(c.mem_config));
    }

    void check() const {
        const std::array<double, 19> scalars{clock_hz,
                                             mac_pj_per_multiply,
                                             adder_tree_pj_per_mac_op,
                                             rounding_pj_per_mac_op,
                                             pool_pj_per_op,
                                             elementwise_pj_per_op,
                                             mask_pj_per_mac_op,
                                             buffer_read_pj_per_byte,
                                             buffer_write_pj_per_byte,
                                             buffer_size_exponent,
                                             buffer_usable_fraction,
                                             area_per_multiplier_mm2,
                                             area_per_mac_overhead_mm2,
                                             area_per_pe_mm2,
                                             area_per_mb_act_mm2,
                                             area_per_mb_wgt_mm2,
                                             area_per_mb_mask_mm2,
                                             control_area_mm2,
                                             leak_mw_per_mm2};
        for (double v : scalars)
            if (!(v >= 0) || !std::isfinite(v)) throw ParameterError("cost constants must be finite and non-negative");
        if (clock_hz <= 0) throw ParameterError("clock must be positive");
        for (MemType t : {MemType::rram, MemType::dram, MemType::hbm}) {
            auto it = memory.find(t);
            if (it == memory.end()) throw ParameterError(std::string("missing memory costs for ") + mem_type_name(t));
            if (it->second.configs.size() != mem_configs(t).size())
                throw ParameterError(std::string("memory costs for ") + mem_type_name(t) + " do not match its configurations");
            for (const auto& m : it->second.configs)
                if (!(m.bandwidth_gbps > 0) || m.read_pj_per_byte < 0 || m.write_pj_per_byte < 0)
                    throw ParameterError("memory costs must be positive");
        }
    }

    nlohmann::json body_json() const {
        nlohmann::json mem = nlohmann::json::object();
        for (const auto& [t, mc] : memory) {
            nlohmann::json cfgs = nlohmann::json::array();
            for (const auto& c : mc.configs)
                cfgs.push_back({{"bandwidth_gbps", c.bandwidth_gbps}, {"read_pj_per_byte", c.read_pj_per_byte}, {"write_pj_per_byte", c.write_pj_per_byte}});
            mem[mem_type_name(t)] = {{"controller_area_mm2", mc.controller_area_mm2}, {"interface_leak_mw", mc.interface_leak_mw}, {"configs", cfgs}};
        }
        return {{"clock_hz", clock_hz},
                {"mac_pj_per_multiply", mac_pj_per_multiply},
                {"adder_tree_pj_per_mac_op", adder_tree_pj_per_mac_op},
                {"rounding_pj_per_mac_op", rounding_pj_per_mac_op},
                {"pool_pj_per_op", pool_pj_per_op},
                {"elementwise_pj_per_op", elementwise_pj_per_op},
                {"mask_pj_per_mac_op", mask_pj_per_mac_op},
                {"buffer_read_pj_per_byte", buffer_read_pj_per_byte},
                {"buffer_write_pj_per_byte", buffer_write_pj_per_byte},
                {"buffer_size_exponent", buffer_size_exponent},
                {"buffer_usable_fraction", buffer_usable_fraction},
                {"area_per_multiplier_mm2", area_per_multiplier_mm2},
                {"area_per_mac_overhead_mm2", area_per_mac_overhead_mm2},
                {"area_per_pe_mm2", area_per_pe_mm2},
                {"area_per_mb_act_mm2", area_per_mb_act_mm2},
                {"area_per_mb_wgt_mm2", area_per_mb_wgt_mm2},
                {"area_per_mb_mask_mm2", area_per_mb_mask_mm2},
                {"control_area_mm2", control_area_mm2},
                {"leak_mw_per_mm2", leak_mw_per_mm2},
                {"memory", mem}};
    }

    static std::string checksum_of(const nlohmann::json& body) { return sha256_hex(body.dump()); }

    nlohmann::json to_json() const {
        auto body = body_json();
        return {{"version", version}, {"checksum", checksum_of(body)}, {"constants", body}};
    }

    static CostConstants from_json(const nlohmann::json& j) {
        try {
            CostConstants k;
            k.version = j.at("version").get<std::string>();
            const auto& b = j.at("constants");
            if (j.at("checksum").get<std::string>() != checksum_of(b)) throw ParseError("cost constants checksum mismatch");
            k.clock_hz = b.at("clock_hz");
            k.mac_pj_per_multiply = b.at("mac_pj_per_multiply");
            k.adder_tree_pj_per_mac_op = b.at("adder_tree_pj_per_mac_op");
            k.rounding_pj_per_mac_op = b.at("rounding_pj_per_mac_op");
            k.pool_pj_per_op = b.at("pool_pj_per_op");
            k.elementwise_pj_per_op = b.at("elementwise_pj_per_op");
            k.mask_pj_per_mac_op = b.at("mask_pj_per_mac_op");
            k.buffer_read_pj_per_byte = b.at("buffer_read_pj_per_byte");
            k.buffer_write_pj_per_byte = b.at("buffer_write_pj_per_byte");
            k.buffer_size_exponent = b.at("buffer_size_exponent");
            k.buffer_usable_fraction = b.at("buffer_usable_fraction");
            k.area_per_multiplier_mm2 = b.at("area_per_multiplier_mm2");
            k.area_per_mac_overhead_mm2 = b.at("area_per_mac_overhead_mm2");
            k.area_per_pe_mm2 = b.at("area_per_pe_mm2");
            k.area_per_mb_act_mm2 = b.at("area_per_mb_act_mm2");
            k.area_per_mb_wgt_mm2 = b.at("area_per_mb_wgt_mm2");
            k.area_per_mb_mask_mm2 = b.at("area_per_mb_mask_mm2");
            k.control_area_mm2 = b.at("control_area_mm2");
            k.leak_mw_per_mm2 = b.at("leak_mw_per_mm2");
            k.memory.clear();
            for (const auto& [name, mj] : b.at("memory").items()) {
                MemoryTypeCosts mc;
                mc.controller_area_mm2 = mj.at("controller_area_mm2");
                mc.interface_leak_mw = mj.at("interface_leak_mw");
                for (const auto& c : mj.at("configs"))
                    mc.configs.push_back({c.at("bandwidth_gbps"), c.at("read_pj_per_byte"), c.at("write_pj_per_byte")});
                k.memory[mem_type_from_name(name)] = mc;
            }
            k.check();
            return k;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad cost constants: ") + e.what());
        }
    }

    static CostConstants load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw LookupError("cannot open cost constants file " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("cost constants file " + path + ": " + e.what());
        }
        return from_json(j);
    }

    static CostConstants load_default() { return load(data_dir() + "/cost_constants.json"); }
};

}  // namespace codebench::accel
