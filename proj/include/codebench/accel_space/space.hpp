#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"

namespace codebench::accel {

enum class MemType { rram, dram, hbm };

inline const char* mem_type_name(MemType t) {
    switch (t) {
        case MemType::rram: return "RRAM";
        case MemType::dram: return "DRAM";
        case MemType::hbm: return "HBM";
    }
    return "?";
}

inline MemType mem_type_from_name(const std::string& s) {
    std::string u = s;
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (u == "RRAM") return MemType::rram;
    if (u == "DRAM") return MemType::dram;
    if (u == "HBM") return MemType::hbm;
    throw ParseError("unknown memory type '" + s + "'");
}

/// (banks, ranks, channels)
struct MemConfig {
    int banks = 1;
    int ranks = 1;
    int channels = 1;
    auto operator<=>(const MemConfig&) const = default;
};

inline const std::vector<MemConfig>& mem_configs(MemType t) {
    static const std::vector<MemConfig> rram{{16, 2, 2}, {8, 2, 4}, {4, 2, 8}, {2, 2, 16}, {32, 2, 1}, {1, 2, 32}};
    static const std::vector<MemConfig> dram{{16, 2, 2}, {8, 2, 4}, {32, 2, 1}, {16, 4, 1}};
    static const std::vector<MemConfig> hbm{{32, 1, 4}};
    switch (t) {
        case MemType::rram: return rram;
        case MemType::dram: return dram;
        case MemType::hbm: return hbm;
    }
    return rram;
}

struct AcceleratorConfig {
    int p_ib = 1;
    int p_if = 1;
    int p_ix = 1;
    int p_iy = 1;
    int p_of = 1;
    int p_kx = 1;
    int p_ky = 1;
    int batch = 1;
    int act_buf_mb = 1;
    int wgt_buf_mb = 1;
    int mask_buf_mb = 1;
    MemType mem_type = MemType::rram;
    int mem_config = 0;  // index into mem_configs(mem_type)

    auto operator<=>(const AcceleratorConfig&) const = default;

    int pe_count() const { return p_ib * p_ix * p_iy; }
    int mac_units_per_pe() const { return p_of * p_kx * p_ky; }
    int multipliers_per_mac() const { return p_if; }
    const MemConfig& memory() const { return mem_configs(mem_type).at(static_cast<std::size_t>(mem_config)); }

    std::string str() const {
        std::ostringstream os;
        os << "P_ib=" << p_ib << " P_if=" << p_if << " P_ix=" << p_ix << " P_iy=" << p_iy << " P_of=" << p_of << " P_k=" << p_kx << "x"
           << p_ky << " batch=" << batch << " act=" << act_buf_mb << "MB wgt=" << wgt_buf_mb << "MB mask=" << mask_buf_mb << "MB "
           << mem_type_name(mem_type) << "[" << memory().banks << "," << memory().ranks << "," << memory().channels << "]";
        return os.str();
    }
};

inline int pe_count(const AcceleratorConfig& c) { return c.pe_count(); }
inline int mac_units_per_pe(const AcceleratorConfig& c) { return c.mac_units_per_pe(); }

inline constexpr std::size_t kAccelDims = 13;
using AccelEmbedding = std::array<double, kAccelDims>;

inline const std::array<const char*, kAccelDims>& accel_dim_names() {
    static const std::array<const char*, kAccelDims> names{"P_ib", "P_if", "P_ix", "P_iy", "P_of", "P_kx", "P_ky",
                                                          "batch", "act_buf_mb", "wgt_buf_mb", "mask_buf_mb", "mem_type", "mem_config"};
    return names;
}

inline std::vector<int> buffer_sizes_mb() {
    std::vector<int> v{1};
    for (int s = 2; s <= 24; s += 2) v.push_back(s);
    return v;
}

struct DecodeResult {
    AcceleratorConfig config;
    bool clamped = false;
};

/// The accelerator design space. Every value list may be narrowed (for fixed
/// sub-spaces); encoding normalises each coordinate by its ordinal index in
/// this space's list.
class AccelSpace {
public:
    std::vector<int> p_ib{1, 2, 4};
    std::vector<int> p_if{1, 16};
    std::vector<int> p_ix{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> p_iy{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> p_of{1, 2, 4, 8};
    std::vector<int> p_k{1, 3, 5, 7};
    std::vector<int> batch{1, 64, 128, 256, 512};
    std::vector<int> act_buf_mb = buffer_sizes_mb();
    std::vector<int> wgt_buf_mb = buffer_sizes_mb();
    std::vector<int> mask_buf_mb{1, 2, 3, 4};
    std::vector<MemType> mem_types{MemType::rram, MemType::dram, MemType::hbm};
    /// Allowed configuration indices per memory type (parallel to mem_types);
    /// empty means every configuration of that type.
    std::vector<std::vector<int>> mem_config_subsets;

    void check() const {
        for (const auto* v : int_lists())
            if (v->empty()) throw ParameterError("accelerator space has an empty value list");
        if (mem_types.empty()) throw ParameterError("accelerator space has no memory types");
        if (!mem_config_subsets.empty() && mem_config_subsets.size() != mem_types.size())
            throw ParameterError("memory configuration subsets must parallel memory types");
        for (std::size_t t = 0; t < mem_types.size(); ++t)
            for (int i : configs_of(t))
                if (i < 0 || static_cast<std::size_t>(i) >= mem_configs(mem_types[t]).size())
                    throw ParameterError("memory configuration index out of range");
    }

    std::vector<int> configs_of(std::size_t type_pos) const {
        if (!mem_config_subsets.empty() && !mem_config_subsets[type_pos].empty()) return mem_config_subsets[type_pos];
        std::vector<int> all(mem_configs(mem_types[type_pos]).size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
        return all;
    }

    /// (type, config index) pairs in enumeration order.
    std::vector<std::pair<MemType, int>> memory_options() const {
        std::vector<std::pair<MemType, int>> out;
        for (std::size_t t = 0; t < mem_types.size(); ++t)
            for (int i : configs_of(t)) out.emplace_back(mem_types[t], i);
        return out;
    }

    std::uint64_t cardinality() const {
        check();
        std::uint64_t n = memory_options().size();
        for (const auto* v : int_lists()) n *= v->size();
        return n;
    }

    bool contains(const AcceleratorConfig& c) const {
        auto in = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
        if (c.p_kx != c.p_ky) return false;
        if (!in(p_ib, c.p_ib) || !in(p_if, c.p_if) || !in(p_ix, c.p_ix) || !in(p_iy, c.p_iy) || !in(p_of, c.p_of) || !in(p_k, c.p_kx) ||
            !in(batch, c.batch) || !in(act_buf_mb, c.act_buf_mb) || !in(wgt_buf_mb, c.wgt_buf_mb) || !in(mask_buf_mb, c.mask_buf_mb))
            return false;
        const auto opts = memory_options();
        return std::find(opts.begin(), opts.end(), std::make_pair(c.mem_type, c.mem_config)) != opts.end();
    }

    void validate(const AcceleratorConfig& c) const {
        if (c.p_kx != c.p_ky) throw ValidationError("P_kx must equal P_ky");
        if (!contains(c)) throw ValidationError("accelerator configuration outside the design space: " + c.str());
    }

    /// Config at a mixed-radix ordinal; the memory option varies slowest.
    AcceleratorConfig at(std::uint64_t ordinal) const {
        if (ordinal >= cardinality()) throw ParameterError("accelerator ordinal out of range");
        AcceleratorConfig c;
        auto digit = [&ordinal](const std::vector<int>& v) {
            const int x = v[ordinal % v.size()];
            ordinal /= v.size();
            return x;
        };
        c.mask_buf_mb = digit(mask_buf_mb);
        c.wgt_buf_mb = digit(wgt_buf_mb);
        c.act_buf_mb = digit(act_buf_mb);
        c.batch = digit(batch);
        c.p_kx = c.p_ky = digit(p_k);
        c.p_of = digit(p_of);
        c.p_iy = digit(p_iy);
        c.p_ix = digit(p_ix);
        c.p_if = digit(p_if);
        c.p_ib = digit(p_ib);
        const auto opts = memory_options();
        c.mem_type = opts[ordinal].first;
        c.mem_config = opts[ordinal].second;
        return c;
    }

    /// Streams every configuration in ordinal order; the callback may return
    /// false to stop early. Returns the number of configurations visited.
    std::uint64_t enumerate(const std::function<bool(const AcceleratorConfig&)>& fn) const {
        check();
        const auto opts = memory_options();
        std::uint64_t n = 0;
        AcceleratorConfig c;
        for (auto [t, mi] : opts) {
            c.mem_type = t;
            c.mem_config = mi;
            for (int a : p_ib)
                for (int b : p_if)
                    for (int x : p_ix)
                        for (int y : p_iy)
                            for (int o : p_of)
                                for (int k : p_k)
                                    for (int bt : batch)
                                        for (int ab : act_buf_mb)
                                            for (int wb : wgt_buf_mb)
                                                for (int mb : mask_buf_mb) {
                                                    c.p_ib = a;
                                                    c.p_if = b;
                                                    c.p_ix = x;
                                                    c.p_iy = y;
                                                    c.p_of = o;
                                                    c.p_kx = c.p_ky = k;
                                                    c.batch = bt;
                                                    c.act_buf_mb = ab;
                                                    c.wgt_buf_mb = wb;
                                                    c.mask_buf_mb = mb;
                                                    ++n;
                                                    if (!fn(c)) return n;
                                                }
        }
        return n;
    }

    AcceleratorConfig sample(Rng& rng) const {
        return at(std::uniform_int_distribution<std::uint64_t>(0, cardinality() - 1)(rng));
    }

    AccelEmbedding encode(const AcceleratorConfig& c) const {
        validate(c);
        const auto [type_pos, cfg_pos] = memory_position(c);
        const auto cfgs = configs_of(type_pos);
        return {norm(p_ib, c.p_ib),
                norm(p_if, c.p_if),
                norm(p_ix, c.p_ix),
                norm(p_iy, c.p_iy),
                norm(p_of, c.p_of),
                norm(p_k, c.p_kx),
                norm(p_k, c.p_ky),
                norm(batch, c.batch),
                norm(act_buf_mb, c.act_buf_mb),
                norm(wgt_buf_mb, c.wgt_buf_mb),
                norm(mask_buf_mb, c.mask_buf_mb),
                ratio(type_pos, mem_types.size()),
                ratio(cfg_pos, cfgs.size())};
    }

    /// Snaps each coordinate to its nearest ordinal index. P_kx/P_ky are
    /// decoded jointly (nearest index to both coordinates) and so are memory
    /// type and configuration. Coordinates outside [0, 1] are flagged; the
    /// result is the nearest valid configuration either way.
    DecodeResult decode(const AccelEmbedding& x_in) const {
        check();
        DecodeResult r;
        AccelEmbedding x = x_in;
        for (double& v : x) {
            if (!std::isfinite(v)) throw ParameterError("accelerator embedding has a non-finite coordinate");
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                r.clamped = true;
            }
        }
        auto& c = r.config;
        c.p_ib = snap(p_ib, x[0]);
        c.p_if = snap(p_if, x[1]);
        c.p_ix = snap(p_ix, x[2]);
        c.p_iy = snap(p_iy, x[3]);
        c.p_of = snap(p_of, x[4]);
        c.p_kx = c.p_ky = snap(p_k, std::clamp(0.5 * (x_in[5] + x_in[6]), 0.0, 1.0));
        c.batch = snap(batch, x[7]);
        c.act_buf_mb = snap(act_buf_mb, x[8]);
        c.wgt_buf_mb = snap(wgt_buf_mb, x[9]);
        c.mask_buf_mb = snap(mask_buf_mb, x[10]);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < mem_types.size(); ++t) {
            const auto cfgs = configs_of(t);
            for (std::size_t i = 0; i < cfgs.size(); ++i) {
                const double dt = ratio(t, mem_types.size()) - x_in[11];
                const double dc = ratio(i, cfgs.size()) - x_in[12];
                const double d = dt * dt + dc * dc;
                if (d < best) {
                    best = d;
                    c.mem_type = mem_types[t];
                    c.mem_config = cfgs[i];
                }
            }
        }
        return r;
    }

    /// Allowed normalised values of each coordinate (the grid GOBI snaps to).
    std::vector<double> grid(std::size_t dim) const {
        auto ticks = [](std::size_t n) {
            std::vector<double> t(n);
            for (std::size_t i = 0; i < n; ++i) t[i] = ratio(i, n);
            return t;
        };
        const std::array<const std::vector<int>*, 11> lists{&p_ib, &p_if, &p_ix, &p_iy, &p_of, &p_k, &p_k, &batch, &act_buf_mb, &wgt_buf_mb, &mask_buf_mb};
        if (dim < 11) return ticks(lists[dim]->size());
        if (dim == 11) return ticks(mem_types.size());
        if (dim == 12) {
            std::size_t widest = 0;
            for (std::size_t t = 0; t < mem_types.size(); ++t) widest = std::max(widest, configs_of(t).size());
            return ticks(widest);
        }
        throw ParameterError("accelerator dimension out of range");
    }

    static double ratio(std::size_t i, std::size_t n) { return n <= 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1); }

private:
    std::array<const std::vector<int>*, 10> int_lists() const {
        return {&p_ib, &p_if, &p_ix, &p_iy, &p_of, &p_k, &batch, &act_buf_mb, &wgt_buf_mb, &mask_buf_mb};
    }

    static double norm(const std::vector<int>& v, int x) {
        const auto it = std::find(v.begin(), v.end(), x);
        return ratio(static_cast<std::size_t>(it - v.begin()), v.size());
    }

    /// Nearest ordinal; ties go to the lower index.
    static int snap(const std::vector<int>& v, double x) {
        if (v.size() == 1) return v[0];
        const double pos = x * static_cast<double>(v.size() - 1);
        auto i = static_cast<std::size_t>(std::floor(pos));
        if (i + 1 < v.size() && pos - static_cast<double>(i) > 0.5) ++i;
        return v[std::min(i, v.size() - 1)];
    }

    std::pair<std::size_t, std::size_t> memory_position(const AcceleratorConfig& c) const {
        for (std::size_t t = 0; t < mem_types.size(); ++t) {
            if (mem_types[t] != c.mem_type) continue;
            const auto cfgs = configs_of(t);
            for (std::size_t i = 0; i < cfgs.size(); ++i)
                if (cfgs[i] == c.mem_config) return {t, i};
        }
        throw ValidationError("memory option outside the design space");
    }
};

inline nlohmann::json to_json(const AcceleratorConfig& c) {
    const auto& m = c.memory();
    return {{"P_ib", c.p_ib},
            {"P_if", c.p_if},
            {"P_ix", c.p_ix},
            {"P_iy", c.p_iy},
            {"P_of", c.p_of},
            {"P_kx", c.p_kx},
            {"P_ky", c.p_ky},
            {"batch", c.batch},
            {"act_buf_mb", c.act_buf_mb},
            {"wgt_buf_mb", c.wgt_buf_mb},
            {"mask_buf_mb", c.mask_buf_mb},
            {"mem_type", mem_type_name(c.mem_type)},
            {"mem_config", {m.banks, m.ranks, m.channels}}};
}

inline AcceleratorConfig accel_from_json(const nlohmann::json& j) {
    try {
        AcceleratorConfig c;
        c.p_ib = j.at("P_ib").get<int>();
        c.p_if = j.at("P_if").get<int>();
        c.p_ix = j.at("P_ix").get<int>();
        c.p_iy = j.at("P_iy").get<int>();
        c.p_of = j.at("P_of").get<int>();
        c.p_kx = j.at("P_kx").get<int>();
        c.p_ky = j.at("P_ky").get<int>();
        c.batch = j.at("batch").get<int>();
        c.act_buf_mb = j.at("act_buf_mb").get<int>();
        c.wgt_buf_mb = j.at("wgt_buf_mb").get<int>();
        c.mask_buf_mb = j.at("mask_buf_mb").get<int>();
        c.mem_type = mem_type_from_name(j.at("mem_type").get<std::string>());
        const auto mc = j.at("mem_config").get<std::vector<int>>();
        if (mc.size() != 3) throw ParseError("mem_config must be [banks, ranks, channels]");
        const MemConfig want{mc[0], mc[1], mc[2]};
        const auto& opts = mem_configs(c.mem_type);
        const auto it = std::find(opts.begin(), opts.end(), want);
        if (it == opts.end()) throw ValidationError(std::string("memory configuration not offered for ") + mem_type_name(c.mem_type));
        c.mem_config = static_cast<int>(it - opts.begin());
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad accelerator configuration: ") + e.what());
    }
}

}  // namespace codebench::accel
