#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "codebench/accel_sim/constants.hpp"
#include "codebench/accel_sim/fixed_point.hpp"
#include "codebench/accel_space/space.hpp"
#include "codebench/cnn_space/graph.hpp"

namespace codebench::accel {

enum class LayerKind { mac, pool, global_pool, elementwise };

/// One schedulable layer. Tiling runs over the output spatial extent
/// (n_ox, n_oy) because the dataflow is output stationary.
struct LayerShape {
    std::string name;
    LayerKind kind = LayerKind::mac;
    int n_ib = 1, n_if = 1, n_ix = 1, n_iy = 1, n_of = 1, n_kx = 1, n_ky = 1;
    int n_ox = 1, n_oy = 1;
    int stride = 1, padding = 0;
    double in_elems = 0;      // per batch
    double out_elems = 0;
    double weight_elems = 0;
    double sparsity_act = 0.4;
    double sparsity_wgt = 0.5;

    double macs() const {
        return static_cast<double>(n_ib) * n_if * n_ox * n_oy * static_cast<double>(n_of) * n_kx * n_ky;
    }
};

struct TensorShape {
    int c = 3, h = 32, w = 32;
};

struct SimOptions {
    TensorShape input{3, 32, 32};
    double sparsity_act = 0.4;
    double sparsity_wgt = 0.5;
    bool binary_mask = true;
    FixedPointSpec fixed_point{};
};

/// Lowers one operation block to a layer; returns false for blocks that
/// only reshape (dropout at inference, flatten).
inline bool lower_block(const cnn::OpBlock& b, const TensorShape& in, int batch, const SimOptions& opt, LayerShape& out,
                        TensorShape& shape) {
    using cnn::OpKind;
    auto spatial = [](int n, int k, int s, int p) { return std::max(1, static_cast<int>(std::floor((n + 2.0 * p - k) / s)) + 1); };
    const auto& p = b.params;
    out = LayerShape{};
    out.name = b.label();
    out.n_ib = batch;
    out.n_ix = in.w;
    out.n_iy = in.h;
    out.sparsity_act = opt.sparsity_act;
    out.sparsity_wgt = opt.sparsity_wgt;
    out.in_elems = static_cast<double>(batch) * in.c * in.h * in.w;
    shape = in;
    switch (b.kind) {
        case OpKind::conv:
        case OpKind::conv3d:
        case OpKind::dwconv:
        case OpKind::transposed_conv: {
            const int k = std::max(1, p.kernel);
            const int s = std::max(1, p.stride);
            out.kind = LayerKind::mac;
            out.n_kx = out.n_ky = k;
            out.stride = s;
            out.padding = p.padding;
            if (b.kind == OpKind::transposed_conv) {
                shape.w = in.w * s;
                shape.h = in.h * s;
            } else {
                shape.w = spatial(in.w, k, s, p.padding);
                shape.h = spatial(in.h, k, s, p.padding);
            }
            if (b.kind == OpKind::dwconv) {
                shape.c = in.c;
                out.n_if = 1;
            } else {
                shape.c = p.channels;
                const int g = std::max(1, p.groups);
                out.n_if = (in.c + g - 1) / g;
                if (b.kind == OpKind::conv3d) out.n_if *= k;  // depth window folded into channels
            }
            out.n_of = shape.c;
            out.weight_elems = static_cast<double>(out.n_of) * out.n_if * k * k;
            break;
        }
        case OpKind::maxpool:
        case OpKind::avgpool: {
            const int k = std::max(1, p.kernel);
            const int s = std::max(1, p.stride);
            out.kind = LayerKind::pool;
            out.n_kx = out.n_ky = k;
            out.stride = s;
            out.padding = p.padding;
            shape.w = spatial(in.w, k, s, p.padding);
            shape.h = spatial(in.h, k, s, p.padding);
            out.n_of = in.c;
            break;
        }
        case OpKind::global_avg_pool:
            out.kind = LayerKind::global_pool;
            shape.w = shape.h = 1;
            out.n_of = in.c;
            break;
        case OpKind::channel_shuffle:
            out.kind = LayerKind::elementwise;
            out.n_of = in.c;
            break;
        case OpKind::upsample:
            out.kind = LayerKind::elementwise;
            shape.w = shape.h = std::max(1, p.target_size);
            out.n_of = in.c;
            break;
        case OpKind::dense:
            out.kind = LayerKind::mac;
            out.n_if = in.c * in.h * in.w;
            out.n_ix = out.n_iy = 1;
            shape = TensorShape{p.hidden_units, 1, 1};
            out.n_of = p.hidden_units;
            out.weight_elems = static_cast<double>(out.n_of) * out.n_if;
            break;
        case OpKind::dropout:
            return false;
        case OpKind::flatten:
            shape = TensorShape{in.c * in.h * in.w, 1, 1};
            return false;
        default:
            throw UnmappableError("no processing module executes block '" + b.label() + "'");
    }
    out.n_ox = shape.w;
    out.n_oy = shape.h;
    out.out_elems = static_cast<double>(batch) * shape.c * shape.h * shape.w;
    return true;
}

/// Layer list of a graph in topological order. Nodes with several inputs
/// add an element-wise merge (channels: max, spatial: min).
inline std::vector<LayerShape> lower_graph(const cnn::ComputationalGraph& g, int batch, const SimOptions& opt = {}) {
    const auto flat = cnn::flatten(g);
    const std::size_t n = flat.nodes.size();
    std::vector<std::vector<int>> preds(n), succs(n);
    for (auto [a, b] : flat.edges) {
        preds[b].push_back(a);
        succs[a].push_back(b);
    }
    std::vector<int> indeg(n);
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i) {
        indeg[i] = static_cast<int>(preds[i].size());
        if (indeg[i] == 0) ready.push(static_cast<int>(i));
    }
    std::vector<TensorShape> shapes(n);
    std::vector<LayerShape> layers;
    std::size_t visited = 0;
    while (!ready.empty()) {
        const int v = ready.top();
        ready.pop();
        ++visited;
        TensorShape in = opt.input;
        if (!preds[v].empty()) {
            in = shapes[preds[v][0]];
            for (int u : preds[v]) {
                in.c = std::max(in.c, shapes[u].c);
                in.h = std::min(in.h, shapes[u].h);
                in.w = std::min(in.w, shapes[u].w);
            }
            if (preds[v].size() > 1) {
                LayerShape merge;
                merge.name = "merge@" + std::to_string(v);
                merge.kind = LayerKind::elementwise;
                merge.n_ib = batch;
                merge.n_of = in.c;
                merge.n_ix = merge.n_ox = in.w;
                merge.n_iy = merge.n_oy = in.h;
                merge.out_elems = static_cast<double>(batch) * in.c * in.h * in.w;
                merge.in_elems = merge.out_elems * static_cast<double>(preds[v].size());
                merge.sparsity_act = opt.sparsity_act;
                merge.sparsity_wgt = 0;
                layers.push_back(merge);
            }
        }
        const auto& block = flat.nodes[v];
        if (block.kind == cnn::OpKind::input || block.kind == cnn::OpKind::output) {
            shapes[v] = in;
        } else {
            LayerShape layer;
            if (lower_block(block, in, batch, opt, layer, shapes[v])) layers.push_back(std::move(layer));
        }
        for (int w : succs[v])
            if (--indeg[w] == 0) ready.push(w);
    }
    if (visited != n) throw ValidationError("graph has a cycle");
    return layers;
}

struct BufferCapacity {
    double act_bytes = 0;
    double wgt_bytes = 0;
    double mask_bytes = 0;
};

inline BufferCapacity buffer_capacity(const AcceleratorConfig& c, const CostConstants& k) {
    const double mb = 1024.0 * 1024.0 * k.buffer_usable_fraction;
    return {c.act_buf_mb * mb, c.wgt_buf_mb * mb, c.mask_buf_mb * mb};
}

struct LayerReport {
    std::string name;
    double mac_cycles = 0;
    double other_cycles = 0;
    double memory_cycles = 0;
    double cycles = 0;
    double macs_executed = 0;
    double mac_slots = 0;
    double memory_bytes = 0;
    double mask_bytes = 0;
    double energy_pj = 0;
};

inline int pipeline_depth(int multipliers) {
    int stages = 0;
    while ((1 << stages) < multipliers) ++stages;
    return stages + 2;
}

/// Main-memory traffic of `bytes` through a buffer of `cap` bytes: loaded
/// once when it fits, re-streamed proportionally when it spills.
inline double spill_traffic(double bytes, double cap) {
    if (bytes <= 0) return 0;
    return bytes * std::max(1.0, bytes / cap);
}

inline LayerReport simulate_layer(const LayerShape& L, const AcceleratorConfig& c, const CostConstants& k, const BufferCapacity& cap,
                                  const SimOptions& opt = {}) {
    auto tiles = [](double n, double p) { return std::ceil(n / p); };
    LayerReport r;
    r.name = L.name;
    const double B = opt.fixed_point.bytes_per_value();
    const double keep_a = opt.binary_mask ? 1.0 - L.sparsity_act : 1.0;
    const double keep_w = opt.binary_mask ? 1.0 - L.sparsity_wgt : 1.0;
    const double pes = c.pe_count();
    const double spatial_tiles = tiles(L.n_ib, c.p_ib) * tiles(L.n_ox, c.p_ix) * tiles(L.n_oy, c.p_iy);

    double e = 0;
    double act_reads = 0, wgt_reads = 0;
    double weight_bytes = 0;
    double mask_bytes = 0;
    if (L.kind == LayerKind::mac) {
        const double need_w = static_cast<double>(c.p_of) * c.p_if * c.p_kx * c.p_ky * B;
        const double need_a = static_cast<double>(c.p_ib) * c.p_if * (c.p_ix + L.n_kx - 1) * (c.p_iy + L.n_ky - 1) * B +
                              static_cast<double>(c.p_ib) * c.p_ix * c.p_iy * c.p_of * B;
        if (need_w > cap.wgt_bytes || need_a > cap.act_bytes)
            throw CapacityError("layer '" + L.name + "' does not fit the on-chip buffers even at minimum tiling");
        const double passes = spatial_tiles * tiles(L.n_if, c.p_if) * tiles(L.n_of, c.p_of) * tiles(L.n_kx, c.p_kx) * tiles(L.n_ky, c.p_ky);
        const double eff = keep_a * keep_w;
        r.mac_cycles = passes * pipeline_depth(c.p_if) * eff;
        r.macs_executed = L.macs() * eff;
        const double unit_ops = passes * eff * pes * c.mac_units_per_pe();
        r.mac_slots = unit_ops * c.p_if;
        e += r.macs_executed * k.mac_pj_per_multiply + unit_ops * (k.adder_tree_pj_per_mac_op + k.rounding_pj_per_mac_op);
        if (opt.binary_mask) {
            e += unit_ops * k.mask_pj_per_mac_op;
            mask_bytes = (L.weight_elems + L.in_elems) / 8.0;
        }
        act_reads = r.macs_executed * B / c.p_of;
        wgt_reads = r.macs_executed * B / pes;
        weight_bytes = L.weight_elems * keep_w * B;
    } else {
        const double lanes = tiles(L.n_of, c.p_of);
        double ops = 0;
        switch (L.kind) {
            case LayerKind::pool:
                ops = static_cast<double>(L.n_ib) * L.n_of * L.n_ox * L.n_oy * L.n_kx * L.n_ky;
                r.other_cycles = spatial_tiles * lanes * L.n_kx * L.n_ky;
                e += ops * k.pool_pj_per_op;
                break;
            case LayerKind::global_pool:
                ops = L.in_elems;
                r.other_cycles = tiles(L.n_ib, c.p_ib) * tiles(L.n_ix, c.p_ix) * tiles(L.n_iy, c.p_iy) * lanes;
                e += ops * k.pool_pj_per_op;
                break;
            default:
                ops = std::max(L.in_elems, L.out_elems);
                r.other_cycles = spatial_tiles * lanes;
                e += ops * k.elementwise_pj_per_op;
                break;
        }
        act_reads = ops * keep_a * B;
    }

    const double in_bytes = L.in_elems * keep_a * B;
    const double out_bytes = L.out_elems * keep_a * B;
    const double act_traffic = spill_traffic(in_bytes + out_bytes, cap.act_bytes);
    const double wgt_traffic = spill_traffic(weight_bytes, cap.wgt_bytes);
    const double mask_traffic = spill_traffic(mask_bytes, cap.mask_bytes);
    const double act_share_in = in_bytes + out_bytes > 0 ? in_bytes / (in_bytes + out_bytes) : 0.0;
    const double reads = act_traffic * act_share_in + wgt_traffic + mask_traffic;
    const double writes = act_traffic * (1.0 - act_share_in);
    r.memory_bytes = reads + writes;
    r.mask_bytes = mask_traffic;

    const auto& mem = k.memory_costs(c);
    e += reads * mem.read_pj_per_byte + writes * mem.write_pj_per_byte;
    auto scale = [&k](double mb) { return std::pow(std::max(mb, 1e-9), k.buffer_size_exponent); };
    const double ea = scale(c.act_buf_mb), ew = scale(c.wgt_buf_mb), em = scale(c.mask_buf_mb);
    e += (act_traffic * ea + wgt_traffic * ew + mask_traffic * em) * k.buffer_write_pj_per_byte;
    e += (act_reads * ea + wgt_reads * ew + mask_bytes * em) * k.buffer_read_pj_per_byte;
    r.energy_pj = e;

    r.memory_cycles = r.memory_bytes / (mem.bandwidth_gbps * 1e9) * k.clock_hz;
    r.cycles = std::max(r.mac_cycles + r.other_cycles, r.memory_cycles);
    return r;
}

struct AreaBreakdown {
    double pe = 0, mac = 0, multipliers = 0, buffers = 0, control = 0, memory_interface = 0;
    double total() const { return pe + mac + multipliers + buffers + control + memory_interface; }
};

inline AreaBreakdown area_breakdown(double pes, double macs_per_pe, double multipliers_per_mac, double act_mb, double wgt_mb, double mask_mb,
                                    MemType mem, const CostConstants& k) {
    AreaBreakdown a;
    a.pe = pes * k.area_per_pe_mm2;
    a.mac = pes * macs_per_pe * k.area_per_mac_overhead_mm2;
    a.multipliers = pes * macs_per_pe * multipliers_per_mac * k.area_per_multiplier_mm2;
    a.buffers = act_mb * k.area_per_mb_act_mm2 + wgt_mb * k.area_per_mb_wgt_mm2 + mask_mb * k.area_per_mb_mask_mm2;
    a.control = k.control_area_mm2;
    a.memory_interface = k.memory.at(mem).controller_area_mm2;
    return a;
}

inline double area(const AcceleratorConfig& c, const CostConstants& k) {
    return area_breakdown(c.pe_count(), c.mac_units_per_pe(), c.p_if, c.act_buf_mb, c.wgt_buf_mb, c.mask_buf_mb, c.mem_type, k).total();
}

/// Hardware side of a performance record; latency and energies are per image.
struct PerfRecord {
    double latency_ms = 0;
    double area_mm2 = 0;
    double e_dyn_mJ = 0;
    double e_leak_mJ = 0;

    double energy_mJ() const { return e_dyn_mJ + e_leak_mJ; }
    double edp() const { return energy_mJ() * latency_ms; }
};

inline const char* perf_csv_header() { return "latency_ms,area_mm2,e_dyn_mJ,e_leak_mJ"; }

inline void write_csv_row(std::ostream& os, const PerfRecord& p) {
    const auto prec = os.precision(17);
    os << p.latency_ms << ',' << p.area_mm2 << ',' << p.e_dyn_mJ << ',' << p.e_leak_mJ;
    os.precision(prec);
}

struct SimResult {
    PerfRecord perf;
    std::vector<LayerReport> layers;
    double total_cycles = 0;
    double total_macs = 0;
};

inline void check_mappable(const AcceleratorConfig& c) {
    if (c.p_ib < 1 || c.p_if < 1 || c.p_ix < 1 || c.p_iy < 1 || c.p_of < 1 || c.p_kx < 1 || c.p_ky < 1 || c.batch < 1)
        throw ValidationError("accelerator parallelism and batch must be positive");
    if (c.act_buf_mb < 1 || c.wgt_buf_mb < 1 || c.mask_buf_mb < 1) throw ValidationError("buffer sizes must be at least 1 MB");
    if (c.mem_config < 0 || static_cast<std::size_t>(c.mem_config) >= mem_configs(c.mem_type).size())
        throw ValidationError("memory configuration index out of range");
}

inline SimResult simulate_layers(const std::vector<LayerShape>& layers, const AcceleratorConfig& c, const CostConstants& k,
                                 const SimOptions& opt = {}) {
    check_mappable(c);
    const auto cap = buffer_capacity(c, k);
    SimResult res;
    double energy_pj = 0;
    for (const auto& L : layers) {
        auto r = simulate_layer(L, c, k, cap, opt);
        res.total_cycles += r.cycles;
        res.total_macs += r.macs_executed;
        energy_pj += r.energy_pj;
        res.layers.push_back(std::move(r));
    }
    const double batch = c.batch;
    res.perf.area_mm2 = area(c, k);
    const double seconds = res.total_cycles / k.clock_hz / batch;
    res.perf.latency_ms = seconds * 1e3;
    res.perf.e_dyn_mJ = energy_pj * 1e-9 / batch;
    const double leak_mw = k.leak_mw_per_mm2 * res.perf.area_mm2 + k.memory.at(c.mem_type).interface_leak_mw;
    res.perf.e_leak_mJ = leak_mw * seconds;
    return res;
}

inline SimResult simulate(const cnn::ComputationalGraph& g, const AcceleratorConfig& c, const CostConstants& k, const SimOptions& opt = {}) {
    check_mappable(c);
    return simulate_layers(lower_graph(g, c.batch, opt), c, k, opt);
}

}  // namespace codebench::accel
