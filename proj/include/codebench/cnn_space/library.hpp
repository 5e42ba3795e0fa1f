#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "codebench/cnn_space/block.hpp"
#include "codebench/cnn_space/graph.hpp"
#include "codebench/cnn_space/hash.hpp"

namespace codebench::cnn {

struct CnnSpaceConfig {
    BlockSpaceConfig blocks;
    GraphLimits limits;
    std::vector<int> stack_schedule{4, 2, 1};
};

/// Body-module library of the desk-scale space. Every module respects the
/// conv-module caps (<= 5 vertices, <= 8 edges).
inline std::vector<GraphModule> module_library(const BlockSpaceConfig& cfg = {}) {
    std::vector<GraphModule> lib;
    for (int k : cfg.conv_kernels)
        for (int c : cfg.conv_channels) lib.push_back(make_sequential_module({make_conv(k, c)}));
    for (int c : cfg.conv_channels) {
        auto res = make_sequential_module({make_conv(3, c)});
        res.edges.emplace_back(0, 2);  // input -> output skip
        lib.push_back(res);
    }
    for (int c : cfg.conv_channels) {
        GraphModule br;
        br.blocks = {make_input(), make_conv(1, c), make_conv(3, c), make_output()};
        br.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
        lib.push_back(br);
    }
    for (int c : cfg.conv_channels) lib.push_back(make_sequential_module({make_conv(3, c), make_conv(1, c)}));
    lib.push_back(make_sequential_module({make_pool(OpKind::maxpool, 3, 2)}));
    lib.push_back(make_sequential_module({make_pool(OpKind::avgpool, 3, 2)}));
    return lib;
}

inline std::vector<GraphModule> head_library(const BlockSpaceConfig& cfg = {}) {
    const auto classes = make_dense(cfg.num_classes, Activation::none);
    const auto gap = make_simple(OpKind::global_avg_pool);
    std::vector<GraphModule> heads{make_sequential_module({gap, classes})};
    if (!cfg.dense_hidden.empty()) heads.push_back(make_sequential_module({gap, make_dense(cfg.dense_hidden.front()), classes}));
    if (cfg.dense_hidden.size() > 1) {
        const int h1 = cfg.dense_hidden[1];
        heads.push_back(make_sequential_module({gap, make_dense(h1), make_dropout(50), classes}));
        heads.push_back(make_sequential_module(
            {make_simple(OpKind::flatten), make_dense(h1), make_dense(cfg.dense_hidden.front()), classes}));
    }
    return heads;
}

/// The graphs of one hierarchy level: 1..max_stacks stacks of `stack_size`
/// identical modules drawn from the module library, plus one head. Graphs are
/// addressable by ordinal (stack count first, then mixed-radix digits, then head).
class LevelSpace {
public:
    LevelSpace(std::vector<GraphModule> modules, std::vector<GraphModule> heads, int stack_size, std::size_t depth_cap)
        : modules_(std::move(modules)), heads_(std::move(heads)), stack_size_(stack_size) {
        if (stack_size < 1) throw ParameterError("stack size must be positive");
        if (modules_.empty() || heads_.empty()) throw ParameterError("level space needs modules and heads");
        max_stacks_ = depth_cap / static_cast<std::size_t>(stack_size);
        if (max_stacks_ == 0) throw ParameterError("depth cap smaller than one stack");
    }

    static LevelSpace for_level(const CnnSpaceConfig& cfg, std::size_t level) {
        if (level < 1 || level > cfg.stack_schedule.size()) throw ParameterError("hierarchy level out of range");
        return LevelSpace(module_library(cfg.blocks), head_library(cfg.blocks), cfg.stack_schedule[level - 1], cfg.limits.depth_cap);
    }

    int stack_size() const { return stack_size_; }
    std::size_t max_stacks() const { return max_stacks_; }

    /// Closed-form size sum_n |M|^n * |H| (as a double; exact below 2^53).
    double size() const {
        double total = 0.0;
        for (std::size_t n = 1; n <= max_stacks_; ++n) total += std::pow(static_cast<double>(modules_.size()), static_cast<double>(n));
        return total * static_cast<double>(heads_.size());
    }

    ComputationalGraph graph(std::uint64_t ordinal) const {
        const std::uint64_t m = modules_.size();
        const std::uint64_t h = heads_.size();
        std::uint64_t block = 1;
        for (std::size_t n = 1; n <= max_stacks_; ++n) {
            block *= m;
            const std::uint64_t count = block * h;
            if (ordinal < count) return decode(n, ordinal);
            ordinal -= count;
        }
        throw ParameterError("ordinal outside level space");
    }

    ComputationalGraph sample(Rng& rng) const {
        std::vector<double> weights;
        for (std::size_t n = 1; n <= max_stacks_; ++n) weights.push_back(std::pow(static_cast<double>(modules_.size()), static_cast<double>(n)));
        const std::size_t n = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng) + 1;
        std::vector<GraphModule> stacks;
        std::uniform_int_distribution<std::size_t> pick(0, modules_.size() - 1);
        for (std::size_t i = 0; i < n; ++i) stacks.push_back(modules_[pick(rng)]);
        const auto& head = heads_[std::uniform_int_distribution<std::size_t>(0, heads_.size() - 1)(rng)];
        return make_stacked_graph(stacks, head, stack_size_);
    }

    /// Distinct graphs sampled without replacement (deduplicated by digest).
    std::vector<ComputationalGraph> sample_distinct(std::size_t count, Rng& rng) const {
        if (static_cast<double>(count) > size()) throw ParameterError("requested more graphs than the level contains");
        std::vector<ComputationalGraph> out;
        std::map<std::string, bool> seen;
        while (out.size() < count) {
            auto g = sample(rng);
            if (seen.emplace(graph_hash(g, GraphLimits{32, 64, 32, 1u << 20}), true).second) out.push_back(std::move(g));
        }
        return out;
    }

private:
    ComputationalGraph decode(std::size_t n, std::uint64_t ordinal) const {
        std::vector<GraphModule> stacks;
        for (std::size_t i = 0; i < n; ++i) {
            stacks.push_back(modules_[ordinal % modules_.size()]);
            ordinal /= modules_.size();
        }
        return make_stacked_graph(stacks, heads_[ordinal % heads_.size()], stack_size_);
    }

    std::vector<GraphModule> modules_;
    std::vector<GraphModule> heads_;
    int stack_size_;
    std::size_t max_stacks_ = 0;
};

/// LeNet-5 shaped graph: two conv/pool modules and a three-layer dense head.
inline ComputationalGraph lenet() {
    const auto pool = make_pool(OpKind::maxpool, 2, 2, 0);
    auto m1 = make_sequential_module({make_conv(5, 6), pool});
    auto m2 = make_sequential_module({make_conv(5, 16), pool});
    m1.blocks[1].params.padding = 0;
    m2.blocks[1].params.padding = 0;
    auto head = make_sequential_module({make_simple(OpKind::flatten), make_dense(120), make_dense(84), make_dense(10, Activation::none)});
    ComputationalGraph g;
    g.stack_size = 1;
    g.modules = {m1, m2, head};
    return g;
}

/// Small CIFAR-sized network used by simulator checks and the `sim` command.
inline ComputationalGraph toy_cnn() {
    auto res = make_sequential_module({make_conv(3, 16)});
    res.edges.emplace_back(0, 2);
    auto pool = make_sequential_module({make_pool(OpKind::maxpool, 3, 2)});
    auto wide = make_sequential_module({make_conv(3, 32), make_conv(1, 32)});
    auto head = make_sequential_module({make_simple(OpKind::global_avg_pool), make_dense(84), make_dense(10, Activation::none)});
    ComputationalGraph g;
    g.stack_size = 1;
    g.modules = {res, pool, wide, head};
    return g;
}

}  // namespace codebench::cnn
