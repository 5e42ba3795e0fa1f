#pragma once

#include <memory>
#include <random>
#include <vector>

#include "codebench/cnn_space/graph.hpp"

namespace testsupport {

using namespace codebench::cnn;

/// Every graph with at most three modules (head included) whose modules have
/// at most three vertices, over a small label set.
inline std::vector<ComputationalGraph> enumerate_tiny_graphs() {
    const std::vector<OpBlock> body_ops{make_conv(1, 16), make_conv(3, 16), make_conv(3, 32), make_pool(OpKind::maxpool, 3, 2),
                                        make_simple(OpKind::channel_shuffle)};
    std::vector<GraphModule> body{make_sequential_module({})};
    for (const auto& op : body_ops) {
        body.push_back(make_sequential_module({op}));
        auto skip = make_sequential_module({op});
        skip.edges.emplace_back(0, 2);
        body.push_back(skip);
    }
    std::vector<GraphModule> heads{make_sequential_module({}), make_sequential_module({make_dense(10, Activation::none)}),
                                   make_sequential_module({make_simple(OpKind::global_avg_pool)})};
    std::vector<ComputationalGraph> out;
    for (const auto& h : heads) {
        out.push_back(make_stacked_graph({}, h, 1));
        for (const auto& a : body) {
            out.push_back(make_stacked_graph({a}, h, 1));
            for (const auto& b : body) out.push_back(make_stacked_graph({a, b}, h, 1));
        }
    }
    return out;
}

/// Random valid module with at most `max_nodes` vertices (input/output included).
inline GraphModule random_module(std::mt19937_64& rng, int max_nodes, const std::vector<OpBlock>& ops) {
    std::uniform_int_distribution<int> inner_count(0, max_nodes - 2);
    std::uniform_int_distribution<std::size_t> pick(0, ops.size() - 1);
    std::bernoulli_distribution coin(0.5);
    for (;;) {
        const int k = inner_count(rng);
        GraphModule m;
        m.blocks.push_back(make_input());
        for (int i = 0; i < k; ++i) m.blocks.push_back(ops[pick(rng)]);
        m.blocks.push_back(make_output());
        const int n = k + 2;
        // Topological order is index order: edges only go forward.
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (coin(rng)) m.edges.emplace_back(a, b);
        try {
            validate_module(m, GraphLimits{}, false);
            return m;
        } catch (const codebench::ValidationError&) {
        }
    }
}

inline std::vector<OpBlock> small_ops() {
    return {make_conv(1, 8), make_conv(3, 16), make_conv(5, 64, Activation::silu), make_pool(OpKind::maxpool, 3, 2),
            make_pool(OpKind::avgpool, 3, 1), make_dropout(20), make_simple(OpKind::flatten)};
}

}  // namespace testsupport
