#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codebench/cnn_space/block.hpp"

namespace codebench::cnn {

using Edge = std::pair<int, int>;

/// A small operation subgraph with exactly one input and one output block.
struct GraphModule {
    std::vector<OpBlock> blocks;
    std::vector<Edge> edges;

    bool operator==(const GraphModule&) const = default;

    int input_index() const {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].kind == OpKind::input) return static_cast<int>(i);
        return -1;
    }
    int output_index() const {
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (blocks[i].kind == OpKind::output) return static_cast<int>(i);
        return -1;
    }
};

/// Serially connected modules. Body modules come in stacks of `stack_size`
/// identical modules; the last module is the head.
struct ComputationalGraph {
    std::vector<GraphModule> modules;
    int stack_size = 1;

    bool operator==(const ComputationalGraph&) const = default;

    std::size_t body_size() const { return modules.empty() ? 0 : modules.size() - 1; }
    std::size_t num_stacks() const { return stack_size > 0 ? body_size() / stack_size : 0; }
    const GraphModule& head() const { return modules.back(); }
    const GraphModule& stack_module(std::size_t stack) const { return modules.at(stack * stack_size); }
};

struct GraphLimits {
    std::size_t max_module_vertices = 5;
    std::size_t max_module_edges = 8;
    std::size_t max_head_vertices = 8;
    std::size_t depth_cap = 12;  // body modules, head excluded
};

/// Builds a module whose blocks are connected in a chain input -> ... -> output.
inline GraphModule make_sequential_module(const std::vector<OpBlock>& inner) {
    GraphModule m;
    m.blocks.push_back(make_input());
    for (const auto& b : inner) m.blocks.push_back(b);
    m.blocks.push_back(make_output());
    for (std::size_t i = 0; i + 1 < m.blocks.size(); ++i)
        m.edges.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    return m;
}

/// Body stacks given one module per stack, followed by the head.
inline ComputationalGraph make_stacked_graph(const std::vector<GraphModule>& stack_modules, const GraphModule& head,
                                             int stack_size) {
    ComputationalGraph g;
    g.stack_size = stack_size;
    for (const auto& m : stack_modules)
        for (int i = 0; i < stack_size; ++i) g.modules.push_back(m);
    g.modules.push_back(head);
    return g;
}

namespace detail {

inline bool has_cycle(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> out(n);
    for (auto [a, b] : edges) {
        out[a].push_back(b);
        ++indeg[b];
    }
    std::vector<int> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(static_cast<int>(i));
    std::size_t seen = 0;
    while (!ready.empty()) {
        int v = ready.back();
        ready.pop_back();
        ++seen;
        for (int w : out[v])
            if (--indeg[w] == 0) ready.push_back(w);
    }
    return seen != n;
}

inline std::vector<bool> reachable(std::size_t n, const std::vector<Edge>& edges, int start, bool forward) {
    std::vector<bool> seen(n, false);
    std::vector<int> todo{start};
    seen[start] = true;
    while (!todo.empty()) {
        int v = todo.back();
        todo.pop_back();
        for (auto [a, b] : edges) {
            int from = forward ? a : b;
            int to = forward ? b : a;
            if (from == v && !seen[to]) {
                seen[to] = true;
                todo.push_back(to);
            }
        }
    }
    return seen;
}

}  // namespace detail

/// Throws ValidationError describing the first violated module invariant.
inline void validate_module(const GraphModule& m, const GraphLimits& limits, bool is_head,
                            const BlockCatalog* catalog = nullptr) {
    const std::size_t n = m.blocks.size();
    const int in = m.input_index();
    const int out = m.output_index();
    auto count = [&m](OpKind k) {
        return std::count_if(m.blocks.begin(), m.blocks.end(), [k](const OpBlock& b) { return b.kind == k; });
    };
    if (count(OpKind::input) != 1) throw ValidationError("module must have exactly one input block");
    if (count(OpKind::output) != 1) throw ValidationError("module must have exactly one output block");
    for (auto [a, b] : m.edges) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
            throw ValidationError("edge index out of range");
        if (a == b) throw ValidationError("self-loop in module");
        if (b == in) throw ValidationError("edge into the input block");
        if (a == out) throw ValidationError("edge out of the output block");
    }
    auto sorted = m.edges;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ValidationError("duplicate edge");
    if (detail::has_cycle(n, m.edges)) throw ValidationError("module graph has a cycle");
    auto from_in = detail::reachable(n, m.edges, in, true);
    auto to_out = detail::reachable(n, m.edges, out, false);
    for (std::size_t i = 0; i < n; ++i)
        if (!from_in[i] || !to_out[i]) throw ValidationError("block " + std::to_string(i) + " is not on an input-output path");
    if (is_head) {
        if (n > limits.max_head_vertices) throw ValidationError("head module exceeds vertex cap");
        if (m.edges.size() != n - 1) throw ValidationError("head module must be purely sequential");
        std::vector<int> outdeg(n, 0), indeg(n, 0);
        for (auto [a, b] : m.edges) {
            ++outdeg[a];
            ++indeg[b];
        }
        for (std::size_t i = 0; i < n; ++i)
            if (outdeg[i] > 1 || indeg[i] > 1) throw ValidationError("head module must be purely sequential");
    } else {
        if (n > limits.max_module_vertices) throw ValidationError("module exceeds vertex cap");
        if (m.edges.size() > limits.max_module_edges) throw ValidationError("module exceeds edge cap");
    }
    if (catalog)
        for (const auto& b : m.blocks)
            if (!catalog->contains(b)) throw ValidationError("block '" + b.label() + "' is not permissible");
}

inline void validate(const ComputationalGraph& g, const GraphLimits& limits = {}, const BlockCatalog* catalog = nullptr) {
    if (g.modules.empty()) throw ValidationError("graph has no modules");
    if (g.stack_size < 1) throw ValidationError("stack size must be positive");
    if (g.body_size() > limits.depth_cap) throw ValidationError("graph exceeds depth cap");
    if (g.body_size() % static_cast<std::size_t>(g.stack_size) != 0)
        throw ValidationError("body module count is not a multiple of the stack size");
    for (std::size_t i = 0; i < g.modules.size(); ++i) validate_module(g.modules[i], limits, i + 1 == g.modules.size(), catalog);
    for (std::size_t i = 0; i < g.body_size(); ++i)
        if (!(g.modules[i] == g.modules[i - i % g.stack_size]))
            throw ValidationError("modules within a stack differ (module " + std::to_string(i) + ")");
}

/// Single DAG over all blocks; module i's output feeds module i+1's input.
struct FlatGraph {
    std::vector<OpBlock> nodes;
    std::vector<Edge> edges;
};

inline FlatGraph flatten(const ComputationalGraph& g) {
    FlatGraph f;
    int prev_out = -1;
    for (const auto& m : g.modules) {
        const int base = static_cast<int>(f.nodes.size());
        f.nodes.insert(f.nodes.end(), m.blocks.begin(), m.blocks.end());
        for (auto [a, b] : m.edges) f.edges.emplace_back(base + a, base + b);
        if (prev_out >= 0) f.edges.emplace_back(prev_out, base + m.input_index());
        prev_out = base + m.output_index();
    }
    return f;
}

// JSON ------------------------------------------------------------------------

inline nlohmann::json to_json(const GraphModule& m) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : m.blocks) blocks.push_back(to_json(b));
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : m.edges) edges.push_back({a, b});
    return {{"blocks", blocks}, {"edges", edges}};
}

inline nlohmann::json to_json(const ComputationalGraph& g) {
    nlohmann::json mods = nlohmann::json::array();
    for (const auto& m : g.modules) mods.push_back(to_json(m));
    return {{"modules", mods}, {"stack_size", g.stack_size}};
}

inline GraphModule module_from_json(const nlohmann::json& j) {
    GraphModule m;
    for (const auto& b : j.at("blocks")) m.blocks.push_back(block_from_json(b));
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a [from, to] pair");
        m.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return m;
}

inline ComputationalGraph graph_from_json(const nlohmann::json& j) {
    try {
        ComputationalGraph g;
        for (const auto& m : j.at("modules")) g.modules.push_back(module_from_json(m));
        g.stack_size = j.value("stack_size", 1);
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed graph JSON: ") + e.what());
    }
}

}  // namespace codebench::cnn
