#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "codebench/cnn_space/graph.hpp"
#include "codebench/sha256.hpp"

namespace codebench::cnn {

namespace detail {

// Iterated neighbourhood hashing: each round replaces a node's hash by
// H(sorted input hashes | own hash | sorted output hashes). After as many
// rounds as nodes, the sorted multiset of node hashes is hashed once more.
inline std::string recursive_hash(const std::vector<OpBlock>& nodes, const std::vector<Edge>& edges) {
    const std::size_t n = nodes.size();
    std::vector<std::vector<int>> ins(n), outs(n);
    for (auto [a, b] : edges) {
        outs[a].push_back(b);
        ins[b].push_back(a);
    }
    std::vector<std::string> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = sha256_hex(nodes[i].label());

    std::vector<std::string> next(n), buf;
    for (std::size_t round = 0; round < n; ++round) {
        for (std::size_t v = 0; v < n; ++v) {
            std::string s;
            buf.clear();
            for (int w : ins[v]) buf.push_back(h[w]);
            std::sort(buf.begin(), buf.end());
            for (const auto& x : buf) s += x;
            s += '|';
            s += h[v];
            s += '|';
            buf.clear();
            for (int w : outs[v]) buf.push_back(h[w]);
            std::sort(buf.begin(), buf.end());
            for (const auto& x : buf) s += x;
            next[v] = sha256_hex(s);
        }
        h.swap(next);
    }
    std::sort(h.begin(), h.end());
    std::string all;
    for (const auto& x : h) all += x;
    return sha256_hex(all);
}

}  // namespace detail

/// Isomorphism-invariant SHA-256 digest (lowercase hex) of a whole graph.
inline std::string graph_hash(const ComputationalGraph& g, const GraphLimits& limits = {}) {
    validate(g, limits);
    auto f = flatten(g);
    return detail::recursive_hash(f.nodes, f.edges);
}

/// Same construction restricted to a single module; used for module equality.
inline std::string module_hash(const GraphModule& m) { return detail::recursive_hash(m.blocks, m.edges); }

}  // namespace codebench::cnn
