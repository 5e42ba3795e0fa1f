#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "codebench/cnn_space/graph.hpp"
#include "codebench/cnn_space/hash.hpp"

namespace codebench::cnn {

/// Leading modules of q that equal n's, counted from the input and stopping at
/// the first mismatch, divided by q's module count.
inline double biased_overlap_fraction(const ComputationalGraph& q, const ComputationalGraph& n) {
    if (q.modules.empty()) throw ValidationError("query graph has no modules");
    std::size_t count = 0;
    const std::size_t lim = std::min(q.modules.size(), n.modules.size());
    while (count < lim && module_hash(q.modules[count]) == module_hash(n.modules[count])) ++count;
    return static_cast<double>(count) / static_cast<double>(q.modules.size());
}

struct PoolEntry {
    std::string digest;
    const ComputationalGraph* graph = nullptr;
    std::vector<double> embedding;
};

struct Neighbor {
    std::size_t pool_index = 0;
    std::string digest;
    double distance = 0.0;
    double overlap = 0.0;
};

struct NeighborList {
    std::vector<Neighbor> items;
    bool truncated_pool = false;  // pool had fewer than k entries
};

inline double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ParameterError("embedding dimensions differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// k nearest pool entries by Euclidean embedding distance (ties by digest).
inline NeighborList neighbors(const std::vector<double>& query, const std::vector<PoolEntry>& pool, std::size_t k) {
    NeighborList out;
    for (std::size_t i = 0; i < pool.size(); ++i)
        out.items.push_back({i, pool[i].digest, euclidean(query, pool[i].embedding), 0.0});
    std::sort(out.items.begin(), out.items.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.digest < b.digest;
    });
    out.truncated_pool = pool.size() < k;
    if (out.items.size() > k) out.items.resize(k);
    return out;
}

/// Orders neighbours for weight transfer: biased overlap descending, ties by
/// embedding distance ascending.
inline void rank_for_transfer(const ComputationalGraph& q, const std::vector<PoolEntry>& pool, NeighborList& list) {
    for (auto& n : list.items) {
        const auto* g = pool.at(n.pool_index).graph;
        n.overlap = g ? biased_overlap_fraction(q, *g) : 0.0;
    }
    std::stable_sort(list.items.begin(), list.items.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        return a.distance < b.distance;
    });
}

}  // namespace codebench::cnn
