#pragma once

// Test-only reference implementations. These deliberately share no search
// code with the library: they enumerate everything.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "codebench/cnn_space/ged.hpp"
#include "codebench/cnn_space/graph.hpp"

namespace oracle {

using codebench::cnn::BlockCatalog;
using codebench::cnn::ComputationalGraph;
using codebench::cnn::GraphModule;

/// Minimum edit cost over every assignment of m1's nodes to a distinct node of
/// m2 or to deletion. Node costs are summed as integers in units of 1/T.
inline double brute_force_ged(const GraphModule& m1, const GraphModule& m2, const BlockCatalog& cat, double edge_cost) {
    const std::int64_t T = static_cast<std::int64_t>(cat.size());
    const int n1 = static_cast<int>(m1.blocks.size());
    const int n2 = static_cast<int>(m2.blocks.size());
    std::vector<std::int64_t> i1(n1), i2(n2);
    for (int i = 0; i < n1; ++i) i1[i] = static_cast<std::int64_t>(cat.index_of(m1.blocks[i]));
    for (int i = 0; i < n2; ++i) i2[i] = static_cast<std::int64_t>(cat.index_of(m2.blocks[i]));
    auto has = [](const GraphModule& m, int a, int b) {
        return std::find(m.edges.begin(), m.edges.end(), std::make_pair(a, b)) != m.edges.end();
    };

    double best = std::numeric_limits<double>::infinity();
    std::vector<int> map(n1, -1);
    std::function<void(int)> rec = [&](int u) {
        if (u == n1) {
            std::int64_t units = 0;
            std::vector<bool> used(n2, false);
            for (int a = 0; a < n1; ++a) {
                if (map[a] < 0) {
                    units += T + i1[a];
                } else {
                    used[map[a]] = true;
                    units += std::llabs(i1[a] - i2[map[a]]);
                }
            }
            for (int b = 0; b < n2; ++b)
                if (!used[b]) units += T + i2[b];
            std::int64_t edge_edits = 0;
            for (auto [a, b] : m1.edges)
                if (map[a] < 0 || map[b] < 0 || !has(m2, map[a], map[b])) ++edge_edits;
            for (auto [x, y] : m2.edges) {
                bool covered = false;
                for (auto [a, b] : m1.edges)
                    if (map[a] == x && map[b] == y) covered = true;
                if (!covered) ++edge_edits;
            }
            best = std::min(best, static_cast<double>(units) / static_cast<double>(T) + static_cast<double>(edge_edits) * edge_cost);
            return;
        }
        for (int v = -1; v < n2; ++v) {
            if (v >= 0 && std::find(map.begin(), map.begin() + u, v) != map.begin() + u) continue;
            map[u] = v;
            rec(u + 1);
        }
        map[u] = -1;
    };
    rec(0);
    return best;
}

/// Label-preserving directed isomorphism by backtracking over bijections.
inline bool isomorphic(const codebench::cnn::FlatGraph& a, const codebench::cnn::FlatGraph& b) {
    const int n = static_cast<int>(a.nodes.size());
    if (n != static_cast<int>(b.nodes.size()) || a.edges.size() != b.edges.size()) return false;
    std::vector<std::vector<bool>> ea(n, std::vector<bool>(n)), eb(n, std::vector<bool>(n));
    for (auto [x, y] : a.edges) ea[x][y] = true;
    for (auto [x, y] : b.edges) eb[x][y] = true;
    std::vector<std::string> la(n), lb(n);
    for (int i = 0; i < n; ++i) {
        la[i] = a.nodes[i].label();
        lb[i] = b.nodes[i].label();
    }
    auto sa = la, sb = lb;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa != sb) return false;
    std::vector<int> map(n, -1);
    std::vector<bool> used(n, false);
    std::function<bool(int)> rec = [&](int u) {
        if (u == n) return true;
        for (int v = 0; v < n; ++v) {
            if (used[v] || la[u] != lb[v]) continue;
            bool ok = true;
            for (int w = 0; w < u && ok; ++w) {
                if (ea[u][w] != eb[v][map[w]]) ok = false;
                if (ea[w][u] != eb[map[w]][v]) ok = false;
            }
            if (!ok) continue;
            map[u] = v;
            used[v] = true;
            if (rec(u + 1)) return true;
            used[v] = false;
        }
        map[u] = -1;
        return false;
    };
    return rec(0);
}

/// O(n^2) dominance scan: keep i unless some j is at least as good in both
/// objectives and strictly better in one (maximise a, minimise b).
inline std::vector<std::size_t> pareto_brute_force(const std::vector<double>& maximise, const std::vector<double>& minimise) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < maximise.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < maximise.size() && !dominated; ++j) {
            if (i == j) continue;
            const bool ge = maximise[j] >= maximise[i] && minimise[j] <= minimise[i];
            const bool strict = maximise[j] > maximise[i] || minimise[j] < minimise[i];
            dominated = ge && strict;
        }
        if (!dominated) keep.push_back(i);
    }
    return keep;
}

}  // namespace oracle
