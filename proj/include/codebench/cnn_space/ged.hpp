#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "codebench/cnn_space/graph.hpp"
#include "codebench/cnn_space/hash.hpp"

namespace codebench::cnn {

/// Edit costs derived from the complexity-sorted block catalog:
///   insert/delete(i)  = 1 + i / T
///   substitute(i, j)  = |i - j| / T
///   edge insert/delete = edge_cost
/// where T is the catalog size. Node costs are kept as integer multiples of 1/T
/// so that different search orders produce bit-identical totals.
class GedCostTable {
public:
    explicit GedCostTable(std::shared_ptr<const BlockCatalog> catalog, double edge_cost = 1e-9)
        : catalog_(std::move(catalog)), edge_cost_(edge_cost) {
        if (!catalog_ || catalog_->size() == 0) throw ParameterError("cost table needs a non-empty catalog");
        if (edge_cost_ < 0) throw ParameterError("edge cost must be non-negative");
    }

    const BlockCatalog& catalog() const { return *catalog_; }
    std::int64_t total() const { return static_cast<std::int64_t>(catalog_->size()); }
    double edge_cost() const { return edge_cost_; }

    std::int64_t indel_units(std::size_t index) const { return total() + static_cast<std::int64_t>(index); }
    std::int64_t substitution_units(std::size_t a, std::size_t b) const {
        return std::llabs(static_cast<std::int64_t>(a) - static_cast<std::int64_t>(b));
    }

    double indel(std::size_t index) const { return to_cost(indel_units(index), 0); }
    double substitution(std::size_t a, std::size_t b) const { return to_cost(substitution_units(a, b), 0); }

    double to_cost(std::int64_t node_units, std::int64_t edge_edits) const {
        return static_cast<double>(node_units) / static_cast<double>(total()) + static_cast<double>(edge_edits) * edge_cost_;
    }

private:
    std::shared_ptr<const BlockCatalog> catalog_;
    double edge_cost_;
};

struct GedOptions {
    std::size_t exact_max_nodes = 6;
    std::size_t beam_width = 64;
};

namespace detail {

struct LabeledDigraph {
    std::vector<std::size_t> index;  // catalog index per node
    std::vector<std::vector<bool>> adj;
    std::int64_t edge_count = 0;

    static LabeledDigraph from(const std::vector<OpBlock>& blocks, const std::vector<Edge>& edges, const BlockCatalog& cat) {
        LabeledDigraph g;
        const auto n = blocks.size();
        g.index.reserve(n);
        for (const auto& b : blocks) g.index.push_back(cat.index_of(b));
        g.adj.assign(n, std::vector<bool>(n, false));
        for (auto [a, b] : edges) g.adj[a][b] = true;
        g.edge_count = static_cast<std::int64_t>(edges.size());
        return g;
    }
    std::size_t size() const { return index.size(); }
};

struct PartialMap {
    std::vector<int> image;  // g1 node -> g2 node or -1 (deleted)
    std::uint32_t used = 0;  // bitmask over g2 nodes
    std::int64_t units = 0;
    std::int64_t matched_edges = 0;
};

class ModuleGedSearch {
public:
    ModuleGedSearch(const LabeledDigraph& a, const LabeledDigraph& b, const GedCostTable& costs)
        : a_(a), b_(b), costs_(costs) {}

    double exact() {
        best_ = std::numeric_limits<double>::infinity();
        PartialMap s;
        dfs(s);
        return best_;
    }

    double beam(std::size_t width) {
        std::vector<PartialMap> frontier{PartialMap{}};
        for (std::size_t u = 0; u < a_.size(); ++u) {
            std::vector<std::pair<double, PartialMap>> next;
            for (const auto& s : frontier)
                for (int v = -1; v < static_cast<int>(b_.size()); ++v) {
                    if (v >= 0 && (s.used >> v & 1u)) continue;
                    auto t = extend(s, v);
                    next.emplace_back(bound(t), std::move(t));
                }
            std::stable_sort(next.begin(), next.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
            if (next.size() > width) next.resize(width);
            frontier.clear();
            for (auto& [key, st] : next) frontier.push_back(std::move(st));
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& s : frontier) best = std::min(best, complete(s));
        return best;
    }

private:
    PartialMap extend(const PartialMap& s, int v) const {
        PartialMap t = s;
        const auto u = t.image.size();
        t.image.push_back(v);
        if (v < 0) {
            t.units += costs_.indel_units(a_.index[u]);
            return t;
        }
        t.used |= 1u << v;
        t.units += costs_.substitution_units(a_.index[u], b_.index[v]);
        for (std::size_t w = 0; w < u; ++w) {
            const int x = t.image[w];
            if (x < 0) continue;
            if (a_.adj[u][w] && b_.adj[v][x]) ++t.matched_edges;
            if (a_.adj[w][u] && b_.adj[x][v]) ++t.matched_edges;
        }
        return t;
    }

    double complete(const PartialMap& s) const {
        std::int64_t units = s.units;
        for (std::size_t v = 0; v < b_.size(); ++v)
            if (!(s.used >> v & 1u)) units += costs_.indel_units(b_.index[v]);
        return costs_.to_cost(units, a_.edge_count + b_.edge_count - 2 * s.matched_edges);
    }

    // Node-count lower bound on the remaining cost; edges are ignored.
    double bound(const PartialMap& s) const {
        const std::size_t r1 = a_.size() - s.image.size();
        std::size_t r2 = 0;
        std::size_t min2 = std::numeric_limits<std::size_t>::max();
        for (std::size_t v = 0; v < b_.size(); ++v)
            if (!(s.used >> v & 1u)) {
                ++r2;
                min2 = std::min(min2, b_.index[v]);
            }
        std::int64_t extra = 0;
        if (r1 > r2) {
            std::size_t min1 = std::numeric_limits<std::size_t>::max();
            for (std::size_t u = s.image.size(); u < a_.size(); ++u) min1 = std::min(min1, a_.index[u]);
            extra = static_cast<std::int64_t>(r1 - r2) * costs_.indel_units(min1);
        } else if (r2 > r1) {
            extra = static_cast<std::int64_t>(r2 - r1) * costs_.indel_units(min2);
        }
        return costs_.to_cost(s.units + extra, 0);
    }

    void dfs(PartialMap& s) {
        if (s.image.size() == a_.size()) {
            best_ = std::min(best_, complete(s));
            return;
        }
        if (bound(s) > best_) return;
        for (int v = -1; v < static_cast<int>(b_.size()); ++v) {
            if (v >= 0 && (s.used >> v & 1u)) continue;
            auto t = extend(s, v);
            dfs(t);
        }
    }

    const LabeledDigraph& a_;
    const LabeledDigraph& b_;
    const GedCostTable& costs_;
    double best_ = 0;
};

}  // namespace detail

/// Edit distance between two modules: exact search when both have at most
/// `exact_max_nodes` nodes, beam search otherwise.
inline double module_ged(const GraphModule& m1, const GraphModule& m2, const GedCostTable& costs, const GedOptions& opt = {}) {
    auto a = detail::LabeledDigraph::from(m1.blocks, m1.edges, costs.catalog());
    auto b = detail::LabeledDigraph::from(m2.blocks, m2.edges, costs.catalog());
    if (a.size() > 32 || b.size() > 32) throw ParameterError("module too large for edit-distance search");
    detail::ModuleGedSearch search(a, b, costs);
    if (std::max(a.size(), b.size()) <= opt.exact_max_nodes) return search.exact();
    return search.beam(opt.beam_width);
}

/// Cost of inserting (or deleting) a whole module.
inline double module_indel_cost(const GraphModule& m, const GedCostTable& costs) {
    std::int64_t units = 0;
    for (const auto& b : m.blocks) units += costs.indel_units(costs.catalog().index_of(b));
    return costs.to_cost(units, static_cast<std::int64_t>(m.edges.size()));
}

/// Graph-level edit distance decomposed over the serial module list: body
/// modules are aligned by depth, heads with heads, and unmatched body modules
/// are charged their full insertion cost. Module results are memoised by
/// module digest, so one calculator should be reused for all-pairs work.
class GedCalculator {
public:
    explicit GedCalculator(GedCostTable costs, GedOptions opt = {}) : costs_(std::move(costs)), opt_(opt) {}

    const GedCostTable& costs() const { return costs_; }

    double modules(const GraphModule& m1, const GraphModule& m2) {
        auto h1 = module_hash(m1);
        auto h2 = module_hash(m2);
        if (h1 == h2) return 0.0;
        const bool swap = h2 < h1;
        auto key = swap ? std::make_pair(h2, h1) : std::make_pair(h1, h2);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double d = swap ? module_ged(m2, m1, costs_, opt_) : module_ged(m1, m2, costs_, opt_);
        cache_.emplace(key, d);
        return d;
    }

    double operator()(const ComputationalGraph& g1, const ComputationalGraph& g2) {
        validate_light(g1);
        validate_light(g2);
        const std::size_t n1 = g1.body_size();
        const std::size_t n2 = g2.body_size();
        double total = 0.0;
        for (std::size_t i = 0; i < std::min(n1, n2); ++i) total += modules(g1.modules[i], g2.modules[i]);
        for (std::size_t i = std::min(n1, n2); i < n1; ++i) total += module_indel_cost(g1.modules[i], costs_);
        for (std::size_t i = std::min(n1, n2); i < n2; ++i) total += module_indel_cost(g2.modules[i], costs_);
        total += modules(g1.head(), g2.head());
        return total;
    }

private:
    static void validate_light(const ComputationalGraph& g) {
        if (g.modules.empty()) throw ValidationError("graph has no modules");
        for (std::size_t i = 0; i < g.modules.size(); ++i)
            validate_module(g.modules[i], GraphLimits{32, 64, 32, 1u << 20}, i + 1 == g.modules.size());
    }

    GedCostTable costs_;
    GedOptions opt_;
    std::map<std::pair<std::string, std::string>, double> cache_;
};

inline double ged(const ComputationalGraph& g1, const ComputationalGraph& g2, const GedCostTable& costs, const GedOptions& opt = {}) {
    GedCalculator calc(costs, opt);
    return calc(g1, g2);
}

}  // namespace codebench::cnn
