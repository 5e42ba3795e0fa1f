#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "codebench/cnn_space/graph.hpp"
#include "codebench/cnn_space/hash.hpp"

namespace codebench::cnn {

/// Local design spaces formed from two parents: one module set per stack depth
/// plus the set of candidate heads. Sets are deduplicated by module digest and
/// kept in digest order so that enumeration is deterministic.
struct CrossoverSpace {
    std::vector<std::vector<GraphModule>> depth_modules;
    std::vector<GraphModule> heads;
    int new_stack_size = 1;
    int substacks_per_stack = 1;

    /// Number of distinct children: prod_j |L_j|^K * |H|.
    double size() const {
        double n = static_cast<double>(heads.size());
        for (const auto& l : depth_modules)
            for (int k = 0; k < substacks_per_stack; ++k) n *= static_cast<double>(l.size());
        return n;
    }
};

namespace detail {
inline void add_unique(std::map<std::string, GraphModule>& set, const GraphModule& m) { set.emplace(module_hash(m), m); }

inline std::vector<GraphModule> values(const std::map<std::string, GraphModule>& set) {
    std::vector<GraphModule> out;
    for (const auto& [h, m] : set) out.push_back(m);
    return out;
}
}  // namespace detail

/// Builds the local spaces. Both parents must share stack size s and s_new
/// must divide s. When parents have different stack counts the child follows
/// `best`; depths missing in `neighbor` contribute only best's module.
inline CrossoverSpace crossover_space(const ComputationalGraph& best, const ComputationalGraph& neighbor, int s_new) {
    if (best.stack_size != neighbor.stack_size) throw ParameterError("crossover parents must share a stack size");
    const int s = best.stack_size;
    if (s_new < 1 || s % s_new != 0) throw ParameterError("new stack size must divide the current stack size");
    CrossoverSpace cs;
    cs.new_stack_size = s_new;
    cs.substacks_per_stack = s / s_new;
    for (std::size_t j = 0; j < best.num_stacks(); ++j) {
        std::map<std::string, GraphModule> local;
        detail::add_unique(local, best.stack_module(j));
        if (j < neighbor.num_stacks()) detail::add_unique(local, neighbor.stack_module(j));
        cs.depth_modules.push_back(detail::values(local));
    }
    std::map<std::string, GraphModule> heads;
    detail::add_unique(heads, best.head());
    detail::add_unique(heads, neighbor.head());
    cs.heads = detail::values(heads);
    return cs;
}

/// Decodes child number `ordinal` (mixed radix over substack choices, then head).
inline ComputationalGraph crossover_child(const CrossoverSpace& cs, std::size_t ordinal) {
    ComputationalGraph g;
    g.stack_size = cs.new_stack_size;
    for (const auto& local : cs.depth_modules)
        for (int k = 0; k < cs.substacks_per_stack; ++k) {
            const auto& m = local[ordinal % local.size()];
            ordinal /= local.size();
            for (int r = 0; r < cs.new_stack_size; ++r) g.modules.push_back(m);
        }
    g.modules.push_back(cs.heads[ordinal % cs.heads.size()]);
    return g;
}

/// All children of the crossover (the full cross product). Throws when the
/// product exceeds `max_children`; use sample_crossover for large spaces.
inline std::vector<ComputationalGraph> crossover(const ComputationalGraph& best, const ComputationalGraph& neighbor, int s_new,
                                                 std::size_t max_children = 100000) {
    auto cs = crossover_space(best, neighbor, s_new);
    const double n = cs.size();
    if (n > static_cast<double>(max_children)) throw ParameterError("crossover space too large to enumerate");
    std::vector<ComputationalGraph> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) out.push_back(crossover_child(cs, i));
    return out;
}

/// Up to `count` distinct children drawn uniformly without replacement.
inline std::vector<ComputationalGraph> sample_crossover(const ComputationalGraph& best, const ComputationalGraph& neighbor, int s_new,
                                                        std::size_t count, Rng& rng) {
    auto cs = crossover_space(best, neighbor, s_new);
    const double n = cs.size();
    if (n <= static_cast<double>(count)) return crossover(best, neighbor, s_new, count);
    std::vector<ComputationalGraph> out;
    std::map<std::string, bool> seen;
    while (out.size() < count) {
        // Draw each digit independently; equivalent to a uniform ordinal.
        ComputationalGraph g;
        g.stack_size = cs.new_stack_size;
        for (const auto& local : cs.depth_modules)
            for (int k = 0; k < cs.substacks_per_stack; ++k) {
                const auto& m = local[std::uniform_int_distribution<std::size_t>(0, local.size() - 1)(rng)];
                for (int r = 0; r < cs.new_stack_size; ++r) g.modules.push_back(m);
            }
        g.modules.push_back(cs.heads[std::uniform_int_distribution<std::size_t>(0, cs.heads.size() - 1)(rng)]);
        auto h = graph_hash(g, GraphLimits{32, 64, 32, 1u << 20});
        if (seen.emplace(h, true).second) out.push_back(std::move(g));
    }
    return out;
}

}  // namespace codebench::cnn
