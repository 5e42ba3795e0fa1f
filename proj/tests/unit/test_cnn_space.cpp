#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "codebench/cnn_space/crossover.hpp"
#include "codebench/cnn_space/ged.hpp"
#include "codebench/cnn_space/hash.hpp"
#include "codebench/cnn_space/library.hpp"
#include "codebench/cnn_space/neighbors.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace codebench;
using namespace codebench::cnn;

namespace {

std::shared_ptr<const BlockCatalog> catalog() {
    static auto cat = std::make_shared<const BlockCatalog>();
    return cat;
}

GraphModule permute(const GraphModule& m, const std::vector<int>& perm) {
    GraphModule out;
    out.blocks.resize(m.blocks.size());
    for (std::size_t i = 0; i < m.blocks.size(); ++i) out.blocks[perm[i]] = m.blocks[i];
    for (auto [a, b] : m.edges) out.edges.emplace_back(perm[a], perm[b]);
    std::reverse(out.edges.begin(), out.edges.end());
    return out;
}

ComputationalGraph single_stack(const GraphModule& body, int s = 1) {
    return make_stacked_graph({body}, module_library().back(), s);
}

}  // namespace

TEST(BlockCatalog, TotalOrderIsUniqueAndSortedByComplexity) {
    const auto& cat = *catalog();
    std::set<std::string> labels;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        EXPECT_EQ(cat.index_of(cat.blocks()[i]), i);
        labels.insert(cat.blocks()[i].label());
        if (i > 0) {
            EXPECT_LE(complexity_score(cat.blocks()[i - 1]), complexity_score(cat.blocks()[i]));
        }
    }
    EXPECT_EQ(labels.size(), cat.size());
    EXPECT_THROW(cat.index_of(make_conv(7, 8)), ValidationError);
}

TEST(BlockJson, RoundTrip) {
    const auto b = make_conv(5, 32, Activation::silu, 1, 4);
    EXPECT_EQ(block_from_json(to_json(b)), b);
    EXPECT_THROW(block_from_json(nlohmann::json{{"kind", "warp-drive"}}), ParseError);
}

TEST(GraphValidation, RejectsMalformedModules) {
    auto ok = make_sequential_module({make_conv(3, 16)});
    EXPECT_NO_THROW(validate_module(ok, {}, false));

    auto cyc = make_sequential_module({make_conv(3, 16), make_conv(1, 16)});
    cyc.edges.emplace_back(2, 1);
    EXPECT_THROW(validate_module(cyc, {}, false), ValidationError);

    GraphModule no_input;
    no_input.blocks = {make_conv(3, 16), make_output()};
    no_input.edges = {{0, 1}};
    EXPECT_THROW(validate_module(no_input, {}, false), ValidationError);

    auto too_big = make_sequential_module({make_conv(3, 16), make_conv(3, 16), make_conv(3, 16), make_conv(3, 16)});
    EXPECT_THROW(validate_module(too_big, {}, false), ValidationError);

    auto branchy_head = module_library()[16];  // two-branch module
    EXPECT_THROW(validate_module(branchy_head, {}, true), ValidationError);
}

TEST(GraphValidation, StacksMustBeIdentical) {
    auto lib = module_library();
    auto g = make_stacked_graph({lib[0], lib[1]}, head_library()[0], 2);
    EXPECT_NO_THROW(validate(g));
    g.modules[1] = lib[2];
    EXPECT_THROW(validate(g), ValidationError);
    g = make_stacked_graph({lib[0], lib[1], lib[2], lib[3]}, head_library()[0], 4);
    EXPECT_THROW(validate(g), ValidationError);  // 16 body modules > depth cap 12
}

TEST(GraphJson, RoundTripPreservesHash) {
    auto g = toy_cnn();
    auto back = graph_from_json(to_json(g));
    EXPECT_EQ(back, g);
    EXPECT_EQ(graph_hash(back), graph_hash(g));
    EXPECT_THROW(graph_from_json(nlohmann::json{{"modules", 3}}), ParseError);
}

TEST(GraphHash, PermutationInvariant) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = testsupport::random_module(rng, 5, testsupport::small_ops());
        std::vector<int> perm(m.blocks.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto g1 = single_stack(m);
        auto g2 = single_stack(permute(m, perm));
        EXPECT_EQ(graph_hash(g1), graph_hash(g2));
        EXPECT_EQ(module_hash(m), module_hash(permute(m, perm)));
    }
}

TEST(GraphHash, DeterministicLenet) {
    auto g = lenet();
    const auto h = graph_hash(g);
    EXPECT_EQ(h.size(), 64u);
    EXPECT_EQ(h, graph_hash(lenet()));
    EXPECT_TRUE(std::all_of(h.begin(), h.end(), [](char c) { return std::isxdigit(c) && !std::isupper(c); }));
}

TEST(GraphHash, MalformedGraphIsValidationError) {
    auto g = toy_cnn();
    g.modules[0].edges.emplace_back(2, 1);
    EXPECT_THROW(graph_hash(g), ValidationError);
}

TEST(GraphHash, NoCollisionsOnTwoModuleEnumeration) {
    std::vector<ComputationalGraph> graphs;
    for (const auto& g : testsupport::enumerate_tiny_graphs())
        if (g.modules.size() <= 2) graphs.push_back(g);
    std::vector<std::string> hashes;
    std::vector<FlatGraph> flat;
    for (const auto& g : graphs) {
        hashes.push_back(graph_hash(g));
        flat.push_back(flatten(g));
    }
    for (std::size_t i = 0; i < graphs.size(); ++i)
        for (std::size_t j = i + 1; j < graphs.size(); ++j)
            EXPECT_EQ(hashes[i] == hashes[j], oracle::isomorphic(flat[i], flat[j])) << i << " vs " << j;
}

TEST(Ged, IdentityIsZero) {
    GedCostTable costs(catalog());
    for (const auto& m : module_library()) EXPECT_EQ(module_ged(m, m, costs), 0.0);
    EXPECT_EQ(ged(toy_cnn(), toy_cnn(), costs), 0.0);
}

TEST(Ged, InsertedBranchCostsWeightPlusTwoEdges) {
    GedCostTable costs(catalog());
    auto g1 = make_sequential_module({make_conv(3, 16)});
    GraphModule g2 = g1;
    const auto extra = make_conv(1, 8);
    g2.blocks.push_back(extra);  // index 3
    g2.edges.emplace_back(1, 3);
    g2.edges.emplace_back(3, 2);
    const double w = 1.0 + static_cast<double>(catalog()->index_of(extra)) / static_cast<double>(catalog()->size());
    EXPECT_DOUBLE_EQ(costs.indel(catalog()->index_of(extra)), w);
    const double expected = w + 2e-9;
    EXPECT_EQ(module_ged(g1, g2, costs), oracle::brute_force_ged(g1, g2, *catalog(), 1e-9));
    EXPECT_NEAR(module_ged(g1, g2, costs), expected, 1e-15);
}

TEST(Ged, MatchesBruteForceOnFourNodeModules) {
    GedCostTable costs(catalog());
    std::mt19937_64 rng(11);
    const auto ops = testsupport::small_ops();
    for (int trial = 0; trial < 40; ++trial) {
        auto a = testsupport::random_module(rng, 4, ops);
        auto b = testsupport::random_module(rng, 4, ops);
        const double d = module_ged(a, b, costs);
        EXPECT_EQ(d, oracle::brute_force_ged(a, b, *catalog(), 1e-9));
        EXPECT_EQ(d, module_ged(b, a, costs));
        EXPECT_GE(d, 0.0);
    }
}

TEST(Ged, BeamSearchIsAnUpperBoundAndExactOnSmallInputs) {
    GedCostTable costs(catalog());
    std::mt19937_64 rng(5);
    const auto ops = testsupport::small_ops();
    for (int trial = 0; trial < 20; ++trial) {
        auto a = testsupport::random_module(rng, 5, ops);
        auto b = testsupport::random_module(rng, 5, ops);
        const double exact = module_ged(a, b, costs);
        const double beam = module_ged(a, b, costs, GedOptions{0, 4});
        EXPECT_GE(beam + 1e-12, exact);
        EXPECT_EQ(module_ged(a, b, costs, GedOptions{0, 100000}), exact);
    }
}

TEST(Ged, GraphLevelDecomposition) {
    GedCostTable costs(catalog());
    GedCalculator calc(costs);
    auto lib = module_library();
    auto heads = head_library();
    auto g1 = make_stacked_graph({lib[0]}, heads[0], 1);
    auto g2 = make_stacked_graph({lib[0], lib[5]}, heads[1], 1);
    const double expected = module_indel_cost(lib[5], costs) + calc.modules(heads[0], heads[1]);
    EXPECT_DOUBLE_EQ(calc(g1, g2), expected);
    EXPECT_DOUBLE_EQ(calc(g1, g2), calc(g2, g1));
}

TEST(Crossover, IdenticalParentsGiveOneRestacking) {
    auto lib = module_library();
    auto p = make_stacked_graph({lib[1], lib[4]}, head_library()[0], 4);
    auto kids = crossover(p, p, 2);
    ASSERT_EQ(kids.size(), 1u);
    EXPECT_EQ(kids[0].stack_size, 2);
    EXPECT_EQ(kids[0].modules, p.modules);
    EXPECT_NO_THROW(validate(kids[0]));
}

TEST(Crossover, LocalSpacesFollowStackDepth) {
    auto lib = module_library();
    const auto &A = lib[0], &B = lib[1], &C = lib[2], &D = lib[3];
    GraphLimits limits;
    limits.depth_cap = 20;
    auto p1 = make_stacked_graph({A, B}, head_library()[0], 10);
    auto p2 = make_stacked_graph({C, D}, head_library()[1], 10);
    auto kids = crossover(p1, p2, 5);
    // |A u C|^2 * |B u D|^2 * |heads| = 2^2 * 2^2 * 2
    ASSERT_EQ(kids.size(), 32u);
    std::set<std::string> digests;
    for (const auto& k : kids) {
        EXPECT_NO_THROW(validate(k, limits));
        EXPECT_EQ(k.stack_size, 5);
        for (int i = 0; i < 10; ++i) EXPECT_TRUE(k.modules[i] == A || k.modules[i] == C);
        for (int i = 10; i < 20; ++i) EXPECT_TRUE(k.modules[i] == B || k.modules[i] == D);
        digests.insert(graph_hash(k, limits));
    }
    EXPECT_EQ(digests.size(), kids.size());
    EXPECT_THROW(crossover(p1, p2, 3), ParameterError);
}

TEST(Crossover, CountMatchesExplicitEnumeration) {
    auto lib = module_library();
    auto p1 = make_stacked_graph({lib[0], lib[6]}, head_library()[0], 4);
    auto p2 = make_stacked_graph({lib[2], lib[6]}, head_library()[0], 4);
    // depth 0: {0,2} -> 2^4 choices at s_new = 1; depth 1: {6} -> 1; one head
    auto kids = crossover(p1, p2, 1);
    EXPECT_EQ(kids.size(), 16u);
    std::set<std::string> digests;
    for (const auto& k : kids) digests.insert(graph_hash(k));
    EXPECT_EQ(digests.size(), 16u);

    std::mt19937_64 rng(1);
    auto sample = sample_crossover(p1, p2, 1, 5, rng);
    EXPECT_EQ(sample.size(), 5u);
}

TEST(BiasedOverlap, Examples) {
    auto lib = module_library();
    auto q = make_stacked_graph({lib[0], lib[1], lib[2]}, head_library()[0], 1);
    EXPECT_DOUBLE_EQ(biased_overlap_fraction(q, q), 1.0);

    auto n = q;
    n.modules[0] = lib[9];
    EXPECT_DOUBLE_EQ(biased_overlap_fraction(q, n), 0.0);

    n = q;
    n.modules[3] = head_library()[1];
    EXPECT_DOUBLE_EQ(biased_overlap_fraction(q, n), 0.75);

    n = q;
    n.modules[1] = lib[7];
    EXPECT_DOUBLE_EQ(biased_overlap_fraction(q, n), 0.25);
}

TEST(Neighbors, SelfAndManualOrdering) {
    auto g = toy_cnn();
    std::vector<PoolEntry> pool{{"q", &g, {0.0, 0.0}}};
    auto self = neighbors({0.0, 0.0}, pool, 1);
    ASSERT_EQ(self.items.size(), 1u);
    EXPECT_EQ(self.items[0].distance, 0.0);
    EXPECT_FALSE(self.truncated_pool);

    std::vector<PoolEntry> three{{"a", &g, {3.0, 4.0}}, {"b", &g, {1.0, 0.0}}, {"c", &g, {0.0, -2.0}}};
    auto list = neighbors({0.0, 0.0}, three, 5);
    EXPECT_TRUE(list.truncated_pool);
    ASSERT_EQ(list.items.size(), 3u);
    EXPECT_EQ(list.items[0].digest, "b");
    EXPECT_EQ(list.items[1].digest, "c");
    EXPECT_EQ(list.items[2].digest, "a");
    EXPECT_DOUBLE_EQ(list.items[2].distance, 5.0);
}

TEST(Neighbors, TransferRankingBreaksTiesByDistance) {
    auto lib = module_library();
    auto q = make_stacked_graph({lib[0], lib[1]}, head_library()[0], 1);
    auto half = q;
    half.modules[1] = lib[3];  // overlap 1/3
    auto other = q;
    other.modules[1] = lib[4];  // overlap 1/3
    auto none = q;
    none.modules[0] = lib[5];
    std::vector<PoolEntry> pool{{"far", &half, {2.0}}, {"near", &other, {1.0}}, {"zero", &none, {0.5}}};
    auto list = neighbors({0.0}, pool, 3);
    rank_for_transfer(q, pool, list);
    EXPECT_EQ(list.items[0].digest, "near");
    EXPECT_EQ(list.items[1].digest, "far");
    EXPECT_EQ(list.items[2].digest, "zero");
    EXPECT_DOUBLE_EQ(list.items[0].overlap, list.items[1].overlap);
}

TEST(LevelSpace, SizeAndOrdinals) {
    CnnSpaceConfig cfg;
    auto level = LevelSpace::for_level(cfg, 1);
    const double m = static_cast<double>(module_library().size());
    const double h = static_cast<double>(head_library().size());
    EXPECT_DOUBLE_EQ(level.size(), (m + m * m + m * m * m) * h);
    auto g0 = level.graph(0);
    EXPECT_EQ(g0.body_size(), 4u);
    EXPECT_NO_THROW(validate(g0, cfg.limits, catalog().get()));
    auto last = level.graph(static_cast<std::uint64_t>(level.size()) - 1);
    EXPECT_EQ(last.body_size(), 12u);
    EXPECT_THROW(level.graph(static_cast<std::uint64_t>(level.size())), ParameterError);
    std::mt19937_64 rng(3);
    auto sample = level.sample_distinct(30, rng);
    for (const auto& g : sample) EXPECT_NO_THROW(validate(g, cfg.limits, catalog().get()));
}
