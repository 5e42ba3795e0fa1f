#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "codebench/cnn2vec/embedding.hpp"
#include "codebench/cnn_space/library.hpp"

using namespace codebench;
using namespace codebench::cnn2vec;

namespace {

cnn::GedCalculator make_calc() { return cnn::GedCalculator(cnn::GedCostTable(std::make_shared<const cnn::BlockCatalog>())); }

std::vector<cnn::ComputationalGraph> corpus(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    auto level = cnn::LevelSpace::for_level(cnn::CnnSpaceConfig{}, 1);
    return level.sample_distinct(n, rng);
}

}  // namespace

TEST(EmbeddingTable, LookupAndValidation) {
    EmbeddingTable t(2);
    t.set("a", {0.0, 0.0});
    t.set("b", {1.0, 1.0});
    EXPECT_EQ(t.embed("a")[0], 0.0);
    EXPECT_THROW(t.embed("zzz"), LookupError);
    EXPECT_THROW(t.set("c", {1.0}), ParameterError);
    EXPECT_THROW(t.set("c", {1.0, std::nan("")}), ParameterError);
    EXPECT_EQ(t.nearest_valid({0.9, 0.8}), "b");
    t.set("c", {0.0, 0.0});
    EXPECT_EQ(t.nearest_valid({0.1, 0.1}), "a");  // tie with "c" broken by digest
}

TEST(EmbeddingTable, SaveLoadRoundTrip) {
    EmbeddingTable t(3);
    t.set("x", {0.25, -1.5, 3.0});
    const auto path = (std::filesystem::temp_directory_path() / "codebench_embed_test.json").string();
    t.save(path);
    auto back = EmbeddingTable::load(path);
    EXPECT_EQ(back.embed("x"), t.embed("x"));
    std::remove(path.c_str());
    EXPECT_THROW(EmbeddingTable::load("/nonexistent/embeddings.json"), Error);
}

TEST(Training, LossDecreasesAndDeterministic) {
    auto calc = make_calc();
    auto graphs = corpus(24, 3);
    TrainOptions opt;
    opt.epochs = 300;
    opt.seed = 9;
    auto r1 = train_embeddings(graphs, calc, opt);
    auto r2 = train_embeddings(graphs, calc, opt);
    EXPECT_LT(r1.loss_curve.back(), r1.loss_curve.front());
    for (const auto& d : r1.digests) EXPECT_EQ(r1.table.embed(d), r2.table.embed(d));
    for (const auto& d : r1.digests) EXPECT_EQ(r1.table.embed(d).size(), 16u);
}

TEST(Training, RecoversPlanarDistances) {
    // Distances that are exactly realisable in 2-D must be fitted near-perfectly.
    std::vector<std::pair<double, double>> pts{{0, 0}, {1, 0}, {0, 2}, {3, 1}, {2, 2}, {-1, 1}};
    const auto n = static_cast<Eigen::Index>(pts.size());
    Mat D(n, n);
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < n; ++i) {
        ids.push_back(std::string(1, static_cast<char>('a' + i)));
        for (Eigen::Index j = 0; j < n; ++j) D(i, j) = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
    }
    TrainOptions opt;
    opt.d = 2;
    opt.epochs = 3000;
    opt.seed = 1;
    auto r = train_on_distances(ids, D, opt);
    EXPECT_LT(r.stress, 1e-6);
    auto [emb, ged] = distance_pairs(r);
    for (std::size_t i = 0; i < emb.size(); ++i) EXPECT_NEAR(emb[i], ged[i], 1e-3);
}

TEST(Diagnostics, SpearmanHandlesTies) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    auto r = average_ranks({5, 1, 5, 2});
    EXPECT_EQ(r, (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(Diagnostics, KneeOfElbowCurve) {
    EXPECT_EQ(knee_dimension({2, 4, 8, 16, 32}, {10.0, 3.0, 1.0, 0.8, 0.7}), 8);
    EXPECT_EQ(knee_dimension({1, 2, 3, 4, 5}, {10.0, 2.0, 1.5, 1.2, 1.0}), 2);
    EXPECT_THROW(knee_dimension({2, 4}, {1.0}), ParameterError);
}

TEST(Training, RejectsDegenerateInputs) {
    auto calc = make_calc();
    auto graphs = corpus(1, 2);
    EXPECT_THROW(train_embeddings(graphs, calc, TrainOptions{}), ParameterError);
    TrainOptions bad;
    bad.d = 0;
    EXPECT_THROW(train_embeddings(corpus(4, 2), calc, bad), ParameterError);
}
