#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <vector>

#include <json.hpp>

#include "codebench/accel_space/space.hpp"
#include "codebench/evaluators/pair.hpp"
#include "codebench/evaluators/synthetic.hpp"
#include "codebench/search/boshcode.hpp"

namespace codebench::search {

/// A finite product design space (sampled CNNs x an accelerator subspace)
/// with a synthetic accuracy landscape placed on its pair embeddings.
struct BenchmarkSpec {
    std::uint64_t seed = 7;
    std::size_t cnn_count = 40;
    std::size_t level = 1;
    cnn::CnnSpaceConfig cnn_space;
    cnn2vec::TrainOptions embedding;
    accel::AccelSpace accel = default_accel();
    std::size_t bumps = 5;
    double top = 0.85;
    double floor = 0.1;
    double cnn_width = 0.35;    // fraction of the median CNN embedding distance
    double accel_width = 0.35;  // in normalised accelerator units
    double anisotropy = 3.0;
    double separation = 3.0;    // minimum bump distance in base widths
    double noise_scale = 0.01;
    PerfWeights weights;

    /// 25 configurations: five P_ix values times five memory options.
    static accel::AccelSpace default_accel() {
        accel::AccelSpace s;
        s.p_ib = {1};
        s.p_if = {16};
        s.p_ix = {1, 2, 4, 6, 8};
        s.p_iy = {8};
        s.p_of = {8};
        s.p_k = {3};
        s.batch = {1};
        s.act_buf_mb = {12};
        s.wgt_buf_mb = {24};
        s.mask_buf_mb = {4};
        s.mem_types = {accel::MemType::rram, accel::MemType::dram, accel::MemType::hbm};
        s.mem_config_subsets = {{0, 1, 2}, {0}, {0}};
        return s;
    }
};

inline BenchmarkSpec benchmark_spec_from_json(const nlohmann::json& j, BenchmarkSpec s = {}) {
    s.seed = j.value("seed", s.seed);
    s.cnn_count = j.value("cnn_count", s.cnn_count);
    s.level = j.value("level", s.level);
    s.bumps = j.value("bumps", s.bumps);
    s.top = j.value("top", s.top);
    s.floor = j.value("floor", s.floor);
    s.cnn_width = j.value("cnn_width", s.cnn_width);
    s.accel_width = j.value("accel_width", s.accel_width);
    s.anisotropy = j.value("anisotropy", s.anisotropy);
    s.separation = j.value("separation", s.separation);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    if (j.contains("embedding_epochs")) s.embedding.epochs = j.at("embedding_epochs");
    if (j.contains("weights")) s.weights = perf_weights_from_json(j.at("weights"));
    return s;
}

struct Benchmark {
    BenchmarkSpec spec;
    CnnCatalog catalog;
    std::shared_ptr<const eval::SyntheticLandscape> landscape;
    std::shared_ptr<eval::PairEvaluator> evaluator;
    std::vector<Pair> points;
    std::map<Pair, PerfRecord> noiseless;  // accuracy without recipe noise
    Maxima maxima;                          // over every point
    double optimum = 0;                     // best noiseless performance

    double true_performance(const Pair& p) const { return performance(noiseless.at(p), spec.weights, maxima); }

    /// Best noiseless performance among the successful trace entries.
    double best_found(const std::vector<TraceEntry>& trace) const {
        double b = 0;
        for (const auto& e : trace)
            if (!e.failed) b = std::max(b, true_performance(e.pair));
        return b;
    }
};

inline Benchmark make_benchmark(const BenchmarkSpec& spec) {
    Benchmark b;
    b.spec = spec;
    Rng rng(derive_seed(spec.seed, 1));
    auto level = cnn::LevelSpace::for_level(spec.cnn_space, spec.level);
    auto graphs = level.sample_distinct(spec.cnn_count, rng);
    auto opt = spec.embedding;
    opt.seed = derive_seed(spec.seed, 2);
    b.catalog = catalog_from_graphs(graphs, opt);
    gobi::PairSpace ps(b.catalog.table, spec.accel);

    std::vector<double> dists;
    std::vector<std::vector<double>> embs;
    for (const auto& [d, e] : b.catalog.table.entries()) embs.push_back(e);
    for (std::size_t i = 0; i < embs.size(); ++i)
        for (std::size_t j = i + 1; j < embs.size(); ++j) dists.push_back(cnn::euclidean(embs[i], embs[j]));
    std::nth_element(dists.begin(), dists.begin() + static_cast<long>(dists.size() / 2), dists.end());
    const double median = dists.empty() ? 1.0 : dists[dists.size() / 2];

    std::vector<Vec> xs;
    for (const auto& [d, e] : b.catalog.table.entries())
        spec.accel.enumerate([&](const accel::AcceleratorConfig& c) {
            b.points.push_back({d, c});
            xs.push_back(ps.encode(b.points.back()));
            return true;
        });
    Vec width(ps.dim());
    width.head(ps.cnn_dim()).setConstant(spec.cnn_width * median / std::sqrt(static_cast<double>(ps.cnn_dim())));
    width.tail(accel::kAccelDims).setConstant(spec.accel_width);
    b.landscape = std::make_shared<eval::SyntheticLandscape>(
        eval::SyntheticLandscape::place(xs, spec.bumps, spec.top, width, spec.anisotropy, spec.separation, spec.floor, spec.noise_scale, derive_seed(spec.seed, 3)));
    b.evaluator = std::make_shared<eval::PairEvaluator>(eval::landscape_oracle(b.landscape));

    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& p = b.points[i];
        const auto hw = b.evaluator->hardware(p, b.catalog.graphs.at(p.digest));
        const auto rec = PerfRecord::from(hw, b.landscape->base(xs[i]));
        b.noiseless.emplace(p, rec);
        b.maxima.update(rec);
    }
    for (const auto& p : b.points) b.optimum = std::max(b.optimum, b.true_performance(p));
    return b;
}

/// Search setup over a benchmark with its global maxima as normalisation.
inline SearchSetup benchmark_setup(const Benchmark& b, std::uint64_t seed) {
    SearchSetup s;
    s.accel_space = b.spec.accel;
    s.provider = fixed_provider(b.catalog);
    auto ev = b.evaluator;
    s.evaluate = [ev](const eval::EvalRequest& r) { return (*ev)(r); };
    s.weights = b.spec.weights;
    s.fixed_maxima = b.maxima;
    s.seed = seed;
    return s;
}

}  // namespace codebench::search
