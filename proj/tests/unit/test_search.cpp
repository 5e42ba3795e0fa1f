#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "codebench/search/benchmark.hpp"
#include "codebench/search/config.hpp"
#include "codebench/search/io.hpp"

using namespace codebench;
using namespace codebench::search;

namespace {

const Benchmark& small_benchmark() {
    static const Benchmark b = [] {
        BenchmarkSpec spec;
        spec.seed = 5;
        spec.cnn_count = 8;
        spec.embedding.epochs = 300;
        spec.bumps = 3;
        spec.cnn_width = 1.5;
        spec.accel_width = 1.0;
        spec.separation = 0.5;
        return make_benchmark(spec);
    }();
    return b;
}

SearchSetup small_setup(std::uint64_t seed) {
    auto s = benchmark_setup(small_benchmark(), seed);
    s.policy.budget = 14;
    s.policy.initial_samples = 6;
    s.policy.candidate_pool = 64;
    s.surrogate.epochs = 40;
    s.surrogate.mc_samples = 4;
    s.gobi.restarts = 2;
    s.gobi.max_steps = 20;
    s.gobi.radius = 1.0;
    return s;
}

PerfRecord random_record(Rng& rng) {
    std::uniform_real_distribution<double> u(0.1, 10.0);
    // coarse grids make ties frequent
    auto grid = [&](double v) { return std::round(v * 2) / 2; };
    return {grid(u(rng)), grid(u(rng)), grid(u(rng)), grid(u(rng)) / 10, std::round(uniform01(rng) * 20) / 20};
}

std::vector<std::size_t> brute_front(const std::vector<PerfRecord>& r, HwObjective o) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < r.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < r.size() && !dominated; ++j) {
            const double ci = objective_value(r[i], o), cj = objective_value(r[j], o);
            dominated = r[j].accuracy >= r[i].accuracy && cj <= ci && (r[j].accuracy > r[i].accuracy || cj < ci);
        }
        if (!dominated) out.push_back(i);
    }
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return objective_value(r[a], o) < objective_value(r[b], o); });
    return out;
}

}  // namespace

TEST(Performance, WorkedExample) {
    EXPECT_NEAR(performance_normalised(0.5, 0.5, 0.5, 0.5, 0.9, PerfWeights{}), 0.62, 1e-12);
}

TEST(Performance, AccuracyOnlyWeights) {
    PerfWeights w{0, 0, 0, 0, 1};
    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const double a = uniform01(rng);
        EXPECT_DOUBLE_EQ(performance_normalised(uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng), a, w), a);
    }
}

TEST(Performance, FreeAndPerfectScoresOne) {
    EXPECT_DOUBLE_EQ(performance_normalised(0, 0, 0, 0, 1, PerfWeights{}), 1.0);
    const Maxima m{1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(performance(PerfRecord{0, 0, 0, 0, 1}, PerfWeights{}, m), 1.0);
}

TEST(Performance, MonotoneInEveryComponent) {
    Rng rng(6);
    const PerfWeights w;
    for (int i = 0; i < 500; ++i) {
        double c[5];
        for (double& v : c) v = uniform01(rng);
        const double base = performance_normalised(c[0], c[1], c[2], c[3], c[4], w);
        const double d = 0.1 * uniform01(rng);
        EXPECT_LE(performance_normalised(std::min(1.0, c[0] + d), c[1], c[2], c[3], c[4], w), base);
        EXPECT_LE(performance_normalised(c[0], std::min(1.0, c[1] + d), c[2], c[3], c[4], w), base);
        EXPECT_LE(performance_normalised(c[0], c[1], std::min(1.0, c[2] + d), c[3], c[4], w), base);
        EXPECT_LE(performance_normalised(c[0], c[1], c[2], std::min(1.0, c[3] + d), c[4], w), base);
        EXPECT_GE(performance_normalised(c[0], c[1], c[2], c[3], std::min(1.0, c[4] + d), w), base);
        EXPECT_GE(base, 0.0);
        EXPECT_LE(base, 1.0);
    }
}

TEST(Performance, WeightsMustSumToOne) {
    PerfWeights w{0.2, 0.2, 0.2, 0.2, 0.3};
    EXPECT_THROW(w.check(), ParameterError);
}

TEST(Pareto, ThreeRecordsOneDominated) {
    std::vector<PerfRecord> r{{1, 1, 1, 0.1, 0.9}, {2, 1, 1, 0.1, 0.8}, {3, 1, 1, 0.1, 0.95}};
    const auto f = pareto_front(r, HwObjective::latency);
    EXPECT_EQ(f, (std::vector<std::size_t>{0, 2}));
}

TEST(Pareto, MatchesBruteForceOnTiedRecords) {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PerfRecord> r;
        for (int i = 0; i < 200; ++i) r.push_back(random_record(rng));
        for (auto o : {HwObjective::latency, HwObjective::area, HwObjective::energy, HwObjective::edp})
            EXPECT_EQ(pareto_front(r, o), brute_front(r, o)) << hw_objective_name(o);
    }
}

TEST(Convergence, FiresAfterWindowOfFlatBest) {
    ConvergenceDetector d(1e-4, 5);
    for (int i = 0; i < 5; ++i) EXPECT_FALSE(d.push(0.5));
    EXPECT_TRUE(d.push(0.5));
}

TEST(Convergence, SteadyProgressNeverFires) {
    ConvergenceDetector d(1e-4, 5);
    for (int i = 0; i < 100; ++i) EXPECT_FALSE(d.push(0.1 + 1e-3 * i));
}

TEST(Convergence, PlateauDetectedExactlyAfterWindow) {
    ConvergenceDetector d(1e-4, 5);
    int fired = -1;
    for (int i = 0; i < 40 && fired < 0; ++i) {
        const double v = i < 10 ? 0.01 * i : 0.09 + 1e-6 * (i - 10);
        if (d.push(v)) fired = i;
    }
    EXPECT_EQ(fired, 14);
}

TEST(Branches, FrequenciesWithinThreeSigma) {
    SearchPolicy p;
    p.alpha_p = 0.15;
    p.beta_p = 0.1;
    Rng rng(17);
    const int n = 20000;
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) ++counts[static_cast<int>(pick_branch(uniform01(rng), p))];
    const double want[3] = {1 - p.alpha_p - p.beta_p, p.alpha_p, p.beta_p};
    for (int k = 0; k < 3; ++k) {
        const double sd = std::sqrt(n * want[k] * (1 - want[k]));
        EXPECT_LE(std::abs(counts[k] - n * want[k]), 3 * sd) << k;
    }
}

TEST(Branches, ZeroProbabilitiesAlwaysGobi) {
    SearchPolicy p;
    p.alpha_p = p.beta_p = 0;
    for (double u : {0.0, 0.3, 0.999999}) EXPECT_EQ(pick_branch(u, p), Branch::gobi);
}

TEST(Boshcode, PureGobiWhenSamplingProbabilitiesAreZero) {
    auto s = small_setup(1);
    s.policy.alpha_p = s.policy.beta_p = 0;
    const auto r = boshcode_run(s);
    ASSERT_EQ(r.evaluations, s.policy.budget);
    for (const auto& e : r.trace)
        if (e.iteration >= s.policy.initial_samples) {
            EXPECT_EQ(e.branch, "gobi") << e.iteration;
        }
}

TEST(Boshcode, FixAccelKeepsOneConfiguration) {
    auto s = small_setup(2);
    s.mode = Mode::fix_accel;
    const auto r = boshcode_run(s);
    ASSERT_FALSE(r.trace.empty());
    std::set<std::string> digests;
    for (const auto& e : r.trace) {
        EXPECT_EQ(e.pair.config, r.trace.front().pair.config);
        digests.insert(e.pair.digest);
    }
    // one configuration times eight CNNs is fewer pairs than the budget
    EXPECT_EQ(digests.size(), small_benchmark().catalog.graphs.size());
    EXPECT_TRUE(r.exhausted);
    EXPECT_EQ(r.evaluations, static_cast<int>(r.trace.size()));
    EXPECT_NE(r.trace.back().note.find("exhausted"), std::string::npos);
}

TEST(Boshcode, FixCnnKeepsOneArchitecture) {
    auto s = small_setup(3);
    s.mode = Mode::fix_cnn;
    const auto r = boshcode_run(s);
    for (const auto& e : r.trace) EXPECT_EQ(e.pair.digest, r.trace.front().pair.digest);
}

TEST(Boshcode, TraceIsValidAndCostIsAudited) {
    const auto s = small_setup(4);
    const auto r = boshcode_run(s);
    double sum = 0;
    std::set<Pair> seen;
    for (const auto& e : r.trace) {
        sum += e.cost;
        EXPECT_NO_THROW(s.accel_space.validate(e.pair.config));
        EXPECT_TRUE(small_benchmark().catalog.graphs.count(e.pair.digest));
        EXPECT_GE(e.performance, 0.0);
        EXPECT_LE(e.performance, 1.0);
        EXPECT_TRUE(seen.insert(e.pair).second) << "pair evaluated twice";
    }
    EXPECT_DOUBLE_EQ(r.total_cost, sum);
    EXPECT_EQ(r.evaluations, static_cast<int>(r.trace.size()));
    EXPECT_GE(r.best_performance, r.trace.front().performance);
}

TEST(Boshcode, SameSeedSameTrace) {
    const auto a = boshcode_run(small_setup(5));
    const auto b = boshcode_run(small_setup(5));
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].pair, b.trace[i].pair);
        EXPECT_EQ(a.trace[i].perf.accuracy, b.trace[i].perf.accuracy);
    }
}

TEST(Boshcode, FailedEvaluationsAreRetriedAndCounted) {
    auto s = small_setup(6);
    auto inner = s.evaluate;
    int calls = 0;
    s.evaluate = [inner, &calls](const eval::EvalRequest& r) {
        if (++calls % 4 == 0) throw EvaluationError("flaky worker");
        return inner(r);
    };
    s.policy.retries = 1;
    const auto r = boshcode_run(s);
    int failed = 0;
    for (const auto& e : r.trace) {
        if (e.failed) {
            ++failed;
            EXPECT_NE(e.note.find("flaky worker"), std::string::npos);
            EXPECT_DOUBLE_EQ(e.cost, 0.0);
        }
    }
    EXPECT_GT(failed, 0);
    EXPECT_EQ(r.evaluations, s.policy.budget);
    EXPECT_EQ(static_cast<int>(r.trace.size()), s.policy.budget);
}

TEST(Boshcode, ParallelWorkersStayWithinBudget) {
    auto s = small_setup(7);
    s.policy.workers = 3;
    const auto r = boshcode_run(s);
    EXPECT_EQ(r.evaluations, s.policy.budget);
}

TEST(Boshcode, AreaConstraintHoldsForEveryQuery) {
    auto s = small_setup(8);
    const auto k = accel::CostConstants::load_default();
    double lo = 1e300, hi = 0;
    s.accel_space.enumerate([&](const accel::AcceleratorConfig& c) {
        lo = std::min(lo, accel::area(c, k));
        hi = std::max(hi, accel::area(c, k));
        return true;
    });
    const double bound = 0.5 * (lo + hi);
    s.constraints.items.push_back(gobi::max_area(bound, k));
    const auto r = boshcode_run(s);
    for (const auto& e : r.trace) EXPECT_LE(accel::area(e.pair.config, k), bound);
}

TEST(Boshcode, ConvergesEarlyWithLooseTolerance) {
    auto s = small_setup(9);
    s.policy.conv_tol = 1.0;  // any window counts as flat
    s.policy.conv_window = 2;
    const auto r = boshcode_run(s);
    EXPECT_TRUE(r.converged);
    EXPECT_LT(r.evaluations, s.policy.budget);
    EXPECT_NE(r.trace.back().note.find("converged"), std::string::npos);
}

TEST(Boshcode, HierarchyAdvancesLevels) {
    SearchSetup s;
    s.accel_space = BenchmarkSpec::default_accel();
    s.levels = 2;
    cnn2vec::TrainOptions opt;
    opt.epochs = 200;
    s.provider = hierarchy_provider(cnn::CnnSpaceConfig{}, 6, opt, 3);
    auto ev = std::make_shared<eval::PairEvaluator>([](const eval::EvalRequest& r) { return 0.5 + 0.4 * std::tanh(r.x.head(4).sum()); });
    s.evaluate = [ev](const eval::EvalRequest& r) { return (*ev)(r); };
    s.policy.budget = 16;
    s.policy.initial_samples = 4;
    s.policy.conv_tol = 1.0;
    s.policy.conv_window = 2;
    s.policy.candidate_pool = 32;
    s.surrogate.epochs = 30;
    s.surrogate.mc_samples = 3;
    s.gobi.restarts = 2;
    s.gobi.max_steps = 10;
    s.seed = 4;
    const auto r = boshcode_run(s);
    EXPECT_EQ(r.levels_completed, 2u);
    EXPECT_TRUE(r.converged);
    std::set<std::size_t> levels;
    for (const auto& e : r.trace) levels.insert(e.level);
    EXPECT_EQ(levels, (std::set<std::size_t>{1, 2}));
    EXPECT_EQ(r.best_graph.stack_size > 0, true);
}

TEST(TraceCsv, RoundTrip) {
    const auto r = boshcode_run(small_setup(10));
    std::stringstream ss;
    write_trace_csv(ss, r.trace);
    const auto back = read_trace_csv(ss);
    ASSERT_EQ(back.size(), r.trace.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].pair, r.trace[i].pair);
        EXPECT_EQ(back[i].branch, r.trace[i].branch);
        EXPECT_DOUBLE_EQ(back[i].perf.latency_ms, r.trace[i].perf.latency_ms);
        EXPECT_DOUBLE_EQ(back[i].perf.accuracy, r.trace[i].perf.accuracy);
        EXPECT_DOUBLE_EQ(back[i].cost, r.trace[i].cost);
    }
}

TEST(TraceCsv, BadRowsCarryLineNumbers) {
    std::stringstream ss("iteration,latency_ms,area_mm2,e_dyn_mJ,e_leak_mJ,accuracy\n0,1,1,1,1,0.5\n1,1,x,1,1,0.5\n");
    try {
        read_trace_csv(ss, "t.csv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("t.csv:3"), std::string::npos);
    }
    std::stringstream bad_acc("latency_ms,area_mm2,e_dyn_mJ,e_leak_mJ,accuracy\n1,1,1,1,1.5\n");
    EXPECT_THROW(read_trace_csv(bad_acc), ValidationError);
}

TEST(RunConfig, ParsesOverridesAndRejectsUnknownKinds) {
    nlohmann::json j = {{"seed", 3},
                        {"mode", "fix-cnn"},
                        {"problem", {{"kind", "landscape"}, {"seed", 5}, {"cnn_count", 6}, {"embedding_epochs", 100}, {"bumps", 3}, {"separation", 0.5}}},
                        {"policy", {{"budget", 9}, {"alpha_p", 0.2}}},
                        {"gobi", {{"radius", 2.0}}},
                        {"accel_space", {{"p_ix", {1, 8}}}}};
    const auto rc = run_config_from_json(j);
    EXPECT_EQ(rc.mode, Mode::fix_cnn);
    EXPECT_EQ(rc.setup.policy.budget, 9);
    EXPECT_DOUBLE_EQ(rc.setup.policy.alpha_p, 0.2);
    EXPECT_DOUBLE_EQ(rc.setup.gobi.radius, 2.0);
    EXPECT_EQ(rc.setup.accel_space.p_ix, (std::vector<int>{1, 8}));
    ASSERT_TRUE(rc.benchmark);
    EXPECT_EQ(rc.benchmark->points.size(), 6u * 10u);
    j["problem"]["kind"] = "mystery";
    EXPECT_THROW(run_config_from_json(j), ParameterError);
    j.erase("problem");
    EXPECT_THROW(run_config_from_json(j), ParseError);
}
