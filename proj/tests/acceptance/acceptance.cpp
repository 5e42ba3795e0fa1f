// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <string>

#include "codebench/accel_sim/fixed_point.hpp"
#include "codebench/accel_sim/simulator.hpp"
#include "codebench/accel_space/presets.hpp"
#include "codebench/cnn2vec/embedding.hpp"
#include "codebench/cnn_space/ged.hpp"
#include "codebench/cnn_space/hash.hpp"
#include "codebench/cnn_space/library.hpp"
#include "codebench/search/config.hpp"
#include "codebench/surrogate/stack.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#ifndef CODEBENCH_SOURCE_DIR
#define CODEBENCH_SOURCE_DIR "."
#endif

using namespace codebench;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void run(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = t < limit_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2fs/%.0fs", t, limit_s);
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << buf << (in_time ? "" : ", over time") << ") " << o.detail
              << std::endl;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// One-sided sign test, ties discarded: P(X >= wins) for X ~ Bin(wins + losses, 1/2).
double sign_test_p(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    double p = 0;
    for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
    return p;
}

Outcome cardinality() {
    const auto n = accel::AccelSpace{}.cardinality();
    return {n == 228433920ull, "cardinality " + std::to_string(n)};
}

Outcome stochastic_rounding() {
    accel::StochasticRounder r;
    Rng rng(2024);
    const double eps = r.spec().epsilon();
    const double lo = 777 * eps, x = lo + 0.3 * eps;
    const int n = 100000;
    int down = 0;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const double v = r.round(x, rng);
        if (v != lo && v != lo + eps) return {false, "rounded off the neighbouring grid points"};
        down += v == lo;
        sum += v;
    }
    const double freq = static_cast<double>(down) / n;
    const double bias = std::abs(sum / n - x), bound = 3 * (eps / 2) / std::sqrt(static_cast<double>(n));
    return {std::abs(freq - 0.7) <= 0.005 && bias <= bound, "down " + fmt(freq) + ", |mean - x| " + fmt(bias) + " <= " + fmt(bound)};
}

Outcome ged_brute_force() {
    const auto cat = std::make_shared<const cnn::BlockCatalog>();
    cnn::GedCostTable costs(cat);
    std::mt19937_64 rng(314);
    const auto ops = testsupport::small_ops();
    int agree = 0;
    for (int i = 0; i < 50; ++i) {
        const auto a = testsupport::random_module(rng, 4, ops), b = testsupport::random_module(rng, 4, ops);
        agree += cnn::module_ged(a, b, costs) == oracle::brute_force_ged(a, b, *cat, 1e-9);
    }
    return {agree == 50, std::to_string(agree) + "/50 pairs exact"};
}

Outcome hash_isomorphism() {
    const auto graphs = testsupport::enumerate_tiny_graphs();
    std::vector<std::string> h;
    std::vector<cnn::FlatGraph> flat;
    for (const auto& g : graphs) {
        h.push_back(cnn::graph_hash(g));
        flat.push_back(cnn::flatten(g));
    }
    int collisions = 0, missed = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i)
        for (std::size_t j = i + 1; j < graphs.size(); ++j) {
            const bool same = h[i] == h[j], iso = oracle::isomorphic(flat[i], flat[j]);
            collisions += same && !iso;
            missed += iso && !same;
        }
    return {collisions == 0 && missed == 0,
            std::to_string(graphs.size()) + " graphs, " + std::to_string(collisions) + " collisions, " + std::to_string(missed) + " missed isomorphisms"};
}

Outcome embedding_quality() {
    Rng rng(16);
    const auto graphs = cnn::LevelSpace::for_level(cnn::CnnSpaceConfig{}, 1).sample_distinct(20, rng);
    cnn::GedCalculator calc(cnn::GedCostTable(std::make_shared<const cnn::BlockCatalog>()));
    cnn2vec::TrainOptions opt;
    opt.d = 16;
    opt.seed = 5;
    const auto r = cnn2vec::train_embeddings(graphs, calc, opt);
    const auto [emb, ged] = cnn2vec::distance_pairs(r);
    double mean = 0;
    for (double g : ged) mean += g;
    mean /= static_cast<double>(ged.size());
    const double rho = cnn2vec::spearman(emb, ged), bound = 1e-2 * mean * mean;
    return {r.stress < bound && rho >= 0.9, "stress/pair " + fmt(r.stress) + " < " + fmt(bound) + ", spearman " + fmt(rho)};
}

Outcome ucb_gradient() {
    surrogate::SurrogateOptions o;
    o.arch.split = {16, static_cast<int>(accel::kAccelDims)};
    o.epochs = 100;
    o.seed = 3;
    const int d = 16 + static_cast<int>(accel::kAccelDims);
    Rng rng(8);
    auto point = [&] {
        Vec x(d);
        for (int i = 0; i < d; ++i) x(i) = 2 * uniform01(rng) - 1;
        return x;
    };
    surrogate::Corpus c;
    for (int i = 0; i < 40; ++i) {
        const Vec x = point();
        c.add(x, 0.5 + 0.3 * std::sin(x(0) + 2 * x(17)));
    }
    surrogate::SurrogateStack s(o);
    s.fit(c);
    const double h = 1e-5;
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const Vec x = point();
        const Vec g = s.ucb_gradient(x);
        for (int i = 0; i < d; ++i) {
            Vec xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const double fd = (s.ucb(xp) - s.ucb(xm)) / (2 * h);
            worst = std::max(worst, std::abs(g(i) - fd) / std::max(1.0, std::max(std::abs(g(i)), std::abs(fd))));
        }
    }
    return {worst < 1e-4, "max rel err " + fmt(worst) + " over 100 points"};
}

search::RunConfig shipped_landscape() { return search::load_run_config(std::string(CODEBENCH_SOURCE_DIR) + "/configs/landscape.json"); }

Outcome ablations() {
    const auto rc = shipped_landscape();
    const auto& b = *rc.benchmark;
    const int seeds = 10, queries = 50;
    int wins[3] = {0, 0, 0}, losses[3] = {0, 0, 0};
    for (int s = 0; s < seeds; ++s) {
        auto base = rc.setup;
        base.seed = 1000 + static_cast<std::uint64_t>(s);
        base.policy.budget = queries;
        auto first = base, nohet = base;
        first.gobi.second_order = false;
        nohet.surrogate.heteroscedastic = false;
        const double full = b.best_found(search::boshcode_run(base).trace);
        Rng rng(derive_seed(base.seed, 0x5a));
        auto pts = b.points;
        std::shuffle(pts.begin(), pts.end(), rng);
        double rand = 0;
        for (int i = 0; i < queries; ++i) rand = std::max(rand, b.true_performance(pts[static_cast<std::size_t>(i)]));
        const double other[3] = {b.best_found(search::boshcode_run(first).trace), b.best_found(search::boshcode_run(nohet).trace), rand};
        for (int k = 0; k < 3; ++k) {
            wins[k] += full > other[k];
            losses[k] += full < other[k];
        }
    }
    const char* names[3] = {"no-second-order", "no-heteroscedastic", "random"};
    bool pass = true;
    std::string detail;
    for (int k = 0; k < 3; ++k) {
        const double p = sign_test_p(wins[k], losses[k]);
        pass = pass && p < 0.05;
        detail += std::string(k ? "; " : "") + "vs " + names[k] + " " + std::to_string(wins[k]) + "W/" + std::to_string(losses[k]) + "L p=" + fmt(p);
    }
    return {pass, detail};
}

Outcome codesign_beats_one_sided() {
    const auto rc = shipped_landscape();
    const auto& b = *rc.benchmark;
    const int seeds = 10;
    double sum[3] = {0, 0, 0};
    int strict[3] = {0, 0, 0};
    for (int s = 0; s < seeds; ++s) {
        double v[3];
        for (int m = 0; m < 3; ++m) {
            auto setup = rc.setup;
            setup.seed = 2000 + static_cast<std::uint64_t>(s);
            setup.mode = m == 0 ? search::Mode::codesign : m == 1 ? search::Mode::fix_cnn : search::Mode::fix_accel;
            v[m] = b.best_found(search::boshcode_run(setup).trace);
            sum[m] += v[m];
        }
        strict[1] += v[0] > v[1];
        strict[2] += v[0] > v[2];
    }
    const bool pass = sum[0] >= sum[1] && sum[0] >= sum[2] && strict[1] >= 8 && strict[2] >= 8;
    return {pass, "mean codesign " + fmt(sum[0] / seeds) + ", fix-cnn " + fmt(sum[1] / seeds) + " (strict " + std::to_string(strict[1]) +
                      "/10), fix-accel " + fmt(sum[2] / seeds) + " (strict " + std::to_string(strict[2]) + "/10)"};
}

Outcome pareto_brute_force() {
    Rng rng(99);
    std::uniform_int_distribution<int> grid(1, 20);
    std::vector<search::PerfRecord> r;
    // accuracy grows with hardware cost, on a coarse grid so ties occur
    for (int i = 0; i < 200; ++i) {
        const int q = grid(rng);
        auto cost = [&](double unit) { return (q + grid(rng) % 4) * unit; };
        r.push_back({cost(0.5), cost(2.0), cost(0.1), cost(0.01), (q + grid(rng) % 3) / 23.0});
    }
    std::string detail;
    bool pass = true;
    for (auto o : {search::HwObjective::area, search::HwObjective::energy, search::HwObjective::latency, search::HwObjective::edp}) {
        std::vector<double> acc, cost;
        for (const auto& x : r) {
            acc.push_back(x.accuracy);
            cost.push_back(search::objective_value(x, o));
        }
        auto got = search::pareto_front(r, o), want = oracle::pareto_brute_force(acc, cost);
        std::sort(got.begin(), got.end());
        std::sort(want.begin(), want.end());
        pass = pass && got == want;
        detail += std::string(detail.empty() ? "" : ", ") + search::hw_objective_name(o) + " " + std::to_string(got.size()) + (got == want ? "=" : "!=") +
                  std::to_string(want.size());
    }
    return {pass, detail};
}

Outcome worked_performance() {
    const double p = search::performance_normalised(0.5, 0.5, 0.5, 0.5, 0.9, search::PerfWeights{0.2, 0.1, 0.2, 0.2, 0.3});
    return {std::abs(p - 0.62) <= 1e-12, "performance " + fmt(p)};
}

Outcome simulator_sanity() {
    const auto k = accel::CostConstants::load_default();
    const auto g = cnn::toy_cnn();
    const auto spring = accel::find_preset(accel::load_presets(), "SPRING");
    auto latency = [&](accel::MemType t, int cfg) {
        auto c = spring.config;
        c.mem_type = t;
        c.mem_config = cfg;
        return accel::simulate(g, c, k).perf.latency_ms;
    };
    auto extreme = [&](accel::MemType t, bool want_max) {
        double v = want_max ? 0 : 1e300;
        for (std::size_t i = 0; i < k.memory.at(t).configs.size(); ++i) {
            const double l = latency(t, static_cast<int>(i));
            v = want_max ? std::max(v, l) : std::min(v, l);
        }
        return v;
    };
    const double rram = extreme(accel::MemType::rram, true), hbm_lo = extreme(accel::MemType::hbm, false),
                 hbm_hi = extreme(accel::MemType::hbm, true), dram = extreme(accel::MemType::dram, false);
    const bool order = rram <= hbm_lo && hbm_hi <= dram;

    auto c = spring.config;
    c.p_of = 4;
    accel::LayerShape L;
    L.name = "conv3x3";
    L.n_ib = c.p_ib;
    L.n_if = 64;
    L.n_ix = L.n_ox = 16;
    L.n_iy = L.n_oy = 16;
    L.n_of = 64;
    L.n_kx = L.n_ky = 3;
    L.in_elems = static_cast<double>(L.n_ib) * L.n_if * L.n_ix * L.n_iy;
    L.out_elems = static_cast<double>(L.n_ib) * L.n_of * L.n_ox * L.n_oy;
    L.weight_elems = static_cast<double>(L.n_of) * L.n_if * L.n_kx * L.n_ky;
    const double m1 = accel::simulate_layer(L, c, k, accel::buffer_capacity(c, k)).mac_cycles;
    c.p_of = 8;
    const double m2 = accel::simulate_layer(L, c, k, accel::buffer_capacity(c, k)).mac_cycles;
    const bool halves = m2 == 0.5 * m1;

    const int pes = spring.config.pe_count(), macs = spring.config.mac_units_per_pe();
    const bool spring_ok = pes == 64 && macs == 72 && pes * macs == 4608;
    return {order && halves && spring_ok, "latency ms RRAM " + fmt(rram) + " <= HBM " + fmt(hbm_lo) + " <= DRAM " + fmt(dram) + "; MAC-cycles " +
                                              fmt(m1) + " -> " + fmt(m2) + "; SPRING " + std::to_string(pes) + " PEs x " + std::to_string(macs) +
                                              " MACs = " + std::to_string(pes * macs)};
}

}  // namespace

int main(int argc, char** argv) {
    // a criterion number restricts the run to that criterion
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    auto want = [&](int id) { return only == 0 || only == id; };
    if (want(1)) run(1, "accelerator space cardinality", 1, cardinality);
    if (want(2)) run(2, "stochastic rounding frequency and bias", 5, stochastic_rounding);
    if (want(3)) run(3, "GED equals brute force", 60, ged_brute_force);
    if (want(4)) run(4, "hash detects exactly the isomorphisms", 120, hash_isomorphism);
    if (want(5)) run(5, "embedding stress and rank correlation", 300, embedding_quality);
    if (want(6)) run(6, "UCB input gradient vs central differences", 30, ucb_gradient);
    if (want(7)) run(7, "full search beats its ablations", 1200, ablations);
    if (want(8)) run(8, "codesign beats one-sided search", 1800, codesign_beats_one_sided);
    if (want(9)) run(9, "Pareto front equals brute force", 5, pareto_brute_force);
    if (want(10)) run(10, "weighted performance example", 1, worked_performance);
    if (want(11)) run(11, "simulator orderings and SPRING shape", 10, simulator_sanity);
    return failures == 0 ? 0 : 1;
}
