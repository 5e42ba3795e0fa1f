#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "codebench/accel_sim/constants.hpp"
#include "codebench/evaluators/tabular.hpp"
#include "codebench/search/benchmark.hpp"

namespace codebench::search {

/// Applies list overrides ({"p_ix": [1, 2], "mem_types": ["RRAM"], ...}) to a space.
inline accel::AccelSpace accel_space_from_json(const nlohmann::json& j, accel::AccelSpace s = {}) {
    auto ints = [&](const char* key, std::vector<int>& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::vector<int>>();
    };
    ints("p_ib", s.p_ib);
    ints("p_if", s.p_if);
    ints("p_ix", s.p_ix);
    ints("p_iy", s.p_iy);
    ints("p_of", s.p_of);
    ints("p_k", s.p_k);
    ints("batch", s.batch);
    ints("act_buf_mb", s.act_buf_mb);
    ints("wgt_buf_mb", s.wgt_buf_mb);
    ints("mask_buf_mb", s.mask_buf_mb);
    if (j.contains("mem_types")) {
        s.mem_types.clear();
        for (const auto& t : j.at("mem_types")) s.mem_types.push_back(accel::mem_type_from_name(t.get<std::string>()));
        s.mem_config_subsets.clear();
    }
    if (j.contains("mem_config_subsets")) s.mem_config_subsets = j.at("mem_config_subsets").get<std::vector<std::vector<int>>>();
    s.check();
    return s;
}

inline SearchPolicy search_policy_from_json(const nlohmann::json& j, SearchPolicy p = {}) {
    p.alpha_p = j.value("alpha_p", p.alpha_p);
    p.beta_p = j.value("beta_p", p.beta_p);
    p.conv_tol = j.value("conv_tol", p.conv_tol);
    p.conv_window = j.value("conv_window", p.conv_window);
    p.run_to_budget = j.value("run_to_budget", p.run_to_budget);
    p.initial_samples = j.value("initial_samples", p.initial_samples);
    p.budget = j.value("budget", p.budget);
    p.workers = j.value("workers", p.workers);
    p.candidate_pool = j.value("candidate_pool", p.candidate_pool);
    p.neighbors = j.value("neighbors", p.neighbors);
    p.retries = j.value("retries", p.retries);
    p.check();
    return p;
}

inline nlohmann::json to_json(const SearchPolicy& p) {
    return {{"alpha_p", p.alpha_p},       {"beta_p", p.beta_p},     {"conv_tol", p.conv_tol},
            {"conv_window", p.conv_window}, {"run_to_budget", p.run_to_budget}, {"initial_samples", p.initial_samples},
            {"budget", p.budget},         {"workers", p.workers},   {"candidate_pool", p.candidate_pool},
            {"neighbors", p.neighbors},   {"retries", p.retries}};
}

/// A parsed run configuration plus everything it needs at run time.
struct RunConfig {
    nlohmann::json raw;
    std::string kind;  // "landscape" or "tabular"
    std::uint64_t seed = 0;
    Mode mode = Mode::codesign;
    std::optional<Benchmark> benchmark;
    CnnCatalog catalog;  // tabular runs
    std::shared_ptr<eval::PairEvaluator> evaluator;
    SearchSetup setup;
    std::string output_dir = "runs";
};

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

namespace detail {

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
    std::filesystem::path p(path);
    return p.is_absolute() || base.empty() ? p.string() : (base / p).string();
}

}  // namespace detail

/// Builds a run from its JSON description. Relative paths resolve against
/// `base` (the directory of the config file).
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    RunConfig rc;
    rc.raw = j;
    try {
        rc.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("mode")) rc.mode = mode_from_name(j.at("mode").get<std::string>());
        rc.output_dir = j.value("output_dir", rc.output_dir);
        const auto& prob = j.at("problem");
        rc.kind = prob.value("kind", std::string("landscape"));
        auto& s = rc.setup;
        const auto k = accel::CostConstants::load_default();
        if (rc.kind == "landscape") {
            BenchmarkSpec spec = benchmark_spec_from_json(prob);
            if (j.contains("accel_space")) spec.accel = accel_space_from_json(j.at("accel_space"), spec.accel);
            if (j.contains("weights")) spec.weights = perf_weights_from_json(j.at("weights"));
            rc.benchmark = make_benchmark(spec);
            s = benchmark_setup(*rc.benchmark, rc.seed);
            rc.evaluator = rc.benchmark->evaluator;
        } else if (rc.kind == "tabular") {
            auto table = std::make_shared<eval::TabularBenchmark>(
                prob.contains("path") ? eval::TabularBenchmark::load(detail::resolve(prob.at("path"), base))
                                      : eval::load_benchmark(prob.at("name").get<std::string>()));
            std::vector<cnn::ComputationalGraph> graphs;
            for (const auto& g : read_json_file(detail::resolve(prob.at("graphs"), base))) graphs.push_back(cnn::graph_from_json(g));
            cnn2vec::TrainOptions opt;
            opt.epochs = prob.value("embedding_epochs", opt.epochs);
            opt.seed = derive_seed(rc.seed, 2);
            rc.catalog = catalog_from_graphs(graphs, opt);
            for (const auto& [d, g] : rc.catalog.graphs) table->entry(d);  // every graph must be tabulated
            rc.evaluator = std::make_shared<eval::PairEvaluator>(eval::tabular_oracle(table), k);
            s.accel_space = j.contains("accel_space") ? accel_space_from_json(j.at("accel_space")) : accel::AccelSpace{};
            s.provider = fixed_provider(rc.catalog);
            auto ev = rc.evaluator;
            s.evaluate = [ev](const eval::EvalRequest& r) { return (*ev)(r); };
            if (j.contains("weights")) s.weights = perf_weights_from_json(j.at("weights"));
        } else {
            throw ParameterError("unknown problem kind '" + rc.kind + "' (landscape, tabular)");
        }
        s.seed = rc.seed;
        s.mode = rc.mode;
        if (j.contains("policy")) s.policy = search_policy_from_json(j.at("policy"));
        if (j.contains("maxima")) s.fixed_maxima = maxima_from_json(j.at("maxima"));
        if (j.contains("surrogate")) s.surrogate = surrogate::surrogate_options_from_json(j.at("surrogate"));
        if (j.contains("gobi")) s.gobi = gobi::gobi_config_from_json(j.at("gobi"), s.gobi);
        s.tau_wt = j.value("tau_wt", s.tau_wt);
        if (j.contains("fixed_cnn")) s.fixed_cnn = j.at("fixed_cnn").get<std::string>();
        if (j.contains("fixed_accel")) s.fixed_accel = accel::accel_from_json(j.at("fixed_accel"));
        if (j.contains("constraints")) {
            const auto& c = j.at("constraints");
            if (c.contains("max_area_mm2")) s.constraints.items.push_back(gobi::max_area(c.at("max_area_mm2").get<double>(), k));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed run config: ") + e.what());
    }
    return rc;
}

inline RunConfig load_run_config(const std::string& path) {
    return run_config_from_json(read_json_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace codebench::search
