#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "codebench/accel_space/presets.hpp"
#include "codebench/cli/manifest.hpp"
#include "codebench/search/config.hpp"
#include "codebench/search/io.hpp"

namespace cb = codebench;
using cb::cli::ExitCode;

namespace {

cb::accel::AcceleratorConfig parse_accel(const std::string& spec, const cb::accel::AccelSpace& space) {
    if (spec.find(',') == std::string::npos) return cb::accel::find_preset(cb::accel::load_presets(), spec).config;
    cb::accel::AccelEmbedding x{};
    std::stringstream ss(spec);
    std::string tok;
    std::size_t i = 0;
    while (std::getline(ss, tok, ',')) {
        if (i == x.size()) throw cb::ParameterError("accelerator vector needs exactly " + std::to_string(x.size()) + " coordinates");
        try {
            x[i++] = std::stod(tok);
        } catch (const std::exception&) {
            throw cb::ParameterError("bad accelerator coordinate '" + tok + "'");
        }
    }
    if (i != x.size()) throw cb::ParameterError("accelerator vector needs exactly " + std::to_string(x.size()) + " coordinates");
    const auto d = space.decode(x);
    if (d.clamped) std::cerr << "note: coordinates outside [0, 1] were clamped\n";
    return d.config;
}

cb::accel::AccelSpace space_from_file(const std::string& path) {
    return path.empty() ? cb::accel::AccelSpace{} : cb::search::accel_space_from_json(cb::search::read_json_file(path));
}

void write_text(const std::string& path, const std::string& text, cb::cli::RunManifest& m) {
    const auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::ofstream f(path);
    if (!f) throw cb::LookupError("cannot write " + path);
    f << text;
    m.output(path);
}

// Plot-ready per-iteration table: running best and the raw objectives.
nlohmann::json export_rows(const std::vector<cb::search::TraceEntry>& trace) {
    nlohmann::json rows = nlohmann::json::array();
    double best = 0;
    for (const auto& e : trace) {
        if (!e.failed) best = std::max(best, e.performance);
        rows.push_back({{"iteration", e.iteration},
                        {"branch", e.branch},
                        {"failed", e.failed},
                        {"performance", e.performance},
                        {"best_so_far", best},
                        {"accuracy", e.perf.accuracy},
                        {"latency_ms", e.perf.latency_ms},
                        {"area_mm2", e.perf.area_mm2},
                        {"energy_mJ", e.perf.energy_mJ()},
                        {"edp", e.perf.edp()},
                        {"cost", e.cost}});
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    cb::cli::RunManifest manifest;
    for (int i = 1; i < argc; ++i) manifest.args.emplace_back(argv[i]);
    std::string manifest_path = "codebench-manifest.json";

    CLI::App app{"CNN-accelerator co-design benchmark"};
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides a run config)");
    auto* manifest_opt = app.add_option("--manifest", manifest_path, "Where to write the run manifest");

    // space
    auto* space = app.add_subcommand("space", "Inspect design spaces");
    space->require_subcommand(1);
    auto* space_accel = space->add_subcommand("accel", "Accelerator space");
    bool cardinality = false;
    int sample_n = 0;
    std::string space_file;
    auto* card_opt = space_accel->add_flag("--cardinality", cardinality, "Print the number of configurations");
    auto* sample_opt = space_accel->add_option("--sample", sample_n, "Print N seeded random configurations")->check(CLI::PositiveNumber);
    card_opt->excludes(sample_opt);
    space_accel->add_option("--space", space_file, "JSON overrides of the value lists")->check(CLI::ExistingFile);
    auto* space_cnn = space->add_subcommand("cnn", "CNN space");
    bool enumerate = false;
    std::size_t level = 1, limit = 20;
    space_cnn->add_flag("--enumerate", enumerate, "List graph digests")->required();
    space_cnn->add_option("--level", level, "Hierarchy level")->required();
    space_cnn->add_option("--limit", limit, "Number of graphs to list");

    // embed
    auto* embed = app.add_subcommand("embed", "CNN2vec embeddings");
    embed->require_subcommand(1);
    auto* embed_train = embed->add_subcommand("train", "Sample graphs and train an embedding table");
    std::size_t embed_count = 20;
    int epochs = 2000;
    std::string embed_out, graphs_out, table_file, digest;
    embed_train->add_option("--level", level, "Hierarchy level");
    embed_train->add_option("--count", embed_count, "Number of distinct graphs")->check(CLI::PositiveNumber);
    embed_train->add_option("--epochs", epochs, "Training epochs");
    embed_train->add_option("--out", embed_out, "Embedding table (JSON)")->required();
    embed_train->add_option("--graphs", graphs_out, "Also write the sampled graphs (JSON)");
    auto* embed_inspect = embed->add_subcommand("inspect", "Summarise an embedding table");
    std::size_t k_nearest = 5;
    embed_inspect->add_option("--table", table_file, "Embedding table (JSON)")->required()->check(CLI::ExistingFile);
    embed_inspect->add_option("--digest", digest, "List the nearest neighbours of this digest");
    embed_inspect->add_option("--k", k_nearest, "Neighbours to list");

    // sim
    auto* sim = app.add_subcommand("sim", "Simulate one CNN on one accelerator");
    std::string cnn_file, accel_spec;
    sim->add_option("--cnn", cnn_file, "CNN graph (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--accel", accel_spec, "Preset name or 13 comma-separated coordinates in [0, 1]")->required();
    sim->add_option("--space", space_file, "JSON overrides for decoding coordinates")->check(CLI::ExistingFile);

    // search
    auto* search = app.add_subcommand("search", "Co-design search");
    search->require_subcommand(1);
    auto* search_run = search->add_subcommand("run", "Run a search from a config file");
    std::string config_file, mode_name, out_dir;
    search_run->add_option("--config", config_file, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    search_run->add_option("--mode", mode_name, "codesign, fix-cnn or fix-accel")->check(CLI::IsMember({"codesign", "fix-cnn", "fix-accel"}));
    search_run->add_option("--out", out_dir, "Output directory (overrides the config)");

    // pareto
    auto* pareto = app.add_subcommand("pareto", "Accuracy/objective Pareto front of a trace");
    std::string trace_file, objective = "latency";
    pareto->add_option("--trace", trace_file, "Trace CSV")->required()->check(CLI::ExistingFile);
    pareto->add_option("--objective", objective, "latency, area, energy or edp")->check(CLI::IsMember({"latency", "area", "energy", "edp"}));

    // export
    auto* exp = app.add_subcommand("export", "Plot-ready table of a trace");
    std::string format = "csv", export_out;
    exp->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    exp->add_option("--trace", trace_file, "Trace CSV")->required()->check(CLI::ExistingFile);
    exp->add_option("--out", export_out, "Output file (default: stdout)");

    auto finish = [&](int code) {
        manifest.exit_code = code;
        try {
            manifest.write(manifest_path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
        }
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return 0;  // --help
        manifest.command = "usage";
        manifest.error = e.what();
        return finish(ExitCode::usage);
    }

    manifest.seed = seed;
    for (const auto* sub : app.get_subcommands()) {
        manifest.command = sub->get_name();
        for (const auto* inner : sub->get_subcommands()) manifest.command += " " + inner->get_name();
    }

    int code = ExitCode::ok;
    try {
        cb::cli::PhaseTimer total(manifest, "total");
        if (*space_accel) {
            const auto s = space_from_file(space_file);
            if (cardinality || !*sample_opt) {
                std::cout << s.cardinality() << '\n';
            } else {
                cb::Rng rng(cb::mix_seed(seed));
                for (int i = 0; i < sample_n; ++i) std::cout << cb::accel::to_json(s.sample(rng)).dump() << '\n';
            }
        } else if (*space_cnn) {
            const auto ls = cb::cnn::LevelSpace::for_level(cb::cnn::CnnSpaceConfig{}, level);
            std::cout << "level " << level << " stack_size " << ls.stack_size() << " graphs " << static_cast<std::uint64_t>(ls.size()) << '\n';
            const auto n = std::min<std::uint64_t>(limit, static_cast<std::uint64_t>(ls.size()));
            for (std::uint64_t i = 0; i < n; ++i) {
                const auto g = ls.graph(i);
                std::cout << i << ' ' << cb::search::graph_digest(g) << ' ' << g.modules.size() << " modules\n";
            }
        } else if (*embed_train) {
            cb::Rng rng(cb::derive_seed(seed, 1));
            const auto graphs = cb::cnn::LevelSpace::for_level(cb::cnn::CnnSpaceConfig{}, level).sample_distinct(embed_count, rng);
            cb::cnn2vec::TrainOptions opt;
            opt.epochs = epochs;
            opt.seed = cb::derive_seed(seed, 2);
            cb::search::CnnCatalog cat;
            {
                cb::cli::PhaseTimer t(manifest, "train");
                cat = cb::search::catalog_from_graphs(graphs, opt);
            }
            cat.table.save(embed_out);
            manifest.output(embed_out);
            if (!graphs_out.empty()) {
                nlohmann::json gs = nlohmann::json::array();
                for (const auto& g : graphs) gs.push_back(cb::cnn::to_json(g));
                write_text(graphs_out, gs.dump(2) + "\n", manifest);
            }
            std::cout << "trained " << cat.table.size() << " embeddings (d = " << cat.table.dim() << ") -> " << embed_out << '\n';
        } else if (*embed_inspect) {
            const auto t = cb::cnn2vec::EmbeddingTable::load(table_file);
            std::cout << "entries " << t.size() << " dim " << t.dim() << '\n';
            if (!digest.empty()) {
                const auto ranked = t.ranked_by_distance(t.embed(digest));
                for (std::size_t i = 0; i < ranked.size() && i <= k_nearest; ++i)
                    if (ranked[i].second != digest) std::cout << ranked[i].second << ' ' << ranked[i].first << '\n';
            }
        } else if (*sim) {
            const auto g = cb::cnn::graph_from_json(cb::search::read_json_file(cnn_file));
            const auto space_for_decode = space_from_file(space_file);
            const auto c = parse_accel(accel_spec, space_for_decode);
            const auto k = cb::accel::CostConstants::load_default();
            const auto r = cb::accel::simulate(g, c, k).perf;
            nlohmann::json out = {{"accel", cb::accel::to_json(c)},
                                  {"latency_ms", r.latency_ms},
                                  {"area_mm2", r.area_mm2},
                                  {"e_dyn_mJ", r.e_dyn_mJ},
                                  {"e_leak_mJ", r.e_leak_mJ},
                                  {"edp", r.edp()}};
            std::cout << out.dump(2) << '\n';
        } else if (*search_run) {
            manifest.consume_config(config_file);
            auto raw = cb::search::read_json_file(config_file);
            if (!mode_name.empty()) raw["mode"] = mode_name;
            if (seed_opt->count()) raw["seed"] = seed;
            cb::search::RunConfig rc;
            {
                cb::cli::PhaseTimer t(manifest, "setup");
                rc = cb::search::run_config_from_json(raw, std::filesystem::path(config_file).parent_path());
            }
            manifest.seed = rc.seed;
            const std::string dir = out_dir.empty() ? rc.output_dir : out_dir;
            if (!manifest_opt->count()) manifest_path = dir + "/manifest.json";
            rc.setup.on_entry = [](const cb::search::TraceEntry& e) {
                std::cerr << "[" << e.iteration << "] " << e.branch << (e.failed ? " failed" : "") << " performance " << e.performance << '\n';
            };
            cb::search::SearchResult res;
            {
                cb::cli::PhaseTimer t(manifest, "search");
                res = cb::search::boshcode_run(rc.setup);
            }
            std::ostringstream trace;
            cb::search::write_trace_csv(trace, res.trace);
            write_text(dir + "/trace.csv", trace.str(), manifest);
            auto summary = cb::search::summary_json(res, rc.mode);
            summary["seed"] = rc.seed;
            if (rc.benchmark) summary["best"]["true_performance"] = rc.benchmark->true_performance(res.best);
            write_text(dir + "/summary.json", summary.dump(2) + "\n", manifest);
            std::cout << "best " << res.best.digest << ' ' << res.best.config.str() << " performance " << res.best_performance
                      << (res.converged ? " (converged)" : res.exhausted ? " (design space exhausted)" : " (budget exhausted)") << '\n';
            if (!res.converged) code = ExitCode::budget_exhausted;
        } else if (*pareto) {
            const auto trace = cb::search::load_trace_csv(trace_file);
            std::vector<const cb::search::TraceEntry*> ok;
            for (const auto& e : trace)
                if (!e.failed) ok.push_back(&e);
            if (ok.empty()) throw cb::ValidationError("trace has no successful records");
            std::vector<cb::search::PerfRecord> recs;
            for (const auto* e : ok) recs.push_back(e->perf);
            const auto o = cb::search::hw_objective_from_name(objective);
            std::cout << "iteration,digest,accuracy," << objective << '\n';
            for (std::size_t i : cb::search::pareto_front(recs, o))
                std::cout << ok[i]->iteration << ',' << ok[i]->pair.digest << ',' << recs[i].accuracy << ',' << cb::search::objective_value(recs[i], o)
                          << '\n';
        } else if (*exp) {
            const auto rows = export_rows(cb::search::load_trace_csv(trace_file));
            std::ostringstream os;
            if (format == "json") {
                os << rows.dump(2) << '\n';
            } else {
                os << "iteration,branch,failed,performance,best_so_far,accuracy,latency_ms,area_mm2,energy_mJ,edp,cost\n";
                for (const auto& r : rows)
                    os << r["iteration"] << ',' << r["branch"].get<std::string>() << ',' << (r["failed"].get<bool>() ? 1 : 0) << ','
                       << r["performance"] << ',' << r["best_so_far"] << ',' << r["accuracy"] << ',' << r["latency_ms"] << ','
                       << r["area_mm2"] << ',' << r["energy_mJ"] << ',' << r["edp"] << ',' << r["cost"] << '\n';
            }
            if (export_out.empty()) std::cout << os.str();
            else write_text(export_out, os.str(), manifest);
        }
    } catch (const cb::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        manifest.error = e.what();
        return finish(ExitCode::infeasible);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        manifest.error = e.what();
        return finish(ExitCode::usage);
    }
    return finish(code);
}
