#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "codebench/accel_sim/constants.hpp"
#include "codebench/common.hpp"

namespace codebench::eval {

/// Per-recipe accuracies of one architecture.
struct TabularEntry {
    std::map<int, double> samples;  // recipe id -> accuracy

    double mean() const {
        double s = 0;
        for (const auto& [id, a] : samples) s += a;
        return s / static_cast<double>(samples.size());
    }

    bool operator==(const TabularEntry&) const = default;
};

/// CSV `digest,recipe_id,accuracy` with a JSON metadata sidecar
/// (`<name>.json` next to `<name>.csv`).
class TabularBenchmark {
public:
    std::map<std::string, TabularEntry> entries;
    nlohmann::json metadata = nlohmann::json::object();

    std::size_t size() const { return entries.size(); }

    const TabularEntry& entry(const std::string& digest) const {
        auto it = entries.find(digest);
        if (it == entries.end()) throw LookupError("benchmark has no entry for digest " + digest);
        return it->second;
    }

    double accuracy(const std::string& digest, int recipe_id) const {
        const auto& e = entry(digest);
        auto it = e.samples.find(recipe_id);
        if (it == e.samples.end()) throw LookupError("benchmark entry " + digest + " has no recipe " + std::to_string(recipe_id));
        return it->second;
    }

    /// Accuracy of a seeded choice among the entry's recipes.
    double sample(const std::string& digest, std::uint64_t seed) const {
        const auto& e = entry(digest);
        auto it = e.samples.begin();
        std::advance(it, static_cast<long>(mix_seed(seed) % e.samples.size()));
        return it->second;
    }

    static std::string sidecar_path(const std::string& csv_path) {
        return std::filesystem::path(csv_path).replace_extension(".json").string();
    }

    static TabularBenchmark parse(std::istream& in, const std::string& source = "<stream>") {
        TabularBenchmark t;
        std::string line;
        std::size_t lineno = 0;
        bool header = false;
        auto fail = [&](const std::string& what) { return ParseError(source + ":" + std::to_string(lineno) + ": " + what); };
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (!header) {
                if (line != "digest,recipe_id,accuracy") throw fail("expected header 'digest,recipe_id,accuracy'");
                header = true;
                continue;
            }
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.size() != 3 || cells[0].empty()) throw fail("expected three comma-separated fields");
            int recipe = 0;
            double acc = 0;
            try {
                std::size_t used = 0;
                recipe = std::stoi(cells[1], &used);
                if (used != cells[1].size()) throw std::invalid_argument("trailing");
                acc = std::stod(cells[2], &used);
                if (used != cells[2].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw fail("malformed recipe id or accuracy");
            }
            if (!(acc >= 0.0 && acc <= 1.0))
                throw ValidationError(source + ":" + std::to_string(lineno) + ": accuracy " + cells[2] + " outside [0, 1]");
            if (!t.entries[cells[0]].samples.emplace(recipe, acc).second)
                throw ValidationError(source + ":" + std::to_string(lineno) + ": duplicate row for digest " + cells[0] + " recipe " + cells[1]);
        }
        if (!header) throw ParseError(source + ": empty benchmark file");
        if (t.entries.empty()) throw ParseError(source + ": benchmark file has no rows");
        return t;
    }

    static TabularBenchmark load(const std::string& csv_path) {
        std::ifstream in(csv_path);
        if (!in) throw LookupError("cannot open benchmark file " + csv_path);
        auto t = parse(in, csv_path);
        std::ifstream side(sidecar_path(csv_path));
        if (side) {
            try {
                side >> t.metadata;
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(sidecar_path(csv_path) + ": " + e.what());
            }
        }
        return t;
    }

    void save(const std::string& csv_path) const {
        std::ofstream out(csv_path);
        if (!out) throw Error("cannot write " + csv_path);
        out.precision(17);
        out << "digest,recipe_id,accuracy\n";
        for (const auto& [d, e] : entries)
            for (const auto& [id, a] : e.samples) out << d << ',' << id << ',' << a << '\n';
        std::ofstream side(sidecar_path(csv_path));
        side << metadata.dump(2) << '\n';
    }
};

/// Benchmark directory: CODEBENCH_BENCHMARK_DIR, else <data dir>/benchmarks.
inline std::string benchmark_dir() {
    if (const char* env = std::getenv("CODEBENCH_BENCHMARK_DIR"); env && *env) return env;
    return data_dir() + "/benchmarks";
}

inline TabularBenchmark load_benchmark(const std::string& name) { return TabularBenchmark::load(benchmark_dir() + "/" + name + ".csv"); }

}  // namespace codebench::eval
