#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"
#include "codebench/sha256.hpp"

#ifndef CODEBENCH_VERSION
#define CODEBENCH_VERSION "0.0.0-unknown"
#endif

namespace codebench::cli {

enum ExitCode : int { ok = 0, usage = 1, budget_exhausted = 2, infeasible = 3 };

/// Record of one CLI invocation: what was consumed, what was written and how
/// long each phase took.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;
    std::string config_path;
    std::string config_checksum;  // sha256 of the config file bytes
    std::uint64_t seed = 0;
    std::string version = CODEBENCH_VERSION;
    std::map<std::string, double> timings_s;
    std::vector<std::string> outputs;
    int exit_code = 0;
    std::string error;

    void consume_config(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw LookupError("cannot open config " + path);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        config_path = path;
        config_checksum = sha256_hex(bytes);
    }

    void output(const std::string& path) {
        if (std::find(outputs.begin(), outputs.end(), path) == outputs.end()) outputs.push_back(path);
    }

    nlohmann::json to_json() const {
        return {{"command", command},   {"args", args},         {"config", {{"path", config_path}, {"sha256", config_checksum}}},
                {"seed", seed},         {"version", version},   {"timings_s", timings_s},
                {"outputs", outputs},   {"exit_code", exit_code}, {"error", error}};
    }

    void write(const std::string& path) const {
        const auto dir = std::filesystem::path(path).parent_path();
        if (!dir.empty()) std::filesystem::create_directories(dir);
        std::ofstream f(path);
        if (!f) throw LookupError("cannot write manifest " + path);
        f << to_json().dump(2) << '\n';
    }
};

/// Adds the wall time of its lifetime to a manifest entry.
class PhaseTimer {
public:
    PhaseTimer(RunManifest& m, std::string name) : m_(m), name_(std::move(name)), t0_(std::chrono::steady_clock::now()) {}
    ~PhaseTimer() { m_.timings_s[name_] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }
    PhaseTimer(const PhaseTimer&) = delete;
    PhaseTimer& operator=(const PhaseTimer&) = delete;

private:
    RunManifest& m_;
    std::string name_;
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace codebench::cli
