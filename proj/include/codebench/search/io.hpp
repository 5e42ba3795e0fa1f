#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/search/boshcode.hpp"

namespace codebench::search {

inline const std::vector<std::string>& trace_columns() {
    static const std::vector<std::string> cols = {
        "iteration", "level",      "branch",     "attempt",     "failed",       "digest",     "P_ib",       "P_if",
        "P_ix",      "P_iy",       "P_of",       "P_kx",        "P_ky",         "batch",      "act_buf_mb", "wgt_buf_mb",
        "mask_buf_mb", "mem_type", "mem_config", "latency_ms",  "area_mm2",     "e_dyn_mJ",   "e_leak_mJ",  "accuracy",
        "edp",       "performance", "cost",      "transferred", "early_stopped", "lr",        "beta1",      "weight_decay",
        "note"};
    return cols;
}

namespace detail {

// notes are free text; keep them on one line and out of the separators
inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
    return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace) {
    const auto& cols = trace_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    os << std::setprecision(17);
    for (const auto& e : trace) {
        const auto& c = e.pair.config;
        os << e.iteration << ',' << e.level << ',' << e.branch << ',' << e.attempt << ',' << (e.failed ? 1 : 0) << ',' << e.pair.digest << ','
           << c.p_ib << ',' << c.p_if << ',' << c.p_ix << ',' << c.p_iy << ',' << c.p_of << ',' << c.p_kx << ',' << c.p_ky << ',' << c.batch
           << ',' << c.act_buf_mb << ',' << c.wgt_buf_mb << ',' << c.mask_buf_mb << ',' << accel::mem_type_name(c.mem_type) << ','
           << c.mem_config << ',' << e.perf.latency_ms << ',' << e.perf.area_mm2 << ',' << e.perf.e_dyn_mJ << ',' << e.perf.e_leak_mJ << ','
           << e.perf.accuracy << ',' << e.perf.edp() << ',' << e.performance << ',' << e.cost << ',' << (e.transferred ? 1 : 0) << ','
           << (e.early_stopped ? 1 : 0) << ',' << e.recipe.lr << ',' << e.recipe.beta1 << ',' << e.recipe.weight_decay << ','
           << detail::sanitize(e.note) << '\n';
    }
}

/// Reads a trace written by write_trace_csv. Only the columns present in the
/// header are used; missing ones keep their defaults.
inline std::vector<TraceEntry> read_trace_csv(std::istream& is, const std::string& source = "<trace>") {
    std::string line;
    if (!std::getline(is, line)) throw ParseError(source + ": empty trace");
    const auto header = detail::split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"latency_ms", "area_mm2", "e_dyn_mJ", "e_leak_mJ", "accuracy"})
        if (!col.count(need)) throw ParseError(source + ":1: missing column '" + need + "'");
    std::vector<TraceEntry> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() != header.size()) throw ParseError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
        auto at = [&](const char* name) -> const std::string* {
            auto it = col.find(name);
            return it == col.end() ? nullptr : &f[it->second];
        };
        auto num = [&](const char* name, double& dst) {
            if (const auto* s = at(name)) {
                try {
                    std::size_t used = 0;
                    dst = std::stod(*s, &used);
                    if (used != s->size()) throw std::invalid_argument(*s);
                } catch (const std::exception&) {
                    throw ParseError(source + ":" + std::to_string(lineno) + ": bad number in column '" + name + "'");
                }
            }
        };
        auto integer = [&](const char* name, int& dst) {
            double v = dst;
            num(name, v);
            dst = static_cast<int>(v);
        };
        TraceEntry e;
        double level = 1;
        integer("iteration", e.iteration);
        num("level", level);
        e.level = static_cast<std::size_t>(level);
        if (const auto* s = at("branch")) e.branch = *s;
        integer("attempt", e.attempt);
        int flag = 0;
        integer("failed", flag);
        e.failed = flag != 0;
        if (const auto* s = at("digest")) e.pair.digest = *s;
        auto& c = e.pair.config;
        integer("P_ib", c.p_ib);
        integer("P_if", c.p_if);
        integer("P_ix", c.p_ix);
        integer("P_iy", c.p_iy);
        integer("P_of", c.p_of);
        integer("P_kx", c.p_kx);
        integer("P_ky", c.p_ky);
        integer("batch", c.batch);
        integer("act_buf_mb", c.act_buf_mb);
        integer("wgt_buf_mb", c.wgt_buf_mb);
        integer("mask_buf_mb", c.mask_buf_mb);
        if (const auto* s = at("mem_type")) c.mem_type = accel::mem_type_from_name(*s);
        integer("mem_config", c.mem_config);
        num("latency_ms", e.perf.latency_ms);
        num("area_mm2", e.perf.area_mm2);
        num("e_dyn_mJ", e.perf.e_dyn_mJ);
        num("e_leak_mJ", e.perf.e_leak_mJ);
        num("accuracy", e.perf.accuracy);
        num("performance", e.performance);
        num("cost", e.cost);
        flag = 0;
        integer("transferred", flag);
        e.transferred = flag != 0;
        flag = 0;
        integer("early_stopped", flag);
        e.early_stopped = flag != 0;
        num("lr", e.recipe.lr);
        num("beta1", e.recipe.beta1);
        num("weight_decay", e.recipe.weight_decay);
        if (const auto* s = at("note")) e.note = *s;
        if (!e.failed) {
            try {
                e.perf.check();
            } catch (const ValidationError& err) {
                throw ValidationError(source + ":" + std::to_string(lineno) + ": " + err.what());
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<TraceEntry> load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot open trace " + path);
    return read_trace_csv(in, path);
}

/// Successful records of a trace, in trace order.
inline std::vector<PerfRecord> trace_records(const std::vector<TraceEntry>& trace) {
    std::vector<PerfRecord> out;
    for (const auto& e : trace)
        if (!e.failed) out.push_back(e.perf);
    return out;
}

inline nlohmann::json summary_json(const SearchResult& r, Mode mode) {
    double charged = 0;
    int failed = 0, transferred = 0, early = 0;
    std::map<std::string, int> branches;
    for (const auto& e : r.trace) {
        charged += e.cost;
        failed += e.failed;
        transferred += e.transferred;
        early += e.early_stopped;
        ++branches[e.branch];
    }
    return {{"mode", mode_name(mode)},
            {"best", {{"digest", r.best.digest}, {"accel", accel::to_json(r.best.config)}, {"perf", to_json(r.best_perf)},
                      {"performance", r.best_performance}}},
            {"converged", r.converged},
            {"exhausted", r.exhausted},
            {"levels_completed", r.levels_completed},
            {"evaluations", r.evaluations},
            {"failed", failed},
            {"branches", branches},
            {"maxima", to_json(r.maxima)},
            {"cost", {{"total", r.total_cost}, {"sum_of_entries", charged}, {"transferred", transferred}, {"early_stopped", early}}}};
}

}  // namespace codebench::search
