#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/accel_sim/simulator.hpp"
#include "codebench/common.hpp"

namespace codebench::search {

/// Hardware measurements of a pair plus the CNN's accuracy.
struct PerfRecord {
    double latency_ms = 0;
    double area_mm2 = 0;
    double e_dyn_mJ = 0;
    double e_leak_mJ = 0;
    double accuracy = 0;

    static PerfRecord from(const accel::PerfRecord& hw, double accuracy) {
        return {hw.latency_ms, hw.area_mm2, hw.e_dyn_mJ, hw.e_leak_mJ, accuracy};
    }

    double energy_mJ() const { return e_dyn_mJ + e_leak_mJ; }
    double edp() const { return energy_mJ() * latency_ms; }

    void check() const {
        for (double v : {latency_ms, area_mm2, e_dyn_mJ, e_leak_mJ})
            if (!(v >= 0) || !std::isfinite(v)) throw ValidationError("performance components must be finite and non-negative");
        if (!(accuracy >= 0 && accuracy <= 1)) throw ValidationError("accuracy must lie in [0, 1]");
    }
};

inline nlohmann::json to_json(const PerfRecord& r) {
    return {{"latency_ms", r.latency_ms}, {"area_mm2", r.area_mm2}, {"e_dyn_mJ", r.e_dyn_mJ}, {"e_leak_mJ", r.e_leak_mJ}, {"accuracy", r.accuracy}};
}

inline PerfRecord perf_record_from_json(const nlohmann::json& j) {
    return {j.at("latency_ms"), j.at("area_mm2"), j.at("e_dyn_mJ"), j.at("e_leak_mJ"), j.at("accuracy")};
}

/// Normalisation maxima for the hardware components.
struct Maxima {
    double latency_ms = 0;
    double area_mm2 = 0;
    double e_dyn_mJ = 0;
    double e_leak_mJ = 0;

    void update(const PerfRecord& r) {
        latency_ms = std::max(latency_ms, r.latency_ms);
        area_mm2 = std::max(area_mm2, r.area_mm2);
        e_dyn_mJ = std::max(e_dyn_mJ, r.e_dyn_mJ);
        e_leak_mJ = std::max(e_leak_mJ, r.e_leak_mJ);
    }

    void check() const {
        if (!(latency_ms > 0 && area_mm2 > 0 && e_dyn_mJ > 0 && e_leak_mJ > 0)) throw ParameterError("normalisation maxima must be positive");
    }
};

inline nlohmann::json to_json(const Maxima& m) {
    return {{"latency_ms", m.latency_ms}, {"area_mm2", m.area_mm2}, {"e_dyn_mJ", m.e_dyn_mJ}, {"e_leak_mJ", m.e_leak_mJ}};
}

inline Maxima maxima_from_json(const nlohmann::json& j) { return {j.at("latency_ms"), j.at("area_mm2"), j.at("e_dyn_mJ"), j.at("e_leak_mJ")}; }

/// Convex weights of latency, area, dynamic energy, leakage energy and accuracy.
struct PerfWeights {
    double alpha = 0.2;
    double beta = 0.1;
    double gamma = 0.2;
    double delta = 0.2;
    double epsilon = 0.3;

    void check() const {
        for (double w : {alpha, beta, gamma, delta, epsilon})
            if (!(w >= 0)) throw ParameterError("performance weights must be non-negative");
        if (std::abs(alpha + beta + gamma + delta + epsilon - 1.0) > 1e-9) throw ParameterError("performance weights must sum to 1");
    }
};

inline nlohmann::json to_json(const PerfWeights& w) {
    return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"delta", w.delta}, {"epsilon", w.epsilon}};
}

inline PerfWeights perf_weights_from_json(const nlohmann::json& j) {
    PerfWeights w;
    w.alpha = j.value("alpha", w.alpha);
    w.beta = j.value("beta", w.beta);
    w.gamma = j.value("gamma", w.gamma);
    w.delta = j.value("delta", w.delta);
    w.epsilon = j.value("epsilon", w.epsilon);
    w.check();
    return w;
}

/// Weighted score of already-normalised components (each clamped to [0, 1]).
inline double performance_normalised(double latency, double area, double e_dyn, double e_leak, double accuracy, const PerfWeights& w) {
    w.check();
    auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return w.alpha * (1 - c(latency)) + w.beta * (1 - c(area)) + w.gamma * (1 - c(e_dyn)) + w.delta * (1 - c(e_leak)) + w.epsilon * c(accuracy);
}

inline double performance(const PerfRecord& r, const PerfWeights& w, const Maxima& m) {
    m.check();
    return performance_normalised(r.latency_ms / m.latency_ms, r.area_mm2 / m.area_mm2, r.e_dyn_mJ / m.e_dyn_mJ, r.e_leak_mJ / m.e_leak_mJ,
                                  r.accuracy, w);
}

// Pareto fronts ---------------------------------------------------------------

enum class HwObjective { latency, area, energy, edp };

inline HwObjective hw_objective_from_name(const std::string& s) {
    if (s == "latency") return HwObjective::latency;
    if (s == "area") return HwObjective::area;
    if (s == "energy") return HwObjective::energy;
    if (s == "edp") return HwObjective::edp;
    throw ParameterError("unknown objective '" + s + "' (latency, area, energy, edp)");
}

inline const char* hw_objective_name(HwObjective o) {
    switch (o) {
        case HwObjective::latency: return "latency";
        case HwObjective::area: return "area";
        case HwObjective::energy: return "energy";
        case HwObjective::edp: return "edp";
    }
    return "?";
}

/// "energy" is the dynamic energy; EDP uses dynamic plus leakage energy.
inline double objective_value(const PerfRecord& r, HwObjective o) {
    switch (o) {
        case HwObjective::latency: return r.latency_ms;
        case HwObjective::area: return r.area_mm2;
        case HwObjective::energy: return r.e_dyn_mJ;
        case HwObjective::edp: return r.edp();
    }
    return 0;
}

/// Indices of records not dominated under (maximise accuracy, minimise the
/// objective), sorted by objective value with ties in input order.
inline std::vector<std::size_t> pareto_front(const std::vector<PerfRecord>& records, HwObjective o) {
    if (records.empty()) throw ParameterError("pareto front of an empty record set");
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto cost = [&](std::size_t i) { return objective_value(records[i], o); };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (cost(a) != cost(b)) return cost(a) < cost(b);
        return records[a].accuracy > records[b].accuracy;
    });
    std::vector<std::size_t> front;
    double best_cheaper = -std::numeric_limits<double>::infinity();  // best accuracy at strictly lower cost
    for (std::size_t g = 0; g < idx.size();) {
        std::size_t e = g;
        while (e < idx.size() && cost(idx[e]) == cost(idx[g])) ++e;
        const double top = records[idx[g]].accuracy;  // group sorted by accuracy, descending
        for (std::size_t k = g; k < e; ++k) {
            const double a = records[idx[k]].accuracy;
            if (a == top && a > best_cheaper) front.push_back(idx[k]);
        }
        best_cheaper = std::max(best_cheaper, top);
        g = e;
    }
    std::stable_sort(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
        if (cost(a) != cost(b)) return cost(a) < cost(b);
        return a < b;
    });
    return front;
}

// Convergence -----------------------------------------------------------------

/// Fires once the best-performance series has moved less than `tol` over the
/// last `window` iterations (window + 1 observations).
class ConvergenceDetector {
public:
    explicit ConvergenceDetector(double tol = 1e-4, int window = 5) : tol_(tol), window_(window) {
        if (!(tol > 0) || window < 1) throw ParameterError("invalid convergence criterion");
    }

    bool push(double best) {
        history_.push_back(best);
        if (history_.size() > static_cast<std::size_t>(window_) + 1) history_.pop_front();
        return converged();
    }

    bool converged() const {
        if (history_.size() < static_cast<std::size_t>(window_) + 1) return false;
        const auto [lo, hi] = std::minmax_element(history_.begin(), history_.end());
        return *hi - *lo < tol_;
    }

    void reset() { history_.clear(); }

private:
    double tol_;
    int window_;
    std::deque<double> history_;
};

}  // namespace codebench::search
