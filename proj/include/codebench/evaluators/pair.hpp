#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "codebench/accel_sim/simulator.hpp"
#include "codebench/cnn_space/graph.hpp"
#include "codebench/evaluators/recipe.hpp"
#include "codebench/evaluators/synthetic.hpp"
#include "codebench/evaluators/tabular.hpp"
#include "codebench/gobi/snap.hpp"
#include "codebench/search/performance.hpp"

namespace codebench::eval {

struct EvalRequest {
    gobi::Pair pair;
    const cnn::ComputationalGraph* graph = nullptr;
    Vec x;  // pair embedding
    Recipe recipe;
    std::uint64_t seed = 0;
    double transfer_overlap = 0;          // best biased overlap with a trained neighbour
    std::optional<double> accuracy_floor;  // running floor for early stopping
};

struct EvalOutcome {
    search::PerfRecord perf;
    double cost = 0;
    bool transferred = false;
    bool early_stopped = false;
};

using AccuracyOracle = std::function<double(const EvalRequest&)>;

inline AccuracyOracle landscape_oracle(std::shared_ptr<const SyntheticLandscape> land) {
    return [land](const EvalRequest& r) { return land->accuracy(r.x, r.recipe); };
}

/// Accuracy of a seeded recipe sample from the table; a missing digest is an error.
inline AccuracyOracle tabular_oracle(std::shared_ptr<const TabularBenchmark> table) {
    return [table](const EvalRequest& r) { return table->sample(r.pair.digest, r.seed); };
}

/// Simulates the hardware side, asks the oracle for accuracy and charges the
/// simulated training cost. Simulation results are cached per pair.
class PairEvaluator {
public:
    PairEvaluator(AccuracyOracle oracle, accel::CostConstants constants = {}, accel::SimOptions sim = {}, CostModel cost = {})
        : oracle_(std::move(oracle)), k_(std::move(constants)), sim_(sim), cost_(cost) {
        k_.check();
        cost_.check();
    }

    const CostModel& cost_model() const { return cost_; }

    accel::PerfRecord hardware(const gobi::Pair& p, const cnn::ComputationalGraph& g) const {
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(p);
            if (it != cache_.end()) return it->second;
        }
        accel::PerfRecord hw;
        try {
            hw = accel::simulate(g, p.config, k_, sim_).perf;
        } catch (const UnmappableError& e) {
            throw EvaluationError(std::string("simulation failed: ") + e.what());
        } catch (const CapacityError& e) {
            throw EvaluationError(std::string("simulation failed: ") + e.what());
        }
        std::lock_guard<std::mutex> lock(mu_);
        cache_.emplace(p, hw);
        return hw;
    }

    EvalOutcome operator()(const EvalRequest& r) const {
        if (!r.graph) throw ParameterError("evaluation request without a graph");
        EvalOutcome out;
        const double acc = oracle_(r);
        if (!(acc >= 0 && acc <= 1)) throw EvaluationError("oracle returned accuracy outside [0, 1]");
        out.perf = search::PerfRecord::from(hardware(r.pair, *r.graph), acc);
        out.transferred = cost_.transfers(r.transfer_overlap);
        out.early_stopped = r.accuracy_floor && acc < *r.accuracy_floor;
        out.cost = cost_.cost(r.transfer_overlap, out.early_stopped);
        return out;
    }

private:
    AccuracyOracle oracle_;
    accel::CostConstants k_;
    accel::SimOptions sim_;
    CostModel cost_;
    mutable std::mutex mu_;
    mutable std::map<gobi::Pair, accel::PerfRecord> cache_;
};

}  // namespace codebench::eval
