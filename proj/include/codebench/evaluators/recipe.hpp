#pragma once

#include <array>
#include <cmath>

#include <json.hpp>

#include "codebench/common.hpp"

namespace codebench::eval {

/// Training recipe: learning rate (log-uniform in [1e-5, 1e-2]), Adam beta1
/// (uniform in [0.8, 0.95]) and weight decay (log-uniform in [1e-5, 1e-3]).
struct Recipe {
    double lr = 1e-3;
    double beta1 = 0.9;
    double weight_decay = 1e-4;

    static constexpr double lr_lo = 1e-5, lr_hi = 1e-2;
    static constexpr double beta1_lo = 0.8, beta1_hi = 0.95;
    static constexpr double wd_lo = 1e-5, wd_hi = 1e-3;

    void check() const {
        if (!(lr >= lr_lo && lr <= lr_hi) || !(beta1 >= beta1_lo && beta1 <= beta1_hi) || !(weight_decay >= wd_lo && weight_decay <= wd_hi))
            throw ParameterError("training recipe outside its sampling ranges");
    }

    /// Coordinates in [0, 1]^3; uniform when the recipe is drawn by sample().
    std::array<double, 3> coords() const {
        return {std::log(lr / lr_lo) / std::log(lr_hi / lr_lo), (beta1 - beta1_lo) / (beta1_hi - beta1_lo),
                std::log(weight_decay / wd_lo) / std::log(wd_hi / wd_lo)};
    }

    static Recipe from_coords(const std::array<double, 3>& u) {
        for (double v : u)
            if (!(v >= 0 && v <= 1)) throw ParameterError("recipe coordinates must lie in [0, 1]");
        Recipe r;
        r.lr = lr_lo * std::pow(lr_hi / lr_lo, u[0]);
        r.beta1 = beta1_lo + (beta1_hi - beta1_lo) * u[1];
        r.weight_decay = wd_lo * std::pow(wd_hi / wd_lo, u[2]);
        return r;
    }

    static Recipe sample(Rng& rng) { return from_coords({uniform01(rng), uniform01(rng), uniform01(rng)}); }
};

inline nlohmann::json to_json(const Recipe& r) { return {{"lr", r.lr}, {"beta1", r.beta1}, {"weight_decay", r.weight_decay}}; }

/// Simulated training cost: weight transfer from a neighbour whose overlap
/// reaches tau_wt scales the cost by transfer_factor; early stopping (accuracy
/// below the running floor) scales it by early_stop_factor.
struct CostModel {
    double base_cost = 1.0;
    double transfer_factor = 0.68;
    double tau_wt = 0.8;
    double early_stop_factor = 0.5;

    void check() const {
        if (!(base_cost > 0) || !(transfer_factor > 0 && transfer_factor <= 1) || !(early_stop_factor > 0 && early_stop_factor <= 1))
            throw ParameterError("invalid cost model");
        if (!(tau_wt >= 0 && tau_wt <= 1)) throw ParameterError("transfer threshold must lie in [0, 1]");
    }

    bool transfers(double overlap) const { return overlap >= tau_wt; }

    double cost(double overlap, bool early_stopped) const {
        double c = base_cost;
        if (transfers(overlap)) c *= transfer_factor;
        if (early_stopped) c *= early_stop_factor;
        return c;
    }
};

}  // namespace codebench::eval
