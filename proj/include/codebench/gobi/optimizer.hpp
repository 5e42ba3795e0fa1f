#pragma once

#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"

namespace codebench::gobi {

struct GobiConfig {
    int max_steps = 100;
    double step = 0.05;
    int hessian_probes = 1;
    double tol = 1e-5;
    std::vector<bool> freeze_mask;  // empty: nothing frozen
    int restarts = 8;
    bool second_order = true;  // false: Adam on squared gradients
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double fd_step = 1e-4;  // Hessian-vector products by central differences of the gradient
    Vec lower, upper;       // optional box (empty: unbounded)
    double radius = 0;      // trust region around each start (0: none)
    int threads = 1;
    std::uint64_t seed = 0;

    void check(Eigen::Index dim) const {
        if (!(step > 0)) throw ParameterError("GOBI step must be positive");
        if (!(tol > 0)) throw ParameterError("GOBI tolerance must be positive");
        if (max_steps < 0 || restarts < 1 || hessian_probes < 1) throw ParameterError("invalid GOBI schedule");
        if (!(fd_step > 0)) throw ParameterError("finite-difference step must be positive");
        if (!(radius >= 0)) throw ParameterError("trust radius must be non-negative");
        if (!freeze_mask.empty() && static_cast<Eigen::Index>(freeze_mask.size()) != dim)
            throw ParameterError("freeze mask has the wrong dimension");
        if ((lower.size() && lower.size() != dim) || (upper.size() && upper.size() != dim))
            throw ParameterError("GOBI bounds have the wrong dimension");
    }

    bool frozen(Eigen::Index i) const { return !freeze_mask.empty() && freeze_mask[static_cast<std::size_t>(i)]; }
};

inline nlohmann::json to_json(const GobiConfig& c) {
    return {{"max_steps", c.max_steps}, {"step", c.step},     {"hessian_probes", c.hessian_probes},
            {"tol", c.tol},             {"restarts", c.restarts}, {"second_order", c.second_order},
            {"beta1", c.beta1},         {"beta2", c.beta2},   {"eps", c.eps},
            {"fd_step", c.fd_step},     {"radius", c.radius},     {"threads", c.threads}};
}

inline GobiConfig gobi_config_from_json(const nlohmann::json& j, GobiConfig c = {}) {
    c.max_steps = j.value("max_steps", c.max_steps);
    c.step = j.value("step", c.step);
    c.hessian_probes = j.value("hessian_probes", c.hessian_probes);
    c.tol = j.value("tol", c.tol);
    c.restarts = j.value("restarts", c.restarts);
    c.second_order = j.value("second_order", c.second_order);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.eps = j.value("eps", c.eps);
    c.fd_step = j.value("fd_step", c.fd_step);
    c.radius = j.value("radius", c.radius);
    c.threads = j.value("threads", c.threads);
    return c;
}

/// Function to maximise and its gradient.
struct Objective {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
};

struct RestartResult {
    Vec x;
    double value = -std::numeric_limits<double>::infinity();
    int steps = 0;
    bool converged = false;
    bool aborted = false;
    std::string message;
};

struct OptimizeResult {
    Vec x;
    double value = -std::numeric_limits<double>::infinity();
    std::size_t best_restart = 0;
    std::vector<RestartResult> restarts;
};

/// Hutchinson estimate of diag(H): mean over Rademacher probes z of z * (H z).
inline Vec hessian_diagonal(const Objective& f, const Vec& x, const GobiConfig& cfg, Rng& rng) {
    Vec d = Vec::Zero(x.size());
    std::bernoulli_distribution coin(0.5);
    for (int p = 0; p < cfg.hessian_probes; ++p) {
        Vec z(x.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = cfg.frozen(i) ? 0.0 : (coin(rng) ? 1.0 : -1.0);
        const Vec hz = (f.gradient(x + cfg.fd_step * z) - f.gradient(x - cfg.fd_step * z)) / (2 * cfg.fd_step);
        d += z.cwiseProduct(hz);
    }
    return d / cfg.hessian_probes;
}

/// One ascent run from x0.
inline RestartResult ascend(const Objective& f, const Vec& x0, const GobiConfig& cfg, Rng& rng) {
    cfg.check(x0.size());
    if (!x0.allFinite()) throw ParameterError("GOBI start point is not finite");
    RestartResult r;
    r.x = x0;
    Vec m = Vec::Zero(x0.size()), v = Vec::Zero(x0.size());
    auto clamp = [&](Vec& x) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (cfg.frozen(i)) continue;
            if (cfg.lower.size()) x(i) = std::max(x(i), cfg.lower(i));
            if (cfg.upper.size()) x(i) = std::min(x(i), cfg.upper(i));
        }
        // shrinking towards x0 keeps the point inside the box when x0 is
        const double off = (x - x0).norm();
        if (cfg.radius > 0 && off > cfg.radius) x = x0 + (x - x0) * (cfg.radius / off);
    };
    for (int t = 1; t <= cfg.max_steps; ++t) {
        Vec g = f.gradient(r.x);
        Vec curv;
        if (cfg.second_order) curv = hessian_diagonal(f, r.x, cfg, rng);
        else curv = g;
        if (!g.allFinite() || !curv.allFinite()) {
            r.aborted = true;
            r.message = "non-finite gradient at step " + std::to_string(t);
            r.steps = t - 1;
            return r;
        }
        for (Eigen::Index i = 0; i < g.size(); ++i)
            if (cfg.frozen(i)) g(i) = curv(i) = 0.0;
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * curv.cwiseAbs2();
        const double c1 = 1 - std::pow(cfg.beta1, t), c2 = 1 - std::pow(cfg.beta2, t);
        Vec x = r.x;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!cfg.frozen(i)) x(i) += cfg.step * (m(i) / c1) / (std::sqrt(v(i) / c2) + cfg.eps);
        clamp(x);
        const double dx = (x - r.x).norm();
        r.x = std::move(x);
        r.steps = t;
        if (dx < cfg.tol) {
            r.converged = true;
            break;
        }
    }
    r.value = f.value(r.x);
    if (!std::isfinite(r.value)) {
        r.aborted = true;
        r.message = "non-finite objective at the end point";
    }
    return r;
}

/// Ascent from every start point (restart r uses its own seeded stream);
/// returns the best end point by objective value.
inline OptimizeResult optimize(const Objective& f, const std::vector<Vec>& starts, const GobiConfig& cfg) {
    if (starts.empty()) throw ParameterError("GOBI needs at least one start point");
    OptimizeResult out;
    out.restarts.resize(starts.size());
    auto run = [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, i));
        return ascend(f, starts[i], cfg, rng);
    };
    if (cfg.threads > 1) {
        for (std::size_t lo = 0; lo < starts.size(); lo += static_cast<std::size_t>(cfg.threads)) {
            std::vector<std::future<RestartResult>> jobs;
            const std::size_t hi = std::min(starts.size(), lo + static_cast<std::size_t>(cfg.threads));
            for (std::size_t i = lo; i < hi; ++i) jobs.push_back(std::async(std::launch::async, run, i));
            for (std::size_t i = lo; i < hi; ++i) out.restarts[i] = jobs[i - lo].get();
        }
    } else {
        for (std::size_t i = 0; i < starts.size(); ++i) out.restarts[i] = run(i);
    }
    bool any = false;
    for (std::size_t i = 0; i < out.restarts.size(); ++i) {
        const auto& r = out.restarts[i];
        if (r.aborted) continue;
        if (!any || r.value > out.value) {
            out.value = r.value;
            out.x = r.x;
            out.best_restart = i;
            any = true;
        }
    }
    if (!any) throw EvaluationError("every GOBI restart aborted: " + out.restarts.front().message);
    return out;
}

}  // namespace codebench::gobi
