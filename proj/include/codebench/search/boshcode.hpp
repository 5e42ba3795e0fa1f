#pragma once

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "codebench/cnn2vec/embedding.hpp"
#include "codebench/cnn_space/crossover.hpp"
#include "codebench/cnn_space/hash.hpp"
#include "codebench/cnn_space/library.hpp"
#include "codebench/cnn_space/neighbors.hpp"
#include "codebench/evaluators/pair.hpp"
#include "codebench/gobi/optimizer.hpp"
#include "codebench/gobi/snap.hpp"
#include "codebench/search/performance.hpp"
#include "codebench/surrogate/stack.hpp"

namespace codebench::search {

using gobi::Pair;

enum class Mode { codesign, fix_cnn, fix_accel };

inline Mode mode_from_name(const std::string& s) {
    if (s == "codesign") return Mode::codesign;
    if (s == "fix-cnn") return Mode::fix_cnn;
    if (s == "fix-accel") return Mode::fix_accel;
    throw ParameterError("unknown search mode '" + s + "' (codesign, fix-cnn, fix-accel)");
}

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::codesign: return "codesign";
        case Mode::fix_cnn: return "fix-cnn";
        case Mode::fix_accel: return "fix-accel";
    }
    return "?";
}

struct SearchPolicy {
    double alpha_p = 0.1;  // uncertainty sampling
    double beta_p = 0.1;   // diversity sampling
    double conv_tol = 1e-4;
    int conv_window = 5;
    bool run_to_budget = false;  // record convergence but keep querying until the budget is spent
    int initial_samples = 16;
    int budget = 100;  // evaluations, initial corpus and retries included
    int workers = 1;
    int candidate_pool = 512;
    int neighbors = 100;
    int retries = 1;

    void check() const {
        if (!(alpha_p >= 0 && beta_p >= 0 && alpha_p + beta_p <= 1)) throw ParameterError("sampling probabilities must be non-negative and sum to at most 1");
        if (initial_samples < 1 || budget < 1 || workers < 1 || candidate_pool < 1 || neighbors < 1 || retries < 0)
            throw ParameterError("invalid search policy");
        if (!(conv_tol > 0) || conv_window < 1) throw ParameterError("invalid convergence criterion");
    }
};

enum class Branch { gobi, uncertainty, diversity };

/// Branch of one active-learning step for a uniform draw u.
inline Branch pick_branch(double u, const SearchPolicy& p) {
    if (u < 1 - p.alpha_p - p.beta_p) return Branch::gobi;
    if (u < 1 - p.beta_p) return Branch::uncertainty;
    return Branch::diversity;
}

/// CNN design space of one hierarchy level: graphs and their embeddings.
struct CnnCatalog {
    std::map<std::string, cnn::ComputationalGraph> graphs;
    cnn2vec::EmbeddingTable table;
};

/// Builds the catalog of a level given the best graphs found so far (empty
/// for the first level).
using LevelProvider = std::function<CnnCatalog(std::size_t level, const std::vector<cnn::ComputationalGraph>& elites)>;

using Evaluate = std::function<eval::EvalOutcome(const eval::EvalRequest&)>;

struct TraceEntry {
    int iteration = 0;
    std::size_t level = 1;
    std::string branch;  // init, gobi, uncertainty, diversity
    Pair pair;
    int attempt = 1;
    bool failed = false;
    PerfRecord perf;
    double performance = 0;  // at the maxima current when recorded
    double cost = 0;
    bool transferred = false;
    bool early_stopped = false;
    eval::Recipe recipe;
    std::string note;
};

struct SearchSetup {
    accel::AccelSpace accel_space;
    std::size_t levels = 1;
    LevelProvider provider;
    Evaluate evaluate;
    SearchPolicy policy;
    PerfWeights weights;
    std::optional<Maxima> fixed_maxima;
    surrogate::SurrogateOptions surrogate;
    gobi::GobiConfig gobi;
    gobi::ConstraintSet constraints;
    double tau_wt = 0.8;
    Mode mode = Mode::codesign;
    std::optional<std::string> fixed_cnn;  // digest; default: the first random CNN
    std::optional<accel::AcceleratorConfig> fixed_accel;
    std::uint64_t seed = 0;
    std::function<void(const TraceEntry&)> on_entry;  // progress hook
};

struct SearchResult {
    Pair best;
    cnn::ComputationalGraph best_graph;
    PerfRecord best_perf;
    double best_performance = 0;
    std::vector<TraceEntry> trace;
    bool converged = false;
    std::size_t levels_completed = 0;
    bool exhausted = false;  // every admissible pair was evaluated before the budget ran out
    double total_cost = 0;
    int evaluations = 0;
    Maxima maxima;
};

/// Surrogate-driven active-learning search over CNN-accelerator pairs.
class Boshcode {
public:
    explicit Boshcode(SearchSetup s) : s_(std::move(s)), rng_(derive_seed(s_.seed, 0xb05c)) {
        s_.policy.check();
        s_.weights.check();
        s_.accel_space.check();
        if (!s_.provider || !s_.evaluate) throw ParameterError("search needs a level provider and an evaluator");
        if (s_.levels < 1) throw ParameterError("search needs at least one level");
        if (!(s_.tau_wt >= 0 && s_.tau_wt <= 1)) throw ParameterError("transfer threshold must lie in [0, 1]");
        if (s_.fixed_maxima) s_.fixed_maxima->check();
        if (s_.fixed_accel) s_.accel_space.validate(*s_.fixed_accel);
    }

    SearchResult run() {
        SearchResult res;
        std::vector<cnn::ComputationalGraph> elites;
        for (std::size_t level = 1; level <= s_.levels; ++level) {
            level_ = level;
            catalog_ = s_.provider(level, elites);
            if (catalog_.graphs.empty() || catalog_.table.size() == 0) throw ParameterError("level provider returned an empty catalog");
            for (const auto& [d, g] : catalog_.graphs)
                if (!catalog_.table.contains(d)) throw ParameterError("catalog graph " + d + " has no embedding");
            space_.emplace(catalog_.table, s_.accel_space);
            stack_.reset();
            auto opt = s_.surrogate;
            opt.arch.split = {catalog_.table.dim(), static_cast<int>(accel::kAccelDims)};
            opt.seed = derive_seed(s_.seed, 100 + level);
            surrogate_opt_ = opt;
            reencode_corpus();
            if (level == 1) choose_fixed_halves();
            if (corpus_.empty()) initial_corpus(res);
            ConvergenceDetector detector(s_.policy.conv_tol, s_.policy.conv_window);
            bool level_converged = false;
            while (res.evaluations < s_.policy.budget && !res.exhausted) {
                dispatch_round(res);
                if (detector.push(best_performance()) && !level_converged) {
                    level_converged = true;
                    if (!res.trace.empty()) res.trace.back().note += (res.trace.back().note.empty() ? "" : "; ") + std::string("converged");
                    if (!s_.policy.run_to_budget || level < s_.levels) break;
                }
            }
            res.levels_completed = level_converged ? level : level - 1;
            if (!s_.fixed_maxima) frozen_maxima_ = true;
            elites = top_graphs(2);
            if (!level_converged) break;
            if (level == s_.levels) res.converged = true;
        }
        finish(res);
        return res;
    }

private:
    struct Sample {
        Pair pair;
        Vec x;
        PerfRecord perf;
        bool ok = false;
    };

    // -- bookkeeping --------------------------------------------------------

    Maxima maxima() const { return s_.fixed_maxima ? *s_.fixed_maxima : maxima_; }

    double perf_of(const PerfRecord& r) const { return performance(r, s_.weights, maxima()); }

    double best_performance() const {
        double b = 0;
        for (const auto& c : corpus_) b = std::max(b, perf_of(c.perf));
        return b;
    }

    /// Corpus indices by observed performance, best first.
    std::vector<std::size_t> ranked_corpus() const {
        std::vector<std::size_t> order(corpus_.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return perf_of(corpus_[a].perf) > perf_of(corpus_[b].perf); });
        return order;
    }

    std::vector<cnn::ComputationalGraph> top_graphs(std::size_t n) const {
        std::vector<std::pair<double, std::string>> ranked;
        std::set<std::string> seen;
        for (const auto& c : corpus_) ranked.emplace_back(perf_of(c.perf), c.pair.digest);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<cnn::ComputationalGraph> out;
        for (const auto& [p, d] : ranked) {
            if (out.size() == n) break;
            if (!seen.insert(d).second) continue;
            auto it = all_graphs_.find(d);
            if (it != all_graphs_.end()) out.push_back(it->second);
        }
        return out;
    }

    void reencode_corpus() {
        for (const auto& [d, g] : catalog_.graphs) all_graphs_.emplace(d, g);
        std::vector<Sample> kept;
        for (auto& c : corpus_)
            if (catalog_.table.contains(c.pair.digest)) {
                c.x = space_->encode(c.pair);
                kept.push_back(c);
            }
        corpus_ = std::move(kept);
    }

    bool evaluated(const Pair& p) const { return tried_.count(p) != 0; }

    void choose_fixed_halves() {
        if (s_.mode == Mode::fix_cnn) {
            if (s_.fixed_cnn) {
                if (!catalog_.table.contains(*s_.fixed_cnn)) throw LookupError("fixed CNN " + *s_.fixed_cnn + " is not in the design space");
                fixed_cnn_ = *s_.fixed_cnn;
            } else {
                fixed_cnn_ = random_digest();
            }
        }
        if (s_.mode == Mode::fix_accel) fixed_accel_ = s_.fixed_accel ? *s_.fixed_accel : s_.accel_space.sample(rng_);
    }

    std::string random_digest() {
        const auto& e = catalog_.table.entries();
        auto it = e.begin();
        std::advance(it, static_cast<long>(std::uniform_int_distribution<std::size_t>(0, e.size() - 1)(rng_)));
        return it->first;
    }

    Pair random_pair() {
        Pair p;
        p.digest = fixed_cnn_ ? *fixed_cnn_ : random_digest();
        p.config = fixed_accel_ ? *fixed_accel_ : s_.accel_space.sample(rng_);
        return p;
    }

    bool admissible(const Pair& p) const {
        return !evaluated(p) && (s_.constraints.empty() || s_.constraints.satisfied(p.digest, p.config));
    }

    /// Uniform admissible pair, falling back to the nearest admissible pair to a random draw.
    std::optional<Pair> random_admissible() {
        for (int i = 0; i < 1000; ++i) {
            Pair p = random_pair();
            if (admissible(p)) return p;
        }
        try {
            return space_->snap(space_->encode(random_pair()), s_.constraints, snap_options()).pair;
        } catch (const InfeasibleError&) {
            return std::nullopt;
        }
    }

    gobi::SnapOptions snap_options() const {
        gobi::SnapOptions o;
        o.lock_cnn = s_.mode == Mode::fix_cnn;
        o.lock_accel = s_.mode == Mode::fix_accel;
        o.exclude = [this](const Pair& p) { return evaluated(p); };
        return o;
    }

    // -- surrogate ------------------------------------------------------------

    surrogate::SurrogateStack& fitted_stack() {
        if (!stack_ || fitted_size_ != corpus_.size() || fitted_maxima_gen_ != maxima_gen_) {
            if (!stack_) stack_.emplace(surrogate_opt_);
            surrogate::Corpus c;
            for (const auto& s : corpus_) c.add(s.x, perf_of(s.perf));
            stack_->fit(c);
            fitted_size_ = corpus_.size();
            fitted_maxima_gen_ = maxima_gen_;
        }
        return *stack_;
    }

    // -- query selection ----------------------------------------------------

    struct Query {
        Pair pair;
        std::string branch;
        std::string note;
        double overlap = 0;
    };

    std::optional<Query> gobi_query() {
        auto& st = fitted_stack();
        gobi::GobiConfig cfg = s_.gobi;
        cfg.seed = derive_seed(s_.seed, 0x90b1 + static_cast<std::uint64_t>(queries_));
        if (s_.mode == Mode::fix_cnn) cfg.freeze_mask = space_->half_mask(true);
        if (s_.mode == Mode::fix_accel) cfg.freeze_mask = space_->half_mask(false);
        std::tie(cfg.lower, cfg.upper) = space_->bounds();
        // half the restarts from the best observed pairs, the rest uniform
        std::vector<Vec> starts;
        const auto ranked = ranked_corpus();
        const std::size_t from_corpus = std::min(ranked.size(), static_cast<std::size_t>((cfg.restarts + 1) / 2));
        for (std::size_t i = 0; i < from_corpus; ++i) starts.push_back(corpus_[ranked[i]].x);
        while (static_cast<int>(starts.size()) < cfg.restarts) starts.push_back(space_->encode(random_pair()));
        gobi::Objective f{[&st](const Vec& x) { return st.ucb(x); }, [&st](const Vec& x) { return st.ucb_gradient(x); }};
        Query q;
        q.branch = "gobi";
        Vec x;
        try {
            x = gobi::optimize(f, starts, cfg).x;
        } catch (const EvaluationError& e) {
            q.note = std::string("GOBI failed (") + e.what() + "), diversity fallback";
            auto p = random_admissible();
            if (!p) return std::nullopt;
            q.pair = *p;
            return q;
        }
        gobi::SnapResult snapped;
        try {
            snapped = space_->snap(x, s_.constraints, snap_options());
        } catch (const InfeasibleError&) {
            return std::nullopt;
        }
        q.pair = snapped.pair;
        if (snapped.excluded > 0) q.note = "skipped " + std::to_string(snapped.excluded) + " evaluated candidate(s)";
        q.overlap = transfer_overlap(q.pair);
        return q;
    }

    /// Best biased overlap among trained neighbours reaching the threshold, else 0.
    double transfer_overlap(const Pair& p) const {
        std::vector<cnn::PoolEntry> pool;
        std::set<std::string> seen;
        for (const auto& c : corpus_) {
            if (!seen.insert(c.pair.digest).second) continue;
            auto it = all_graphs_.find(c.pair.digest);
            if (it == all_graphs_.end() || !catalog_.table.contains(c.pair.digest)) continue;
            pool.push_back({c.pair.digest, &it->second, catalog_.table.embed(c.pair.digest)});
        }
        if (pool.empty()) return 0;
        auto list = cnn::neighbors(catalog_.table.embed(p.digest), pool, static_cast<std::size_t>(s_.policy.neighbors));
        cnn::rank_for_transfer(all_graphs_.at(p.digest), pool, list);
        for (const auto& n : list.items)
            if (n.overlap >= s_.tau_wt) return n.overlap;
        return 0;
    }

    std::optional<Query> uncertainty_query() {
        auto& st = fitted_stack();
        std::vector<Pair> pool;
        std::set<Pair> seen;
        auto add = [&](const Pair& p) {
            if (admissible(p) && seen.insert(p).second) pool.push_back(p);
        };
        for (int i = 0; i < s_.policy.candidate_pool * 4 && static_cast<int>(pool.size()) < s_.policy.candidate_pool; ++i) add(random_pair());
        // unevaluated neighbours of the best corpus points
        const auto order = ranked_corpus();
        for (std::size_t k = 0; k < std::min<std::size_t>(8, order.size()); ++k) {
            auto o = snap_options();
            o.exclude = [&](const Pair& p) { return evaluated(p) || seen.count(p) != 0; };
            for (int j = 0; j < 4; ++j) {
                try {
                    add(space_->snap(corpus_[order[k]].x, s_.constraints, o).pair);
                } catch (const InfeasibleError&) {
                    break;
                }
            }
        }
        if (pool.empty()) return std::nullopt;
        Mat X(space_->dim(), static_cast<Eigen::Index>(pool.size()));
        for (std::size_t i = 0; i < pool.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = space_->encode(pool[i]);
        const auto pred = st.predict_batch(X);
        std::size_t best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double v = s_.surrogate.k1 * pred[i].sigma + s_.surrogate.k2 * pred[i].xi_hat;
            if (v > best_v) {
                best_v = v;
                best = i;
            }
        }
        return Query{pool[best], "uncertainty", "", 0.0};
    }

    std::optional<Query> next_query() {
        ++queries_;
        const Branch b = pick_branch(uniform01(rng_), s_.policy);
        std::optional<Query> q;
        if (b == Branch::gobi) q = gobi_query();
        else if (b == Branch::uncertainty) q = uncertainty_query();
        if (!q && b != Branch::gobi) {
            auto p = random_admissible();
            if (p) q = Query{*p, "diversity", "", 0.0};
        }
        return q;
    }

    // -- evaluation -----------------------------------------------------------

    std::optional<double> accuracy_floor() const {
        if (static_cast<int>(corpus_.size()) < s_.policy.initial_samples) return std::nullopt;
        std::vector<double> acc;
        for (const auto& c : corpus_) acc.push_back(c.perf.accuracy);
        std::nth_element(acc.begin(), acc.begin() + static_cast<long>(acc.size() / 2), acc.end());
        return acc[acc.size() / 2];
    }

    eval::EvalRequest request(const Query& q) {
        eval::EvalRequest r;
        r.pair = q.pair;
        r.graph = &all_graphs_.at(q.pair.digest);
        r.x = space_->encode(q.pair);
        r.recipe = eval::Recipe::sample(rng_);
        r.seed = derive_seed(s_.seed, 0xe7a1 + static_cast<std::uint64_t>(requests_++));
        r.transfer_overlap = q.overlap;
        r.accuracy_floor = accuracy_floor();
        return r;
    }

    /// Dispatches up to `workers` queries, evaluates them concurrently and
    /// folds the results in dispatch order.
    void dispatch_round(SearchResult& res) {
        std::vector<Query> batch;
        const int room = std::min(s_.policy.workers, s_.policy.budget - res.evaluations);
        for (int w = 0; w < room; ++w) {
            auto q = next_query();
            if (!q) break;
            tried_.insert(q->pair);
            batch.push_back(std::move(*q));
        }
        if (batch.empty()) {
            res.exhausted = true;
            if (!res.trace.empty()) res.trace.back().note += (res.trace.back().note.empty() ? "" : "; ") + std::string("design space exhausted");
            return;
        }
        std::vector<eval::EvalRequest> reqs;
        for (const auto& q : batch) reqs.push_back(request(q));
        run_batch(res, batch, reqs);
    }

    void run_batch(SearchResult& res, const std::vector<Query>& batch, std::vector<eval::EvalRequest>& reqs) {
        std::vector<std::optional<eval::EvalOutcome>> outs(batch.size());
        std::vector<std::string> errors(batch.size());
        auto attempt = [&](std::size_t i) {
            try {
                outs[i] = s_.evaluate(reqs[i]);
            } catch (const EvaluationError& e) {
                errors[i] = e.what();
            }
        };
        if (batch.size() > 1) {
            std::vector<std::future<void>> jobs;
            for (std::size_t i = 0; i < batch.size(); ++i) jobs.push_back(std::async(std::launch::async, attempt, i));
            for (auto& j : jobs) j.get();
        } else {
            attempt(0);
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
            int tries = 1;
            while (!outs[i]) {
                record_failure(res, batch[i], reqs[i], tries, errors[i]);
                if (tries > s_.policy.retries || res.evaluations >= s_.policy.budget) break;
                ++tries;
                reqs[i].seed = derive_seed(reqs[i].seed, 0xa11);
                attempt(i);
            }
            if (outs[i]) record_success(res, batch[i], reqs[i], *outs[i], tries);
        }
    }

    void record_failure(SearchResult& res, const Query& q, const eval::EvalRequest& r, int attempt, const std::string& err) {
        TraceEntry e;
        e.iteration = res.evaluations++;
        e.level = level_;
        e.branch = q.branch;
        e.pair = q.pair;
        e.attempt = attempt;
        e.failed = true;
        e.recipe = r.recipe;
        e.note = (q.note.empty() ? "" : q.note + "; ") + "evaluation failed: " + err;
        push(res, std::move(e));
    }

    void record_success(SearchResult& res, const Query& q, const eval::EvalRequest& r, const eval::EvalOutcome& out, int attempt) {
        out.perf.check();
        Sample s{q.pair, r.x, out.perf, true};
        corpus_.push_back(s);
        if (!s_.fixed_maxima && !frozen_maxima_) {
            Maxima before = maxima_;
            maxima_.update(out.perf);
            if (before.latency_ms != maxima_.latency_ms || before.area_mm2 != maxima_.area_mm2 || before.e_dyn_mJ != maxima_.e_dyn_mJ ||
                before.e_leak_mJ != maxima_.e_leak_mJ)
                ++maxima_gen_;
        }
        TraceEntry e;
        e.iteration = res.evaluations++;
        e.level = level_;
        e.branch = q.branch;
        e.pair = q.pair;
        e.attempt = attempt;
        e.perf = out.perf;
        e.performance = perf_of(out.perf);
        e.cost = out.cost;
        e.transferred = out.transferred;
        e.early_stopped = out.early_stopped;
        e.recipe = r.recipe;
        e.note = q.note;
        res.total_cost += out.cost;
        push(res, std::move(e));
    }

    void push(SearchResult& res, TraceEntry e) {
        if (s_.on_entry) s_.on_entry(e);
        res.trace.push_back(std::move(e));
    }

    void initial_corpus(SearchResult& res) {
        std::vector<Query> batch;
        for (int i = 0; i < s_.policy.initial_samples && res.evaluations + static_cast<int>(batch.size()) < s_.policy.budget; ++i) {
            auto p = random_admissible();
            if (!p) break;
            tried_.insert(*p);
            batch.push_back(Query{*p, "init", "", 0.0});
        }
        for (std::size_t lo = 0; lo < batch.size(); lo += static_cast<std::size_t>(s_.policy.workers)) {
            const std::size_t hi = std::min(batch.size(), lo + static_cast<std::size_t>(s_.policy.workers));
            std::vector<Query> part(batch.begin() + static_cast<long>(lo), batch.begin() + static_cast<long>(hi));
            std::vector<eval::EvalRequest> reqs;
            for (const auto& q : part) reqs.push_back(request(q));
            run_batch(res, part, reqs);
        }
        if (corpus_.empty()) throw EvaluationError("no initial evaluation succeeded");
    }

    void finish(SearchResult& res) {
        res.maxima = maxima();
        double best = -1;
        for (const auto& c : corpus_) {
            const double p = perf_of(c.perf);
            if (p > best) {
                best = p;
                res.best = c.pair;
                res.best_perf = c.perf;
            }
        }
        // records from earlier levels are not in the corpus any more
        for (const auto& e : res.trace) {
            if (e.failed) continue;
            const double p = perf_of(e.perf);
            if (p > best) {
                best = p;
                res.best = e.pair;
                res.best_perf = e.perf;
            }
        }
        res.best_performance = best;
        res.best_graph = all_graphs_.at(res.best.digest);
    }

    SearchSetup s_;
    Rng rng_;
    std::size_t level_ = 1;
    CnnCatalog catalog_;
    std::optional<gobi::PairSpace> space_;
    surrogate::SurrogateOptions surrogate_opt_;
    std::optional<surrogate::SurrogateStack> stack_;
    std::size_t fitted_size_ = 0;
    int maxima_gen_ = 0, fitted_maxima_gen_ = -1;
    std::vector<Sample> corpus_;
    std::set<Pair> tried_;
    std::map<std::string, cnn::ComputationalGraph> all_graphs_;
    Maxima maxima_;
    bool frozen_maxima_ = false;
    std::optional<std::string> fixed_cnn_;
    std::optional<accel::AcceleratorConfig> fixed_accel_;
    int queries_ = 0;
    int requests_ = 0;
};

inline SearchResult boshcode_run(SearchSetup s) { return Boshcode(std::move(s)).run(); }

// Level providers ---------------------------------------------------------------

inline std::string graph_digest(const cnn::ComputationalGraph& g) { return cnn::graph_hash(g, cnn::GraphLimits{32, 64, 32, 1u << 20}); }

inline CnnCatalog catalog_from_graphs(const std::vector<cnn::ComputationalGraph>& graphs, const cnn2vec::TrainOptions& opt) {
    CnnCatalog c;
    cnn::GedCalculator calc(cnn::GedCostTable(std::make_shared<const cnn::BlockCatalog>()));
    auto trained = cnn2vec::train_embeddings(graphs, calc, opt);
    c.table = std::move(trained.table);
    for (const auto& g : graphs) c.graphs.emplace(graph_digest(g), g);
    return c;
}

/// Level 1 samples `per_level` graphs from the level space; later levels
/// cross the two elites over at the next stack size and top up with samples.
inline LevelProvider hierarchy_provider(cnn::CnnSpaceConfig cfg, std::size_t per_level, cnn2vec::TrainOptions opt, std::uint64_t seed) {
    return [=](std::size_t level, const std::vector<cnn::ComputationalGraph>& elites) {
        Rng rng(derive_seed(seed, level));
        auto space = cnn::LevelSpace::for_level(cfg, level);
        std::vector<cnn::ComputationalGraph> graphs;
        std::set<std::string> seen;
        auto add = [&](const cnn::ComputationalGraph& g) {
            if (graphs.size() < per_level && seen.insert(graph_digest(g)).second) graphs.push_back(g);
        };
        if (level > 1 && !elites.empty()) {
            const auto& best = elites.front();
            const auto& nb = elites.size() > 1 ? elites[1] : elites.front();
            const int s_new = space.stack_size();
            if (best.stack_size % s_new == 0 && nb.stack_size == best.stack_size)
                for (const auto& g : cnn::sample_crossover(best, nb, s_new, per_level, rng)) add(g);
        }
        for (int guard = 0; graphs.size() < per_level && guard < 100000; ++guard) add(space.sample(rng));
        auto o = opt;
        o.seed = derive_seed(seed, 1000 + level);
        return catalog_from_graphs(graphs, o);
    };
}

/// A single fixed level.
inline LevelProvider fixed_provider(CnnCatalog catalog) {
    return [catalog = std::move(catalog)](std::size_t, const std::vector<cnn::ComputationalGraph>&) { return catalog; };
}

}  // namespace codebench::search
