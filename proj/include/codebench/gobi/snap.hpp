#pragma once

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "codebench/accel_sim/simulator.hpp"
#include "codebench/accel_space/space.hpp"
#include "codebench/cnn2vec/embedding.hpp"
#include "codebench/common.hpp"

namespace codebench::gobi {

using accel::AcceleratorConfig;
using accel::AccelSpace;

struct Pair {
    std::string digest;
    AcceleratorConfig config;

    auto operator<=>(const Pair&) const = default;
};

struct Constraint {
    std::string name;
    std::function<bool(const std::string& digest, const AcceleratorConfig&)> ok;
};

struct ConstraintSet {
    std::vector<Constraint> items;

    bool empty() const { return items.empty(); }
    bool satisfied(const std::string& digest, const AcceleratorConfig& c) const {
        for (const auto& k : items)
            if (!k.ok(digest, c)) return false;
        return true;
    }
    void add(std::string name, std::function<bool(const std::string&, const AcceleratorConfig&)> ok) {
        items.push_back({std::move(name), std::move(ok)});
    }
};

inline Constraint max_area(double bound_mm2, accel::CostConstants k = {}) {
    return {"area <= " + std::to_string(bound_mm2), [bound_mm2, k](const std::string&, const AcceleratorConfig& c) {
                return accel::area(c, k) <= bound_mm2;
            }};
}

struct SnapOptions {
    bool lock_cnn = false;    // only the nearest CNN is a candidate
    bool lock_accel = false;  // only the nearest accelerator is a candidate
    std::uint64_t max_candidates = 1'000'000;
    std::function<bool(const Pair&)> exclude;  // e.g. already evaluated
};

struct SnapResult {
    Pair pair;
    double distance2 = 0;
    std::uint64_t examined = 0;
    std::uint64_t excluded = 0;    // skipped by SnapOptions::exclude
    std::uint64_t infeasible = 0;  // rejected by constraints
};

/// Pair embedding layout: the CNN embedding followed by the accelerator embedding.
class PairSpace {
public:
    PairSpace(const cnn2vec::EmbeddingTable& table, AccelSpace space) : table_(&table), space_(std::move(space)) {
        if (table.size() == 0) throw ParameterError("CNN embedding table is empty");
        space_.check();
    }

    int cnn_dim() const { return table_->dim(); }
    int dim() const { return table_->dim() + accel::kAccelDims; }
    const AccelSpace& accel() const { return space_; }
    const cnn2vec::EmbeddingTable& table() const { return *table_; }

    Vec encode(const Pair& p) const {
        const auto& e = table_->embed(p.digest);
        const auto a = space_.encode(p.config);
        Vec x(dim());
        for (int i = 0; i < cnn_dim(); ++i) x(i) = e[static_cast<std::size_t>(i)];
        for (std::size_t i = 0; i < accel::kAccelDims; ++i) x(cnn_dim() + static_cast<int>(i)) = a[i];
        return x;
    }

    /// Coordinate mask selecting the CNN half (true) or the accelerator half (false).
    std::vector<bool> half_mask(bool cnn) const {
        std::vector<bool> m(static_cast<std::size_t>(dim()), !cnn);
        for (int i = 0; i < cnn_dim(); ++i) m[static_cast<std::size_t>(i)] = cnn;
        return m;
    }

    /// Box bounding every valid encoding.
    std::pair<Vec, Vec> bounds() const {
        Vec lo = Vec::Constant(dim(), std::numeric_limits<double>::infinity());
        Vec hi = -lo;
        for (const auto& [d, e] : table_->entries())
            for (int i = 0; i < cnn_dim(); ++i) {
                lo(i) = std::min(lo(i), e[static_cast<std::size_t>(i)]);
                hi(i) = std::max(hi(i), e[static_cast<std::size_t>(i)]);
            }
        lo.tail(accel::kAccelDims).setZero();
        hi.tail(accel::kAccelDims).setOnes();
        return {lo, hi};
    }

    /// Nearest pair to x satisfying `constraints` and not excluded. Pairs are
    /// visited in order of squared distance with ties broken by CNN digest
    /// order, then by lexicographic value order of the accelerator coordinates.
    SnapResult snap(const Vec& x, const ConstraintSet& constraints = {}, const SnapOptions& opt = {}) const {
        if (x.size() != dim()) throw ParameterError("pair embedding has the wrong dimension");
        if (!x.allFinite()) throw ParameterError("pair embedding is not finite");
        std::vector<std::string> digests;
        auto groups = build_groups(x, opt, digests);
        SnapResult r;
        Walker w(groups);
        std::vector<std::size_t> idx;
        double cost = 0;
        while (w.next(idx, cost)) {
            if (++r.examined > opt.max_candidates)
                throw InfeasibleError("no feasible pair among the " + std::to_string(opt.max_candidates) + " nearest candidates");
            Pair p = assemble(groups, idx, digests);
            if (!constraints.empty() && !constraints.satisfied(p.digest, p.config)) {
                ++r.infeasible;
                continue;
            }
            if (opt.exclude && opt.exclude(p)) {
                ++r.excluded;
                continue;
            }
            r.pair = std::move(p);
            r.distance2 = cost;
            return r;
        }
        if (r.infeasible > 0 && r.excluded == 0) throw InfeasibleError("no design point satisfies the constraints");
        throw InfeasibleError("every candidate pair is infeasible or already evaluated");
    }

private:
    struct Option {
        double cost;
        std::vector<int> values;  // accelerator values or the CNN index
    };
    // group 0 is the CNN; groups 1.. are accelerator coordinate groups
    struct Group {
        int kind;
        std::vector<Option> options;
    };
    enum Kind { cnn = 0, p_ib, p_if, p_ix, p_iy, p_of, p_k, batch, act, wgt, mask, memory };

    std::vector<Group> build_groups(const Vec& x, const SnapOptions& opt, std::vector<std::string>& digests) const {
        std::vector<Group> gs;
        {
            std::vector<double> q(x.data(), x.data() + cnn_dim());
            Group g{cnn, {}};
            for (const auto& [d2, digest] : table_->ranked_by_distance(q)) {
                g.options.push_back({d2, {static_cast<int>(digests.size())}});
                digests.push_back(digest);
            }
            gs.push_back(std::move(g));
        }
        const Vec a = x.tail(accel::kAccelDims);
        auto scalar = [&](int kind, const std::vector<int>& vals, std::initializer_list<int> coords) {
            Group g{kind, {}};
            for (std::size_t i = 0; i < vals.size(); ++i) {
                const double r = AccelSpace::ratio(i, vals.size());
                double c = 0;
                for (int k : coords) c += (a(k) - r) * (a(k) - r);
                g.options.push_back({c, {vals[i]}});
            }
            gs.push_back(std::move(g));
        };
        scalar(p_ib, space_.p_ib, {0});
        scalar(p_if, space_.p_if, {1});
        scalar(p_ix, space_.p_ix, {2});
        scalar(p_iy, space_.p_iy, {3});
        scalar(p_of, space_.p_of, {4});
        scalar(p_k, space_.p_k, {5, 6});
        scalar(batch, space_.batch, {7});
        scalar(act, space_.act_buf_mb, {8});
        scalar(wgt, space_.wgt_buf_mb, {9});
        scalar(mask, space_.mask_buf_mb, {10});
        Group m{memory, {}};
        for (std::size_t t = 0; t < space_.mem_types.size(); ++t) {
            const auto cfgs = space_.configs_of(t);
            for (std::size_t i = 0; i < cfgs.size(); ++i) {
                const double dt = AccelSpace::ratio(t, space_.mem_types.size()) - a(11);
                const double dc = AccelSpace::ratio(i, cfgs.size()) - a(12);
                m.options.push_back({dt * dt + dc * dc, {static_cast<int>(t), cfgs[i]}});
            }
        }
        gs.push_back(std::move(m));
        for (std::size_t g = 1; g < gs.size(); ++g)
            std::stable_sort(gs[g].options.begin(), gs[g].options.end(), [](const Option& l, const Option& r) { return l.cost < r.cost; });
        if (opt.lock_cnn) gs[0].options.resize(1);
        if (opt.lock_accel)
            for (std::size_t g = 1; g < gs.size(); ++g) gs[g].options.resize(1);
        return gs;
    }

    Pair assemble(const std::vector<Group>& gs, const std::vector<std::size_t>& idx, const std::vector<std::string>& digests) const {
        Pair p;
        auto val = [&](int g) { return gs[static_cast<std::size_t>(g)].options[idx[static_cast<std::size_t>(g)]].values; };
        p.digest = digests[static_cast<std::size_t>(val(cnn)[0])];
        auto& c = p.config;
        c.p_ib = val(p_ib)[0];
        c.p_if = val(p_if)[0];
        c.p_ix = val(p_ix)[0];
        c.p_iy = val(p_iy)[0];
        c.p_of = val(p_of)[0];
        c.p_kx = c.p_ky = val(p_k)[0];
        c.batch = val(batch)[0];
        c.act_buf_mb = val(act)[0];
        c.wgt_buf_mb = val(wgt)[0];
        c.mask_buf_mb = val(mask)[0];
        const auto mem = val(memory);
        c.mem_type = space_.mem_types[static_cast<std::size_t>(mem[0])];
        c.mem_config = mem[1];
        return p;
    }

    /// Best-first walk over index vectors into per-group sorted option lists.
    /// Each vector is generated once: children only advance positions at or
    /// after the parent's last advanced position.
    class Walker {
    public:
        explicit Walker(const std::vector<Group>& gs) : gs_(gs) {
            for (const auto& g : gs)
                if (g.options.empty()) return;
            State s{0.0, std::vector<std::size_t>(gs.size(), 0), 0};
            s.cost = total(s.idx);
            heap_.push(std::move(s));
        }

        bool next(std::vector<std::size_t>& idx, double& cost) {
            if (heap_.empty()) return false;
            State s = heap_.top();
            heap_.pop();
            for (std::size_t g = s.pivot; g < gs_.size(); ++g) {
                if (s.idx[g] + 1 >= gs_[g].options.size()) continue;
                State c{0.0, s.idx, g};
                ++c.idx[g];
                c.cost = total(c.idx);
                heap_.push(std::move(c));
            }
            idx = std::move(s.idx);
            cost = s.cost;
            return true;
        }

    private:
        double total(const std::vector<std::size_t>& idx) const {
            double c = 0;
            for (std::size_t g = 0; g < gs_.size(); ++g) c += gs_[g].options[idx[g]].cost;
            return c;
        }

        struct State {
            double cost;
            std::vector<std::size_t> idx;
            std::size_t pivot;
            bool operator>(const State& o) const { return cost != o.cost ? cost > o.cost : idx > o.idx; }
        };
        const std::vector<Group>& gs_;
        std::priority_queue<State, std::vector<State>, std::greater<State>> heap_;
    };

    const cnn2vec::EmbeddingTable* table_;
    AccelSpace space_;
};

}  // namespace codebench::gobi
