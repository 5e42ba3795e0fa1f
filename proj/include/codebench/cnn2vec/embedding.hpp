#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "codebench/cnn_space/ged.hpp"
#include "codebench/cnn_space/hash.hpp"
#include "codebench/cnn_space/neighbors.hpp"
#include "codebench/common.hpp"

namespace codebench::cnn2vec {

/// Digest -> d-dimensional vector. Entries are kept in digest order, which is
/// also the tie-break order for nearest-entry queries.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(int d) : d_(d) {
        if (d < 1) throw ParameterError("embedding dimension must be >= 1");
    }

    int dim() const { return d_; }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, std::vector<double>>& entries() const { return entries_; }

    void set(const std::string& digest, std::vector<double> v) {
        if (static_cast<int>(v.size()) != d_) throw ParameterError("embedding has wrong dimension");
        for (double x : v)
            if (!std::isfinite(x)) throw ParameterError("embedding must be finite");
        entries_[digest] = std::move(v);
    }

    bool contains(const std::string& digest) const { return entries_.count(digest) != 0; }

    const std::vector<double>& embed(const std::string& digest) const {
        auto it = entries_.find(digest);
        if (it == entries_.end()) throw LookupError("no embedding for digest " + digest);
        return it->second;
    }

    /// Entry minimising Euclidean distance to x; ties go to the smaller digest.
    std::string nearest_valid(const std::vector<double>& x) const {
        auto ranked = ranked_by_distance(x);
        if (ranked.empty()) throw LookupError("embedding table is empty");
        return ranked.front().second;
    }

    /// All entries sorted by (squared distance, digest).
    std::vector<std::pair<double, std::string>> ranked_by_distance(const std::vector<double>& x) const {
        if (static_cast<int>(x.size()) != d_) throw ParameterError("query has wrong dimension");
        std::vector<std::pair<double, std::string>> out;
        out.reserve(entries_.size());
        for (const auto& [digest, e] : entries_) {
            double s = 0.0;
            for (int i = 0; i < d_; ++i) s += (x[i] - e[i]) * (x[i] - e[i]);
            out.emplace_back(s, digest);
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json entries = nlohmann::json::object();
        for (const auto& [digest, v] : entries_) entries[digest] = v;
        return {{"d", d_}, {"entries", entries}};
    }

    static EmbeddingTable from_json(const nlohmann::json& j) {
        try {
            EmbeddingTable t(j.at("d").get<int>());
            for (const auto& [digest, v] : j.at("entries").items()) t.set(digest, v.get<std::vector<double>>());
            return t;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed embedding table: ") + e.what());
        }
    }

    void save(const std::string& path) const {
        std::ofstream f(path);
        if (!f) throw Error("cannot write " + path);
        f << to_json().dump(2) << '\n';
    }

    static EmbeddingTable load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw LookupError("cannot open " + path);
        try {
            return from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed embedding table: ") + e.what());
        }
    }

private:
    int d_ = 1;
    std::map<std::string, std::vector<double>> entries_;
};

struct TrainOptions {
    int d = 16;
    int epochs = 2000;
    double step = 1e-2;
    double momentum = 0.9;
    double init_range = 0.1;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.0;  // pairs excluded from the loss, for validation
};

struct TrainResult {
    EmbeddingTable table;
    std::vector<std::string> digests;  // row order of `geds`
    Mat geds;
    double stress = 0.0;               // final loss / trained pair count
    std::vector<double> loss_curve;    // loss at the start of every epoch, plus final
    std::vector<std::pair<std::size_t, std::size_t>> holdout_pairs;
};

/// Pairwise GED matrix over unique graphs (deduplicated by digest, digest order).
inline std::pair<std::vector<std::string>, Mat> ged_matrix(const std::vector<cnn::ComputationalGraph>& graphs,
                                                           cnn::GedCalculator& calc) {
    const cnn::GraphLimits loose{32, 64, 32, 1u << 20};
    std::map<std::string, const cnn::ComputationalGraph*> unique;
    for (const auto& g : graphs) unique.emplace(cnn::graph_hash(g, loose), &g);
    std::vector<std::string> digests;
    std::vector<const cnn::ComputationalGraph*> ptrs;
    for (const auto& [d, p] : unique) {
        digests.push_back(d);
        ptrs.push_back(p);
    }
    const auto n = static_cast<Eigen::Index>(ptrs.size());
    Mat D = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = calc(*ptrs[i], *ptrs[j]);
    return {digests, D};
}

/// Fits embeddings to a precomputed distance matrix by minimising
/// sum_{i<j} (|e_i - e_j| - D_ij)^2 with momentum gradient descent. The
/// gradient is divided by (N - 1) so the step size is independent of N.
inline TrainResult train_on_distances(const std::vector<std::string>& digests, const Mat& D, const TrainOptions& opt) {
    const auto n = static_cast<Eigen::Index>(digests.size());
    if (opt.d < 1) throw ParameterError("embedding dimension must be >= 1");
    if (n < 2) throw ParameterError("need at least two distinct graphs");
    if (opt.epochs < 0 || opt.step <= 0) throw ParameterError("invalid training schedule");

    Rng rng(opt.seed);
    std::uniform_real_distribution<double> init(-opt.init_range, opt.init_range);
    Mat E(n, opt.d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int k = 0; k < opt.d; ++k) E(i, k) = init(rng);

    TrainResult res;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> active = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, true);
    if (opt.holdout_fraction > 0) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (uniform01(rng) < opt.holdout_fraction) {
                    active(i, j) = active(j, i) = false;
                    res.holdout_pairs.emplace_back(i, j);
                }
    }
    std::size_t pairs = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) pairs += active(i, j) ? 1 : 0;
    if (pairs == 0) throw ParameterError("no training pairs left after holdout");

    Mat velocity = Mat::Zero(n, opt.d);
    Mat grad(n, opt.d);
    const double scale = 1.0 / static_cast<double>(n - 1);
    auto evaluate = [&](bool with_grad) {
        double loss = 0.0;
        if (with_grad) grad.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!active(i, j)) continue;
                Vec diff = E.row(i) - E.row(j);
                const double dist = diff.norm();
                const double r = dist - D(i, j);
                loss += r * r;
                if (with_grad && dist > 1e-12) {
                    Vec g = (2.0 * r / dist) * diff;
                    grad.row(i) += g.transpose();
                    grad.row(j) -= g.transpose();
                }
            }
        return loss;
    };
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        res.loss_curve.push_back(evaluate(true));
        velocity = opt.momentum * velocity - opt.step * scale * grad;
        E += velocity;
    }
    const double final_loss = evaluate(false);
    res.loss_curve.push_back(final_loss);
    res.stress = final_loss / static_cast<double>(pairs);

    res.table = EmbeddingTable(opt.d);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<double> v(opt.d);
        for (int k = 0; k < opt.d; ++k) v[k] = E(i, k);
        res.table.set(digests[i], std::move(v));
    }
    res.digests = digests;
    res.geds = D;
    return res;
}

inline TrainResult train_embeddings(const std::vector<cnn::ComputationalGraph>& graphs, cnn::GedCalculator& calc,
                                    const TrainOptions& opt) {
    if (opt.d < 1) throw ParameterError("embedding dimension must be >= 1");
    if (graphs.size() < 2) throw ParameterError("need at least two graphs");
    auto [digests, D] = ged_matrix(graphs, calc);
    return train_on_distances(digests, D, opt);
}

// Diagnostics -----------------------------------------------------------------

inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw ParameterError("spearman needs two equal-length series");
    auto ra = average_ranks(a);
    auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0 || sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

/// Embedded distance vs GED over the given pairs (all pairs when empty).
inline std::pair<std::vector<double>, std::vector<double>> distance_pairs(
    const TrainResult& r, const std::vector<std::pair<std::size_t, std::size_t>>& pairs = {}) {
    std::vector<double> emb, ged;
    auto add = [&](std::size_t i, std::size_t j) {
        emb.push_back(cnn::euclidean(r.table.embed(r.digests[i]), r.table.embed(r.digests[j])));
        ged.push_back(r.geds(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    };
    if (pairs.empty()) {
        for (std::size_t i = 0; i < r.digests.size(); ++i)
            for (std::size_t j = i + 1; j < r.digests.size(); ++j) add(i, j);
    } else {
        for (auto [i, j] : pairs) add(i, j);
    }
    return {emb, ged};
}

/// Knee point of a decreasing stress-vs-dimension curve: the candidate with
/// the largest gap below the chord joining the first and last points, after
/// normalising both axes to [0, 1].
inline int knee_dimension(const std::vector<int>& dims, const std::vector<double>& stress) {
    if (dims.size() != stress.size() || dims.empty()) throw ParameterError("knee detection needs matching non-empty series");
    if (dims.size() < 3) return dims.front();
    const double x0 = dims.front(), x1 = dims.back();
    const double ymax = *std::max_element(stress.begin(), stress.end());
    const double ymin = *std::min_element(stress.begin(), stress.end());
    if (ymax == ymin || x1 == x0) return dims.front();
    std::size_t best = 0;
    double best_gap = -std::numeric_limits<double>::infinity();
    const double y0 = (stress.front() - ymin) / (ymax - ymin);
    const double y1 = (stress.back() - ymin) / (ymax - ymin);
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const double x = (dims[i] - x0) / (x1 - x0);
        const double y = (stress[i] - ymin) / (ymax - ymin);
        const double gap = (y0 + (y1 - y0) * x) - y;
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return dims[best];
}

/// Trains one table per candidate dimension and returns the knee.
inline int select_dimension(const std::vector<std::string>& digests, const Mat& D, const std::vector<int>& dims, TrainOptions opt,
                            std::vector<double>* stresses = nullptr) {
    std::vector<double> s;
    for (int d : dims) {
        opt.d = d;
        s.push_back(train_on_distances(digests, D, opt).stress);
    }
    if (stresses) *stresses = s;
    return knee_dimension(dims, s);
}

}  // namespace codebench::cnn2vec
