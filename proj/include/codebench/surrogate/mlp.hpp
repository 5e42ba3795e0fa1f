#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"

namespace codebench::surrogate {

/// Input groups (e.g. CNN embedding, accelerator embedding) each pass
/// through their own tanh trunk; the trunk outputs are concatenated and fed
/// to a tanh head ending in a linear output layer.
struct NetSpec {
    std::vector<int> split{16, 13};
    std::vector<int> trunk{64, 64};
    std::vector<int> head{64, 64};
    int outputs = 1;

    int input_dim() const {
        int n = 0;
        for (int s : split) n += s;
        return n;
    }
};

inline nlohmann::json to_json(const NetSpec& s) {
    return {{"split", s.split}, {"trunk", s.trunk}, {"head", s.head}, {"outputs", s.outputs}};
}

inline NetSpec net_spec_from_json(const nlohmann::json& j) {
    NetSpec s;
    s.split = j.at("split").get<std::vector<int>>();
    s.trunk = j.at("trunk").get<std::vector<int>>();
    s.head = j.at("head").get<std::vector<int>>();
    s.outputs = j.at("outputs").get<int>();
    return s;
}

struct Dense {
    Mat W;  // out x in
    Mat b;  // out x 1
};

/// Per-layer inputs and (pre-dropout) tanh activations of a batch; columns
/// are samples.
struct Cache {
    std::vector<std::vector<Mat>> trunk_in, trunk_act;  // [branch][layer]
    std::vector<Mat> head_in, head_act;
    std::vector<std::vector<Mat>> trunk_mask;
    std::vector<Mat> head_mask;
};

class Mlp {
public:
    Mlp() = default;

    Mlp(const NetSpec& spec, Rng& rng) : spec_(spec) {
        if (spec.split.empty() || spec.outputs < 1) throw ParameterError("network needs inputs and outputs");
        if (spec.trunk.empty() || spec.head.empty()) throw ParameterError("network needs hidden trunk and head layers");
        int concat = 0;
        for (int in : spec.split) {
            if (in < 1) throw ParameterError("input groups must be non-empty");
            std::vector<Dense> layers;
            int prev = in;
            for (int w : spec.trunk) {
                layers.push_back(init(w, prev, rng));
                prev = w;
            }
            concat += prev;
            branches_.push_back(std::move(layers));
        }
        int prev = concat;
        for (int w : spec.head) {
            head_.push_back(init(w, prev, rng));
            prev = w;
        }
        head_.push_back(init(spec.outputs, prev, rng));
    }

    const NetSpec& spec() const { return spec_; }

    /// Dropout masks (scaled keep indicators) for every hidden layer.
    void sample_masks(Cache& c, Eigen::Index n, double p, Rng& rng) const {
        std::bernoulli_distribution keep(1.0 - p);
        const double scale = p > 0 ? 1.0 / (1.0 - p) : 1.0;
        auto mask = [&](Eigen::Index rows) {
            Mat m(rows, n);
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = keep(rng) ? scale : 0.0;
            return m;
        };
        c.trunk_mask.assign(branches_.size(), {});
        for (std::size_t b = 0; b < branches_.size(); ++b)
            for (const auto& L : branches_[b]) c.trunk_mask[b].push_back(mask(L.W.rows()));
        c.head_mask.clear();
        for (std::size_t l = 0; l + 1 < head_.size(); ++l) c.head_mask.push_back(mask(head_[l].W.rows()));
    }

    /// X is input_dim x N. Uses the masks already in `c` when present.
    Mat forward(const Mat& X, Cache& c) const {
        const bool drop = !c.head_mask.empty();
        c.trunk_in.assign(branches_.size(), {});
        c.trunk_act.assign(branches_.size(), {});
        c.head_in.clear();
        c.head_act.clear();
        std::vector<Mat> outs;
        Eigen::Index offset = 0, concat_rows = 0;
        for (std::size_t b = 0; b < branches_.size(); ++b) {
            Mat a = X.middleRows(offset, spec_.split[b]);
            offset += spec_.split[b];
            for (std::size_t l = 0; l < branches_[b].size(); ++l) {
                c.trunk_in[b].push_back(a);
                Mat z = (branches_[b][l].W * a).colwise() + branches_[b][l].b.col(0);
                a = z.array().tanh().matrix();
                c.trunk_act[b].push_back(a);
                if (drop) a = a.cwiseProduct(c.trunk_mask[b][l]);
            }
            concat_rows += a.rows();
            outs.push_back(std::move(a));
        }
        Mat h(concat_rows, X.cols());
        Eigen::Index r = 0;
        for (auto& o : outs) {
            h.middleRows(r, o.rows()) = o;
            r += o.rows();
        }
        for (std::size_t l = 0; l + 1 < head_.size(); ++l) {
            c.head_in.push_back(h);
            Mat z = (head_[l].W * h).colwise() + head_[l].b.col(0);
            h = z.array().tanh().matrix();
            c.head_act.push_back(h);
            if (drop) h = h.cwiseProduct(c.head_mask[l]);
        }
        c.head_in.push_back(h);
        return (head_.back().W * h).colwise() + head_.back().b.col(0);
    }

    Mat forward(const Mat& X) const {
        Cache c;
        return forward(X, c);
    }

    /// Backpropagates dOut (outputs x N) through a cached forward pass.
    /// Accumulates parameter gradients into `grad` (same shape as params())
    /// when non-null and returns the input gradient (input_dim x N).
    Mat backward(const Cache& c, const Mat& dOut, std::vector<Mat>* grad) const {
        std::size_t gi = param_count() - 2;  // index of the output layer's W
        Mat d = dOut;
        auto accumulate = [&](const Mat& delta, const Mat& in, std::size_t idx) {
            if (!grad) return;
            (*grad)[idx] += delta * in.transpose();
            (*grad)[idx + 1] += delta.rowwise().sum();
        };
        accumulate(d, c.head_in.back(), gi);
        Mat dh = head_.back().W.transpose() * d;
        for (std::size_t l = head_.size() - 1; l-- > 0;) {
            gi -= 2;
            if (!c.head_mask.empty()) dh = dh.cwiseProduct(c.head_mask[l]);
            Mat dz = dh.cwiseProduct((1.0 - c.head_act[l].array().square()).matrix());
            accumulate(dz, c.head_in[l], gi);
            dh = head_[l].W.transpose() * dz;
        }
        Mat dX(spec_.input_dim(), dOut.cols());
        Eigen::Index offset = 0;
        std::vector<Eigen::Index> starts;
        {
            Eigen::Index o = 0;
            for (const auto& br : branches_) {
                starts.push_back(o);
                o += br.back().W.rows();
            }
        }
        // trunk parameters precede the head in params() order
        std::size_t branch_base = 0;
        for (std::size_t b = 0; b < branches_.size(); ++b) {
            Mat da = dh.middleRows(starts[b], branches_[b].back().W.rows());
            std::size_t idx = branch_base + 2 * branches_[b].size();
            for (std::size_t l = branches_[b].size(); l-- > 0;) {
                idx -= 2;
                if (!c.trunk_mask.empty()) da = da.cwiseProduct(c.trunk_mask[b][l]);
                Mat dz = da.cwiseProduct((1.0 - c.trunk_act[b][l].array().square()).matrix());
                accumulate(dz, c.trunk_in[b][l], idx);
                da = branches_[b][l].W.transpose() * dz;
            }
            dX.middleRows(offset, spec_.split[b]) = da;
            offset += spec_.split[b];
            branch_base += 2 * branches_[b].size();
        }
        return dX;
    }

    /// Parameters in a fixed order: every branch (W, b per layer), then the head.
    std::vector<Mat*> params() {
        std::vector<Mat*> p;
        for (auto& br : branches_)
            for (auto& L : br) {
                p.push_back(&L.W);
                p.push_back(&L.b);
            }
        for (auto& L : head_) {
            p.push_back(&L.W);
            p.push_back(&L.b);
        }
        return p;
    }

    std::vector<const Mat*> params() const {
        std::vector<const Mat*> p;
        for (const auto& br : branches_)
            for (const auto& L : br) {
                p.push_back(&L.W);
                p.push_back(&L.b);
            }
        for (const auto& L : head_) {
            p.push_back(&L.W);
            p.push_back(&L.b);
        }
        return p;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& br : branches_) n += 2 * br.size();
        return n + 2 * head_.size();
    }

    std::vector<Mat> zero_grad() const {
        std::vector<Mat> g;
        for (const Mat* p : params()) g.push_back(Mat::Zero(p->rows(), p->cols()));
        return g;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const Mat* p : params()) {
            std::vector<double> v(p->data(), p->data() + p->size());
            arr.push_back({{"rows", p->rows()}, {"cols", p->cols()}, {"data", v}});
        }
        return {{"spec", surrogate::to_json(spec_)}, {"params", arr}};
    }

    static Mlp from_json(const nlohmann::json& j) {
        Rng rng(0);
        Mlp m(net_spec_from_json(j.at("spec")), rng);
        auto ps = m.params();
        const auto& arr = j.at("params");
        if (arr.size() != ps.size()) throw ParseError("checkpoint parameter count mismatch");
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto rows = arr[i].at("rows").get<Eigen::Index>();
            const auto cols = arr[i].at("cols").get<Eigen::Index>();
            const auto data = arr[i].at("data").get<std::vector<double>>();
            if (rows != ps[i]->rows() || cols != ps[i]->cols() || static_cast<Eigen::Index>(data.size()) != rows * cols)
                throw ParseError("checkpoint parameter shape mismatch");
            *ps[i] = Eigen::Map<const Mat>(data.data(), rows, cols);
        }
        return m;
    }

private:
    static Dense init(int out, int in, Rng& rng) {
        const double r = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> u(-r, r);
        Dense d{Mat(out, in), Mat::Zero(out, 1)};
        for (Eigen::Index i = 0; i < d.W.size(); ++i) d.W.data()[i] = u(rng);
        return d;
    }

    NetSpec spec_;
    std::vector<std::vector<Dense>> branches_;
    std::vector<Dense> head_;
};

/// Adam over an Mlp's parameters.
class Adam {
public:
    explicit Adam(const Mlp& net, double lr = 1e-3, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(b1), b2_(b2), eps_(eps), m_(net.zero_grad()), v_(net.zero_grad()) {}

    void set_lr(double lr) { lr_ = lr; }

    void step(Mlp& net, const std::vector<Mat>& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        auto ps = net.params();
        for (std::size_t i = 0; i < ps.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i].cwiseProduct(grad[i]);
            *ps[i] -= (lr_ * (m_[i] / c1).array() / ((v_[i] / c2).array().sqrt() + eps_)).matrix();
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Mat> m_, v_;
};

}  // namespace codebench::surrogate
