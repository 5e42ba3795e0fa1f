#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"

namespace codebench::cnn {

enum class OpKind {
    input,
    output,
    conv,
    dwconv,
    conv3d,
    transposed_conv,
    maxpool,
    avgpool,
    channel_shuffle,
    dropout,
    upsample,
    flatten,
    global_avg_pool,
    dense,
};

enum class Activation { none, relu, silu };

inline constexpr std::array<std::pair<OpKind, std::string_view>, 14> kOpKindNames{{
    {OpKind::input, "input"},
    {OpKind::output, "output"},
    {OpKind::conv, "conv"},
    {OpKind::dwconv, "dwconv"},
    {OpKind::conv3d, "conv3d"},
    {OpKind::transposed_conv, "transposed-conv"},
    {OpKind::maxpool, "maxpool"},
    {OpKind::avgpool, "avgpool"},
    {OpKind::channel_shuffle, "channel-shuffle"},
    {OpKind::dropout, "dropout"},
    {OpKind::upsample, "upsample"},
    {OpKind::flatten, "flatten"},
    {OpKind::global_avg_pool, "global-avg-pool"},
    {OpKind::dense, "dense"},
}};

inline std::string_view to_string(OpKind k) {
    for (const auto& [kind, name] : kOpKindNames)
        if (kind == k) return name;
    return "?";
}

inline OpKind op_kind_from_string(std::string_view s) {
    for (const auto& [kind, name] : kOpKindNames)
        if (name == s) return kind;
    throw ParseError("unknown block kind '" + std::string(s) + "'");
}

inline std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::silu: return "silu";
        default: return "none";
    }
}

inline Activation activation_from_string(std::string_view s) {
    if (s == "none" || s.empty()) return Activation::none;
    if (s == "relu") return Activation::relu;
    if (s == "silu") return Activation::silu;
    throw ParseError("unknown activation '" + std::string(s) + "'");
}

inline bool is_conv_like(OpKind k) {
    return k == OpKind::conv || k == OpKind::dwconv || k == OpKind::conv3d || k == OpKind::transposed_conv;
}

/// Integer attributes of a block. Unused attributes stay zero; zero channels on a
/// depth-wise conv means "same as input".
struct BlockParams {
    int kernel = 0;
    int channels = 0;
    int groups = 0;
    int padding = 0;
    int stride = 0;
    int probability_pct = 0;
    int target_size = 0;
    int hidden_units = 0;

    auto operator<=>(const BlockParams&) const = default;
};

struct OpBlock {
    OpKind kind = OpKind::input;
    BlockParams params;
    Activation activation = Activation::none;

    auto operator<=>(const OpBlock&) const = default;

    /// Canonical text label; two blocks are the same operation iff labels match.
    std::string label() const {
        std::string s(to_string(kind));
        auto add = [&s](std::string_view key, int v) {
            if (v != 0) s += ":" + std::string(key) + std::to_string(v);
        };
        add("k", params.kernel);
        add("c", params.channels);
        add("g", params.groups);
        add("p", params.padding);
        add("s", params.stride);
        add("q", params.probability_pct);
        add("t", params.target_size);
        add("h", params.hidden_units);
        if (activation != Activation::none) s += ":" + std::string(to_string(activation));
        return s;
    }
};

inline OpBlock make_input() { return {OpKind::input, {}, Activation::none}; }
inline OpBlock make_output() { return {OpKind::output, {}, Activation::none}; }

inline OpBlock make_conv(int kernel, int channels, Activation act = Activation::relu, int stride = 1, int groups = 1) {
    BlockParams p;
    p.kernel = kernel;
    p.channels = channels;
    p.groups = groups;
    p.padding = kernel / 2;
    p.stride = stride;
    return {OpKind::conv, p, act};
}

inline OpBlock make_pool(OpKind kind, int kernel, int stride, int padding = 1) {
    BlockParams p;
    p.kernel = kernel;
    p.stride = stride;
    p.padding = padding;
    return {kind, p, Activation::none};
}

inline OpBlock make_dense(int hidden, Activation act = Activation::relu) {
    BlockParams p;
    p.hidden_units = hidden;
    return {OpKind::dense, p, act};
}

inline OpBlock make_dropout(int pct) {
    BlockParams p;
    p.probability_pct = pct;
    return {OpKind::dropout, p, Activation::none};
}

inline OpBlock make_simple(OpKind kind) { return {kind, {}, Activation::none}; }

// JSON interchange ---------------------------------------------------------

inline nlohmann::json to_json(const OpBlock& b) {
    nlohmann::json params = nlohmann::json::object();
    auto put = [&params](const char* key, int v) {
        if (v != 0) params[key] = v;
    };
    put("kernel", b.params.kernel);
    put("channels", b.params.channels);
    put("groups", b.params.groups);
    put("padding", b.params.padding);
    put("stride", b.params.stride);
    put("probability-percent", b.params.probability_pct);
    put("target-size", b.params.target_size);
    put("hidden-units", b.params.hidden_units);
    return {{"kind", std::string(to_string(b.kind))}, {"params", params}, {"activation", std::string(to_string(b.activation))}};
}

inline OpBlock block_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ParseError("block must be an object with a 'kind'");
    OpBlock b;
    b.kind = op_kind_from_string(j.at("kind").get<std::string>());
    b.activation = activation_from_string(j.value("activation", std::string("none")));
    if (j.contains("params")) {
        const auto& p = j.at("params");
        static const std::map<std::string, int BlockParams::*> kFields{
            {"kernel", &BlockParams::kernel},
            {"channels", &BlockParams::channels},
            {"groups", &BlockParams::groups},
            {"padding", &BlockParams::padding},
            {"stride", &BlockParams::stride},
            {"probability-percent", &BlockParams::probability_pct},
            {"target-size", &BlockParams::target_size},
            {"hidden-units", &BlockParams::hidden_units},
        };
        for (const auto& [key, value] : p.items()) {
            auto it = kFields.find(key);
            if (it == kFields.end()) throw ParseError("unknown block parameter '" + key + "'");
            b.params.*(it->second) = value.get<int>();
        }
    }
    return b;
}

// Block catalog -------------------------------------------------------------

/// Permissible attribute sets for the block space. Defaults are the desk-scale
/// space; larger sets are expressible by widening these lists.
struct BlockSpaceConfig {
    std::vector<int> conv_kernels{1, 3, 5};
    std::vector<int> conv_channels{8, 16, 32, 64};
    std::vector<Activation> conv_activations{Activation::relu, Activation::silu};
    std::vector<int> dwconv_kernels{3, 5};
    std::vector<int> conv3d_kernels{3};
    std::vector<int> transposed_kernels{3};
    std::vector<int> pool_kernels{3};
    std::vector<int> pool_strides{1, 2};
    std::vector<int> pool_paddings{1};
    std::vector<int> shuffle_groups{2, 4};
    std::vector<int> dropout_pcts{10, 20, 50};
    std::vector<int> upsample_sizes{32};
    std::vector<int> dense_hidden{84, 120};
    int num_classes = 10;
};

/// Proxy for the computational cost of a block, used only to order the catalog.
inline double complexity_score(const OpBlock& b) {
    const auto& p = b.params;
    const double act = b.activation == Activation::silu ? 1.25 : 1.0;
    switch (b.kind) {
        case OpKind::input:
        case OpKind::output: return 0.0;
        case OpKind::flatten: return 0.5;
        case OpKind::dropout: return 1.0 + p.probability_pct / 1000.0;
        case OpKind::channel_shuffle: return 2.0 + p.groups / 100.0;
        case OpKind::global_avg_pool: return 3.0;
        case OpKind::maxpool:
        case OpKind::avgpool:
            return p.kernel * p.kernel * (p.stride == 1 ? 1.5 : 1.0) + (b.kind == OpKind::avgpool ? 0.1 : 0.0);
        case OpKind::upsample: return 4.0 + p.target_size / 100.0;
        case OpKind::dwconv: return 8.0 * p.kernel * p.kernel * act;
        case OpKind::dense: return p.hidden_units * act;
        case OpKind::conv:
            return p.kernel * p.kernel * p.channels * act / std::max(1, p.groups) * (1.0 / std::max(1, p.stride * p.stride)) * 8.0;
        case OpKind::transposed_conv: return p.kernel * p.kernel * p.channels * act * 8.0 * 1.5;
        case OpKind::conv3d: return p.kernel * p.kernel * p.kernel * p.channels * act * 8.0;
    }
    return 0.0;
}

/// Every permissible block, sorted by ascending complexity (ties by label).
/// The position in this list is the block's complexity index.
class BlockCatalog {
public:
    explicit BlockCatalog(const BlockSpaceConfig& cfg = {}) {
        std::vector<OpBlock> all{make_input(), make_output(), make_simple(OpKind::flatten),
                                 make_simple(OpKind::global_avg_pool)};
        for (int k : cfg.conv_kernels)
            for (int c : cfg.conv_channels)
                for (auto a : cfg.conv_activations) all.push_back(make_conv(k, c, a));
        for (int k : cfg.dwconv_kernels)
            for (auto a : cfg.conv_activations) {
                BlockParams p;
                p.kernel = k;
                p.padding = k / 2;
                p.stride = 1;
                all.push_back({OpKind::dwconv, p, a});
            }
        for (int k : cfg.conv3d_kernels)
            for (int c : cfg.conv_channels) {
                auto b = make_conv(k, c);
                b.kind = OpKind::conv3d;
                all.push_back(b);
            }
        for (int k : cfg.transposed_kernels)
            for (int c : cfg.conv_channels) {
                auto b = make_conv(k, c, Activation::relu, 2);
                b.kind = OpKind::transposed_conv;
                all.push_back(b);
            }
        for (auto kind : {OpKind::maxpool, OpKind::avgpool})
            for (int k : cfg.pool_kernels)
                for (int s : cfg.pool_strides)
                    for (int pad : cfg.pool_paddings) all.push_back(make_pool(kind, k, s, pad));
        for (int g : cfg.shuffle_groups) {
            BlockParams p;
            p.groups = g;
            all.push_back({OpKind::channel_shuffle, p, Activation::none});
        }
        for (int q : cfg.dropout_pcts) all.push_back(make_dropout(q));
        for (int t : cfg.upsample_sizes) {
            BlockParams p;
            p.target_size = t;
            all.push_back({OpKind::upsample, p, Activation::none});
        }
        for (int h : cfg.dense_hidden) all.push_back(make_dense(h));
        all.push_back(make_dense(cfg.num_classes, Activation::none));

        std::vector<std::pair<double, std::string>> keys;
        std::map<std::string, OpBlock> by_label;
        for (const auto& b : all) {
            auto label = b.label();
            if (by_label.emplace(label, b).second) keys.emplace_back(complexity_score(b), label);
        }
        std::sort(keys.begin(), keys.end());
        for (const auto& [score, label] : keys) {
            index_.emplace(label, blocks_.size());
            blocks_.push_back(by_label.at(label));
        }
    }

    std::size_t size() const { return blocks_.size(); }
    const std::vector<OpBlock>& blocks() const { return blocks_; }
    bool contains(const OpBlock& b) const { return index_.count(b.label()) != 0; }

    std::size_t index_of(const OpBlock& b) const {
        auto it = index_.find(b.label());
        if (it == index_.end()) throw ValidationError("block '" + b.label() + "' is not in the catalog");
        return it->second;
    }

private:
    std::vector<OpBlock> blocks_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace codebench::cnn
