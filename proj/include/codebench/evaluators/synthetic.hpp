#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"
#include "codebench/evaluators/recipe.hpp"

namespace codebench::eval {

struct Bump {
    Vec center;
    Vec width;  // per-coordinate standard deviation
    double height = 0;
};

/// Seeded accuracy landscape over pair embeddings: a floor plus separated
/// anisotropic Gaussian bumps, clipped to [0, 1], plus a recipe-driven offset
/// whose standard deviation over random recipes equals noise_scale.
class SyntheticLandscape {
public:
    SyntheticLandscape() = default;

    SyntheticLandscape(std::vector<Bump> bumps, double floor, double noise_scale, std::uint64_t seed)
        : bumps_(std::move(bumps)), floor_(floor), noise_scale_(noise_scale), seed_(seed) {
        if (bumps_.size() < 3) throw ParameterError("landscape needs at least three bumps");
        const auto d = bumps_.front().center.size();
        for (const auto& b : bumps_) {
            if (b.center.size() != d || b.width.size() != d) throw ParameterError("bump dimensions disagree");
            if (!(b.width.array() > 0).all() || !(b.height > 0)) throw ParameterError("bump widths and heights must be positive");
        }
        if (!(floor_ >= 0 && floor_ < 1) || !(noise_scale_ >= 0)) throw ParameterError("invalid landscape floor or noise scale");
        Rng rng(derive_seed(seed_, 0xface));
        phase_weights_ = Vec(d);
        for (Eigen::Index i = 0; i < d; ++i) phase_weights_(i) = std::normal_distribution<double>(0.0, 7.0)(rng);
    }

    /// Bumps centred on `count` of the given points (at least `min_separation`
    /// base widths apart, i.e. |(c_i - c_j) / width| >= min_separation), heights evenly spaced from `top` down to `top / 2`, widths
    /// `width` times a per-coordinate log-uniform factor in [1/anisotropy, anisotropy].
    static SyntheticLandscape place(const std::vector<Vec>& points, std::size_t count, double top, const Vec& width, double anisotropy,
                                    double min_separation, double floor, double noise_scale, std::uint64_t seed) {
        if (count < 3) throw ParameterError("landscape needs at least three bumps");
        if (!(anisotropy >= 1)) throw ParameterError("anisotropy must be >= 1");
        if (points.empty() || width.size() != points.front().size()) throw ParameterError("bump widths have the wrong dimension");
        Rng rng(seed);
        std::vector<std::size_t> order(points.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Bump> bumps;
        for (std::size_t i : order) {
            if (bumps.size() == count) break;
            bool far = true;
            for (const auto& b : bumps) far = far && ((b.center - points[i]).array() / width.array()).matrix().norm() >= min_separation;
            if (!far) continue;
            Bump b;
            b.center = points[i];
            b.width = Vec(points[i].size());
            for (Eigen::Index k = 0; k < b.width.size(); ++k)
                b.width(k) = width(k) * std::exp(std::log(anisotropy) * (2 * uniform01(rng) - 1));
            const double frac = count > 1 ? static_cast<double>(bumps.size()) / static_cast<double>(count - 1) : 0.0;
            b.height = top * (1.0 - 0.5 * frac);
            bumps.push_back(std::move(b));
        }
        if (bumps.size() < count) throw ParameterError("cannot place that many separated bumps");
        return SyntheticLandscape(std::move(bumps), floor, noise_scale, seed);
    }

    const std::vector<Bump>& bumps() const { return bumps_; }
    double noise_scale() const { return noise_scale_; }
    Eigen::Index dim() const { return bumps_.empty() ? 0 : bumps_.front().center.size(); }

    double base(const Vec& x) const {
        if (x.size() != dim()) throw ParameterError("landscape query has the wrong dimension");
        double v = floor_;
        for (const auto& b : bumps_) v += b.height * std::exp(-0.5 * ((x - b.center).array() / b.width.array()).square().sum());
        return std::clamp(v, 0.0, 1.0);
    }

    /// Zero-mean offset with variance noise_scale^2 over recipes drawn by
    /// Recipe::sample: amplitude grows with the learning-rate coordinate and
    /// the phase mixes the other two with a position-dependent shift.
    double noise(const Vec& x, const Recipe& r) const {
        const auto u = r.coords();
        const double pi = std::acos(-1.0);
        double phase = u[1] + 2.0 * u[2] + phase_weights_.dot(x);
        phase -= std::floor(phase);
        return noise_scale_ * std::sqrt(3.0) * u[0] * std::sqrt(2.0) * std::cos(2 * pi * phase);
    }

    double accuracy(const Vec& x, const Recipe& r) const { return std::clamp(base(x) + noise(x, r), 0.0, 1.0); }

    nlohmann::json to_json() const {
        nlohmann::json bs = nlohmann::json::array();
        for (const auto& b : bumps_) bs.push_back({{"center", to_std(b.center)}, {"width", to_std(b.width)}, {"height", b.height}});
        return {{"bumps", bs}, {"floor", floor_}, {"noise_scale", noise_scale_}, {"seed", seed_}};
    }

    static SyntheticLandscape from_json(const nlohmann::json& j) {
        try {
            std::vector<Bump> bumps;
            for (const auto& b : j.at("bumps"))
                bumps.push_back({to_eigen(b.at("center").get<std::vector<double>>()), to_eigen(b.at("width").get<std::vector<double>>()),
                                 b.at("height").get<double>()});
            return SyntheticLandscape(std::move(bumps), j.at("floor").get<double>(), j.at("noise_scale").get<double>(),
                                      j.at("seed").get<std::uint64_t>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed landscape: ") + e.what());
        }
    }

private:
    std::vector<Bump> bumps_;
    double floor_ = 0.1;
    double noise_scale_ = 0.01;
    std::uint64_t seed_ = 0;
    Vec phase_weights_;
};

}  // namespace codebench::eval
