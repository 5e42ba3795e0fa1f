#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codebench/common.hpp"
#include "codebench/surrogate/mlp.hpp"

namespace codebench::surrogate {

struct SurrogateOptions {
    NetSpec arch{};
    double dropout = 0.1;
    int mc_samples = 10;
    int epochs = 200;
    double lr = 3e-3;
    double sigma2_floor = 1e-6;
    double k1 = 0.5;
    double k2 = 0.5;
    bool heteroscedastic = true;  // false: mean from the teacher, no sigma term
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const SurrogateOptions& o) {
    return {{"arch", to_json(o.arch)}, {"dropout", o.dropout}, {"mc_samples", o.mc_samples}, {"epochs", o.epochs},
            {"lr", o.lr}, {"sigma2_floor", o.sigma2_floor}, {"k1", o.k1}, {"k2", o.k2},
            {"heteroscedastic", o.heteroscedastic}, {"seed", o.seed}};
}

inline SurrogateOptions surrogate_options_from_json(const nlohmann::json& j, SurrogateOptions o = {}) {
    if (j.contains("arch")) o.arch = net_spec_from_json(j.at("arch"));
    o.dropout = j.value("dropout", o.dropout);
    o.mc_samples = j.value("mc_samples", o.mc_samples);
    o.epochs = j.value("epochs", o.epochs);
    o.lr = j.value("lr", o.lr);
    o.sigma2_floor = j.value("sigma2_floor", o.sigma2_floor);
    o.k1 = j.value("k1", o.k1);
    o.k2 = j.value("k2", o.k2);
    o.heteroscedastic = j.value("heteroscedastic", o.heteroscedastic);
    o.seed = j.value("seed", o.seed);
    return o;
}

/// Observed pairs: embeddings (columns) and performance targets in [0, 1].
struct Corpus {
    std::vector<Vec> x;
    std::vector<double> o;

    void add(Vec xi, double oi) {
        x.push_back(std::move(xi));
        o.push_back(oi);
    }
    std::size_t size() const { return x.size(); }
};

struct FitReport {
    double npn_loss = 0;
    double teacher_loss = 0;
    double student_loss = 0;
    std::vector<double> npn_curve;
    std::vector<double> teacher_curve;
    std::vector<double> student_curve;
};

struct Prediction {
    double mu = 0;
    double sigma = 0;
    double xi_hat = 0;
    double ucb = 0;
};

struct InputGradients {
    Vec mu, sigma, xi_hat, ucb;
};

inline double ucb_value(double mu, double sigma, double xi_hat, double k1, double k2) { return mu + k1 * sigma + k2 * xi_hat; }

/// NPN f (mean and aleatoric sigma), MC-dropout teacher g, and student h
/// predicting the teacher's epistemic spread.
class SurrogateStack {
public:
    explicit SurrogateStack(SurrogateOptions opt = {}) : opt_(std::move(opt)), rng_(mix_seed(opt_.seed)) {
        if (opt_.dropout < 0 || opt_.dropout >= 1) throw ParameterError("dropout rate must lie in [0, 1)");
        if (opt_.mc_samples < 2) throw ParameterError("need at least two MC samples");
        if (opt_.epochs < 0 || opt_.lr <= 0) throw ParameterError("invalid training schedule");
        NetSpec npn_spec = opt_.arch;
        npn_spec.outputs = 2;
        NetSpec one = opt_.arch;
        one.outputs = 1;
        Rng init(derive_seed(opt_.seed, 1));
        npn_ = Mlp(npn_spec, init);
        teacher_ = Mlp(one, init);
        student_ = Mlp(one, init);
        const int d = opt_.arch.input_dim();
        shift_ = Vec::Zero(d);
        inv_scale_ = Vec::Ones(d);
    }

    const SurrogateOptions& options() const { return opt_; }
    int input_dim() const { return opt_.arch.input_dim(); }
    bool fitted() const { return fitted_; }

    FitReport fit(const Corpus& corpus) {
        if (corpus.size() == 0) throw ParameterError("cannot fit an empty corpus");
        const auto n = static_cast<Eigen::Index>(corpus.size());
        Mat X(input_dim(), n);
        Mat O(1, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (corpus.x[i].size() != input_dim()) throw ParameterError("corpus embedding has the wrong dimension");
            if (!corpus.x[i].allFinite()) throw ParameterError("corpus embedding is not finite");
            X.col(i) = corpus.x[i];
            O(0, i) = corpus.o[i];
        }
        if (!fitted_) set_normalisation(X);
        const Mat Xn = normalise(X);
        FitReport rep;
        if (opt_.heteroscedastic) train_npn(Xn, O, rep);
        train_teacher(Xn, O, rep);
        const Mat xi = mc_spread(Xn, opt_.mc_samples, derive_seed(opt_.seed, 0x5eed + fits_));
        train_student(Xn, xi, rep);
        ++fits_;
        fitted_ = true;
        return rep;
    }

    /// Mean and aleatoric sigma (teacher mean and zero sigma when the
    /// heteroscedastic head is disabled).
    std::pair<double, double> npn(const Vec& x) const {
        const Mat xn = normalise(x);
        if (!opt_.heteroscedastic) return {teacher_.forward(xn)(0, 0), 0.0};
        const Mat out = npn_.forward(xn);
        return {out(0, 0), std::sqrt(variance(out(1, 0)))};
    }

    /// Standard deviation of n dropout forward passes of the teacher.
    double epistemic(const Vec& x, int n, std::uint64_t seed) const {
        if (n < 2) throw ParameterError("epistemic estimate needs n >= 2");
        return mc_spread(normalise(x), n, seed)(0, 0);
    }

    double student(const Vec& x) const { return softplus(student_.forward(normalise(x))(0, 0)); }

    Prediction predict(const Vec& x) const { return predict_batch(x).front(); }

    std::vector<Prediction> predict_batch(const Mat& X) const {
        const Mat Xn = normalise(X);
        std::vector<Prediction> out(static_cast<std::size_t>(X.cols()));
        const Mat h = student_.forward(Xn);
        Mat f;
        if (opt_.heteroscedastic)
            f = npn_.forward(Xn);
        else
            f = teacher_.forward(Xn);
        for (Eigen::Index i = 0; i < X.cols(); ++i) {
            auto& p = out[static_cast<std::size_t>(i)];
            p.mu = f(0, i);
            p.sigma = opt_.heteroscedastic ? std::sqrt(variance(f(1, i))) : 0.0;
            p.xi_hat = softplus(h(0, i));
            p.ucb = ucb_value(p.mu, p.sigma, p.xi_hat, opt_.k1, opt_.k2);
        }
        return out;
    }

    double ucb(const Vec& x) const { return predict(x).ucb; }

    InputGradients gradients(const Vec& x) const {
        const Mat xn = normalise(x);
        InputGradients g;
        Cache c;
        if (opt_.heteroscedastic) {
            const Mat out = npn_.forward(xn, c);
            const double s = clamp_log_var(out(1, 0));
            const double var = variance(out(1, 0));
            const double dsigma_ds = in_range(out(1, 0)) ? std::exp(s) / (2.0 * std::sqrt(var)) : 0.0;
            Mat d(2, 1);
            d << 1.0, 0.0;
            g.mu = npn_.backward(c, d, nullptr).col(0).cwiseProduct(inv_scale_);
            d << 0.0, dsigma_ds;
            g.sigma = npn_.backward(c, d, nullptr).col(0).cwiseProduct(inv_scale_);
        } else {
            teacher_.forward(xn, c);
            g.mu = teacher_.backward(c, Mat::Ones(1, 1), nullptr).col(0).cwiseProduct(inv_scale_);
            g.sigma = Vec::Zero(x.size());
        }
        Cache cs;
        const double z = student_.forward(xn, cs)(0, 0);
        g.xi_hat = student_.backward(cs, Mat::Constant(1, 1, sigmoid(z)), nullptr).col(0).cwiseProduct(inv_scale_);
        g.ucb = g.mu + opt_.k1 * g.sigma + opt_.k2 * g.xi_hat;
        return g;
    }

    Vec ucb_gradient(const Vec& x) const { return gradients(x).ucb; }

    nlohmann::json to_json() const {
        return {{"options", surrogate::to_json(opt_)},
                {"fitted", fitted_},
                {"fits", fits_},
                {"shift", to_std(shift_)},
                {"inv_scale", to_std(inv_scale_)},
                {"npn", npn_.to_json()},
                {"teacher", teacher_.to_json()},
                {"student", student_.to_json()}};
    }

    static SurrogateStack from_json(const nlohmann::json& j) {
        try {
            SurrogateStack s(surrogate_options_from_json(j.at("options")));
            s.fitted_ = j.at("fitted").get<bool>();
            s.fits_ = j.at("fits").get<std::uint64_t>();
            s.shift_ = to_eigen(j.at("shift").get<std::vector<double>>());
            s.inv_scale_ = to_eigen(j.at("inv_scale").get<std::vector<double>>());
            s.npn_ = Mlp::from_json(j.at("npn"));
            s.teacher_ = Mlp::from_json(j.at("teacher"));
            s.student_ = Mlp::from_json(j.at("student"));
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad surrogate checkpoint: ") + e.what());
        }
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw LookupError("cannot write checkpoint " + path);
        out << to_json().dump();
    }

    static SurrogateStack load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw LookupError("cannot open checkpoint " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("checkpoint " + path + ": " + e.what());
        }
        return from_json(j);
    }

private:
    static constexpr double kLogVarMin = -30.0;
    static constexpr double kLogVarMax = 20.0;

    static double softplus(double z) { return z > 30 ? z : std::log1p(std::exp(z)); }
    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
    static bool in_range(double s) { return s > kLogVarMin && s < kLogVarMax; }
    static double clamp_log_var(double s) { return std::clamp(s, kLogVarMin, kLogVarMax); }
    double variance(double s) const { return std::exp(clamp_log_var(s)) + opt_.sigma2_floor; }

    /// Cosine decay from lr to zero over one fit call.
    double schedule(int epoch) const {
        const double pi = std::acos(-1.0);
        return 0.5 * opt_.lr * (1.0 + std::cos(pi * epoch / std::max(1, opt_.epochs)));
    }

    void set_normalisation(const Mat& X) {
        const auto n = static_cast<double>(X.cols());
        shift_ = X.rowwise().mean();
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            const double var = (X.row(r).array() - shift_(r)).square().sum() / n;
            const double sd = std::sqrt(var);
            inv_scale_(r) = sd > 1e-3 ? 1.0 / sd : 1.0;
        }
    }

    Mat normalise(const Mat& X) const { return (X.colwise() - shift_).array().colwise() * inv_scale_.array(); }

    void train_npn(const Mat& X, const Mat& O, FitReport& rep) {
        Adam adam(npn_, opt_.lr);
        const double n = static_cast<double>(X.cols());
        auto loss_and_grad = [&](std::vector<Mat>* grad) {
            Cache c;
            const Mat out = npn_.forward(X, c);
            Mat d(2, X.cols());
            double loss = 0;
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
                const double mu = out(0, i);
                const double s = out(1, i);
                const double var = variance(s);
                const double r = mu - O(0, i);
                loss += r * r / (2 * var) + 0.5 * std::log(var);
                d(0, i) = r / var / n;
                d(1, i) = in_range(s) ? (-r * r / (2 * var * var) + 0.5 / var) * std::exp(s) / n : 0.0;
            }
            if (grad) npn_.backward(c, d, grad);
            return loss / n;
        };
        for (int e = 0; e < opt_.epochs; ++e) {
            adam.set_lr(schedule(e));
            auto grad = npn_.zero_grad();
            rep.npn_curve.push_back(loss_and_grad(&grad));
            adam.step(npn_, grad);
        }
        rep.npn_loss = loss_and_grad(nullptr);
        rep.npn_curve.push_back(rep.npn_loss);
    }

    void train_teacher(const Mat& X, const Mat& O, FitReport& rep) {
        Adam adam(teacher_, opt_.lr);
        const double n = static_cast<double>(X.cols());
        for (int e = 0; e < opt_.epochs; ++e) {
            adam.set_lr(schedule(e));
            Cache c;
            if (opt_.dropout > 0) teacher_.sample_masks(c, X.cols(), opt_.dropout, rng_);
            const Mat r = teacher_.forward(X, c) - O;
            rep.teacher_curve.push_back(r.squaredNorm() / n);
            auto grad = teacher_.zero_grad();
            teacher_.backward(c, 2.0 * r / n, &grad);
            adam.step(teacher_, grad);
        }
        rep.teacher_loss = (teacher_.forward(X) - O).squaredNorm() / n;
        rep.teacher_curve.push_back(rep.teacher_loss);
    }

    void train_student(const Mat& X, const Mat& xi, FitReport& rep) {
        Adam adam(student_, opt_.lr);
        const double n = static_cast<double>(X.cols());
        auto step = [&](bool update) {
            Cache c;
            const Mat z = student_.forward(X, c);
            Mat d(1, X.cols());
            double loss = 0;
            for (Eigen::Index i = 0; i < X.cols(); ++i) {
                const double r = softplus(z(0, i)) - xi(0, i);
                loss += r * r;
                d(0, i) = 2 * r * sigmoid(z(0, i)) / n;
            }
            if (update) {
                auto grad = student_.zero_grad();
                student_.backward(c, d, &grad);
                adam.step(student_, grad);
            }
            return loss / n;
        };
        for (int e = 0; e < opt_.epochs; ++e) {
            adam.set_lr(schedule(e));
            rep.student_curve.push_back(step(true));
        }
        rep.student_loss = step(false);
        rep.student_curve.push_back(rep.student_loss);
    }

    /// Per-column standard deviation (n - 1 denominator) of dropout passes.
    Mat mc_spread(const Mat& Xn, int n, std::uint64_t seed) const {
        if (opt_.dropout == 0) return Mat::Zero(1, Xn.cols());
        Rng rng(seed);
        Mat sum = Mat::Zero(1, Xn.cols()), sq = Mat::Zero(1, Xn.cols());
        for (int s = 0; s < n; ++s) {
            Cache c;
            teacher_.sample_masks(c, Xn.cols(), opt_.dropout, rng);
            const Mat y = teacher_.forward(Xn, c);
            sum += y;
            sq += y.cwiseProduct(y);
        }
        Mat var = (sq - sum.cwiseProduct(sum) / n) / (n - 1);
        return var.cwiseMax(0.0).cwiseSqrt();
    }

    SurrogateOptions opt_;
    Rng rng_;
    Mlp npn_, teacher_, student_;
    Vec shift_, inv_scale_;
    bool fitted_ = false;
    std::uint64_t fits_ = 0;
};

}  // namespace codebench::surrogate
