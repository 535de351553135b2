#pragma once

#include "advpath/tensor.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace advpath {

/// Applies accumulated gradients. `grad_scale` multiplies every gradient first,
/// so callers that accumulate sums pass 1/|batch|.
template <class T>
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(const ParameterList<T>& params, T grad_scale) = 0;
};

template <class T>
class Sgd final : public Optimizer<T> {
public:
    explicit Sgd(T learning_rate) : lr_(learning_rate) {}

    void step(const ParameterList<T>& params, T grad_scale) override
    {
        for (const auto& p : params) {
            auto g = p.tensor->grad();
            auto w = p.tensor->data();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr_ * (grad_scale * g[i]);
        }
    }

private:
    T lr_;
};

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Global gradient-norm clip applied after scaling; 0 disables.
    double clip_norm = 0.0;
};

template <class T>
class Adam final : public Optimizer<T> {
public:
    explicit Adam(AdamOptions options) : opt_(options) {}

    void set_learning_rate(double lr) { opt_.learning_rate = lr; }

    void step(const ParameterList<T>& params, T grad_scale) override
    {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.tensor->size(), T(0));
                v_.emplace_back(p.tensor->size(), T(0));
            }
        }
        T clip = T(1);
        if (opt_.clip_norm > 0) {
            double sq = 0;
            for (const auto& p : params)
                for (T g : p.tensor->grad()) sq += double(grad_scale * g) * double(grad_scale * g);
            const double norm = std::sqrt(sq);
            if (norm > opt_.clip_norm) clip = T(opt_.clip_norm / norm);
        }
        ++t_;
        const T b1 = T(opt_.beta1), b2 = T(opt_.beta2);
        const T c1 = T(1 - std::pow(opt_.beta1, double(t_)));
        const T c2 = T(1 - std::pow(opt_.beta2, double(t_)));
        const T lr = T(opt_.learning_rate), eps = T(opt_.epsilon);
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto g = params[k].tensor->grad();
            auto w = params[k].tensor->data();
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const T gi = grad_scale * g[i] * clip;
                m[i] = b1 * m[i] + (T(1) - b1) * gi;
                v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
                w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        }
    }

private:
    AdamOptions opt_;
    std::vector<std::vector<T>> m_, v_;
    long t_ = 0;
};

struct OptimizerConfig {
    std::string kind = "adam";  // "adam" | "sgd"
    double learning_rate = 1e-3;
    double clip_norm = 0.0;
};

template <class T>
std::unique_ptr<Optimizer<T>> make_optimizer(const OptimizerConfig& cfg)
{
    if (cfg.kind == "sgd") return std::make_unique<Sgd<T>>(T(cfg.learning_rate));
    if (cfg.kind == "adam") {
        AdamOptions o;
        o.learning_rate = cfg.learning_rate;
        o.clip_norm = cfg.clip_norm;
        return std::make_unique<Adam<T>>(o);
    }
    throw std::invalid_argument("unknown optimizer kind '" + cfg.kind + "' (expected adam or sgd)");
}

/// Glorot-uniform fill for a (fan_in x fan_out) matrix.
template <class T, class Rng>
void glorot_uniform(Tensor<T>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng)
{
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& x : t.data()) x = T(dist(rng));
}

template <class T, class Rng>
void normal_fill(Tensor<T>& t, double stddev, Rng& rng)
{
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& x : t.data()) x = T(dist(rng));
}

} // namespace advpath
