#include "repufed/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "repufed/rng.hpp"

namespace repufed {

Mlp::Mlp(int in_dim, int hidden, int out_dim, double init_scale,
         std::uint64_t seed)
    : in_dim_(in_dim), hidden_(hidden), out_dim_(out_dim) {
    if (in_dim < 1 || hidden < 1 || out_dim < 1)
        throw ValidationError("Mlp: bad dimensions");
    std::size_t n = static_cast<std::size_t>(hidden) * in_dim + hidden +
                    static_cast<std::size_t>(hidden) * hidden + hidden +
                    static_cast<std::size_t>(out_dim) * hidden + out_dim;
    params_.resize(n);
    Rng rng(seed);
    // Scaled uniform init; biases start at zero.
    auto lay = layout();
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] = 0.0;
    double s1 = init_scale / std::sqrt(static_cast<double>(in_dim));
    double s2 = init_scale / std::sqrt(static_cast<double>(hidden));
    for (std::size_t i = lay.w1; i < lay.b1; ++i)
        params_[i] = rng.uniform(-s1, s1);
    for (std::size_t i = lay.w2; i < lay.b2; ++i)
        params_[i] = rng.uniform(-s2, s2);
    for (std::size_t i = lay.w3; i < lay.b3; ++i)
        params_[i] = rng.uniform(-s2, s2);
}

Mlp::Layout Mlp::layout() const {
    Layout l;
    l.w1 = 0;
    l.b1 = l.w1 + static_cast<std::size_t>(hidden_) * in_dim_;
    l.w2 = l.b1 + static_cast<std::size_t>(hidden_);
    l.b2 = l.w2 + static_cast<std::size_t>(hidden_) * hidden_;
    l.w3 = l.b2 + static_cast<std::size_t>(hidden_);
    l.b3 = l.w3 + static_cast<std::size_t>(out_dim_) * hidden_;
    return l;
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != in_dim_)
        throw ValidationError("Mlp::forward: input size mismatch");
    auto l = layout();
    std::vector<double> h1(static_cast<std::size_t>(hidden_));
    for (int i = 0; i < hidden_; ++i) {
        double acc = params_[l.b1 + i];
        for (int j = 0; j < in_dim_; ++j)
            acc += params_[l.w1 + static_cast<std::size_t>(i) * in_dim_ + j] * x[j];
        h1[i] = std::tanh(acc);
    }
    std::vector<double> h2(static_cast<std::size_t>(hidden_));
    for (int i = 0; i < hidden_; ++i) {
        double acc = params_[l.b2 + i];
        for (int j = 0; j < hidden_; ++j)
            acc += params_[l.w2 + static_cast<std::size_t>(i) * hidden_ + j] * h1[j];
        h2[i] = std::tanh(acc);
    }
    std::vector<double> out(static_cast<std::size_t>(out_dim_));
    for (int i = 0; i < out_dim_; ++i) {
        double acc = params_[l.b3 + i];
        for (int j = 0; j < hidden_; ++j)
            acc += params_[l.w3 + static_cast<std::size_t>(i) * hidden_ + j] * h2[j];
        out[i] = acc;
    }
    return out;
}

void Mlp::backward(const std::vector<double>& x,
                   const std::vector<double>& dout,
                   std::vector<double>& grad) const {
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    auto l = layout();
    // Recompute activations.
    std::vector<double> h1(static_cast<std::size_t>(hidden_)),
        h2(static_cast<std::size_t>(hidden_));
    for (int i = 0; i < hidden_; ++i) {
        double acc = params_[l.b1 + i];
        for (int j = 0; j < in_dim_; ++j)
            acc += params_[l.w1 + static_cast<std::size_t>(i) * in_dim_ + j] * x[j];
        h1[i] = std::tanh(acc);
    }
    for (int i = 0; i < hidden_; ++i) {
        double acc = params_[l.b2 + i];
        for (int j = 0; j < hidden_; ++j)
            acc += params_[l.w2 + static_cast<std::size_t>(i) * hidden_ + j] * h1[j];
        h2[i] = std::tanh(acc);
    }

    // Output layer.
    std::vector<double> dh2(static_cast<std::size_t>(hidden_), 0.0);
    for (int i = 0; i < out_dim_; ++i) {
        double g = dout[i];
        if (g == 0.0) continue;
        grad[l.b3 + i] += g;
        for (int j = 0; j < hidden_; ++j) {
            grad[l.w3 + static_cast<std::size_t>(i) * hidden_ + j] += g * h2[j];
            dh2[j] += g * params_[l.w3 + static_cast<std::size_t>(i) * hidden_ + j];
        }
    }
    // Second hidden layer.
    std::vector<double> dh1(static_cast<std::size_t>(hidden_), 0.0);
    for (int i = 0; i < hidden_; ++i) {
        double g = dh2[i] * (1.0 - h2[i] * h2[i]);
        if (g == 0.0) continue;
        grad[l.b2 + i] += g;
        for (int j = 0; j < hidden_; ++j) {
            grad[l.w2 + static_cast<std::size_t>(i) * hidden_ + j] += g * h1[j];
            dh1[j] += g * params_[l.w2 + static_cast<std::size_t>(i) * hidden_ + j];
        }
    }
    // First hidden layer.
    for (int i = 0; i < hidden_; ++i) {
        double g = dh1[i] * (1.0 - h1[i] * h1[i]);
        if (g == 0.0) continue;
        grad[l.b1 + i] += g;
        for (int j = 0; j < in_dim_; ++j)
            grad[l.w1 + static_cast<std::size_t>(i) * in_dim_ + j] += g * x[j];
    }
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size())
        throw ValidationError("Adam::step: size mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

}  // namespace repufed
