#pragma once

#include <cstdint>
#include <vector>

#include "repufed/common.hpp"

namespace repufed {

// Fully connected net with two tanh hidden layers and a linear output.
// Forward/backward are hand-rolled; gradients are exact and checked
// against finite differences in the tests.
class Mlp {
  public:
    Mlp() = default;
    Mlp(int in_dim, int hidden, int out_dim, double init_scale,
        std::uint64_t seed);

    std::vector<double> forward(const std::vector<double>& x) const;

    // Gradient of sum_k dout[k] * out[k] w.r.t. all parameters,
    // accumulated into grad (same layout as params()).
    void backward(const std::vector<double>& x,
                  const std::vector<double>& dout,
                  std::vector<double>& grad) const;

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::size_t n_params() const { return params_.size(); }

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }

  private:
    int in_dim_ = 0, hidden_ = 0, out_dim_ = 0;
    // Layout: W1 (hidden x in), b1, W2 (hidden x hidden), b2,
    // W3 (out x hidden), b3.
    std::vector<double> params_;

    struct Layout {
        std::size_t w1, b1, w2, b2, w3, b3;
    };
    Layout layout() const;
};

// Adam optimizer state over a flat parameter vector.
class Adam {
  public:
    explicit Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    // Applies one descent step: params -= update(grad).
    void step(std::vector<double>& params, const std::vector<double>& grad);

  private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace repufed
