#pragma once

#include <vector>

#include "mgraph/tensor.hpp"

namespace mgraph {

// Adaptive-moment gradient descent over a fixed set of leaf parameters.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<Tensor> params, double lr = 1e-3,
                           double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8);

    // Applies one update from the accumulated grads, then zeroes them.
    void step();
    void zero_grad();

    long step_count() const { return step_count_; }
    double learning_rate() const { return lr_; }

private:
    std::vector<Tensor> params_;
    std::vector<Matrix> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long step_count_ = 0;
};

}  // namespace mgraph
