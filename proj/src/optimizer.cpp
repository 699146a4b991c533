#include "mgraph/optimizer.hpp"

#include <cmath>

namespace mgraph {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr, double beta1,
                             double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (lr_ <= 0.0) throw DomainError("adam: learning rate must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.push_back(Matrix::Zero(p.rows(), p.cols()));
        v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
}

void AdamOptimizer::step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        if (!p.has_grad())
            throw StateError("adam: parameter has no gradient; run backward first");
        const Matrix& g = p.grad();
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        Matrix mhat = m_[i] / bc1;
        Matrix vhat = v_[i] / bc2;
        Matrix upd = (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
        p.update_value(p.value() - lr_ * upd);
    }
    zero_grad();
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace mgraph
