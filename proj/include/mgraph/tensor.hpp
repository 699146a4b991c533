#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "mgraph/errors.hpp"

namespace mgraph {

using Matrix = Eigen::MatrixXd;

// A 2-d dense tensor of doubles participating in a reverse-mode
// differentiation graph. Tensors are cheap value-semantic handles to a
// shared node; the recorded graph of nodes is the tape. Row vectors stand
// in for rank-1 data.
class Tensor {
public:
    struct Node {
        Matrix value;
        Matrix grad;  // empty until first accumulation
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        // Accumulates into the parents' grads given this node's grad.
        std::function<void(const Matrix& out_grad)> backward;

        void accumulate(const Matrix& g) {
            if (grad.size() == 0)
                grad = Matrix::Zero(value.rows(), value.cols());
            grad += g;
        }
    };

    Tensor() = default;
    explicit Tensor(Matrix value, bool requires_grad = false);
    Tensor(std::initializer_list<std::initializer_list<double>> rows,
           bool requires_grad = false);

    static Tensor zeros(Eigen::Index rows, Eigen::Index cols,
                        bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    bool has_grad() const { return node_ && node_->grad.size() != 0; }
    const Matrix& grad() const;
    void zero_grad();

    // In-place parameter update; only meaningful for leaves.
    void update_value(const Matrix& v);

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;

    friend Tensor make_op(Matrix value, std::vector<Tensor> parents,
                          std::function<void(const Matrix&)>* backward_slot,
                          std::vector<std::shared_ptr<Node>>* parent_slot);
};

// --- ops ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor cmul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
// Broadcast a 1 x c bias over every row of a.
Tensor add_rowvec(const Tensor& a, const Tensor& bias);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh_op(const Tensor& x);
// axis 0: columns normalized down the rows; axis 1: each row sums to 1.
Tensor softmax(const Tensor& x, int axis);
Tensor concat(std::span<const Tensor> tensors, int axis);
Tensor concat(std::initializer_list<Tensor> tensors, int axis);
Tensor mean_pool(const Tensor& x, int axis);
Tensor row(const Tensor& x, Eigen::Index i);
Tensor sum(const Tensor& x);  // 1x1

// Mean over masked rows of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<bool>& mask);

// Reverse pass from a scalar loss; populates grads of every
// requires_grad leaf reachable from it.
void backward(const Tensor& loss);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

}  // namespace mgraph
