#include "mgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mgraph {

namespace {

void check_finite(const Matrix& m, const char* op) {
    if (!m.allFinite())
        throw NonFiniteError(std::string(op) + " produced a non-finite value");
}

}  // namespace

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
    check_finite(value, "tensor construction");
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows,
               bool requires_grad) {
    Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    Eigen::Index i = 0;
    for (const auto& rr : rows) {
        if (static_cast<Eigen::Index>(rr.size()) != c)
            throw DimensionError("ragged initializer list");
        Eigen::Index j = 0;
        for (double v : rr) m(i, j++) = v;
        ++i;
    }
    *this = Tensor(std::move(m), requires_grad);
}

Tensor Tensor::zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad) {
    return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

const Matrix& Tensor::grad() const {
    if (!has_grad()) throw StateError("tensor has no gradient");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_) node_->grad.resize(0, 0);
}

void Tensor::update_value(const Matrix& v) {
    if (v.rows() != rows() || v.cols() != cols())
        throw DimensionError("update_value: shape mismatch");
    check_finite(v, "update_value");
    node_->value = v;
}

namespace {

// Builds an interior node. The backward lambda is installed after
// construction so it can capture the parents' shared_ptrs by value.
Tensor make_node(Matrix value, std::vector<Tensor> parents,
                 std::function<void(const std::vector<std::shared_ptr<Tensor::Node>>&,
                                    const Matrix&)> rule,
                 const char* op) {
    check_finite(value, op);
    Tensor out(std::move(value));
    auto node = out.node();
    bool needs = false;
    for (const auto& p : parents) {
        node->parents.push_back(p.node());
        needs = needs || p.requires_grad();
    }
    node->requires_grad = needs;
    if (needs && rule) {
        auto parent_nodes = node->parents;
        node->backward = [parent_nodes, rule = std::move(rule)](const Matrix& g) {
            rule(parent_nodes, g);
        };
    }
    return out;
}

using Parents = std::vector<std::shared_ptr<Tensor::Node>>;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner dimensions do not match");
    Matrix av = a.value(), bv = b.value();
    return make_node(av * bv, {a, b},
                     [av, bv](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g * bv.transpose());
                         if (p[1]->requires_grad) p[1]->accumulate(av.transpose() * g);
                     },
                     "matmul");
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: inner dimensions do not match");
    Matrix av = a.value(), bv = b.value();
    return make_node(av * bv.transpose(), {a, b},
                     [av, bv](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g * bv);
                         if (p[1]->requires_grad) p[1]->accumulate(g.transpose() * av);
                     },
                     "matmul_nt");
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("add: shape mismatch");
    return make_node(a.value() + b.value(), {a, b},
                     [](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g);
                         if (p[1]->requires_grad) p[1]->accumulate(g);
                     },
                     "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("sub: shape mismatch");
    return make_node(a.value() - b.value(), {a, b},
                     [](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g);
                         if (p[1]->requires_grad) p[1]->accumulate(-g);
                     },
                     "sub");
}

Tensor cmul(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("cmul: shape mismatch");
    Matrix av = a.value(), bv = b.value();
    return make_node(av.cwiseProduct(bv), {a, b},
                     [av, bv](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g.cwiseProduct(bv));
                         if (p[1]->requires_grad) p[1]->accumulate(g.cwiseProduct(av));
                     },
                     "cmul");
}

Tensor scale(const Tensor& a, double s) {
    return make_node(a.value() * s, {a},
                     [s](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g * s);
                     },
                     "scale");
}

Tensor add_rowvec(const Tensor& a, const Tensor& bias) {
    if (bias.rows() != 1 || bias.cols() != a.cols())
        throw DimensionError("add_rowvec: bias must be 1 x cols(a)");
    Matrix out = a.value();
    out.rowwise() += bias.value().row(0);
    return make_node(std::move(out), {a, bias},
                     [](const Parents& p, const Matrix& g) {
                         if (p[0]->requires_grad) p[0]->accumulate(g);
                         if (p[1]->requires_grad) p[1]->accumulate(g.colwise().sum());
                     },
                     "add_rowvec");
}

Tensor relu(const Tensor& x) {
    Matrix xv = x.value();
    return make_node(xv.cwiseMax(0.0), {x},
                     [xv](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         // subgradient at 0 is 0
                         Matrix m = (xv.array() > 0.0).cast<double>();
                         p[0]->accumulate(g.cwiseProduct(m));
                     },
                     "relu");
}

Tensor sigmoid(const Tensor& x) {
    Matrix s = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
    return make_node(s, {x},
                     [s](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         Matrix d = s.array() * (1.0 - s.array());
                         p[0]->accumulate(g.cwiseProduct(d));
                     },
                     "sigmoid");
}

Tensor tanh_op(const Tensor& x) {
    Matrix t = x.value().array().tanh().matrix();
    return make_node(t, {x},
                     [t](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         Matrix d = 1.0 - t.array().square();
                         p[0]->accumulate(g.cwiseProduct(d));
                     },
                     "tanh");
}

Tensor softmax(const Tensor& x, int axis) {
    if (axis != 0 && axis != 1) throw DomainError("softmax: axis must be 0 or 1");
    Eigen::ArrayXXd a = x.value().array();
    if (axis == 1) {
        a.colwise() -= a.rowwise().maxCoeff();
        a = a.exp();
        a.colwise() /= a.rowwise().sum();
    } else {
        a.rowwise() -= a.colwise().maxCoeff();
        a = a.exp();
        a.rowwise() /= a.colwise().sum();
    }
    Matrix s = a.matrix();
    return make_node(s, {x},
                     [s, axis](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         // dx = s .* (g - sum(g .* s, axis))
                         Eigen::ArrayXXd gs = g.array() * s.array();
                         Eigen::ArrayXXd out = g.array();
                         if (axis == 1)
                             out.colwise() -= gs.rowwise().sum();
                         else
                             out.rowwise() -= gs.colwise().sum();
                         p[0]->accumulate((out * s.array()).matrix());
                     },
                     "softmax");
}

Tensor concat(std::span<const Tensor> tensors, int axis) {
    if (tensors.empty()) throw DomainError("concat: no inputs");
    if (axis != 0 && axis != 1) throw DomainError("concat: axis must be 0 or 1");
    Eigen::Index rows = tensors[0].rows(), cols = tensors[0].cols();
    Eigen::Index total = 0;
    for (const auto& t : tensors) {
        if (axis == 0 && t.cols() != cols)
            throw DimensionError("concat: column counts differ");
        if (axis == 1 && t.rows() != rows)
            throw DimensionError("concat: row counts differ");
        total += axis == 0 ? t.rows() : t.cols();
    }
    Matrix out(axis == 0 ? total : rows, axis == 0 ? cols : total);
    Eigen::Index off = 0;
    for (const auto& t : tensors) {
        if (axis == 0) {
            out.middleRows(off, t.rows()) = t.value();
            off += t.rows();
        } else {
            out.middleCols(off, t.cols()) = t.value();
            off += t.cols();
        }
    }
    std::vector<Tensor> parents(tensors.begin(), tensors.end());
    return make_node(std::move(out), std::move(parents),
                     [axis](const Parents& p, const Matrix& g) {
                         Eigen::Index off = 0;
                         for (const auto& par : p) {
                             Eigen::Index ext = axis == 0 ? par->value.rows()
                                                          : par->value.cols();
                             if (par->requires_grad)
                                 par->accumulate(axis == 0 ? g.middleRows(off, ext).eval()
                                                           : g.middleCols(off, ext).eval());
                             off += ext;
                         }
                     },
                     "concat");
}

Tensor concat(std::initializer_list<Tensor> tensors, int axis) {
    std::vector<Tensor> v(tensors);
    return concat(std::span<const Tensor>(v), axis);
}

Tensor mean_pool(const Tensor& x, int axis) {
    if (axis != 0 && axis != 1) throw DomainError("mean_pool: axis must be 0 or 1");
    Eigen::Index len = axis == 0 ? x.rows() : x.cols();
    if (len < 1) throw DomainError("mean_pool: empty axis");
    Matrix out = axis == 0 ? Matrix(x.value().colwise().mean())
                           : Matrix(x.value().rowwise().mean());
    return make_node(std::move(out), {x},
                     [axis, len](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         Matrix gx(p[0]->value.rows(), p[0]->value.cols());
                         if (axis == 0)
                             gx = (g / static_cast<double>(len)).replicate(len, 1);
                         else
                             gx = (g / static_cast<double>(len)).replicate(1, len);
                         p[0]->accumulate(gx);
                     },
                     "mean_pool");
}

Tensor row(const Tensor& x, Eigen::Index i) {
    if (i < 0 || i >= x.rows()) throw DomainError("row: index out of range");
    return make_node(x.value().row(i), {x},
                     [i](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         if (p[0]->grad.size() == 0)
                             p[0]->grad = Matrix::Zero(p[0]->value.rows(),
                                                       p[0]->value.cols());
                         p[0]->grad.row(i) += g.row(0);
                     },
                     "row");
}

Tensor sum(const Tensor& x) {
    Matrix out(1, 1);
    out(0, 0) = x.value().sum();
    return make_node(std::move(out), {x},
                     [](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         p[0]->accumulate(Matrix::Constant(p[0]->value.rows(),
                                                           p[0]->value.cols(), g(0, 0)));
                     },
                     "sum");
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels,
                     const std::vector<bool>& mask) {
    const Eigen::Index n = logits.rows(), c = logits.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n ||
        static_cast<Eigen::Index>(mask.size()) != n)
        throw DimensionError("cross_entropy: labels/mask length must equal rows");
    Eigen::Index m = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        if (labels[i] < 0 || labels[i] >= c)
            throw DomainError("cross_entropy: label out of range");
        ++m;
    }
    if (m == 0) throw DomainError("cross_entropy: mask selects no rows");

    // stable log-softmax
    Eigen::ArrayXXd a = logits.value().array();
    a.colwise() -= a.rowwise().maxCoeff();
    Eigen::ArrayXd lse = a.exp().rowwise().sum().log();
    double loss = 0.0;
    Matrix probs = (a.colwise() - lse).exp().matrix();
    for (Eigen::Index i = 0; i < n; ++i)
        if (mask[i]) loss -= a(i, labels[i]) - lse(i);
    loss /= static_cast<double>(m);

    Matrix out(1, 1);
    out(0, 0) = loss;
    return make_node(std::move(out), {logits},
                     [probs, labels, mask, m](const Parents& p, const Matrix& g) {
                         if (!p[0]->requires_grad) return;
                         Matrix gx = Matrix::Zero(probs.rows(), probs.cols());
                         const double s = g(0, 0) / static_cast<double>(m);
                         for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                             if (!mask[i]) continue;
                             gx.row(i) = probs.row(i) * s;
                             gx(i, labels[i]) -= s;
                         }
                         p[0]->accumulate(gx);
                     },
                     "cross_entropy");
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1)
        throw DomainError("backward: loss must be a defined 1x1 tensor");

    // iterative post-order topological sort
    std::vector<Tensor::Node*> order;
    std::unordered_set<Tensor::Node*> visited;
    struct Frame {
        Tensor::Node* node;
        size_t next_child;
    };
    std::vector<Frame> stack{{loss.node().get(), 0}};
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_child < f.node->parents.size()) {
            Tensor::Node* child = f.node->parents[f.next_child++].get();
            if (visited.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    loss.node()->accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor::Node* node = *it;
        if (!node->backward || !node->requires_grad) continue;
        if (node->grad.size() == 0) continue;  // unreachable from loss gradient
        node->backward(node->grad);
    }
}

}  // namespace mgraph
