#pragma once

// Dense row-major tensors of doubles with reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared graph node. Copies alias the same
// storage; use clone() for an independent copy. Ops never mutate operands.
// When any operand requires a gradient the result records its parents and a
// backward rule; backward() on a scalar root then accumulates d(root)/d(t)
// into every reachable tensor that requires a gradient.
//
// Broadcasting is limited to scalar-tensor combinations: in add/sub/mul/div
// either operand may hold exactly one element.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace d2ue {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty means "no gradient yet"
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    // Reads this node's grad and accumulates into parents' grads.
    std::function<void(Node&)> backward;

    bool is_leaf() const { return !backward; }
    void accumulate(std::size_t i, double g);
    std::vector<double>& ensure_grad();
};

}  // namespace detail

class Tensor {
public:
    /// An empty 0-element tensor of shape {0}.
    Tensor();

    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor identity(std::size_t n);

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;
    /// Size of dimension 0 / 1 of a rank-2 tensor.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> values() const;
    /// Mutable access for optimizers; only legal on leaf tensors.
    std::span<double> mutable_values();
    double item() const;
    double at(std::size_t i, std::size_t j) const;
    double operator[](std::size_t i) const { return values()[i]; }

    bool requires_grad() const;
    void set_requires_grad(bool flag);
    bool is_leaf() const;
    const char* op_name() const;

    bool has_grad() const;
    /// Gradient buffer; empty span when has_grad() is false.
    std::span<const double> grad() const;
    void zero_grad();
    /// Drops the gradient buffer entirely (has_grad() becomes false).
    void clear_grad();

    /// Same values, no graph history, requires_grad = false. Shares nothing.
    Tensor detach() const;
    /// Independent copy preserving requires_grad; the copy is a leaf.
    Tensor clone() const;

    /// Reverse sweep from this scalar. Leaf gradients accumulate across calls;
    /// interior gradients are recomputed on every call.
    void backward() const;

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::Node> node_;

    friend class OpBuilder;
};

// -- op set ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
/// Sum of all elements -> scalar.
Tensor sum(const Tensor& a);
/// Mean of all elements -> scalar.
Tensor mean(const Tensor& a);
/// Per-row sums of a matrix -> [rows x 1].
Tensor row_sum(const Tensor& a);
/// Per-row means of a matrix -> [rows x 1].
Tensor row_mean(const Tensor& a);
/// Frobenius norm -> scalar. The gradient at the zero tensor is taken as 0.
Tensor frobenius_norm(const Tensor& a);
/// Trace of a square matrix -> scalar.
Tensor trace(const Tensor& a);
/// Mean squared error over all elements -> scalar.
Tensor mse(const Tensor& prediction, const Tensor& target);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

}  // namespace d2ue
