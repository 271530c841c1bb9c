#include "d2ue/tensor.hpp"

#include "d2ue/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>
#include <utility>

namespace d2ue {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace detail {

std::vector<double>& Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

void Node::accumulate(std::size_t i, double g) { ensure_grad()[i] += g; }

}  // namespace detail

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

// Builds op results; only attaches graph history when some parent needs it.
class OpBuilder {
public:
    static Tensor make(const char* op, Shape shape, std::vector<double> values,
                       std::vector<NodePtr> parents, std::function<void(Node&)> backward) {
        auto node = std::make_shared<Node>();
        node->shape = std::move(shape);
        node->value = std::move(values);
        node->op = op;
        const bool needs = std::any_of(parents.begin(), parents.end(),
                                       [](const NodePtr& p) { return p->requires_grad; });
        if (needs) {
            node->requires_grad = true;
            node->parents = std::move(parents);
            node->backward = std::move(backward);
        }
        return Tensor(std::move(node));
    }

    static const NodePtr& node(const Tensor& t) { return t.node_; }
};

namespace {

const NodePtr& node_of(const Tensor& t) { return OpBuilder::node(t); }

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                     shape_string(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const char* need) {
    throw ShapeError(std::string(op) + ": operand of shape " + shape_string(a) + " " + need);
}

void require_matrix(const char* op, const Tensor& t) {
    if (t.rank() != 2) shape_fail(op, t.shape(), "must be a rank-2 matrix");
}

// Elementwise unary op with a local derivative computed from (input, output).
template <typename F, typename D>
Tensor unary(const char* op, const Tensor& a, F f, D dfdx) {
    const auto in = a.values();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return OpBuilder::make(op, a.shape(), std::move(out), {node_of(a)}, [dfdx](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
    });
}

enum class Broadcast { none, left_scalar, right_scalar };

Broadcast broadcast_mode(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) return Broadcast::none;
    if (a.numel() == 1) return Broadcast::left_scalar;
    if (b.numel() == 1) return Broadcast::right_scalar;
    shape_fail(op, a.shape(), b.shape());
}

// Binary elementwise op. `da`/`db` give the local partials at (x, y).
template <typename F, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
    const Broadcast mode = broadcast_mode(op, a, b);
    const Shape shape = mode == Broadcast::left_scalar ? b.shape() : a.shape();
    const std::size_t n = shape_numel(shape);
    const auto av = a.values();
    const auto bv = b.values();
    const std::size_t sa = mode == Broadcast::left_scalar ? 0 : 1;
    const std::size_t sb = mode == Broadcast::right_scalar ? 0 : 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av[i * sa], bv[i * sb]);
    return OpBuilder::make(op, shape, std::move(out), {node_of(a), node_of(b)},
                           [sa, sb, da, db](Node& self) {
                               Node& pa = *self.parents[0];
                               Node& pb = *self.parents[1];
                               const std::size_t n = self.value.size();
                               if (pa.requires_grad) {
                                   auto& g = pa.ensure_grad();
                                   for (std::size_t i = 0; i < n; ++i)
                                       g[i * sa] += self.grad[i] * da(pa.value[i * sa], pb.value[i * sb]);
                               }
                               if (pb.requires_grad) {
                                   auto& g = pb.ensure_grad();
                                   for (std::size_t i = 0; i < n; ++i)
                                       g[i * sb] += self.grad[i] * db(pa.value[i * sa], pb.value[i * sb]);
                               }
                           });
}

}  // namespace

// -- Tensor ------------------------------------------------------------------

Tensor::Tensor() : node_(std::make_shared<Node>()) { node_->shape = {0}; }

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw ShapeError("tensor: shape " + shape_string(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

Tensor Tensor::identity(std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    return from({n, n}, std::move(v));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
    require_matrix("rows", *this);
    return node_->shape[0];
}

std::size_t Tensor::cols() const {
    require_matrix("cols", *this);
    return node_->shape[1];
}

std::span<const double> Tensor::values() const { return node_->value; }

std::span<double> Tensor::mutable_values() {
    if (!node_->is_leaf()) throw ConfigError("mutable_values: tensor produced by op '" +
                                             std::string(node_->op) + "' is not a leaf");
    return node_->value;
}

double Tensor::item() const {
    if (numel() != 1) shape_fail("item", shape(), "is not a single element");
    return node_->value[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return node_->value[i * cols() + j];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
    if (!node_->is_leaf())
        throw ConfigError("set_requires_grad: only leaf tensors can change requires_grad");
    node_->requires_grad = flag;
}

bool Tensor::is_leaf() const { return node_->is_leaf(); }
const char* Tensor::op_name() const { return node_->op; }
bool Tensor::has_grad() const { return !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::clear_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor Tensor::clone() const { return from(shape(), node_->value, node_->requires_grad); }

void Tensor::backward() const {
    if (numel() != 1) shape_fail("backward", shape(), "is not a scalar root");
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        if (n->is_leaf()) n->ensure_grad();
        else n->grad.assign(n->value.size(), 0.0);
    }
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (!(*it)->is_leaf()) (*it)->backward(**it);
    }
}

// -- ops ---------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix("matmul", a);
    require_matrix("matmul", b);
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) shape_fail("matmul", a.shape(), b.shape());
    std::vector<double> out(m * n);
    MutMap(out.data(), m, n).noalias() =
        ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
    return OpBuilder::make("matmul", {m, n}, std::move(out), {node_of(a), node_of(b)},
                           [m, k, n](Node& self) {
                               Node& pa = *self.parents[0];
                               Node& pb = *self.parents[1];
                               ConstMap dc(self.grad.data(), m, n);
                               if (pa.requires_grad) {
                                   MutMap(pa.ensure_grad().data(), m, k).noalias() +=
                                       dc * ConstMap(pb.value.data(), k, n).transpose();
                               }
                               if (pb.requires_grad) {
                                   MutMap(pb.ensure_grad().data(), k, n).noalias() +=
                                       ConstMap(pa.value.data(), m, k).transpose() * dc;
                               }
                           });
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary(
        "add_scalar", a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
    return unary(
        "mul_scalar", a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor relu(const Tensor& a) {
    return unary(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        "sigmoid", a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
    return unary(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor abs(const Tensor& a) {
    return unary(
        "abs", a, [](double x) { return std::fabs(x); },
        [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor sqrt(const Tensor& a) {
    return unary(
        "sqrt", a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor square(const Tensor& a) {
    return unary(
        "square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor transpose(const Tensor& a) {
    require_matrix("transpose", a);
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    MutMap(out.data(), n, m) = ConstMap(a.values().data(), m, n).transpose();
    return OpBuilder::make("transpose", {n, m}, std::move(out), {node_of(a)}, [m, n](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        MutMap(p.ensure_grad().data(), m, n) += ConstMap(self.grad.data(), n, m).transpose();
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) shape_fail("reshape", a.shape(), shape);
    std::vector<double> out(a.values().begin(), a.values().end());
    return OpBuilder::make("reshape", std::move(shape), std::move(out), {node_of(a)}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor sum(const Tensor& a) {
    const auto v = a.values();
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    return OpBuilder::make("sum", {1}, {total}, {node_of(a)}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        const double g0 = self.grad[0];
        for (double& g : p.ensure_grad()) g += g0;
    });
}

Tensor mean(const Tensor& a) {
    if (a.numel() == 0) shape_fail("mean", a.shape(), "is empty");
    return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor row_sum(const Tensor& a) {
    require_matrix("row_sum", a);
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m, 0.0);
    const auto v = a.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += v[i * n + j];
    return OpBuilder::make("row_sum", {m, 1}, std::move(out), {node_of(a)}, [m, n](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i];
    });
}

Tensor row_mean(const Tensor& a) {
    return mul_scalar(row_sum(a), 1.0 / static_cast<double>(a.cols()));
}

Tensor frobenius_norm(const Tensor& a) {
    const auto v = a.values();
    double ss = 0.0;
    for (double x : v) ss += x * x;
    const double norm = std::sqrt(ss);
    return OpBuilder::make("frobenius_norm", {1}, {norm}, {node_of(a)}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        const double norm = self.value[0];
        if (norm == 0.0) {
            p.ensure_grad();
            return;
        }
        const double scale = self.grad[0] / norm;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * p.value[i];
    });
}

Tensor trace(const Tensor& a) {
    require_matrix("trace", a);
    const std::size_t n = a.rows();
    if (a.cols() != n) shape_fail("trace", a.shape(), "is not square");
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += a.values()[i * n + i];
    return OpBuilder::make("trace", {1}, {t}, {node_of(a)}, [n](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i * n + i] += self.grad[0];
    });
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
    if (prediction.shape() != target.shape()) shape_fail("mse", prediction.shape(), target.shape());
    return mean(square(sub(prediction, target)));
}

}  // namespace d2ue
