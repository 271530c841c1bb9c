#pragma once

// Shared helpers for the unit tests and the acceptance binary: random
// inputs, central finite differences and independent reference oracles.

#include "d2ue/rng.hpp"
#include "d2ue/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace d2ue::testing {

inline std::vector<double> normal_values(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

inline Tensor random_tensor(Rng& rng, Shape shape, bool requires_grad = false, double scale = 1.0) {
    const std::size_t n = shape_numel(shape);
    return Tensor::from(std::move(shape), normal_values(rng, n, scale), requires_grad);
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
    return m;
}

/// Q factor of a Gaussian matrix, sign-fixed so the draw is unique.
inline Eigen::MatrixXd random_orthogonal(Rng& rng, Eigen::Index n) {
    const Eigen::MatrixXd g = random_matrix(rng, n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

inline std::vector<double> values_of(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

inline Eigen::MatrixXd to_eigen(const Tensor& t) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
    return m;
}

inline Tensor from_eigen(const Eigen::MatrixXd& m, bool requires_grad = false) {
    std::vector<double> v(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            v[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    return Tensor::from({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                        std::move(v), requires_grad);
}

/// ||a - b|| / max(||a||, ||b||), or 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(std::max(na, nb));
    return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

/// Central differences of `f` with respect to the leaf `x`, step `h`.
inline std::vector<double> numeric_gradient(Tensor x, const std::function<double()>& f, double h = 1e-5) {
    auto v = x.mutable_values();
    std::vector<double> g(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double saved = v[i];
        v[i] = saved + h;
        const double fp = f();
        v[i] = saved - h;
        const double fm = f();
        v[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Backward gradient of `root()` with respect to each leaf, freshly zeroed.
inline std::vector<std::vector<double>> analytic_gradients(std::vector<Tensor> leaves,
                                                           const std::function<Tensor()>& root) {
    for (auto& l : leaves) l.clear_grad();
    root().backward();
    std::vector<std::vector<double>> out;
    for (const auto& l : leaves) {
        if (l.has_grad())
            out.emplace_back(l.grad().begin(), l.grad().end());
        else
            out.emplace_back(l.numel(), 0.0);
    }
    return out;
}

/// Relative error between backward and central differences, norm-wise over
/// the gradient of all `leaves` concatenated.
inline double gradient_check(std::vector<Tensor> leaves, const std::function<Tensor()>& root,
                             double h = 1e-5) {
    const auto analytic = analytic_gradients(leaves, root);
    std::vector<double> a, n;
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        const auto numeric = numeric_gradient(leaves[k], [&] { return root().item(); }, h);
        a.insert(a.end(), analytic[k].begin(), analytic[k].end());
        n.insert(n.end(), numeric.begin(), numeric.end());
    }
    return relative_error(a, n);
}

// Values bounded away from zero so kinks (relu, abs) are not crossed by a
// finite-difference step.
inline Tensor away_from_zero(Rng& rng, Shape shape, bool requires_grad = true) {
    const std::size_t n = shape_numel(shape);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = rng.normal();
        if (std::abs(x) < 0.05) x = x < 0 ? -0.05 : 0.05;
    }
    return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

/// Every tensor op against central differences, one instance drawn from
/// `seed`. Non-scalar results are contracted with a fixed random weight so
/// the whole Jacobian is exercised. Returns (op name, relative error).
inline std::vector<std::pair<std::string, double>> op_gradient_errors(std::uint64_t seed) {
    Rng rng(seed);
    Tensor a = away_from_zero(rng, {3, 4});
    Tensor b = away_from_zero(rng, {3, 4});
    Tensor m = away_from_zero(rng, {4, 2});
    Tensor sq = away_from_zero(rng, {3, 3});
    Tensor s = away_from_zero(rng, {1});
    std::vector<double> pos(12);
    for (auto& v : pos) v = 0.5 + rng.uniform();
    Tensor p = Tensor::from({3, 4}, pos, true);
    const Tensor w34 = random_tensor(rng, {3, 4});
    const Tensor w32 = random_tensor(rng, {3, 2});
    const Tensor w43 = random_tensor(rng, {4, 3});
    const Tensor w31 = random_tensor(rng, {3, 1});
    const Tensor w26 = random_tensor(rng, {2, 6});
    auto dot = [](const Tensor& t, const Tensor& w) { return sum(mul(t, w)); };

    struct Case {
        const char* name;
        std::vector<Tensor> leaves;
        std::function<Tensor()> root;
    };
    const std::vector<Case> cases = {
        {"matmul", {a, m}, [&] { return dot(matmul(a, m), w32); }},
        {"add", {a, b}, [&] { return dot(add(a, b), w34); }},
        {"sub", {a, b}, [&] { return dot(sub(a, b), w34); }},
        {"mul", {a, b}, [&] { return dot(mul(a, b), w34); }},
        {"div", {a, p}, [&] { return dot(div(a, p), w34); }},
        {"add_broadcast", {a, s}, [&] { return dot(add(a, s), w34); }},
        {"mul_broadcast", {a, s}, [&] { return dot(mul(s, a), w34); }},
        {"div_broadcast", {s, p}, [&] { return dot(div(s, p), w34); }},
        {"add_scalar", {a}, [&] { return dot(add_scalar(a, 0.3), w34); }},
        {"mul_scalar", {a}, [&] { return dot(mul_scalar(a, -1.3), w34); }},
        {"neg", {a}, [&] { return dot(neg(a), w34); }},
        {"relu", {a}, [&] { return dot(relu(a), w34); }},
        {"sigmoid", {a}, [&] { return dot(sigmoid(a), w34); }},
        {"exp", {a}, [&] { return dot(exp(a), w34); }},
        {"abs", {a}, [&] { return dot(abs(a), w34); }},
        {"sqrt", {p}, [&] { return dot(sqrt(p), w34); }},
        {"square", {a}, [&] { return dot(square(a), w34); }},
        {"transpose", {a}, [&] { return dot(transpose(a), w43); }},
        {"reshape", {a}, [&] { return dot(reshape(a, {2, 6}), w26); }},
        {"sum", {a}, [&] { return mul_scalar(sum(a), 0.7); }},
        {"mean", {a}, [&] { return mul_scalar(mean(square(a)), 0.7); }},
        {"row_sum", {a}, [&] { return dot(row_sum(a), w31); }},
        {"row_mean", {a}, [&] { return dot(row_mean(a), w31); }},
        {"frobenius_norm", {a}, [&] { return frobenius_norm(a); }},
        {"trace", {sq}, [&] { return trace(matmul(sq, sq)); }},
        {"mse", {a, b}, [&] { return mse(a, b); }},
    };
    std::vector<std::pair<std::string, double>> out;
    for (const auto& c : cases) out.emplace_back(c.name, gradient_check(c.leaves, c.root));
    return out;
}

// -- oracles -----------------------------------------------------------------

/// Linear CKA through the feature-space identity
///     HSIC(PP^T, QQ^T) (r-1)^2 = ||Pc^T Qc||_F^2,  Pc = column-centred P.
inline double cka_oracle(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
    const Eigen::MatrixXd pc = p.rowwise() - p.colwise().mean();
    const Eigen::MatrixXd qc = q.rowwise() - q.colwise().mean();
    const double pq = (pc.transpose() * qc).squaredNorm();
    const double pp = (pc.transpose() * pc).norm();
    const double qq = (qc.transpose() * qc).norm();
    return pq / (pp * qq);
}

/// tr(K H L H) / (r-1)^2 by explicit dense products.
inline double hsic_oracle(const Eigen::MatrixXd& k, const Eigen::MatrixXd& l) {
    const Eigen::Index r = k.rows();
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(r, r);
    h.array() -= 1.0 / static_cast<double>(r);
    const Eigen::MatrixXd prod = k * h * l * h;
    return prod.trace() / static_cast<double>((r - 1) * (r - 1));
}

/// Mann-Whitney pair counting, ties count one half.
inline double auroc_oracle(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            if (s[i] > s[j])
                wins += 1.0;
            else if (s[i] == s[j])
                wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Step-integrated AP: one threshold per distinct score, each evaluated by a
/// full scan.
inline double average_precision_oracle(const std::vector<double>& s, const std::vector<int>& y) {
    std::vector<double> thresholds = s;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double positives = 0.0;
    for (int v : y) positives += v;
    double ap = 0.0;
    double previous_recall = 0.0;
    for (double t : thresholds) {
        double tp = 0.0, selected = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= t) {
                selected += 1.0;
                tp += y[i];
            }
        }
        const double recall = tp / positives;
        ap += (recall - previous_recall) * (tp / selected);
        previous_recall = recall;
    }
    return ap;
}

}  // namespace d2ue::testing
