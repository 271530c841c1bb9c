#include "d2ue/similarity.hpp"

#include "d2ue/diagnostics.hpp"
#include "d2ue/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace d2ue {
namespace {

// Relative threshold below which centered features count as collapsed.
constexpr double kDegenerateRatio = 1e-10;

std::string dims(Eigen::Index r, Eigen::Index c) {
    return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

void require_same_shape(const char* op, const FeatureMatrix& p, const FeatureMatrix& q) {
    if (p.rows() != q.rows() || p.cols() != q.cols())
        throw ShapeError(std::string(op) + ": shapes " + dims(p.rows(), p.cols()) + " and " +
                         dims(q.rows(), q.cols()) + " differ");
}

double norm_ratio_threshold(double reference) { return kDegenerateRatio * reference; }

}  // namespace

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() < 2)
        throw ConfigError("FeatureMatrix: need at least 2 rows, got " + std::to_string(matrix_.rows()));
    if (matrix_.cols() < 1) throw ConfigError("FeatureMatrix: need at least 1 column");
    if (!matrix_.allFinite()) throw ConfigError("FeatureMatrix: non-finite entry");
}

FeatureMatrix FeatureMatrix::from_tensor(const Tensor& t) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
    return FeatureMatrix(std::move(m));
}

GramMatrix::GramMatrix(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols())
        throw ShapeError("GramMatrix: not square " + dims(matrix_.rows(), matrix_.cols()));
    if (!matrix_.allFinite()) throw ConfigError("GramMatrix: non-finite entry");
    if ((matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("GramMatrix: not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9)
        throw ConfigError("GramMatrix: not positive semidefinite");
}

std::string_view to_string(SimilarityKind kind) {
    switch (kind) {
        case SimilarityKind::none: return "none";
        case SimilarityKind::euclidean: return "euclidean";
        case SimilarityKind::manhattan: return "manhattan";
        case SimilarityKind::cosine: return "cosine";
        case SimilarityKind::pearson: return "pearson";
        case SimilarityKind::cka: return "cka";
    }
    return "?";
}

SimilarityKind parse_similarity_kind(std::string_view text) {
    for (auto k : {SimilarityKind::none, SimilarityKind::euclidean, SimilarityKind::manhattan,
                   SimilarityKind::cosine, SimilarityKind::pearson, SimilarityKind::cka}) {
        if (text == to_string(k)) return k;
    }
    throw ConfigError("unknown similarity kind '" + std::string(text) + "'");
}

GramMatrix gram_linear(const FeatureMatrix& f) {
    Eigen::MatrixXd k = f.matrix() * f.matrix().transpose();
    // Exact symmetry; the product can differ from its transpose in the last ulp.
    k = 0.5 * (k + k.transpose()).eval();
    return GramMatrix(std::move(k), GramMatrix::Trusted{});
}

Eigen::MatrixXd centering_matrix(Eigen::Index r) {
    if (r < 2) throw ConfigError("centering_matrix: need r >= 2, got " + std::to_string(r));
    return Eigen::MatrixXd::Identity(r, r) -
           Eigen::MatrixXd::Constant(r, r, 1.0 / static_cast<double>(r));
}

double hsic(const GramMatrix& k, const GramMatrix& l) {
    if (k.size() != l.size())
        throw ShapeError("hsic: gram sizes " + std::to_string(k.size()) + " and " +
                         std::to_string(l.size()) + " differ");
    const Eigen::Index r = k.size();
    const Eigen::MatrixXd h = centering_matrix(r);
    const Eigen::MatrixXd kh = k.matrix() * h;
    const Eigen::MatrixXd lh = l.matrix() * h;
    // tr(A B) = sum_ij A_ij B_ji
    const double tr = (kh.array() * lh.transpose().array()).sum();
    const double denom = static_cast<double>(r - 1);
    return tr / (denom * denom);
}

double cka(const FeatureMatrix& p, const FeatureMatrix& q) {
    if (p.rows() != q.rows())
        throw ShapeError("cka: row counts " + std::to_string(p.rows()) + " and " +
                         std::to_string(q.rows()) + " differ");
    const GramMatrix k = gram_linear(p);
    const GramMatrix l = gram_linear(q);
    const double kk = hsic(k, k);
    const double ll = hsic(l, l);
    const double scale = static_cast<double>(p.rows() - 1);
    const double sk = std::sqrt(std::max(kk, 0.0));
    const double sl = std::sqrt(std::max(ll, 0.0));
    if (sk <= norm_ratio_threshold(k.matrix().norm() / scale) ||
        sl <= norm_ratio_threshold(l.matrix().norm() / scale)) {
        diag::warn("cka: feature matrix is constant across the batch; similarity set to 0");
        return 0.0;
    }
    return hsic(k, l) / (sk * sl);
}

double baseline_similarity(SimilarityKind kind, const FeatureMatrix& p, const FeatureMatrix& q) {
    require_same_shape("baseline_similarity", p, q);
    const auto& a = p.matrix().array();
    const auto& b = q.matrix().array();
    switch (kind) {
        case SimilarityKind::euclidean:
            return std::exp(-std::sqrt((a - b).square().sum()));
        case SimilarityKind::manhattan:
            return std::exp(-(a - b).abs().sum());
        case SimilarityKind::cosine: {
            const double na = std::sqrt(a.square().sum());
            const double nb = std::sqrt(b.square().sum());
            if (na == 0.0 || nb == 0.0) {
                diag::warn("cosine similarity: zero-norm operand; similarity set to 0");
                return 0.0;
            }
            return (a * b).sum() / (na * nb);
        }
        case SimilarityKind::pearson: {
            const Eigen::ArrayXXd ac = a - a.mean();
            const Eigen::ArrayXXd bc = b - b.mean();
            const double na = std::sqrt(ac.square().sum());
            const double nb = std::sqrt(bc.square().sum());
            if (na <= norm_ratio_threshold(std::sqrt(a.square().sum())) ||
                nb <= norm_ratio_threshold(std::sqrt(b.square().sum()))) {
                diag::warn("pearson correlation: constant operand; similarity set to 0");
                return 0.0;
            }
            return (ac * bc).sum() / (na * nb);
        }
        case SimilarityKind::none:
        case SimilarityKind::cka:
            break;
    }
    throw ConfigError("baseline_similarity: '" + std::string(to_string(kind)) +
                      "' is not a baseline metric");
}

double similarity(SimilarityKind kind, const FeatureMatrix& p, const FeatureMatrix& q) {
    if (kind == SimilarityKind::none) return 0.0;
    if (kind == SimilarityKind::cka) return cka(p, q);
    return baseline_similarity(kind, p, q);
}

namespace graph {
namespace {

Tensor centering_tensor(std::size_t r) {
    const Eigen::MatrixXd h = centering_matrix(static_cast<Eigen::Index>(r));
    std::vector<double> v(r * r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j)
            v[i * r + j] = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return Tensor::from({r, r}, std::move(v));
}

double frob(const Tensor& t) {
    double ss = 0.0;
    for (double x : t.values()) ss += x * x;
    return std::sqrt(ss);
}

void require_features(const char* op, const Tensor& p, const Tensor& q) {
    if (p.rank() != 2 || q.rank() != 2 || p.rows() != q.rows())
        throw ShapeError(std::string(op) + ": incompatible feature shapes " +
                         shape_string(p.shape()) + " and " + shape_string(q.shape()));
    if (p.rows() < 2) throw ConfigError(std::string(op) + ": need at least 2 rows");
}

}  // namespace

Tensor gram_linear(const Tensor& f) { return matmul(f, transpose(f)); }

Tensor hsic(const Tensor& k, const Tensor& l) {
    if (k.rank() != 2 || k.shape() != l.shape() || k.rows() != k.cols())
        throw ShapeError("hsic: gram shapes " + shape_string(k.shape()) + " and " +
                         shape_string(l.shape()) + " must be equal and square");
    const std::size_t r = k.rows();
    const Tensor h = centering_tensor(r);
    const double denom = static_cast<double>(r - 1);
    return mul_scalar(trace(matmul(matmul(k, h), matmul(l, h))), 1.0 / (denom * denom));
}

Tensor cka(const Tensor& p, const Tensor& q) {
    require_features("cka", p, q);
    const Tensor k = gram_linear(p);
    const Tensor l = gram_linear(q);
    const Tensor kk = hsic(k, k);
    const Tensor ll = hsic(l, l);
    const double scale = static_cast<double>(p.rows() - 1);
    if (std::sqrt(std::max(kk.item(), 0.0)) <= norm_ratio_threshold(frob(k) / scale) ||
        std::sqrt(std::max(ll.item(), 0.0)) <= norm_ratio_threshold(frob(l) / scale)) {
        diag::warn("cka: feature matrix is constant across the batch; similarity set to 0");
        return Tensor::scalar(0.0);
    }
    return div(hsic(k, l), mul(sqrt(kk), sqrt(ll)));
}

Tensor baseline_similarity(SimilarityKind kind, const Tensor& p, const Tensor& q) {
    if (p.shape() != q.shape())
        throw ShapeError("baseline_similarity: shapes " + shape_string(p.shape()) + " and " +
                         shape_string(q.shape()) + " differ");
    switch (kind) {
        case SimilarityKind::euclidean:
            return exp(neg(frobenius_norm(sub(p, q))));
        case SimilarityKind::manhattan:
            return exp(neg(sum(abs(sub(p, q)))));
        case SimilarityKind::cosine: {
            if (frob(p) == 0.0 || frob(q) == 0.0) {
                diag::warn("cosine similarity: zero-norm operand; similarity set to 0");
                return Tensor::scalar(0.0);
            }
            return div(sum(mul(p, q)), mul(frobenius_norm(p), frobenius_norm(q)));
        }
        case SimilarityKind::pearson: {
            const Tensor pc = sub(p, mean(p));
            const Tensor qc = sub(q, mean(q));
            if (frob(pc) <= norm_ratio_threshold(frob(p)) || frob(qc) <= norm_ratio_threshold(frob(q))) {
                diag::warn("pearson correlation: constant operand; similarity set to 0");
                return Tensor::scalar(0.0);
            }
            return div(sum(mul(pc, qc)), mul(frobenius_norm(pc), frobenius_norm(qc)));
        }
        case SimilarityKind::none:
        case SimilarityKind::cka:
            break;
    }
    throw ConfigError("baseline_similarity: '" + std::string(to_string(kind)) +
                      "' is not a baseline metric");
}

Tensor similarity(SimilarityKind kind, const Tensor& p, const Tensor& q) {
    if (kind == SimilarityKind::none) return Tensor::scalar(0.0);
    if (kind == SimilarityKind::cka) return cka(p, q);
    return baseline_similarity(kind, p, q);
}

}  // namespace graph
}  // namespace d2ue
