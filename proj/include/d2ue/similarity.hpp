#pragma once

// Representation similarity measures between two batches of features.
//
// Every measure exists twice: as a plain function on Eigen matrices (used
// for evaluation and reporting) and as a differentiable graph computation on
// Tensors (used inside the repulsion loss).
//
// HSIC uses linear kernels K = P P^T, L = Q Q^T and the biased estimator
//     HSIC(K, L) = tr(K H L H) / (r - 1)^2,   H = I - (1/r) 1 1^T,
// with r the number of samples (rows). CKA normalizes HSIC:
//     CKA(P, Q) = HSIC(K, L) / (sqrt(HSIC(K, K)) sqrt(HSIC(L, L))).

#include "d2ue/tensor.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace d2ue {

/// Batch of feature vectors, one row per sample. Requires >= 2 rows and
/// finite entries.
class FeatureMatrix {
public:
    explicit FeatureMatrix(Eigen::MatrixXd matrix);
    static FeatureMatrix from_tensor(const Tensor& t);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index rows() const { return matrix_.rows(); }
    Eigen::Index cols() const { return matrix_.cols(); }

private:
    Eigen::MatrixXd matrix_;
};

/// Symmetric positive-semidefinite r x r kernel matrix.
class GramMatrix {
public:
    /// Validates symmetry (1e-10) and PSD-ness (eigenvalues >= -1e-9).
    explicit GramMatrix(Eigen::MatrixXd matrix);

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    Eigen::Index size() const { return matrix_.rows(); }

private:
    struct Trusted {};
    GramMatrix(Eigen::MatrixXd matrix, Trusted) : matrix_(std::move(matrix)) {}
    friend GramMatrix gram_linear(const FeatureMatrix& f);

    Eigen::MatrixXd matrix_;
};

enum class SimilarityKind { none, euclidean, manhattan, cosine, pearson, cka };

std::string_view to_string(SimilarityKind kind);
SimilarityKind parse_similarity_kind(std::string_view text);

GramMatrix gram_linear(const FeatureMatrix& f);

/// I - (1/r) 1 1^T. Throws ConfigError for r < 2.
Eigen::MatrixXd centering_matrix(Eigen::Index r);

double hsic(const GramMatrix& k, const GramMatrix& l);

/// Centered kernel alignment in [0, 1]. A batch whose centered features
/// vanish yields 0 and a warning diagnostic.
double cka(const FeatureMatrix& p, const FeatureMatrix& q);

/// Table-style baselines: euclidean -> exp(-||P-Q||_F), manhattan ->
/// exp(-sum|P-Q|), cosine of the vectorized matrices, pearson = cosine of
/// mean-centered vectorizations. Shapes must match. A zero-norm operand
/// for cosine/pearson yields 0 and a warning.
double baseline_similarity(SimilarityKind kind, const FeatureMatrix& p, const FeatureMatrix& q);

/// Dispatches to cka or baseline_similarity; `none` returns 0.
double similarity(SimilarityKind kind, const FeatureMatrix& p, const FeatureMatrix& q);

namespace graph {

/// Differentiable counterparts. Both operands are [r x d] tensors; gradients
/// flow into whichever operands require them.
Tensor gram_linear(const Tensor& f);
Tensor hsic(const Tensor& k, const Tensor& l);
Tensor cka(const Tensor& p, const Tensor& q);
Tensor baseline_similarity(SimilarityKind kind, const Tensor& p, const Tensor& q);
Tensor similarity(SimilarityKind kind, const Tensor& p, const Tensor& q);

}  // namespace graph

}  // namespace d2ue
