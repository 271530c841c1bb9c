#pragma once

// Sequential ensemble training with feature-space repulsion.
//
// Learner n (1-based) minimizes
//     L_total = L_rec + lambda * L_sim,
//     L_sim   = 1/(n-1) * sum_{j<n} S(P_j, Q_n),
// where Q_n are its features on the current minibatch, P_j the features of
// the already trained learner j on the same minibatch (treated as
// constants) and S the configured similarity. L_sim is 0 for the first
// learner.

#include "d2ue/image.hpp"
#include "d2ue/model.hpp"
#include "d2ue/similarity.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace d2ue {

struct TrainConfig {
    std::size_t n_learners = 3;
    double lambda = 1.0;
    SimilarityKind similarity = SimilarityKind::cka;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 5e-4;
    std::uint64_t master_seed = 0;

    void validate() const;
    /// Seed of learner `index` (0-based): master_seed + index.
    std::uint64_t learner_seed(std::size_t index) const { return master_seed + index; }

    bool operator==(const TrainConfig&) const = default;
};

struct EpochLoss {
    double total = 0.0;
    double reconstruction = 0.0;
    double similarity = 0.0;
};

struct Ensemble {
    std::vector<Learner> learners;  // training order
    TrainConfig config;
    std::vector<std::vector<EpochLoss>> history;  // per learner, per epoch

    std::size_t size() const { return learners.size(); }
};

/// Stacks images into a [count x pixels] tensor.
Tensor images_to_batch(std::span<const Image> images);
Tensor images_to_batch(std::span<const Image> images, std::span<const std::size_t> indices);

/// Mean similarity of `current` to each frozen feature batch; frozen
/// features are detached so gradients reach `current` only. Scalar 0 when
/// `frozen` is empty.
Tensor sim_loss(SimilarityKind kind, const Tensor& current, std::span<const Tensor> frozen);

/// Trains learner `index` (0-based) against `frozen` (learners 0..index-1).
/// Returns it frozen. `history`, when given, receives one entry per epoch.
Learner train_learner(std::size_t index, std::span<const Image> data, std::span<const Learner> frozen,
                      const TrainConfig& config, const AutoencoderConfig& architecture,
                      std::vector<EpochLoss>* history = nullptr);

Ensemble train_ensemble(std::span<const Image> data, const AutoencoderConfig& architecture,
                        const TrainConfig& config);

/// Minibatch order for one epoch: a seeded shuffle split into chunks of
/// batch_size. A trailing chunk with a single sample is dropped when the
/// dataset has more than one image.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch);

/// Mean over learner pairs (i < j) of the batch-averaged linear CKA between
/// their feature taps, using consecutive batches of `batch_size` images.
double mean_pairwise_cka(std::span<const Learner> learners, std::span<const Image> data,
                         std::size_t batch_size);

/// Checkpoint directory: learner_<i>.d2ue per learner plus manifest.txt
/// (key = value lines).
void save_ensemble(const std::filesystem::path& dir, const Ensemble& ensemble);
Ensemble load_ensemble(const std::filesystem::path& dir);

}  // namespace d2ue
