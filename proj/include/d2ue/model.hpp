#pragma once

#include "d2ue/adam.hpp"
#include "d2ue/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace d2ue {

enum class Activation { relu, sigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

/// Dense autoencoder shape. The encoder runs input -> hidden_dims... ->
/// bottleneck with `activation` after every layer; the decoder mirrors it and
/// ends in a sigmoid so reconstructions lie in (0, 1).
struct AutoencoderConfig {
    std::size_t input_dim = 256;
    std::vector<std::size_t> hidden_dims{128, 64};
    std::size_t bottleneck_dim = 16;
    Activation activation = Activation::relu;
    std::uint64_t init_seed = 0;
    /// Encoder layer whose post-activation output is exposed as features.
    /// -1 selects the bottleneck.
    int feature_layer = -1;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
    std::size_t encoder_layers() const { return hidden_dims.size() + 1; }
    std::size_t feature_layer_index() const;
    std::size_t feature_dim() const;

    bool operator==(const AutoencoderConfig&) const = default;
};

class Learner {
public:
    /// Randomly initialized learner: weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in))
    /// from config.init_seed, biases zero.
    explicit Learner(AutoencoderConfig config);

    /// Deep copies; a copied learner never aliases the original's storage.
    Learner(const Learner& other);
    Learner& operator=(const Learner& other);
    Learner(Learner&&) noexcept = default;
    Learner& operator=(Learner&&) noexcept = default;

    const AutoencoderConfig& config() const { return config_; }
    std::span<Parameter> parameters();
    std::span<const Parameter> parameters() const { return params_; }
    const Parameter& parameter(std::string_view name) const;

    bool trained() const { return trained_; }
    /// Marks the learner trained and stops its parameters from taking part
    /// in gradient computation. Irreversible.
    void freeze();

    void zero_grad();

    /// Rebuilds a learner from checkpoint data. Shapes must match `config`.
    static Learner restore(AutoencoderConfig config, std::vector<Parameter> params, bool trained);

private:
    Learner() = default;

    AutoencoderConfig config_;
    std::vector<Parameter> params_;
    bool trained_ = false;
};

Learner init_learner(const AutoencoderConfig& config);

struct ForwardResult {
    Tensor reconstruction;  // [r x input_dim]
    Tensor features;        // [r x feature_dim]
};

/// Full pass over a batch [r x input_dim].
ForwardResult forward(const Learner& learner, const Tensor& batch);

/// Encoder only, stopping at the feature tap.
Tensor encode(const Learner& learner, const Tensor& batch);

/// Mean over batch and pixels of the squared error.
Tensor reconstruction_loss(const Tensor& reconstruction, const Tensor& batch);

}  // namespace d2ue
