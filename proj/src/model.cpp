#include "d2ue/model.hpp"

#include "d2ue/error.hpp"
#include "d2ue/rng.hpp"

#include <cmath>

namespace d2ue {
namespace {

std::vector<std::size_t> encoder_dims(const AutoencoderConfig& c) {
    std::vector<std::size_t> d{c.input_dim};
    d.insert(d.end(), c.hidden_dims.begin(), c.hidden_dims.end());
    d.push_back(c.bottleneck_dim);
    return d;
}

std::string layer_name(const char* part, std::size_t i, const char* what) {
    return std::string(part) + "." + std::to_string(i) + "." + what;
}

Tensor activate(Activation a, const Tensor& x) {
    return a == Activation::relu ? relu(x) : sigmoid(x);
}

// x W + 1 b, with the bias broadcast expressed as an outer product.
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    const Tensor ones = Tensor::full({x.rows(), 1}, 1.0);
    return add(matmul(x, w), matmul(ones, b));
}

void check_batch(const Learner& learner, const Tensor& batch) {
    if (batch.rank() != 2 || batch.cols() != learner.config().input_dim)
        throw ShapeError("forward: batch of shape " + shape_string(batch.shape()) +
                         " does not match input_dim " + std::to_string(learner.config().input_dim));
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }

Activation parse_activation(std::string_view text) {
    if (text == "relu") return Activation::relu;
    if (text == "sigmoid") return Activation::sigmoid;
    throw ConfigError("unknown activation '" + std::string(text) + "'");
}

void AutoencoderConfig::validate() const {
    if (input_dim < 1 || bottleneck_dim < 1) throw ConfigError("autoencoder: dimensions must be >= 1");
    for (auto h : hidden_dims)
        if (h < 1) throw ConfigError("autoencoder: hidden dimensions must be >= 1");
    if (bottleneck_dim >= input_dim)
        throw ConfigError("autoencoder: bottleneck_dim " + std::to_string(bottleneck_dim) +
                          " must be smaller than input_dim " + std::to_string(input_dim));
    if (feature_layer < -1 || feature_layer >= static_cast<int>(encoder_layers()))
        throw ConfigError("autoencoder: feature_layer " + std::to_string(feature_layer) +
                          " out of range");
}

std::size_t AutoencoderConfig::feature_layer_index() const {
    return feature_layer < 0 ? encoder_layers() - 1 : static_cast<std::size_t>(feature_layer);
}

std::size_t AutoencoderConfig::feature_dim() const {
    return encoder_dims(*this)[feature_layer_index() + 1];
}

Learner::Learner(AutoencoderConfig config) : config_(std::move(config)) {
    config_.validate();
    Rng rng(config_.init_seed);
    auto add_layer = [&](const char* part, std::size_t i, std::size_t in, std::size_t out) {
        const double bound = std::sqrt(1.0 / static_cast<double>(in));
        std::vector<double> w(in * out);
        for (double& x : w) x = rng.uniform(-bound, bound);
        params_.push_back({layer_name(part, i, "weight"), Tensor::from({in, out}, std::move(w), true)});
        params_.push_back({layer_name(part, i, "bias"), Tensor::zeros({1, out}, true)});
    };
    const auto dims = encoder_dims(config_);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) add_layer("encoder", i, dims[i], dims[i + 1]);
    for (std::size_t i = dims.size() - 1, k = 0; i > 0; --i, ++k) add_layer("decoder", k, dims[i], dims[i - 1]);
}

Learner::Learner(const Learner& other) : config_(other.config_), trained_(other.trained_) {
    params_.reserve(other.params_.size());
    for (const auto& p : other.params_) params_.push_back({p.name, p.tensor.clone()});
}

Learner& Learner::operator=(const Learner& other) {
    if (this != &other) *this = Learner(other);
    return *this;
}

std::span<Parameter> Learner::parameters() { return params_; }

const Parameter& Learner::parameter(std::string_view name) const {
    for (const auto& p : params_)
        if (p.name == name) return p;
    throw ConfigError("learner has no parameter '" + std::string(name) + "'");
}

void Learner::freeze() {
    trained_ = true;
    for (auto& p : params_) {
        p.tensor.clear_grad();
        p.tensor.set_requires_grad(false);
    }
}

void Learner::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

Learner Learner::restore(AutoencoderConfig config, std::vector<Parameter> params, bool trained) {
    const Learner reference(config);
    if (params.size() != reference.params_.size())
        throw ConfigError("restore: expected " + std::to_string(reference.params_.size()) +
                          " parameters, got " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& want = reference.params_[i];
        if (params[i].name != want.name || params[i].tensor.shape() != want.tensor.shape())
            throw ConfigError("restore: parameter '" + params[i].name + "' " +
                              shape_string(params[i].tensor.shape()) + " does not match '" +
                              want.name + "' " + shape_string(want.tensor.shape()));
    }
    Learner out;
    out.config_ = std::move(config);
    out.params_ = std::move(params);
    for (auto& p : out.params_) p.tensor = p.tensor.detach();
    if (trained) {
        out.trained_ = true;
    } else {
        for (auto& p : out.params_) p.tensor.set_requires_grad(true);
    }
    return out;
}

Learner init_learner(const AutoencoderConfig& config) { return Learner(config); }

Tensor encode(const Learner& learner, const Tensor& batch) {
    check_batch(learner, batch);
    const auto& cfg = learner.config();
    const auto params = learner.parameters();
    Tensor h = batch;
    for (std::size_t i = 0; i <= cfg.feature_layer_index(); ++i)
        h = activate(cfg.activation, affine(h, params[2 * i].tensor, params[2 * i + 1].tensor));
    return h;
}

ForwardResult forward(const Learner& learner, const Tensor& batch) {
    check_batch(learner, batch);
    const auto& cfg = learner.config();
    const auto params = learner.parameters();
    const std::size_t enc = cfg.encoder_layers();
    const std::size_t tap = cfg.feature_layer_index();

    Tensor h = batch;
    Tensor features;
    for (std::size_t i = 0; i < enc; ++i) {
        h = activate(cfg.activation, affine(h, params[2 * i].tensor, params[2 * i + 1].tensor));
        if (i == tap) features = h;
    }
    for (std::size_t k = 0; k < enc; ++k) {
        const std::size_t i = enc + k;
        h = affine(h, params[2 * i].tensor, params[2 * i + 1].tensor);
        h = k + 1 == enc ? sigmoid(h) : activate(cfg.activation, h);
    }
    return {h, features};
}

Tensor reconstruction_loss(const Tensor& reconstruction, const Tensor& batch) {
    return mse(reconstruction, batch);
}

}  // namespace d2ue
