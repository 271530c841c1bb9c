#pragma once

#include "d2ue/tensor.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace d2ue {

/// A named trainable tensor. Names are unique within a learner.
struct Parameter {
    std::string name;
    Tensor tensor;
};

struct AdamOptions {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment accumulators for one parameter list. Shapes are bound lazily on
/// the first step and checked on every later one.
class AdamState {
public:
    explicit AdamState(AdamOptions options = {}) : options_(options) {}

    const AdamOptions& options() const { return options_; }
    std::uint64_t step() const { return step_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }

private:
    friend void adam_step(std::span<Parameter> params, AdamState& state);

    AdamOptions options_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// One bias-corrected Adam update. Gradients are read, never cleared.
/// Throws ConfigError naming the first parameter without a gradient.
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace d2ue
