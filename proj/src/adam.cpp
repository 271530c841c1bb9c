#include "d2ue/adam.hpp"

#include "d2ue/error.hpp"

#include <cmath>

namespace d2ue {

void adam_step(std::span<Parameter> params, AdamState& state) {
    for (const auto& p : params) {
        if (!p.tensor.has_grad())
            throw ConfigError("adam_step: parameter '" + p.name + "' has no gradient");
    }
    if (state.m_.empty()) {
        for (const auto& p : params) {
            state.m_.emplace_back(p.tensor.numel(), 0.0);
            state.v_.emplace_back(p.tensor.numel(), 0.0);
        }
    }
    if (state.m_.size() != params.size())
        throw ConfigError("adam_step: state tracks " + std::to_string(state.m_.size()) +
                          " parameters, got " + std::to_string(params.size()));

    const auto& o = state.options_;
    ++state.step_;
    const double t = static_cast<double>(state.step_);
    const double bc1 = 1.0 - std::pow(o.beta1, t);
    const double bc2 = 1.0 - std::pow(o.beta2, t);

    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& m = state.m_[k];
        auto& v = state.v_[k];
        if (m.size() != params[k].tensor.numel())
            throw ConfigError("adam_step: moment shape mismatch for '" + params[k].name + "'");
        const auto g = params[k].tensor.grad();
        auto w = params[k].tensor.mutable_values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
        }
    }
}

}  // namespace d2ue
