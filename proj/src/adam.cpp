#include "dcgcn/adam.hpp"

#include <cmath>

#include "dcgcn/errors.hpp"

namespace dcgcn {

AdamState::AdamState(const ParamStore& params, AdamOptions opts) : options(opts) {
    if (!(opts.learning_rate >= 0.0) || !(opts.beta1 > 0.0 && opts.beta1 < 1.0) ||
        !(opts.beta2 > 0.0 && opts.beta2 < 1.0) || !(opts.epsilon > 0.0))
        throw ConfigError("invalid Adam hyperparameters");
    first_moment.reserve(params.size());
    second_moment.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        first_moment.emplace_back(params[i].value.shape());
        second_moment.emplace_back(params[i].value.shape());
    }
}

AdamReport adam_step(ParamStore& params, AdamState& state) {
    if (state.first_moment.size() != params.size())
        throw ShapeError("Adam state was built for a different parameter set");
    AdamReport report;
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Parameter& p = params[i];
        if (p.grad.size() != p.value.size())
            throw ShapeError("gradient shape " + shape_string(p.grad.shape()) + " for " + p.name +
                             " does not match " + shape_string(p.value.shape()));
        if (state.first_moment[i].shape() != p.value.shape())
            throw ShapeError("Adam moment shape mismatch for " + p.name);
        for (double g : p.grad.values()) sq += g * g;
    }
    report.grad_norm = std::sqrt(sq);
    state.step += 1;
    if (!std::isfinite(report.grad_norm)) {
        report.applied = false;
        return report;
    }
    double factor = 1.0;
    if (state.options.clip_norm > 0.0 && report.grad_norm > state.options.clip_norm) {
        factor = state.options.clip_norm / report.grad_norm;
        report.clipped = true;
    }
    const auto& o = state.options;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(o.beta1, t);
    const double bc2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        Tensor& m = state.first_moment[i];
        Tensor& v = state.second_moment[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j] * factor;
            m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g;
            v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p.value[j] -= o.learning_rate * mhat / (std::sqrt(vhat) + o.epsilon);
        }
    }
    return report;
}

}  // namespace dcgcn
