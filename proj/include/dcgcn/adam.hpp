#pragma once

#include <cstdint>
#include <vector>

#include "dcgcn/params.hpp"

namespace dcgcn {

struct AdamOptions {
    double learning_rate = 0.0003;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Global gradient-norm clip applied before the update; <= 0 disables.
    double clip_norm = 5.0;
};

struct AdamState {
    std::uint64_t step = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    AdamOptions options;

    explicit AdamState(const ParamStore& params, AdamOptions opts = {});
};

struct AdamReport {
    bool applied = true;        // false when a non-finite gradient was seen
    double grad_norm = 0.0;     // before clipping
    bool clipped = false;
};

/// One Adam update from the gradients currently held by `params`. A
/// non-finite gradient skips the parameter update (moments untouched) but
/// still advances the step count; the report says so.
AdamReport adam_step(ParamStore& params, AdamState& state);

}  // namespace dcgcn
