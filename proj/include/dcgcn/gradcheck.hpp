#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcgcn/params.hpp"

namespace dcgcn {

struct GradCheckOptions {
    double tolerance = 1e-4;
    double step = 1e-5;
    /// Entries to compare; 0 means every scalar of every parameter. Each
    /// parameter gets at least one probe.
    std::size_t samples = 0;
    std::uint64_t seed = 1;
};

struct GradCheckEntry {
    std::string param;
    std::size_t index;
    double analytic;
    double numeric;
    double relative_error;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_relative_error = 0.0;
    double tolerance = 0.0;
    /// Probes replaced because a ReLU/LeakyReLU input changed sign inside
    /// [x - step, x + step], so the loss is not smooth there.
    std::size_t skipped_kinks = 0;
    /// Probes replaced because both gradients differ yet sit below the smallest value a
    /// central difference can resolve to `tolerance`
    /// (2 * eps * |loss| / (step * tolerance)).
    std::size_t skipped_unresolved = 0;
    bool passed = false;
};

/// Builds a scalar loss on the given tape from the current parameter values.
using LossBuilder = std::function<Var(Tape&)>;

/// Moves every bias (rank-1 parameter) to U(-scale, scale).
void jitter_biases(ParamStore& params, Rng& rng, double scale = 0.1);

/// Compare backward() gradients with central finite differences,
/// |a - n| / max(|a|, |n|, 1e-8) per probed entry; passes iff every compared
/// entry is within tolerance. Probes where the difference quotient is not a
/// valid oracle are counted and replaced by further samples. Throws
/// NumericError when two forward passes at the same point disagree.
GradCheckReport gradient_check(const LossBuilder& build, ParamStore& params,
                               const GradCheckOptions& options = {});

}  // namespace dcgcn
