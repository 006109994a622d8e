#include "dcgcn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "dcgcn/errors.hpp"

namespace dcgcn {
namespace {

struct Evaluation {
    double loss;
    std::vector<bool> active;  // sign pattern of every ReLU/LeakyReLU output
};

Evaluation evaluate(const LossBuilder& build) {
    Tape tape(Tape::Mode::inference);
    Var loss = build(tape);
    if (loss.value().size() != 1) throw ShapeError("loss builder must return a scalar");
    Evaluation e{loss.value()[0], {}};
    for (std::uint32_t id = 0; id < tape.size(); ++id) {
        const OpKind k = tape.kind(Var{&tape, id});
        if (k != OpKind::relu && k != OpKind::leaky_relu) continue;
        for (double v : tape.value_of(id).values()) e.active.push_back(v > 0.0);
    }
    return e;
}

}  // namespace

void jitter_biases(ParamStore& params, Rng& rng, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& v = params[i].value;
        if (v.rank() != 1) continue;
        for (auto& x : v.values()) x = dist(rng);
    }
}

GradCheckReport gradient_check(const LossBuilder& build, ParamStore& params,
                               const GradCheckOptions& options) {
    params.zero_grad();
    double reference = 0.0;
    {
        Tape tape;
        Var loss = build(tape);
        reference = loss.value()[0];
        tape.backward(loss);
    }
    const Evaluation base = evaluate(build);
    if (base.loss != reference)
        throw NumericError("loss builder is not deterministic: repeated forward passes disagree");

    // Candidate (parameter, entry) probes in the order they are tried: one
    // per parameter first, then the rest shuffled.
    std::vector<std::pair<std::size_t, std::size_t>> order;
    const std::size_t total = params.scalar_count();
    const bool exhaustive = options.samples == 0 || options.samples >= total;
    if (exhaustive) {
        for (std::size_t p = 0; p < params.size(); ++p)
            for (std::size_t j = 0; j < params[p].value.size(); ++j) order.emplace_back(p, j);
    } else {
        Rng rng(options.seed);
        std::vector<std::pair<std::size_t, std::size_t>> all;
        all.reserve(total);
        for (std::size_t p = 0; p < params.size(); ++p) {
            std::uniform_int_distribution<std::size_t> pick(0, params[p].value.size() - 1);
            order.emplace_back(p, pick(rng));
            for (std::size_t j = 0; j < params[p].value.size(); ++j) all.emplace_back(p, j);
        }
        std::shuffle(all.begin(), all.end(), rng);
        std::set<std::pair<std::size_t, std::size_t>> seen(order.begin(), order.end());
        for (const auto& e : all)
            if (seen.insert(e).second) order.push_back(e);
    }
    const std::size_t wanted = exhaustive ? total : std::max(options.samples, params.size());

    GradCheckReport report;
    report.tolerance = options.tolerance;
    const double eps = std::numeric_limits<double>::epsilon();
    for (const auto& [p, j] : order) {
        if (report.entries.size() >= wanted) break;
        Parameter& param = params[p];
        const double saved = param.value[j];
        param.value[j] = saved + options.step;
        const Evaluation up = evaluate(build);
        param.value[j] = saved - options.step;
        const Evaluation down = evaluate(build);
        param.value[j] = saved;
        if (up.active != base.active || down.active != base.active) {
            ++report.skipped_kinks;
            continue;
        }
        const double numeric = (up.loss - down.loss) / (2.0 * options.step);
        const double analytic = param.grad[j];
        const double floor = 2.0 * eps * std::max(std::abs(up.loss), std::abs(down.loss)) /
                             (options.step * options.tolerance);
        if (analytic != numeric && std::max(std::abs(analytic), std::abs(numeric)) < floor) {
            ++report.skipped_unresolved;
            continue;
        }
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        const double rel = std::abs(analytic - numeric) / denom;
        report.entries.push_back({param.name, j, analytic, numeric, rel});
        report.max_relative_error = std::max(report.max_relative_error, rel);
    }
    report.passed = !report.entries.empty() && report.max_relative_error <= options.tolerance;
    return report;
}

}  // namespace dcgcn
