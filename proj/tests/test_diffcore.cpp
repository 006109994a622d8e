#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

#include "dcgcn/adam.hpp"
#include "dcgcn/errors.hpp"
#include "dcgcn/gradcheck.hpp"
#include "dcgcn/params.hpp"
#include "dcgcn/tape.hpp"

using namespace dcgcn;

namespace {

Parameter& uniform(ParamStore& store, const std::string& name, Shape shape, Rng& rng) {
    Parameter& p = store.add(name, std::move(shape), Init::zeros, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : p.value.storage()) v = u(rng);
    return p;
}

Tensor random_tensor(Shape shape, Rng& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : t.storage()) v = u(rng);
    return t;
}

// sum(f(inputs) * R) for a fixed random R, so every output entry matters.
GradCheckReport check_primitive(ParamStore& store, std::function<Var(Tape&)> f, double tol = 1e-6) {
    Rng rng(99);
    std::optional<Tensor> weights;
    auto build = [&](Tape& tape) {
        Var out = f(tape);
        if (!weights) weights = random_tensor(out.value().shape(), rng);
        return ops::sum_all(ops::mul(out, tape.constant(*weights)));
    };
    GradCheckOptions o;
    o.tolerance = tol;
    o.step = 1e-5;
    return gradient_check(build, store, o);
}

}  // namespace

TEST_CASE("primitive examples") {
    Tape tape;
    Var r = ops::relu(tape.constant(Tensor::from_rows({{-1, 0, 2}})));
    CHECK(r.value() == Tensor::from_rows({{0, 0, 2}}));

    Var c = ops::concat_cols({tape.constant(Tensor::matrix(4, 3)), tape.constant(Tensor::matrix(4, 5))});
    CHECK(c.value().shape() == Shape{4, 8});

    Var s = ops::segment_softmax(tape.constant(Tensor::scalar(3.7)), {0}, 1);
    CHECK(s.value()[0] == 1.0);

    CHECK_THROWS_AS(ops::matmul(tape.constant(Tensor::matrix(2, 3)), tape.constant(Tensor::matrix(2, 3))),
                    ShapeError);
}

TEST_CASE("gradient of sum(W x) replicates x in every row") {
    Parameter w{"W", Tensor::from_rows({{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}}), {}};
    Tape tape;
    Var x = tape.constant(Tensor::from_rows({{1}, {-2}, {3}}));
    tape.backward(ops::sum_all(ops::matmul(tape.param(w), x)));
    CHECK(w.grad == Tensor::from_rows({{1, -2, 3}, {1, -2, 3}}));
}

TEST_CASE("a dead ReLU passes no gradient") {
    Parameter w{"w", Tensor::scalar(0.7), {}};
    Tape tape;
    tape.backward(ops::sum_all(ops::mul(ops::relu(tape.constant(Tensor::scalar(-5))), tape.param(w))));
    CHECK(w.grad[0] == 0.0);
}

TEST_CASE("every primitive matches central differences to 1e-6") {
    Rng rng(1);
    ParamStore s;
    Parameter& a = uniform(s, "a", {4, 3}, rng);
    Parameter& b = uniform(s, "b", {3, 5}, rng);
    Parameter& c = uniform(s, "c", {4, 3}, rng);
    Parameter& row = uniform(s, "row", {1, 3}, rng);
    Parameter& col = uniform(s, "col", {4, 1}, rng);
    Parameter& bt = uniform(s, "bt", {5, 3}, rng);
    Parameter& bias = uniform(s, "bias", {5}, rng);
    using F = std::function<Var(Tape&)>;
    const std::vector<std::pair<const char*, F>> cases = {
        {"matmul", [&](Tape& t) { return ops::matmul(t.param(a), t.param(b)); }},
        {"matmul_nt", [&](Tape& t) { return ops::matmul_nt(t.param(a), t.param(bt)); }},
        {"linear", [&](Tape& t) { return ops::linear(t.param(a), t.param(bt), t.param(bias)); }},
        {"add", [&](Tape& t) { return ops::add(t.param(a), t.param(c)); }},
        {"sub", [&](Tape& t) { return ops::sub(t.param(a), t.param(c)); }},
        {"mul", [&](Tape& t) { return ops::mul(t.param(a), t.param(c)); }},
        {"scale", [&](Tape& t) { return ops::scale(t.param(a), -1.7); }},
        {"add_row", [&](Tape& t) { return ops::add_row(t.param(a), t.param(row)); }},
        {"mul_col", [&](Tape& t) { return ops::mul_col(t.param(a), t.param(col)); }},
        {"concat_cols", [&](Tape& t) { return ops::concat_cols({t.param(a), t.param(c), t.param(col)}); }},
        {"slice_cols", [&](Tape& t) { return ops::slice_cols(t.param(a), 1, 2); }},
        {"relu", [&](Tape& t) { return ops::relu(t.param(a)); }},
        {"leaky_relu", [&](Tape& t) { return ops::leaky_relu(t.param(a), 0.2); }},
        {"tanh", [&](Tape& t) { return ops::tanh(t.param(a)); }},
        {"sigmoid", [&](Tape& t) { return ops::sigmoid(t.param(a)); }},
        {"exp", [&](Tape& t) { return ops::exp(t.param(a)); }},
        {"log_softmax_rows", [&](Tape& t) { return ops::log_softmax_rows(t.param(a)); }},
        {"pick", [&](Tape& t) { return ops::pick(ops::log_softmax_rows(t.param(a)), {2, -1, 0, 1}); }},
        {"sum_all", [&](Tape& t) { return ops::sum_all(t.param(a)); }},
        {"mean_rows", [&](Tape& t) { return ops::mean_rows(t.param(a)); }},
        {"gather_rows", [&](Tape& t) { return ops::gather_rows(t.param(a), {3, 0, 3, 1, 1}); }},
        {"scatter_add_rows", [&](Tape& t) { return ops::scatter_add_rows(t.param(a), {2, 0, 2, 4}, 6); }},
        {"segment_softmax",
         [&](Tape& t) { return ops::segment_softmax(t.param(col), {1, 0, 1, 1}, 2); }},
    };
    for (const auto& [name, f] : cases) {
        CAPTURE(name);
        const GradCheckReport r = check_primitive(s, f);
        CHECK(r.passed);
        CHECK(r.max_relative_error <= 1e-6);
        CHECK(!r.entries.empty());
    }
}

TEST_CASE("quadratic loss agrees with finite differences to 1e-9") {
    Rng rng(2);
    ParamStore s;
    Parameter& w = uniform(s, "W", {3, 4}, rng);
    GradCheckOptions o;
    o.tolerance = 1e-9;
    const auto r = gradient_check(
        [&](Tape& t) { return ops::sum_all(ops::mul(t.param(w), t.param(w))); }, s, o);
    CHECK(r.passed);
    CHECK(r.entries.size() == 12);
    for (const auto& e : r.entries) CHECK(e.analytic == doctest::Approx(2.0 * w.value[e.index]).epsilon(1e-15));
}

TEST_CASE("a corrupted concat backward rule fails the gradient check") {
    Rng rng(3);
    ParamStore s;
    Parameter& a = uniform(s, "a", {3, 2}, rng);
    Parameter& b = uniform(s, "b", {3, 4}, rng);
    auto build = [&](bool fault) {
        return [&, fault](Tape& t) {
            if (fault) t.inject_backward_fault(OpKind::concat_cols);
            Var h = ops::tanh(ops::concat_cols({t.param(a), t.param(b)}));
            return ops::sum_all(ops::mul(h, h));
        };
    };
    CHECK(gradient_check(build(false), s).passed);
    const auto broken = gradient_check(build(true), s);
    CHECK_FALSE(broken.passed);
    CHECK(broken.max_relative_error > 0.3);
}

TEST_CASE("two forward passes give bit-identical losses") {
    Rng rng(4);
    ParamStore s;
    Parameter& a = uniform(s, "a", {5, 4}, rng);
    Parameter& b = uniform(s, "b", {4, 4}, rng);
    auto run = [&] {
        Tape t;
        Var h = ops::tanh(ops::matmul(t.param(a), t.param(b)));
        return ops::sum_all(ops::log_softmax_rows(h)).value()[0];
    };
    const double x = run(), y = run();
    CHECK(std::memcmp(&x, &y, sizeof x) == 0);
}

TEST_CASE("gather backward equals scatter-add of the upstream gradient") {
    Rng rng(5);
    ParamStore s;
    Parameter& a = uniform(s, "a", {4, 3}, rng);
    const std::vector<Index> idx = {2, 0, 2, 3, 2, 1, 0};
    const Tensor upstream = random_tensor({idx.size(), 3}, rng);
    s.zero_grad();
    Tape t;
    t.backward(ops::sum_all(ops::mul(ops::gather_rows(t.param(a), idx), t.constant(upstream))));
    Tape u;
    const Tensor want = ops::scatter_add_rows(u.constant(upstream), idx, 4).value();
    CHECK(a.grad == want);
}

TEST_CASE("non-finite values are rejected") {
    Tape t;
    CHECK_THROWS_AS(t.constant(Tensor::scalar(std::nan(""))), NumericError);
    CHECK_THROWS_AS(ops::exp(t.constant(Tensor::scalar(1e6))), NumericError);
}

TEST_CASE("Adam updates") {
    Rng rng(6);
    SUBCASE("zero gradient leaves parameters unchanged and counts the step") {
        ParamStore s;
        uniform(s, "a", {2, 2}, rng);
        const Tensor before = s[0].value;
        s.zero_grad();
        AdamState st(s);
        adam_step(s, st);
        CHECK(s[0].value == before);
        CHECK(st.step == 1);
    }
    SUBCASE("first and second steps on a scalar") {
        ParamStore s;
        Parameter& p = s.add("x", {1, 1}, Init::zeros, rng);
        AdamOptions o;
        o.learning_rate = 0.01;
        AdamState st(s, o);
        p.grad = Tensor::scalar(1.0);
        adam_step(s, st);
        const double first = -p.value[0];
        CHECK(first == doctest::Approx(0.01 / (1.0 + 1e-8)).epsilon(1e-12));
        p.grad = Tensor::scalar(1.0);
        const double before = p.value[0];
        adam_step(s, st);
        const double second = before - p.value[0];
        CHECK(second > 0.0);
        CHECK(second <= first * 1.01);
    }
    SUBCASE("gradients are clipped to the global norm") {
        ParamStore s;
        Parameter& p = s.add("x", {1, 2}, Init::zeros, rng);
        AdamState st(s);
        p.grad = Tensor::from_rows({{30, 40}});
        const AdamReport r = adam_step(s, st);
        CHECK(r.clipped);
        CHECK(r.grad_norm == 50.0);
    }
    SUBCASE("non-finite gradients skip the update") {
        ParamStore s;
        Parameter& p = s.add("x", {1, 1}, Init::zeros, rng);
        AdamState st(s);
        p.grad = Tensor::scalar(std::numeric_limits<double>::infinity());
        const AdamReport r = adam_step(s, st);
        CHECK_FALSE(r.applied);
        CHECK(p.value[0] == 0.0);
    }
}

TEST_CASE("parameter initialization") {
    Rng rng(7);
    ParamStore s;
    Parameter& w = s.add("w", {20, 30}, Init::glorot, rng);
    Parameter& b = s.add("b", {20}, Init::zeros, rng);
    const double bound = std::sqrt(6.0 / 50.0);
    for (double v : w.value.values()) CHECK(std::abs(v) <= bound);
    for (double v : b.value.values()) CHECK(v == 0.0);
    CHECK_THROWS_AS(s.add("w", {1, 1}, Init::zeros, rng), ConfigError);
    CHECK(s.scalar_count() == 620);
}

TEST_CASE("checkpoint round trip") {
    Rng rng(8);
    ParamStore s;
    uniform(s, "enc.a", {3, 4}, rng);
    uniform(s, "enc.b", {4}, rng);
    std::stringstream buf;
    s.save(buf);
    ParamStore t;
    Rng other(9);
    t.add("enc.a", {3, 4}, Init::zeros, other);
    t.add("enc.b", {4}, Init::zeros, other);
    t.load(buf);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i].value == t[i].value);

    ParamStore wrong;
    wrong.add("enc.a", {3, 5}, Init::zeros, other);
    wrong.add("enc.b", {4}, Init::zeros, other);
    std::stringstream again;
    s.save(again);
    CHECK_THROWS(wrong.load(again));
    std::stringstream junk("not a checkpoint");
    CHECK_THROWS_AS(t.load(junk), InputError);
}
