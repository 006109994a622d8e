#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dcgcn/decoder.hpp"
#include "dcgcn/errors.hpp"
#include "dcgcn/gradcheck.hpp"
#include "dcgcn/model.hpp"
#include "support.hpp"

using namespace dcgcn;
using namespace dcgcn::ops;

namespace {

DecoderConfig small_decoder(bool coverage = true) {
    DecoderConfig c;
    c.memory_dim = 6;
    c.hidden = 5;
    c.embedding = 4;
    c.attention = 3;
    c.coverage = coverage;
    return c;
}

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c) {
    Tensor t = Tensor::matrix(r, c);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : t.storage()) v = u(rng);
    return t;
}

struct Setup {
    ParamStore params;
    Rng rng{1};
    Decoder decoder{small_decoder(), 7, params, rng};
};

}  // namespace

TEST_CASE("initial state") {
    Setup s;
    Tape tape;
    SUBCASE("zero source and zero bias give a zero state") {
        DecoderVars v = s.decoder.init_state(tape, s.params, tape.constant(Tensor::matrix(2, 6)), 9);
        for (const Var& x : {v.h1, v.c1, v.h2, v.c2, v.context, v.coverage})
            for (double e : x.value().storage()) CHECK(e == 0.0);
        CHECK(v.coverage.value().shape() == Shape{9, 1});
        CHECK(v.context.value().shape() == Shape{2, 6});
    }
    SUBCASE("different sources give different states") {
        Rng rng(2);
        const Tensor a = random_tensor(rng, 1, 6), b = random_tensor(rng, 1, 6);
        const Tensor ha = s.decoder.init_state(tape, s.params, tape.constant(a), 3).h1.value();
        const Tensor hb = s.decoder.init_state(tape, s.params, tape.constant(b), 3).h1.value();
        CHECK_FALSE(ha == hb);
    }
    SUBCASE("source width is checked") {
        CHECK_THROWS_AS(s.decoder.init_state(tape, s.params, tape.constant(Tensor::matrix(1, 5)), 3), ShapeError);
    }
}

TEST_CASE("attention over the memory") {
    Setup s;
    Rng rng(3);
    Tape tape;
    SUBCASE("a single memory row gets weight one") {
        auto mem = s.decoder.prepare_memory(tape, s.params, tape.constant(random_tensor(rng, 1, 6)), {0}, 1);
        auto out = s.decoder.attend(tape, s.params, tape.constant(random_tensor(rng, 1, 5)),
                                    tape.constant(Tensor::matrix(1, 1)), mem);
        CHECK(out.alpha.value()[0] == 1.0);
        CHECK(out.context.value() == mem.memory.value());
    }
    SUBCASE("identical rows get uniform weights") {
        const Tensor row = random_tensor(rng, 1, 6);
        Tensor m = Tensor::matrix(4, 6);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 6; ++c) m.at(r, c) = row[c];
        auto mem = s.decoder.prepare_memory(tape, s.params, tape.constant(m), {0, 0, 0, 0}, 1);
        auto out = s.decoder.attend(tape, s.params, tape.constant(random_tensor(rng, 1, 5)),
                                    tape.constant(Tensor::matrix(4, 1)), mem);
        for (std::size_t r = 0; r < 4; ++r) CHECK(out.alpha.value()[r] == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("weights sum to one per sequence and coverage accumulates") {
        const std::vector<Index> seg{0, 0, 1, 1, 1, 0, 1};
        auto mem = s.decoder.prepare_memory(tape, s.params, tape.constant(random_tensor(rng, 7, 6)), seg, 2);
        Var coverage = tape.constant(Tensor::matrix(7, 1));
        Tensor previous = coverage.value();
        for (int t = 1; t <= 6; ++t) {
            auto out = s.decoder.attend(tape, s.params, tape.constant(random_tensor(rng, 2, 5)), coverage, mem);
            double sum[2] = {0, 0}, cov[2] = {0, 0};
            for (std::size_t r = 0; r < 7; ++r) {
                CHECK(out.alpha.value()[r] > 0.0);
                sum[seg[r]] += out.alpha.value()[r];
                cov[seg[r]] += out.coverage.value()[r];
                CHECK(out.coverage.value()[r] >= previous[r]);
            }
            for (int b = 0; b < 2; ++b) {
                CHECK(std::abs(sum[b] - 1.0) <= 1e-9);
                CHECK(std::abs(cov[b] - t) <= 1e-9);
            }
            previous = out.coverage.value();
            coverage = out.coverage;
        }
    }
    SUBCASE("memory is validated") {
        CHECK_THROWS_AS(s.decoder.prepare_memory(tape, s.params, tape.constant(Tensor::matrix(2, 5)), {0, 0}, 1),
                        ShapeError);
        CHECK_THROWS_AS(s.decoder.prepare_memory(tape, s.params, tape.constant(Tensor::matrix(2, 6)), {0, 0}, 2),
                        InputError);
        CHECK_THROWS_AS(s.decoder.prepare_memory(tape, s.params, tape.constant(Tensor::matrix(2, 6)), {0}, 1),
                        ShapeError);
    }
}

TEST_CASE("decoder step") {
    Setup s;
    Rng rng(4);
    auto run = [&] {
        Tape tape;
        auto mem = s.decoder.prepare_memory(tape, s.params, tape.constant(random_tensor(rng, 5, 6)),
                                            {0, 0, 1, 1, 1}, 2);
        Rng src(5);
        DecoderVars v = s.decoder.init_state(tape, s.params, tape.constant(random_tensor(src, 2, 6)), 5);
        StepOutput out = s.decoder.step(tape, s.params, v, {2, 4}, mem);
        out = s.decoder.step(tape, s.params, out.state, {6, 1}, mem);
        return std::pair{out.logits.value(), log_softmax_rows(out.logits).value()};
    };
    rng.seed(9);
    const auto [logits, logp] = run();
    rng.seed(9);
    CHECK(run().first == logits);
    CHECK(logits.shape() == Shape{2, 7});
    for (std::size_t b = 0; b < 2; ++b) {
        double z = 0.0;
        for (std::size_t k = 0; k < 7; ++k) z += std::exp(logp.at(b, k));
        CHECK(std::abs(z - 1.0) <= 1e-12);
    }
    Tape tape;
    auto mem = s.decoder.prepare_memory(tape, s.params, tape.constant(random_tensor(rng, 2, 6)), {0, 0}, 1);
    DecoderVars v = s.decoder.init_state(tape, s.params, tape.constant(random_tensor(rng, 1, 6)), 2);
    CHECK_THROWS_AS(s.decoder.step(tape, s.params, v, {7}, mem), InputError);
    CHECK_THROWS_AS(s.decoder.step(tape, s.params, v, {1, 1}, mem), ShapeError);
}

TEST_CASE("coverage can be disabled") {
    ParamStore p;
    Rng rng(6);
    Decoder d(small_decoder(false), 7, p, rng);
    CHECK_FALSE(p.contains("dec.attn.c"));
    Setup s;
    CHECK(s.params.contains("dec.attn.c"));
}

TEST_CASE("uniform output distribution gives a loss of ln V") {
    const auto corpus = testing::tree_corpus(3, 4, 3, 5);
    Model model(testing::tiny_config(), corpus.vocab.size(), 1);
    model.params().get("dec.out.W").value.fill(0.0);
    model.params().get("dec.out.b").value.fill(0.0);
    std::vector<const ExtendedLeviGraph*> graphs;
    for (const auto& g : corpus.examples) graphs.push_back(&g);
    Tape tape;
    const double loss = model.loss(tape, model.batch(graphs)).loss.value()[0];
    CHECK(loss == doctest::Approx(std::log(static_cast<double>(corpus.vocab.size()))).epsilon(1e-12));
}

TEST_CASE("decoder gradients match finite differences with the encoder frozen") {
    for (bool coverage : {true, false}) {
        CAPTURE(coverage);
        ParamStore p;
        Rng rng(7);
        Decoder d(small_decoder(coverage), 7, p, rng);
        jitter_biases(p, rng);
        const Tensor memory = random_tensor(rng, 5, 6), source = random_tensor(rng, 2, 6);
        const std::vector<std::vector<std::int32_t>> inputs{{2, 4}, {5, 1}, {3, 3}};
        const std::vector<std::vector<std::int32_t>> gold{{4, 5}, {1, 3}, {6, 0}};
        const auto r = gradient_check(
            [&](Tape& tape) {
                auto mem = d.prepare_memory(tape, p, tape.constant(memory), {0, 1, 0, 1, 1}, 2);
                DecoderVars v = d.init_state(tape, p, tape.constant(source), 5);
                Var total;
                for (std::size_t t = 0; t < inputs.size(); ++t) {
                    StepOutput s = d.step(tape, p, v, inputs[t], mem);
                    Var picked = sum_all(pick(log_softmax_rows(s.logits), gold[t]));
                    total = t == 0 ? picked : add(total, picked);
                    v = s.state;
                }
                return scale(total, -1.0);
            },
            p, {.samples = 300});
        CHECK(r.passed);
        CHECK(r.max_relative_error <= 1e-4);
    }
}

TEST_CASE("full model gradients match finite differences") {
    const auto corpus = testing::tree_corpus(8, 3, 3, 4);
    Model model(testing::tiny_config(), corpus.vocab.size(), 2);
    Rng rng(3);
    jitter_biases(model.params(), rng);
    std::vector<const ExtendedLeviGraph*> graphs;
    for (const auto& g : corpus.examples) graphs.push_back(&g);
    const Batch batch = model.batch(graphs);
    const auto r = gradient_check([&](Tape& tape) { return model.loss(tape, batch).loss; }, model.params(),
                                  {.samples = 200});
    CHECK(r.passed);
}

TEST_CASE("incremental stepping agrees with the teacher-forced loss") {
    const auto corpus = testing::tree_corpus(9, 1, 4, 6);
    Model model(testing::small_config(), corpus.vocab.size(), 3);
    const auto& g = corpus.examples[0];
    Tape tape;
    const double nll = model.loss(tape, model.batch({&g})).example_nll.value()[0];
    SourceEncoding src = model.prepare(g);
    DecoderSnapshot state = src.initial, next;
    std::vector<std::int32_t> inputs{Vocabulary::kBos}, outputs;
    for (auto t : g.target)
        if (t != Vocabulary::kBos && t != Vocabulary::kEos) {
            inputs.push_back(t);
            outputs.push_back(t);
        }
    outputs.push_back(Vocabulary::kEos);
    double total = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto lp = model.step(src, state, inputs[i], next);
        total -= lp[static_cast<std::size_t>(outputs[i])];
        state = next;
    }
    CHECK(std::abs(total - nll) <= 1e-10);
}
