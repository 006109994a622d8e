#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "dcgcn/errors.hpp"
#include "dcgcn/inference.hpp"
#include "dcgcn/training.hpp"
#include "support.hpp"

using namespace dcgcn;

namespace {

struct Prefix : ScorerState {
    bool started = false;
    std::vector<std::int32_t> tokens;
};

/// Scores next tokens from a function of the prefix (bos excluded).
class PrefixScorer : public StepScorer {
   public:
    using Table = std::function<std::vector<double>(const std::vector<std::int32_t>&)>;
    PrefixScorer(std::size_t vocab, Table table) : vocab_(vocab), table_(std::move(table)) {}
    std::size_t vocab_size() const override { return vocab_; }
    ScorerStatePtr initial_state() override { return std::make_shared<Prefix>(); }
    std::vector<double> step(const ScorerStatePtr& state, std::int32_t token, ScorerStatePtr& next) override {
        auto p = std::make_shared<Prefix>(*static_cast<const Prefix*>(state.get()));
        if (p->started)
            p->tokens.push_back(token);
        else
            p->started = true;
        next = p;
        ++calls;
        return table_(p->tokens);
    }
    std::size_t calls = 0;

   private:
    std::size_t vocab_;
    Table table_;
};

std::vector<double> log_normalize(std::vector<double> logits) {
    double mx = -1e300, z = 0.0;
    for (double l : logits) mx = std::max(mx, l);
    for (double l : logits) z += std::exp(l - mx);
    for (auto& l : logits) l = l - mx - std::log(z);
    return logits;
}

PrefixScorer::Table random_table(std::size_t vocab, std::uint64_t trial) {
    return [vocab, trial](const std::vector<std::int32_t>& prefix) {
        std::vector<std::uint32_t> key{static_cast<std::uint32_t>(trial)};
        for (auto t : prefix) key.push_back(static_cast<std::uint32_t>(t) + 1);
        std::seed_seq seq(key.begin(), key.end());
        Rng rng(seq);
        std::normal_distribution<double> normal(0.0, 2.0);
        std::vector<double> logits(vocab);
        for (auto& l : logits) l = normal(rng);
        return log_normalize(logits);
    };
}

Hypothesis exhaustive(const PrefixScorer::Table& table, std::size_t vocab, std::size_t max_length,
                      std::int32_t eos, bool normalize) {
    Hypothesis best;
    double best_score = -1e300;
    std::vector<std::int32_t> prefix;
    std::function<void(double)> walk = [&](double lp) {
        const auto dist = table(prefix);
        for (std::int32_t v = 0; v < static_cast<std::int32_t>(vocab); ++v) {
            prefix.push_back(v);
            const double total = lp + dist[static_cast<std::size_t>(v)];
            if (v == eos || prefix.size() == max_length) {
                Hypothesis h{prefix, total, v == eos};
                if (h.score(normalize) > best_score) {
                    best_score = h.score(normalize);
                    best = h;
                }
            } else {
                walk(total);
            }
            prefix.pop_back();
        }
    };
    walk(0.0);
    return best;
}

DecodeOptions options(std::size_t beam, std::size_t max_length, std::int32_t eos, bool normalize = true) {
    DecodeOptions o;
    o.beam = beam;
    o.max_length = max_length;
    o.bos = 0;
    o.eos = eos;
    o.length_normalize = normalize;
    return o;
}

}  // namespace

TEST_CASE("beam of one equals greedy decoding") {
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
        PrefixScorer a(6, random_table(6, trial)), b(6, random_table(6, trial));
        const auto o = options(1, 8, 5);
        const Hypothesis beam = beam_search(a, o), greedy = greedy_decode(b, o);
        CHECK(beam.tokens == greedy.tokens);
        CHECK(beam.log_prob == greedy.log_prob);
    }
}

TEST_CASE("a wide beam finds what greedy misses") {
    // Step one prefers token 1, but every continuation of 1 is flat while
    // token 2 is followed by eos with near certainty.
    const PrefixScorer::Table table = [](const std::vector<std::int32_t>& p) {
        if (p.empty()) return std::vector<double>{std::log(1e-9), std::log(0.6), std::log(0.4), std::log(1e-9)};
        if (p == std::vector<std::int32_t>{2}) return std::vector<double>{std::log(0.005), std::log(0.0025), std::log(0.0025), std::log(0.99)};
        return std::vector<double>{std::log(0.001), std::log(0.33), std::log(0.329), std::log(0.34)};
    };
    PrefixScorer s(4, table);
    const Hypothesis greedy = greedy_decode(s, options(1, 2, 3, false));
    CHECK(greedy.tokens == std::vector<std::int32_t>{1, 3});
    const Hypothesis beam = beam_search(s, options(2, 2, 3, false));
    CHECK(beam.tokens == std::vector<std::int32_t>{2, 3});
    CHECK(beam.finished);
    CHECK(beam.log_prob == doctest::Approx(std::log(0.4 * 0.99)).epsilon(1e-14));
}

TEST_CASE("a beam covering every prefix matches exhaustive search") {
    for (bool normalize : {true, false})
        for (std::uint64_t trial = 0; trial < 40; ++trial) {
            CAPTURE(trial);
            const auto table = random_table(4, 1000 + trial);
            PrefixScorer s(4, table);
            const Hypothesis beam = beam_search(s, options(64, 3, 3, normalize));
            const Hypothesis best = exhaustive(table, 4, 3, 3, normalize);
            CHECK(beam.tokens == best.tokens);
            CHECK(std::abs(beam.log_prob - best.log_prob) <= 1e-12);
        }
}

TEST_CASE("narrow beams never beat the exhaustive optimum") {
    for (std::uint64_t trial = 0; trial < 30; ++trial) {
        const auto table = random_table(3, 2000 + trial);
        const double best = exhaustive(table, 3, 3, 2, true).score(true);
        for (std::size_t beam : {1, 2, 3, 6}) {
            PrefixScorer s(3, table);
            CHECK(beam_search(s, options(beam, 3, 2)).score(true) <= best);
        }
        PrefixScorer s(3, table);
        CHECK(beam_search(s, options(9, 3, 2)).score(true) == best);
    }
}

TEST_CASE("hypotheses at the length limit are kept unfinished") {
    // eos is never likely, so every hypothesis hits the limit.
    const PrefixScorer::Table table = [](const std::vector<std::int32_t>&) {
        return log_normalize({0.0, 3.0, 1.0, -20.0});
    };
    PrefixScorer s(4, table);
    const Hypothesis h = beam_search(s, options(3, 5, 3));
    CHECK(h.tokens == std::vector<std::int32_t>(5, 1));
    CHECK_FALSE(h.finished);
    const Hypothesis g = greedy_decode(s, options(1, 5, 3));
    CHECK(g.tokens == h.tokens);
}

TEST_CASE("decoding is deterministic and validates options") {
    PrefixScorer a(5, random_table(5, 7)), b(5, random_table(5, 7));
    const Hypothesis x = beam_search(a, options(4, 6, 4)), y = beam_search(b, options(4, 6, 4));
    CHECK(x.tokens == y.tokens);
    CHECK(x.log_prob == y.log_prob);
    CHECK(a.calls == b.calls);
    CHECK_THROWS_AS(beam_search(a, options(0, 6, 4)), ConfigError);
    CHECK_THROWS_AS(beam_search(a, options(2, 0, 4)), ConfigError);
    CHECK_THROWS_AS(greedy_decode(a, options(1, 6, 5)), ConfigError);
    PrefixScorer bad(5, [](const std::vector<std::int32_t>&) { return std::vector<double>{0.0}; });
    CHECK_THROWS_AS(beam_search(bad, options(2, 3, 4)), ShapeError);
}

TEST_CASE("hypothesis scores") {
    Hypothesis h{{4, 5, 3}, -6.0, true};
    CHECK(h.score(true) == -2.0);
    CHECK(h.score(false) == -6.0);
    CHECK(default_max_length(7) == 24);
}

TEST_CASE("model decoding") {
    const auto corpus = testing::tree_corpus(11, 12, 3, 5);
    Model model(testing::tiny_config(), corpus.vocab.size(), 1);
    TrainOptions o;
    o.learning_rate = 0.01;
    o.max_epochs = 40;
    o.patience = 40;
    o.batch = 4;
    train(model, corpus.examples, corpus.examples, o);
    for (const auto& g : corpus.examples) {
        const auto greedy = generate(model, g, 1);
        ModelScorer scorer(model, g);
        DecodeOptions d;
        d.beam = 1;
        d.max_length = default_max_length(scorer.levi_nodes());
        auto beam = beam_search(scorer, d).tokens;
        if (!beam.empty() && beam.back() == d.eos) beam.pop_back();
        CHECK(greedy == beam);
        CHECK(greedy.size() <= default_max_length(g.node_count()));
        CHECK(generate(model, g, 4) == generate(model, g, 4));
    }
}
