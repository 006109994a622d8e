#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "dcgcn/errors.hpp"
#include "dcgcn/training.hpp"
#include "support.hpp"

using namespace dcgcn;

namespace {

std::vector<ExtendedLeviGraph> slice(const std::vector<ExtendedLeviGraph>& v, std::size_t a, std::size_t b) {
    return {v.begin() + static_cast<std::ptrdiff_t>(a), v.begin() + static_cast<std::ptrdiff_t>(b)};
}

}  // namespace

TEST_CASE("epoch batches form a seeded permutation") {
    const auto a = epoch_batches(23, 5, 7, 1);
    CHECK(a.size() == 5);
    CHECK(a.back().size() == 3);
    std::multiset<std::size_t> seen;
    for (const auto& b : a) seen.insert(b.begin(), b.end());
    CHECK(seen.size() == 23);
    CHECK(std::set<std::size_t>(seen.begin(), seen.end()).size() == 23);
    CHECK(*seen.rbegin() == 22);
    CHECK(epoch_batches(23, 5, 7, 1) == a);
    CHECK_FALSE(epoch_batches(23, 5, 7, 2) == a);
    CHECK_FALSE(epoch_batches(23, 5, 8, 1) == a);
    CHECK(epoch_batches(0, 5, 1, 1).empty());
    CHECK_THROWS_AS(epoch_batches(3, 0, 1, 1), ConfigError);
}

TEST_CASE("options are validated") {
    TrainOptions o;
    CHECK_NOTHROW(o.validate());
    o.learning_rate = 0.0;
    CHECK_NOTHROW(o.validate());
    o.learning_rate = -1.0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    o = {};
    o.patience = 0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    o = {};
    o.batch = 0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
    o = {};
    o.max_epochs = 0;
    CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("a single example can be memorized") {
    const auto corpus = testing::tree_corpus(1, 1, 4, 5);
    Model model(testing::tiny_config(), corpus.vocab.size(), 1);
    TrainOptions o;
    o.learning_rate = 0.01;
    o.max_epochs = 150;
    o.patience = 150;
    o.batch = 1;
    const auto r = train(model, corpus.examples, corpus.examples, o);
    CHECK_FALSE(r.diverged);
    CHECK(corpus_loss(model, corpus.examples, 1) < 0.1);
}

TEST_CASE("training is deterministic") {
    const auto corpus = testing::tree_corpus(2, 12, 3, 5);
    TrainOptions o;
    o.learning_rate = 0.003;
    o.max_epochs = 3;
    o.batch = 4;
    auto run = [&] {
        Model model(testing::tiny_config(), corpus.vocab.size(), 5);
        const auto r = train(model, slice(corpus.examples, 0, 8), slice(corpus.examples, 8, 12), o);
        std::ostringstream out;
        model.params().save(out);
        return std::pair{r.history.back().train_loss, out.str()};
    };
    const auto a = run(), b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("a zero learning rate stops after patience plus one evaluations") {
    const auto corpus = testing::tree_corpus(3, 6, 3, 4);
    Model model(testing::tiny_config(), corpus.vocab.size(), 1);
    std::ostringstream before;
    model.params().save(before);
    TrainOptions o;
    o.learning_rate = 0.0;
    o.patience = 1;
    o.max_epochs = 10;
    int calls = 0;
    const auto r = train(model, slice(corpus.examples, 0, 4), slice(corpus.examples, 4, 6), o,
                         [&](const EpochRecord&) { ++calls; });
    CHECK(r.early_stopped);
    CHECK(r.history.size() == 2);
    CHECK(calls == 2);
    CHECK(r.best_epoch == 1);
    CHECK(r.history[0].improved);
    CHECK_FALSE(r.history[1].improved);
    CHECK(r.history[0].dev_loss == r.history[1].dev_loss);
    std::ostringstream after;
    model.params().save(after);
    CHECK(before.str() == after.str());
}

TEST_CASE("per-example loss does not depend on batching") {
    const auto corpus = testing::tree_corpus(4, 5, 3, 7);
    Model model(testing::small_config(), corpus.vocab.size(), 2);
    std::vector<const ExtendedLeviGraph*> all;
    for (const auto& g : corpus.examples) all.push_back(&g);
    Tape tape;
    const Tensor merged = model.loss(tape, model.batch(all)).example_nll.value();
    for (std::size_t i = 0; i < all.size(); ++i) {
        Tape single;
        const double alone = model.loss(single, model.batch({all[i]})).example_nll.value()[0];
        CHECK(std::abs(alone - merged[i]) <= 1e-8);
    }
    CHECK(std::abs(corpus_loss(model, corpus.examples, 1) - corpus_loss(model, corpus.examples, 5)) <= 1e-8);
}

TEST_CASE("an empty ablation leaves the model unchanged") {
    const auto corpus = testing::tree_corpus(5, 4, 3, 6);
    ModelConfig plain = testing::tiny_config();
    ModelConfig none = plain;
    none.ablation = Ablation::parse("none");
    Model a(plain, corpus.vocab.size(), 3), b(none, corpus.vocab.size(), 3);
    CHECK(a.params().size() == b.params().size());
    CHECK(corpus_loss(a, corpus.examples, 4) == corpus_loss(b, corpus.examples, 4));
}

TEST_CASE("every ablation trains without diverging") {
    const auto corpus = testing::tree_corpus(6, 10, 3, 6);
    for (const char* spec : {"graph-attention", "direction-aggregation", "global-node", "linear-combination",
                             "coverage", "dense-1", "graph-attention,global-node,coverage"}) {
        CAPTURE(spec);
        ModelConfig mc = testing::tiny_config();
        mc.ablation = Ablation::parse(spec);
        Model model(mc, corpus.vocab.size(), 4);
        TrainOptions o;
        o.learning_rate = 0.003;
        o.max_epochs = 2;
        o.batch = 5;
        const auto r = train(model, slice(corpus.examples, 0, 8), slice(corpus.examples, 8, 10), o);
        CHECK_FALSE(r.diverged);
        CHECK(r.history.size() == 2);
        CHECK(std::isfinite(r.best_dev_perplexity));
    }
}

TEST_CASE("one epoch lowers the training loss for almost every seed") {
    const auto corpus = testing::tree_corpus(7, 16, 3, 5);
    int decreased = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Model model(testing::tiny_config(), corpus.vocab.size(), seed);
        const double before = corpus_loss(model, corpus.examples, 8);
        TrainOptions o;
        o.learning_rate = 0.003;
        o.max_epochs = 1;
        o.batch = 4;
        o.seed = seed;
        train(model, corpus.examples, slice(corpus.examples, 0, 4), o);
        if (corpus_loss(model, corpus.examples, 8) < before) ++decreased;
    }
    CHECK(decreased >= 19);
}

TEST_CASE("empty corpora are rejected") {
    const auto corpus = testing::tree_corpus(8, 2, 3, 4);
    Model model(testing::tiny_config(), corpus.vocab.size(), 1);
    CHECK_THROWS_AS(train(model, {}, corpus.examples, {}), InputError);
    CHECK_THROWS_AS(train(model, corpus.examples, {}, {}), InputError);
    CHECK_THROWS_AS(corpus_loss(model, {}, 1), InputError);
}
