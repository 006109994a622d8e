#include "dcgcn/inference.hpp"

#include <algorithm>

#include "dcgcn/errors.hpp"

namespace dcgcn {

double Hypothesis::score(bool length_normalize) const {
    if (!length_normalize || tokens.empty()) return log_prob;
    return log_prob / static_cast<double>(tokens.size());
}

namespace {

struct Live {
    Hypothesis hyp;
    ScorerStatePtr state;
    std::vector<double> next;  // log-probs of the following token
};

struct Candidate {
    double log_prob;
    std::size_t parent;
    std::int32_t token;
};

void check_options(const StepScorer& scorer, const DecodeOptions& o) {
    if (o.beam < 1) throw ConfigError("beam must be >= 1");
    if (o.max_length < 1) throw ConfigError("max length must be >= 1");
    if (o.eos < 0 || static_cast<std::size_t>(o.eos) >= scorer.vocab_size())
        throw ConfigError("eos id outside the vocabulary");
}

void check_distribution(const std::vector<double>& lp, std::size_t vocab) {
    if (lp.size() != vocab)
        throw ShapeError("scorer returned " + std::to_string(lp.size()) +
                         " log-probabilities for a vocabulary of " + std::to_string(vocab));
}

}  // namespace

Hypothesis beam_search(StepScorer& scorer, const DecodeOptions& options) {
    check_options(scorer, options);
    const std::size_t V = scorer.vocab_size();
    std::vector<Live> live(1);
    live[0].next = scorer.step(scorer.initial_state(), options.bos, live[0].state);
    check_distribution(live[0].next, V);
    std::vector<Hypothesis> pool;

    for (std::size_t t = 1; t <= options.max_length && !live.empty(); ++t) {
        std::vector<Candidate> cands;
        cands.reserve(live.size() * V);
        for (std::size_t h = 0; h < live.size(); ++h)
            for (std::size_t v = 0; v < V; ++v)
                cands.push_back({live[h].hyp.log_prob + live[h].next[v], h, static_cast<std::int32_t>(v)});
        const std::size_t keep = std::min(options.beam, cands.size());
        std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                          [](const Candidate& a, const Candidate& b) {
                              if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                              if (a.token != b.token) return a.token < b.token;
                              return a.parent < b.parent;
                          });
        std::vector<Live> survivors;
        for (std::size_t i = 0; i < keep; ++i) {
            const Candidate& c = cands[i];
            Hypothesis hyp = live[c.parent].hyp;
            hyp.tokens.push_back(c.token);
            hyp.log_prob = c.log_prob;
            if (c.token == options.eos) {
                hyp.finished = true;
                pool.push_back(std::move(hyp));
            } else if (t == options.max_length) {
                pool.push_back(std::move(hyp));
            } else {
                Live next;
                next.hyp = std::move(hyp);
                next.next = scorer.step(live[c.parent].state, c.token, next.state);
                check_distribution(next.next, V);
                survivors.push_back(std::move(next));
            }
        }
        live = std::move(survivors);
    }
    auto best = std::max_element(pool.begin(), pool.end(), [&](const Hypothesis& a, const Hypothesis& b) {
        return a.score(options.length_normalize) < b.score(options.length_normalize);
    });
    return *best;
}

Hypothesis greedy_decode(StepScorer& scorer, const DecodeOptions& options) {
    check_options(scorer, options);
    ScorerStatePtr state;
    std::vector<double> lp = scorer.step(scorer.initial_state(), options.bos, state);
    Hypothesis hyp;
    for (std::size_t t = 1; t <= options.max_length; ++t) {
        check_distribution(lp, scorer.vocab_size());
        const auto best = static_cast<std::int32_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        hyp.tokens.push_back(best);
        hyp.log_prob += lp[static_cast<std::size_t>(best)];
        if (best == options.eos) {
            hyp.finished = true;
            break;
        }
        if (t == options.max_length) break;
        ScorerStatePtr next;
        lp = scorer.step(state, best, next);
        state = std::move(next);
    }
    return hyp;
}

namespace {

struct SnapshotState : ScorerState {
    DecoderSnapshot snapshot;
};

}  // namespace

ModelScorer::ModelScorer(Model& model, const ExtendedLeviGraph& graph)
    : model_(model), source_(model.prepare(graph)) {}

ScorerStatePtr ModelScorer::initial_state() {
    auto s = std::make_shared<SnapshotState>();
    s->snapshot = source_.initial;
    return s;
}

std::vector<double> ModelScorer::step(const ScorerStatePtr& state, std::int32_t token,
                                      ScorerStatePtr& next) {
    const auto* current = dynamic_cast<const SnapshotState*>(state.get());
    if (!current) throw InputError("foreign scorer state");
    auto out = std::make_shared<SnapshotState>();
    std::vector<double> lp = model_.step(source_, current->snapshot, token, out->snapshot);
    next = std::move(out);
    return lp;
}

std::size_t default_max_length(std::size_t levi_nodes) { return 2 * levi_nodes + 10; }

std::vector<std::int32_t> generate(Model& model, const ExtendedLeviGraph& graph, std::size_t beam,
                                   bool length_normalize) {
    ModelScorer scorer(model, graph);
    DecodeOptions options;
    options.beam = beam;
    options.max_length = default_max_length(graph.node_count());
    options.length_normalize = length_normalize;
    Hypothesis h = beam == 1 ? greedy_decode(scorer, options) : beam_search(scorer, options);
    if (!h.tokens.empty() && h.tokens.back() == options.eos) h.tokens.pop_back();
    return h.tokens;
}

}  // namespace dcgcn
