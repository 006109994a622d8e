#include "dcgcn/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "dcgcn/config.hpp"
#include "dcgcn/errors.hpp"
#include "dcgcn/gradcheck.hpp"
#include "dcgcn/inference.hpp"
#include "dcgcn/metrics.hpp"
#include "dcgcn/vocab.hpp"

namespace dcgcn {

namespace fs = std::filesystem;

namespace {

struct Flags {
    std::string config, input, output, checkpoint, ablation, graph_type;
    std::string vocab, use_vocab, dev, reference, graphs;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> beam;
    std::optional<int> max_epochs;
    std::size_t samples = 200;
    bool lowercase = false;
};

std::string read_file(const std::string& path) {
    if (path.empty()) throw InputError("missing required path");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw ConfigError(std::string("missing required flag ") + flag);
}

Config resolve_config(const Flags& f) {
    Config c = f.config.empty() ? Config{} : Config::load(f.config);
    if (!f.graph_type.empty()) c.set_graph(parse_graph_family(f.graph_type));
    if (f.seed) c.train.seed = *f.seed;
    if (f.max_epochs) c.train.max_epochs = *f.max_epochs;
    if (f.beam) c.beam = *f.beam;
    if (!f.ablation.empty()) c.model.ablation = Ablation::parse(f.ablation);
    c.validate();
    return c;
}

struct Run {
    Config config;
    Vocabulary vocab;
    std::unique_ptr<Model> model;
};

void save_run(const std::string& checkpoint, const Config& config, const Vocabulary& vocab,
              const Model& model) {
    const fs::path p(checkpoint);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    model.params().save(p);
    write_file(checkpoint + ".config", config.to_string());
    vocab.save(checkpoint + ".vocab");
}

Run load_run(const std::string& checkpoint) {
    require(checkpoint, "--checkpoint");
    if (!fs::exists(checkpoint)) throw InputError("checkpoint " + checkpoint + " not found");
    Run r;
    r.config = Config::load(checkpoint + ".config");
    r.vocab = Vocabulary::load(checkpoint + ".vocab");
    r.model = std::make_unique<Model>(r.config.model, r.vocab.size(), r.config.train.seed);
    r.model->params().load(fs::path(checkpoint));
    return r;
}

std::vector<ExtendedLeviGraph> load_graphs(const std::string& path, const char* flag) {
    require(path, flag);
    auto graphs = read_jsonl_file(path);
    if (graphs.empty()) throw InputError(path + " holds no examples");
    return graphs;
}

void check_vocab_range(const std::vector<ExtendedLeviGraph>& graphs, std::size_t vocab) {
    for (const auto& g : graphs) {
        for (auto t : g.tokens)
            if (t < 0 || static_cast<std::size_t>(t) >= vocab)
                throw InputError("token id " + std::to_string(t) + " outside vocabulary of size " +
                                 std::to_string(vocab));
        for (auto t : g.target)
            if (t < 0 || static_cast<std::size_t>(t) >= vocab)
                throw InputError("target id " + std::to_string(t) + " outside vocabulary of size " +
                                 std::to_string(vocab));
    }
}

std::vector<std::string> decode_all(Model& model, const Vocabulary& vocab,
                                    const std::vector<ExtendedLeviGraph>& graphs, std::size_t beam,
                                    bool length_normalize) {
    std::vector<std::string> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(vocab.decode(generate(model, g, beam, length_normalize)));
    return out;
}

std::vector<std::string> references_of(const Vocabulary& vocab,
                                       const std::vector<ExtendedLeviGraph>& graphs) {
    std::vector<std::string> out;
    for (const auto& g : graphs) out.push_back(vocab.decode(g.target));
    return out;
}

// --- commands ---------------------------------------------------------------

int cmd_preprocess(const Flags& f, std::ostream& out, std::ostream& err) {
    Config c = resolve_config(f);
    require(f.input, "--input");
    require(f.output, "--output");
    auto examples = parse_corpus(read_file(f.input), c.graph);
    if (examples.empty()) throw InputError(f.input + " holds no graphs");

    Vocabulary vocab;
    if (!f.use_vocab.empty()) {
        vocab = Vocabulary::load(f.use_vocab);
    } else {
        std::vector<LabeledGraph> graphs;
        std::vector<std::vector<std::string>> targets;
        for (const auto& e : examples) {
            graphs.push_back(e.graph);
            targets.push_back(split_words(e.target));
        }
        vocab = build_vocab(graphs, targets, c.min_count);
        const std::string vocab_path = f.vocab.empty() ? f.output + ".vocab" : f.vocab;
        vocab.save(vocab_path);
        out << "vocabulary: " << vocab.size() << " tokens -> " << vocab_path << '\n';
    }

    LeviOptions options;
    options.sequential = c.graph == GraphFamily::dependency;
    std::vector<ExtendedLeviGraph> levi;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::vector<std::string> warnings;
        ExtendedLeviGraph g = to_extended_levi(examples[i].graph, options, &warnings);
        for (const auto& w : warnings) err << "warning: example " << i + 1 << ": " << w << '\n';
        assign_ids(g, vocab);
        g.target = vocab.encode(split_words(examples[i].target));
        levi.push_back(std::move(g));
    }
    write_jsonl_file(f.output, levi);
    out << "examples: " << levi.size() << " -> " << f.output << '\n';
    return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
    Config c = resolve_config(f);
    require(f.checkpoint, "--checkpoint");
    require(f.vocab, "--vocab");
    Vocabulary vocab = Vocabulary::load(f.vocab);
    auto train_set = load_graphs(f.input, "--input");
    auto dev_set = f.dev.empty() ? train_set : load_graphs(f.dev, "--dev");
    check_vocab_range(train_set, vocab.size());
    check_vocab_range(dev_set, vocab.size());

    Model model(c.model, vocab.size(), c.train.seed);
    out << "seed " << c.train.seed << ", parameters " << model.params().scalar_count()
        << ", train " << train_set.size() << ", dev " << dev_set.size() << '\n';
    nlohmann::json history = nlohmann::json::array();
    TrainResult result = train(model, train_set, dev_set, c.train, [&](const EpochRecord& r) {
        char line[160];
        std::snprintf(line, sizeof line, "epoch %3d  train_loss %.6f  dev_loss %.6f  dev_ppl %.4f%s\n",
                      r.epoch, r.train_loss, r.dev_loss, r.dev_perplexity, r.improved ? "  *" : "");
        out << line << std::flush;
        history.push_back({{"epoch", r.epoch},
                           {"train_loss", r.train_loss},
                           {"dev_loss", r.dev_loss},
                           {"dev_perplexity", r.dev_perplexity},
                           {"skipped_updates", r.skipped_updates}});
    });
    save_run(f.checkpoint, c, vocab, model);
    if (!f.output.empty()) {
        nlohmann::json report{{"seed", c.train.seed},
                              {"best_epoch", result.best_epoch},
                              {"best_dev_perplexity",
                               std::isfinite(result.best_dev_perplexity) ? result.best_dev_perplexity : -1.0},
                              {"stopped", result.message},
                              {"history", history}};
        write_file(f.output, report.dump(2) + "\n");
    }
    if (result.diverged) {
        err << "error: " << result.message << " (last good parameters saved to " << f.checkpoint << ")\n";
        return kExitNumeric;
    }
    out << result.message << "; best epoch " << result.best_epoch << " dev_ppl "
        << result.best_dev_perplexity << " -> " << f.checkpoint << '\n';
    return kExitOk;
}

int cmd_generate(const Flags& f, std::ostream& out, std::ostream&) {
    Run run = load_run(f.checkpoint);
    const std::size_t beam = f.beam ? *f.beam : run.config.beam;
    if (beam < 1) throw ConfigError("beam must be >= 1");
    auto graphs = load_graphs(f.input, "--input");
    check_vocab_range(graphs, run.vocab.size());
    std::string text;
    for (const auto& s : decode_all(*run.model, run.vocab, graphs, beam, run.config.length_normalize))
        text += s + '\n';
    if (f.output.empty()) out << text;
    else write_file(f.output, text);
    return kExitOk;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream&) {
    require(f.input, "--input");
    require(f.reference, "--reference");
    auto hyps = read_lines(f.input);
    auto refs = read_lines(f.reference);
    std::vector<std::size_t> sizes;
    if (!f.graphs.empty())
        for (const auto& g : load_graphs(f.graphs, "--graphs")) sizes.push_back(g.node_count());
    if (!sizes.empty() && sizes.size() != hyps.size())
        throw InputError(std::to_string(sizes.size()) + " graphs but " + std::to_string(hyps.size()) +
                         " hypotheses");
    ScoreReport r = score_report(hyps, refs, sizes, !f.lowercase);
    out << report_table(r);
    if (!f.output.empty()) write_file(f.output, report_json(r) + "\n");
    return kExitOk;
}

// Five-node graph with a three-token target, over its own vocabulary.
std::pair<LabeledGraph, std::string> gradcheck_sample() {
    return {parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b :mod (s / soon)) "
                         ":time (n / now))"),
            "boy wants go"};
}

int cmd_grad_check(const Flags& f, std::ostream& out, std::ostream&) {
    auto [graph, target] = gradcheck_sample();
    Config c;
    Vocabulary vocab;
    std::unique_ptr<Model> model;
    if (!f.checkpoint.empty()) {
        Run run = load_run(f.checkpoint);
        c = run.config;
        vocab = std::move(run.vocab);
        model = std::move(run.model);
    } else {
        c = resolve_config(f);
        vocab = build_vocab({graph}, {split_words(target)}, 1);
        model = std::make_unique<Model>(c.model, vocab.size(), c.train.seed);
        Rng rng(c.train.seed + 1);
        jitter_biases(model->params(), rng);
    }
    ExtendedLeviGraph levi = to_extended_levi(graph);
    assign_ids(levi, vocab);
    levi.target = vocab.encode(split_words(target));
    const Batch batch = model->batch({&levi});

    GradCheckOptions options_gc;
    options_gc.samples = f.samples;
    options_gc.seed = c.train.seed;
    const auto start = std::chrono::steady_clock::now();
    GradCheckReport report = gradient_check(
        [&](Tape& tape) { return model->loss(tape, batch).loss; }, model->params(), options_gc);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char line[200];
    std::snprintf(line, sizeof line,
                  "%s tolerance=%g max_rel_error=%.3e entries=%zu skipped_kinks=%zu "
                  "skipped_unresolved=%zu seed=%llu time=%.1fs\n",
                  report.passed ? "PASS" : "FAIL", report.tolerance, report.max_relative_error,
                  report.entries.size(), report.skipped_kinks, report.skipped_unresolved,
                  static_cast<unsigned long long>(c.train.seed), seconds);
    out << line;
    if (!report.passed) {
        for (const auto& e : report.entries)
            if (e.relative_error > report.tolerance)
                out << "  " << e.param << "[" << e.index << "] analytic " << e.analytic << " numeric "
                    << e.numeric << '\n';
        return kExitNumeric;
    }
    return kExitOk;
}

struct VariantScore {
    double dev_perplexity, bleu, chrf;
};

VariantScore train_and_score(const Config& c, const Vocabulary& vocab,
                             const std::vector<ExtendedLeviGraph>& train_set,
                             const std::vector<ExtendedLeviGraph>& dev_set) {
    Model model(c.model, vocab.size(), c.train.seed);
    TrainResult r = train(model, train_set, dev_set, c.train);
    if (r.diverged) throw NumericError(r.message);
    auto hyps = decode_all(model, vocab, dev_set, c.beam, c.length_normalize);
    auto refs = references_of(vocab, dev_set);
    ScoreReport s = score_report(hyps, refs, {}, true);
    return {r.best_dev_perplexity, s.bleu, s.chrf};
}

int cmd_ablate(const Flags& f, std::ostream& out, std::ostream&) {
    require(f.ablation, "--ablation");
    Flags base_flags = f;
    base_flags.ablation.clear();
    Config full = resolve_config(base_flags);
    Config variant = resolve_config(f);
    require(f.vocab, "--vocab");
    Vocabulary vocab = Vocabulary::load(f.vocab);
    auto train_set = load_graphs(f.input, "--input");
    auto dev_set = f.dev.empty() ? train_set : load_graphs(f.dev, "--dev");
    check_vocab_range(train_set, vocab.size());
    check_vocab_range(dev_set, vocab.size());

    const VariantScore a = train_and_score(full, vocab, train_set, dev_set);
    const VariantScore b = train_and_score(variant, vocab, train_set, dev_set);
    char line[200];
    out << "seed " << full.train.seed << '\n';
    std::snprintf(line, sizeof line, "%-32s %10s %8s %8s\n", "model", "dev_ppl", "BLEU", "chrF++");
    out << line;
    std::snprintf(line, sizeof line, "%-32s %10.4f %8.2f %8.2f\n",
                  ("full (" + full.model.ablation.to_string() + ")").c_str(), a.dev_perplexity, a.bleu, a.chrf);
    out << line;
    std::snprintf(line, sizeof line, "%-32s %10.4f %8.2f %8.2f\n",
                  ("-" + variant.model.ablation.to_string()).c_str(), b.dev_perplexity, b.bleu, b.chrf);
    out << line;
    std::snprintf(line, sizeof line, "%-32s %+10.4f %+8.2f %+8.2f\n", "delta", b.dev_perplexity - a.dev_perplexity,
                  b.bleu - a.bleu, b.chrf - a.chrf);
    out << line;
    if (!f.output.empty()) {
        nlohmann::json j{{"seed", full.train.seed},
                         {"ablation", variant.model.ablation.to_string()},
                         {"full", {{"dev_perplexity", a.dev_perplexity}, {"bleu", a.bleu}, {"chrf_pp", a.chrf}}},
                         {"variant", {{"dev_perplexity", b.dev_perplexity}, {"bleu", b.bleu}, {"chrf_pp", b.chrf}}}};
        write_file(f.output, j.dump(2) + "\n");
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"DCGCN graph-to-sequence toolkit", "dcgcn"};
    app.require_subcommand(1);
    Flags f;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", f.config, "key=value config file");
        s->add_option("--seed", f.seed, "random seed (overrides config)");
        s->add_option("--graph-type", f.graph_type, "amr or dep");
    };
    auto* pre = app.add_subcommand("preprocess", "raw graphs -> JSONL + vocabulary");
    common(pre);
    pre->add_option("--input", f.input, "corpus of graphs with '# ::snt' targets");
    pre->add_option("--output", f.output, "JSONL output");
    pre->add_option("--vocab", f.vocab, "where to write the vocabulary (default <output>.vocab)");
    pre->add_option("--use-vocab", f.use_vocab, "encode with an existing vocabulary");

    auto* tr = app.add_subcommand("train", "train a model");
    common(tr);
    tr->add_option("--input", f.input, "training JSONL");
    tr->add_option("--dev", f.dev, "development JSONL (default: training set)");
    tr->add_option("--vocab", f.vocab, "vocabulary file");
    tr->add_option("--checkpoint", f.checkpoint, "checkpoint to write");
    tr->add_option("--output", f.output, "training history JSON");
    tr->add_option("--max-epochs", f.max_epochs);
    tr->add_option("--ablation", f.ablation, "comma-separated modules to disable");

    auto* gen = app.add_subcommand("generate", "decode sentences");
    gen->add_option("--checkpoint", f.checkpoint, "trained checkpoint");
    gen->add_option("--input", f.input, "JSONL graphs");
    gen->add_option("--output", f.output, "sentence file (default stdout)");
    gen->add_option("--beam", f.beam, "beam size (1 = greedy; default from config)");

    auto* ev = app.add_subcommand("evaluate", "score sentences against references");
    ev->add_option("--input", f.input, "hypotheses, one per line");
    ev->add_option("--reference", f.reference, "references, one per line");
    ev->add_option("--graphs", f.graphs, "JSONL graphs for size bins");
    ev->add_option("--output", f.output, "JSON report");
    ev->add_flag("--lowercase", f.lowercase, "case-insensitive BLEU");

    auto* gc = app.add_subcommand("grad-check", "finite-difference gradient check");
    common(gc);
    gc->add_option("--checkpoint", f.checkpoint, "check a trained model instead of a fresh one");
    gc->add_option("--samples", f.samples, "parameter entries to probe (0 = all)");
    gc->add_option("--ablation", f.ablation);

    auto* ab = app.add_subcommand("ablate", "train a full and an ablated model and compare");
    common(ab);
    ab->add_option("--input", f.input, "training JSONL");
    ab->add_option("--dev", f.dev, "development JSONL");
    ab->add_option("--vocab", f.vocab, "vocabulary file");
    ab->add_option("--ablation", f.ablation, "modules to disable");
    ab->add_option("--max-epochs", f.max_epochs);
    ab->add_option("--beam", f.beam);
    ab->add_option("--output", f.output, "JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*pre) return cmd_preprocess(f, out, err);
        if (*tr) return cmd_train(f, out, err);
        if (*gen) return cmd_generate(f, out, err);
        if (*ev) return cmd_evaluate(f, out, err);
        if (*gc) return cmd_grad_check(f, out, err);
        if (*ab) return cmd_ablate(f, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitConfig;
}

}  // namespace dcgcn
