#pragma once
// Corpus BLEU, sentence chrF++ and graph-size-binned analysis. Text is
// tokenized on whitespace.

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dcgcn {

/// 4-gram corpus BLEU (0..100) with brevity penalty and no smoothing.
double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references, bool case_sensitive = true);

/// Sentence BLEU with add-one smoothing on the 2..4-gram precisions.
double sentence_bleu(const std::string& hypothesis, const std::string& reference,
                     bool case_sensitive = true);

/// chrF++: character 1..6-grams (spaces removed) and word 1..2-grams,
/// beta = 2, precision and recall averaged over orders present on both sides.
double chrf_pp(const std::string& hypothesis, const std::string& reference);

inline constexpr std::size_t kSizeBins = 5;
/// Bin of a Levi node count: <=30, 31-40, 41-50, 51-60, >60.
std::size_t size_bin(std::size_t levi_nodes);
const char* size_bin_label(std::size_t bin);

struct BinScore {
    std::size_t count = 0;
    double chrf = 0.0;
    double bleu = 0.0;  // mean smoothed sentence BLEU
};

struct ScoreReport {
    std::size_t sentences = 0;
    double bleu = 0.0;
    double chrf = 0.0;  // mean sentence chrF++
    bool case_sensitive = true;
    std::array<std::optional<BinScore>, kSizeBins> bins;  // empty bins absent
};

/// Per-bin means of `scores` grouped by `sizes`.
std::array<std::optional<double>, kSizeBins> binned_means(const std::vector<double>& scores,
                                                          const std::vector<std::size_t>& sizes);

/// `sizes` may be empty, in which case no bins are filled.
ScoreReport score_report(const std::vector<std::string>& hypotheses,
                         const std::vector<std::string>& references,
                         const std::vector<std::size_t>& sizes, bool case_sensitive = true);

std::string report_table(const ScoreReport& report);
std::string report_json(const ScoreReport& report);

}  // namespace dcgcn
