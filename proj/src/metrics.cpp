#include "dcgcn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <json.hpp>
#include <sstream>

#include "dcgcn/errors.hpp"

namespace dcgcn {

namespace {

std::vector<std::string> words_of(const std::string& text, bool case_sensitive) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string w;
    while (in >> w) {
        if (!case_sensitive)
            std::transform(w.begin(), w.end(), w.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        out.push_back(std::move(w));
    }
    return out;
}

template <typename T>
std::map<std::vector<T>, std::size_t> ngrams(const std::vector<T>& seq, std::size_t n) {
    std::map<std::vector<T>, std::size_t> out;
    for (std::size_t i = 0; i + n <= seq.size(); ++i)
        ++out[std::vector<T>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                             seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return out;
}

template <typename T>
std::size_t clipped_matches(const std::map<std::vector<T>, std::size_t>& hyp,
                            const std::map<std::vector<T>, std::size_t>& ref) {
    std::size_t m = 0;
    for (const auto& [g, c] : hyp)
        if (auto it = ref.find(g); it != ref.end()) m += std::min(c, it->second);
    return m;
}

struct BleuCounts {
    std::array<std::size_t, 4> match{}, total{};
    std::size_t hyp_len = 0, ref_len = 0;
};

void accumulate(BleuCounts& c, const std::vector<std::string>& h, const std::vector<std::string>& r) {
    c.hyp_len += h.size();
    c.ref_len += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto hg = ngrams(h, n);
        c.match[n - 1] += clipped_matches(hg, ngrams(r, n));
        c.total[n - 1] += h.size() >= n ? h.size() - n + 1 : 0;
    }
}

double brevity_penalty(std::size_t hyp_len, std::size_t ref_len) {
    if (hyp_len >= ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

// Code points of a UTF-8 string; invalid bytes are kept as single units.
std::vector<char32_t> code_points(const std::string& s) {
    std::vector<char32_t> out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
        if (i + len > s.size()) len = 1;
        char32_t cp = len == 1 ? c : c & (0x7F >> len);
        for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += len;
    }
    return out;
}

bool is_punct(char32_t c) {
    static const std::u32string punct = U"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
    return punct.find(c) != std::u32string::npos;
}

// Whitespace words with one leading or trailing punctuation mark split off.
std::vector<std::u32string> chrf_words(const std::string& text) {
    std::vector<std::u32string> out;
    std::istringstream in(text);
    std::string raw;
    while (in >> raw) {
        const auto cps = code_points(raw);
        std::u32string w(cps.begin(), cps.end());
        if (w.size() == 1) {
            out.push_back(w);
        } else if (is_punct(w.back())) {
            out.push_back(w.substr(0, w.size() - 1));
            out.push_back(w.substr(w.size() - 1));
        } else if (is_punct(w.front())) {
            out.push_back(w.substr(0, 1));
            out.push_back(w.substr(1));
        } else {
            out.push_back(w);
        }
    }
    return out;
}

struct Stat {
    std::size_t hyp, ref, match;
};

}  // namespace

double corpus_bleu(const std::vector<std::string>& hypotheses,
                   const std::vector<std::string>& references, bool case_sensitive) {
    if (hypotheses.empty()) throw InputError("BLEU of an empty corpus");
    if (hypotheses.size() != references.size())
        throw InputError(std::to_string(hypotheses.size()) + " hypotheses but " +
                         std::to_string(references.size()) + " references");
    BleuCounts c;
    for (std::size_t i = 0; i < hypotheses.size(); ++i)
        accumulate(c, words_of(hypotheses[i], case_sensitive), words_of(references[i], case_sensitive));
    if (c.hyp_len == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (c.match[n] == 0) return 0.0;
        log_sum += std::log(static_cast<double>(c.match[n]) / static_cast<double>(c.total[n]));
    }
    return 100.0 * brevity_penalty(c.hyp_len, c.ref_len) * std::exp(log_sum / 4.0);
}

double sentence_bleu(const std::string& hypothesis, const std::string& reference,
                     bool case_sensitive) {
    BleuCounts c;
    accumulate(c, words_of(hypothesis, case_sensitive), words_of(reference, case_sensitive));
    if (c.hyp_len == 0 || c.match[0] == 0) return 0.0;
    double log_sum = std::log(static_cast<double>(c.match[0]) / static_cast<double>(c.total[0]));
    for (std::size_t n = 1; n < 4; ++n)
        log_sum += std::log((static_cast<double>(c.match[n]) + 1.0) /
                            (static_cast<double>(c.total[n]) + 1.0));
    return 100.0 * brevity_penalty(c.hyp_len, c.ref_len) * std::exp(log_sum / 4.0);
}

double chrf_pp(const std::string& hypothesis, const std::string& reference) {
    constexpr std::size_t kCharOrder = 6, kWordOrder = 2;
    constexpr double kBetaSq = 4.0;
    auto squeeze = [](const std::string& s) {
        std::vector<char32_t> out;
        for (char32_t c : code_points(s))
            if (c != U' ' && c != U'\t' && c != U'\n' && c != U'\r') out.push_back(c);
        return out;
    };
    const auto hc = squeeze(hypothesis), rc = squeeze(reference);
    const auto hw = chrf_words(hypothesis), rw = chrf_words(reference);
    std::vector<Stat> stats;
    auto count = [](const auto& m) {
        std::size_t t = 0;
        for (const auto& kv : m) t += kv.second;
        return t;
    };
    for (std::size_t n = 1; n <= kCharOrder; ++n) {
        const auto h = ngrams(hc, n), r = ngrams(rc, n);
        stats.push_back({count(h), count(r), clipped_matches(h, r)});
    }
    for (std::size_t n = 1; n <= kWordOrder; ++n) {
        const auto h = ngrams(hw, n), r = ngrams(rw, n);
        stats.push_back({count(h), count(r), clipped_matches(h, r)});
    }
    double prec = 0.0, rec = 0.0;
    std::size_t effective = 0;
    for (const Stat& s : stats) {
        if (s.hyp == 0 || s.ref == 0) continue;
        prec += static_cast<double>(s.match) / static_cast<double>(s.hyp);
        rec += static_cast<double>(s.match) / static_cast<double>(s.ref);
        ++effective;
    }
    if (effective == 0) return 0.0;
    prec /= static_cast<double>(effective);
    rec /= static_cast<double>(effective);
    if (prec + rec == 0.0) return 0.0;
    return 100.0 * (1.0 + kBetaSq) * prec * rec / (kBetaSq * prec + rec);
}

std::size_t size_bin(std::size_t n) {
    if (n <= 30) return 0;
    if (n <= 40) return 1;
    if (n <= 50) return 2;
    if (n <= 60) return 3;
    return 4;
}

const char* size_bin_label(std::size_t bin) {
    static const char* labels[kSizeBins] = {"<=30", "31-40", "41-50", "51-60", ">60"};
    return bin < kSizeBins ? labels[bin] : "?";
}

std::array<std::optional<double>, kSizeBins> binned_means(const std::vector<double>& scores,
                                                          const std::vector<std::size_t>& sizes) {
    if (scores.size() != sizes.size())
        throw InputError(std::to_string(scores.size()) + " scores but " +
                         std::to_string(sizes.size()) + " graph sizes");
    std::array<double, kSizeBins> sum{};
    std::array<std::size_t, kSizeBins> count{};
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto b = size_bin(sizes[i]);
        sum[b] += scores[i];
        ++count[b];
    }
    std::array<std::optional<double>, kSizeBins> out;
    for (std::size_t b = 0; b < kSizeBins; ++b)
        if (count[b]) out[b] = sum[b] / static_cast<double>(count[b]);
    return out;
}

ScoreReport score_report(const std::vector<std::string>& hypotheses,
                         const std::vector<std::string>& references,
                         const std::vector<std::size_t>& sizes, bool case_sensitive) {
    ScoreReport r;
    r.case_sensitive = case_sensitive;
    r.sentences = hypotheses.size();
    r.bleu = corpus_bleu(hypotheses, references, case_sensitive);
    std::vector<double> chrf, bleu;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        chrf.push_back(chrf_pp(hypotheses[i], references[i]));
        bleu.push_back(sentence_bleu(hypotheses[i], references[i], case_sensitive));
        r.chrf += chrf.back();
    }
    r.chrf /= static_cast<double>(hypotheses.size());
    if (sizes.empty()) return r;
    const auto chrf_bins = binned_means(chrf, sizes);
    const auto bleu_bins = binned_means(bleu, sizes);
    for (std::size_t b = 0; b < kSizeBins; ++b) {
        if (!chrf_bins[b]) continue;
        BinScore s;
        s.count = static_cast<std::size_t>(
            std::count_if(sizes.begin(), sizes.end(), [b](std::size_t n) { return size_bin(n) == b; }));
        s.chrf = *chrf_bins[b];
        s.bleu = *bleu_bins[b];
        r.bins[b] = s;
    }
    return r;
}

std::string report_table(const ScoreReport& r) {
    std::ostringstream out;
    char line[128];
    std::snprintf(line, sizeof line, "sentences  %zu\nBLEU       %.2f (%s)\nchrF++     %.2f\n",
                  r.sentences, r.bleu, r.case_sensitive ? "cased" : "uncased", r.chrf);
    out << line;
    bool any = false;
    for (const auto& b : r.bins) any = any || b.has_value();
    if (!any) return out.str();
    out << "\nnodes     count  chrF++   sentBLEU\n";
    for (std::size_t b = 0; b < kSizeBins; ++b) {
        if (!r.bins[b]) continue;
        std::snprintf(line, sizeof line, "%-8s  %5zu  %6.2f   %6.2f\n", size_bin_label(b),
                      r.bins[b]->count, r.bins[b]->chrf, r.bins[b]->bleu);
        out << line;
    }
    return out.str();
}

std::string report_json(const ScoreReport& r) {
    nlohmann::json j;
    j["sentences"] = r.sentences;
    j["bleu"] = r.bleu;
    j["chrf_pp"] = r.chrf;
    j["case_sensitive"] = r.case_sensitive;
    nlohmann::json bins = nlohmann::json::object();
    for (std::size_t b = 0; b < kSizeBins; ++b)
        if (r.bins[b])
            bins[size_bin_label(b)] = {{"count", r.bins[b]->count},
                                       {"chrf_pp", r.bins[b]->chrf},
                                       {"sentence_bleu", r.bins[b]->bleu}};
    j["bins"] = bins;
    return j.dump();
}

}  // namespace dcgcn
