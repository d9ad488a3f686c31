#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/prefilter.hpp"

namespace mathcorpus {

// Logistic regression over hashed unigram+bigram counts with signed
// hashing. Features ignore everything inside $...$ / $$...$$ spans, so
// adding or deleting math never moves a score.
struct LinearTextModel {
    std::uint32_t dim_log2 = 20;
    std::vector<double> weights;  // size 1 << dim_log2
    double bias = 0.0;
    std::string positive_label = "math";

    double score(std::string_view text) const;  // logistic(w . phi + b), in [0,1]

    void save(const std::string& path) const;  // "MCLS1" container, bit-exact round trip
    static LinearTextModel load(const std::string& path);
};

// Removes $...$ and $$...$$ spans (delimiters included); unpaired dollars
// stay. Exposed because the auto-labeler and phi share it.
std::string strip_math_spans(std::string_view text);

// Sparse phi(text): (index, value) with L2-normalized signed counts.
std::vector<std::pair<std::uint32_t, double>> hashed_features(std::string_view text,
                                                              std::uint32_t dim_log2);

// Auto-labeling for math-score training: positive iff any listed command
// occurs; the emitted text has math spans and all listed commands removed.
std::pair<std::string, bool> autolabel_math(std::string_view text, const LatexSymbolList& symbols);

// SGD training; deterministic for a fixed seed and input order.
// Throws DataError("degenerate labels") unless both labels are present.
LinearTextModel train_math_score(const std::vector<std::pair<std::string, bool>>& labeled,
                                 int epochs, double lr, std::uint64_t seed = 42,
                                 std::uint32_t dim_log2 = 20);

// Character 1-3 gram naive Bayes language profile with add-one smoothing.
struct LangProfile {
    std::string language;  // ISO 639-1
    double prior = 0.0;
    // per order (index 0 = unigrams): gram -> count
    std::array<std::map<std::string, std::uint64_t>, 3> counts;
    std::array<std::uint64_t, 3> totals = {0, 0, 0};

    double gram_logprob(int order, const std::string& gram) const;
    double oov_logprob(int order) const;
};

LangProfile train_lang_profile(std::string_view text, const std::string& language,
                               double prior = 1.0);

struct LangResult {
    std::string language;
    double probability = 0.0;  // normalized posterior
    bool low_confidence = false;  // text shorter than 20 codepoints
};

// Argmax posterior; ties break toward the lexicographically smaller code.
// Requires at least two profiles.
LangResult identify_language(const std::vector<LangProfile>& profiles, std::string_view text);

// All posteriors in profile order (sums to 1); used by property tests.
std::vector<double> language_posteriors(const std::vector<LangProfile>& profiles,
                                        std::string_view text);

// "MLNG1" container holding a set of profiles.
void save_lang_profiles(const std::vector<LangProfile>& profiles, const std::string& path);
std::vector<LangProfile> load_lang_profiles(const std::string& path);

}  // namespace mathcorpus
