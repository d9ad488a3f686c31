#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

// LM tokenizer: lowercase, whitespace split, punctuation split into its own
// tokens, every digit run replaced by <num>, the whole text wrapped in
// <s> ... </s>.
std::vector<std::string> tokenize_lm(std::string_view text);

// Interpolated Kneser-Ney n-gram model with one discount per order.
//
// Probabilities are estimated from adjusted counts (continuation counts for
// lower orders, raw counts at the top and for n-grams starting <s>) and
// stored ARPA-style: fully interpolated probabilities per observed n-gram
// plus one backoff weight per observed context. The unigram level
// interpolates with the uniform distribution over predictable vocabulary
// plus <unk>, so every conditional distribution sums to one exactly.
//
// The discount for order k is n1/(n1 + 2*n2) over that order's adjusted
// counts; when either count-of-counts is zero the formula degenerates, and
// 0.5 is used so the discount stays inside (0,1).
class NgramModel {
public:
    static constexpr int kUnkId = 0;
    static constexpr int kBosId = 1;
    static constexpr int kEosId = 2;

    int order() const { return order_; }
    const std::vector<double>& discounts() const { return discounts_; }
    const std::vector<std::string>& vocab() const { return vocab_; }

    // p(word | context), linear scale. Context longer than order-1 is
    // truncated on the left; <s> as the predicted word has probability 0.
    double prob(const std::vector<int>& context, int word) const;
    double prob_tokens(const std::vector<std::string>& context, const std::string& word) const;

    int token_id(std::string_view token) const;  // <unk> id when absent

    // exp(-(1/N) sum ln p) over all tokens including </s>, excluding <s>.
    double perplexity(std::string_view text) const;

    // Observed contexts (any length 1..order-1), for normalization probes.
    std::vector<std::vector<int>> observed_contexts() const;

    void save(const std::string& path) const;  // "MKNL1", bit-identical across reruns
    static NgramModel load(const std::string& path);

    friend NgramModel train_lm(const std::vector<std::string>& docs, int order);

private:
    int order_ = 0;
    std::vector<double> discounts_;
    std::vector<std::string> vocab_;
    std::map<std::string, int> vocab_ids_;
    // logprobs_[k-1]: k-gram (ids) -> ln p ; logbackoffs_[len-1]: context -> ln alpha
    std::vector<std::map<std::vector<int>, double>> logprobs_;
    std::vector<std::map<std::vector<int>, double>> logbackoffs_;
};

// Trains on one sentence per document. Throws DataError when the corpus is
// empty or holds fewer than `order` tokens.
NgramModel train_lm(const std::vector<std::string>& docs, int order);

enum class PerplexityDirection { keep_below, keep_above };

FilterDecision perplexity_decision(const NgramModel& model, const Document& doc,
                                   double threshold, PerplexityDirection direction);

std::vector<FilterDecision> perplexity_filter(const NgramModel& model,
                                              const std::vector<Document>& docs, double threshold,
                                              PerplexityDirection direction =
                                                  PerplexityDirection::keep_below);

}  // namespace mathcorpus
