#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

std::vector<std::string> load_suffix_rules(const std::string& path);
std::vector<std::string> load_default_suffix_rules();  // data/public_suffix.dat

// eTLD+1 under the longest matching suffix rule; scheme and "www." are
// stripped first. Hosts with no matching rule fall back to their last two
// labels; anything unparseable maps to "(unknown)".
std::string registrable_domain(std::string_view url,
                               const std::vector<std::string>& suffix_rules);

enum class DomainMetric { documents, characters };

struct DomainRow {
    std::string domain;
    std::uint64_t count = 0;
    double percent = 0.0;  // 100 * count / total, rounded to 2 decimals
};

struct DomainTable {
    std::vector<DomainRow> rows;  // sorted by count descending, then domain
    DomainMetric metric = DomainMetric::documents;
    std::uint64_t total = 0;
};

DomainTable domain_table(const std::vector<Document>& docs, DomainMetric metric,
                         std::size_t top_k, const std::vector<std::string>& suffix_rules);

std::string format_domain_table(const DomainTable& table);

using TokenCounter = std::function<std::uint64_t(std::string_view)>;

std::uint64_t whitespace_token_count(std::string_view text);

// (codepoints, tokens) summed over the corpus; the default counter is
// whitespace tokens and output labels say so.
std::pair<std::uint64_t, std::uint64_t> char_and_token_counts(
    const std::vector<Document>& docs, const TokenCounter& tokenizer = whitespace_token_count);

}  // namespace mathcorpus
