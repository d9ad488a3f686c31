#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

// digit characters / all other characters (whitespace included);
// all-digit text -> infinity, empty text -> 0
double numerical_density(std::string_view text);

// One per-language filter from rules/algebraicstack.rules. Keyword matching
// is a case-sensitive substring test. Rules evaluate in a fixed order:
// size, density, exclude, include, extras; the decision records the first
// failing rule.
struct LanguageRule {
    std::string language;
    std::vector<std::string> extensions;
    std::vector<std::string> include_keywords;  // any-of; empty = no gate
    std::vector<std::string> exclude_keywords;  // none-of
    std::vector<std::string> include_regexes;
    std::vector<std::string> exclude_regexes;
    std::uint64_t max_bytes = 1048575;
    double density_max = 0.5;
    std::vector<std::string> extras;  // flags, see apply_language_rule
};

struct RuleSet {
    std::vector<LanguageRule> rules;

    const LanguageRule* find(std::string_view language) const;
    static RuleSet parse(std::string_view text);
    static RuleSet load(const std::string& path);
    static RuleSet load_default();  // rules/algebraicstack.rules next to data/
};

// Extras implemented: xml_prefix (drop files starting <?xml),
// json_prefix (drop files starting {), autogenerated (drop files marked
// automatically generated), macos_resource_fork, julia_size_density (drop
// >10k chars, no "test", density < 0.5), dir_blacklist_latex (drop when
// meta path has a latex/ directory), gnuplot (drop files mentioning
// gnuplot), english_only (drop when meta lang is present and not en).
FilterDecision apply_language_rule(const Document& doc, const LanguageRule& rule);

struct DecontaminationList {
    std::set<std::string> names;
    std::string source;

    static DecontaminationList load(const std::string& path, std::string source_label = "");
};

// Removes every block that starts with one of `keywords` at column 0 whose
// following identifier is listed, through the line before the next
// column-0 keyword or EOF. Untouched text is preserved byte-exactly.
std::string decontaminate_theorems(std::string_view text, const DecontaminationList& list,
                                   const std::vector<std::string>& keywords = {
                                       "theorem ", "lemma ", "example "});

}  // namespace mathcorpus
