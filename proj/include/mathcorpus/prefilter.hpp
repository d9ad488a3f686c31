#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

// The top-100 LaTeX command list used by the prefilter and the math-score
// auto-labeler. Shipped as data/latex_symbols.txt.
struct LatexSymbolList {
    std::vector<std::string> symbols;

    // Validates (backslash prefix) and deduplicates, preserving order.
    static LatexSymbolList from_lines(const std::vector<std::string>& lines);
    static LatexSymbolList load(const std::string& path);
    static LatexSymbolList load_default();
};

using MathScoreFn = std::function<double(std::string_view plain_text)>;

// Cheap first-pass gate over raw HTML. Rules fire in order keyword ->
// symbol -> score; the scorer runs only when nothing earlier matched.
// Score must strictly exceed `score_threshold` to keep. A null scorer
// drops at the score step.
FilterDecision prefilter(std::string_view html, const LatexSymbolList& symbols,
                         const MathScoreFn& scorer, double score_threshold = 0.8,
                         const std::string& doc_id = "");

// Regex-level tag removal for the prefilter's scorer path: strips comments,
// script/style blocks and tags, decodes entities, collapses whitespace.
std::string strip_tags(std::string_view html);

}  // namespace mathcorpus
