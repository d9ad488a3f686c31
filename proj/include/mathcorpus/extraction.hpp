#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/html.hpp"

namespace mathcorpus {

// Delimiters that mark inline/display math in page text. Pairs parsed from a
// page's MathJax configuration are merged with the built-in defaults:
// $$...$$, \[...\], \(...\), plus $...$ when single dollars are enabled.
struct DelimiterConfig {
    std::vector<std::pair<std::string, std::string>> inline_pairs;
    std::vector<std::pair<std::string, std::string>> display_pairs;
    bool dollar_inline_enabled = false;

    // Drops empty and ambiguous pairs (open a prefix of another open with an
    // identical close). Called by the constructors below; exposed for tests.
    void validate();
};

DelimiterConfig default_delimiters(bool dollar_inline);

enum class MathEncoding {
    env,              // \begin{equation} ... \end{equation} and align forms
    alttext,          // alttext attribute of elements with a "tex" class
    img_url,          // latex.codecogs.com-style image URLs
    wordpress,        // wordpress latex plugin: <img class="latex" alt=..>, [latex]..[/latex]
    annotation_xtex,  // <annotation encoding="application/x-tex">
    mathml,           // <math> content converted by the mini MathML rules
    mathjax_text,     // delimiter pairs in page text
};

std::string_view encoding_name(MathEncoding e);

struct MathSpan {
    std::string latex;  // non-empty
    bool display = false;
    MathEncoding encoding = MathEncoding::mathjax_text;
    std::size_t begin = 0;  // byte range into the source HTML
    std::size_t end = 0;
};

// Per-reason counters for everything removed along the way: invisible,
// button, link_cluster, blacklisted, unbalanced_env.
struct DropCounts {
    std::map<std::string, std::uint64_t> by_reason;
    void bump(const std::string& reason) { ++by_reason[reason]; }
    std::uint64_t get(const std::string& reason) const {
        auto it = by_reason.find(reason);
        return it == by_reason.end() ? 0 : it->second;
    }
};

struct ExtractionResult {
    std::string text;             // math re-embedded as $...$ / $$...$$
    std::vector<MathSpan> spans;  // spans that survived into `text`
    std::map<std::string, std::uint64_t> dropped_nodes;
};

struct ExtractionOptions {
    std::vector<std::string> blacklist_patterns;  // class/id substrings
    std::vector<std::string> boilerplate;         // exact line matches after trim
    double link_density_threshold = 0.8;
};

// Scans for MathJax configuration calls and merges any inlineMath /
// displayMath arrays with the defaults. With a config block present, single
// dollars are enabled iff ('$','$') appears in its inline list; otherwise
// they are enabled iff the page mentions mathjax at all.
DelimiterConfig detect_mathjax_delimiters(std::string_view html);

// All non-overlapping math occurrences, earliest-starting match preferred.
std::vector<MathSpan> extract_math(std::string_view html, const DelimiterConfig& cfg,
                                   DropCounts* drops = nullptr);

// Parses leniently and removes invisible elements, buttons, link clusters
// (linked chars / total chars > threshold on block elements) and
// class/id-blacklisted elements.
HtmlDocument process_dom(std::string_view html, const std::vector<std::string>& blacklist,
                         double link_density_threshold, DropCounts& drops);

// Renders the main-content subtree: headers as #-prefixed lines, tables one
// row per line with " | " between cells, pre blocks fenced, blank-line runs
// collapsed.
std::string extract_text(const HtmlNode& dom);

struct TextSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Removes boilerplate lines and empty headers, escapes every dollar sign
// that is not inside one of `math_ranges` (byte ranges into `text`).
// Idempotent.
std::string process_lines(std::string_view text, const std::vector<std::string>& boilerplate,
                          const std::vector<TextSpan>& math_ranges = {});

// Full four-stage extraction of one HTML document.
ExtractionResult extract_document(std::string_view html, const ExtractionOptions& opts);

// Mini MathML converter used for <math> without an x-tex annotation;
// exposed for tests. Handles mi, mn, mo, mrow, msup, msub, mfrac, msqrt,
// mtext; anything else contributes its text content.
std::string mathml_to_latex(const HtmlNode& math_element);

}  // namespace mathcorpus
