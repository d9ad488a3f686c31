#include "mathcorpus/extraction.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

namespace {

// U+E000 / U+E001 bracket a span index while the document moves through the
// DOM and line stages; the final step swaps them back for $ delimiters.
constexpr const char* kSentinelOpen = "\xEE\x80\x80";
constexpr const char* kSentinelClose = "\xEE\x80\x81";

const char* kEnvNames[] = {"equation*", "equation", "align*", "align"};

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string strip_ws(std::string_view s) {
    std::string out;
    for (char c : s)
        if (!is_ascii_space(c)) out.push_back(ascii_lower(c));
    return out;
}

}  // namespace

std::string_view encoding_name(MathEncoding e) {
    switch (e) {
        case MathEncoding::env: return "env";
        case MathEncoding::alttext: return "alttext";
        case MathEncoding::img_url: return "img_url";
        case MathEncoding::wordpress: return "wordpress";
        case MathEncoding::annotation_xtex: return "annotation_xtex";
        case MathEncoding::mathml: return "mathml";
        case MathEncoding::mathjax_text: return "mathjax_text";
    }
    return "mathjax_text";
}

// ----------------- delimiter config -----------------

void DelimiterConfig::validate() {
    auto clean = [](std::vector<std::pair<std::string, std::string>>& pairs) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& p : pairs) {
            if (p.first.empty() || p.second.empty()) continue;
            bool conflict = false;
            for (const auto& kept : out) {
                if (kept == p) {
                    conflict = true;  // duplicate
                    break;
                }
                // open a prefix of the other open with identical close
                bool prefix = starts_with(p.first, kept.first) || starts_with(kept.first, p.first);
                if (prefix && p.first != kept.first && p.second == kept.second) {
                    conflict = true;
                    break;
                }
            }
            if (!conflict) out.push_back(p);
        }
        pairs = std::move(out);
    };
    clean(inline_pairs);
    clean(display_pairs);
}

DelimiterConfig default_delimiters(bool dollar_inline) {
    DelimiterConfig cfg;
    cfg.display_pairs = {{"$$", "$$"}, {"\\[", "\\]"}};
    cfg.inline_pairs = {{"\\(", "\\)"}};
    if (dollar_inline) cfg.inline_pairs.emplace_back("$", "$");
    cfg.dollar_inline_enabled = dollar_inline;
    cfg.validate();
    return cfg;
}

namespace {

// Reads a JS string literal starting at `i` (which must point at a quote);
// returns the decoded value and advances `i` past the closing quote.
std::optional<std::string> read_js_string(std::string_view src, std::size_t& i) {
    char quote = src[i];
    std::string out;
    ++i;
    while (i < src.size()) {
        char c = src[i];
        if (c == '\\' && i + 1 < src.size()) {
            char n = src[i + 1];
            switch (n) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                default: out.push_back(n); break;  // \\ -> \, \( -> ( per JS
            }
            i += 2;
            continue;
        }
        if (c == quote) {
            ++i;
            return out;
        }
        out.push_back(c);
        ++i;
    }
    return std::nullopt;  // unterminated
}

// Parses the bracketed array following a MathJax config key, e.g.
//   inlineMath: [['$','$'],["\\(","\\)"]]
// Strings are collected in order and paired up.
std::optional<std::vector<std::pair<std::string, std::string>>> parse_delimiter_array(
    std::string_view src, std::size_t after_key) {
    std::size_t i = after_key;
    while (i < src.size() && (is_ascii_space(src[i]) || src[i] == ':' || src[i] == '=')) ++i;
    if (i >= src.size() || src[i] != '[') return std::nullopt;
    int depth = 0;
    std::vector<std::string> strings;
    for (; i < src.size(); ++i) {
        char c = src[i];
        if (c == '\'' || c == '"') {
            auto s = read_js_string(src, i);
            if (!s) return std::nullopt;
            strings.push_back(std::move(*s));
            --i;  // loop increment compensates
            continue;
        }
        if (c == '[') ++depth;
        if (c == ']') {
            --depth;
            if (depth == 0) break;
        }
    }
    if (depth != 0) return std::nullopt;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t j = 0; j + 1 < strings.size(); j += 2)
        pairs.emplace_back(strings[j], strings[j + 1]);
    return pairs;
}

}  // namespace

DelimiterConfig detect_mathjax_delimiters(std::string_view html) {
    bool config_found = false;
    bool dollar_in_config = false;
    std::vector<std::pair<std::string, std::string>> inline_found, display_found;

    for (std::size_t at = find_ci(html, "inlinemath"); at != std::string_view::npos;
         at = find_ci(html, "inlinemath", at + 1)) {
        auto pairs = parse_delimiter_array(html, at + 10);
        if (!pairs) continue;
        config_found = true;
        for (const auto& p : *pairs) {
            if (p.first == "$" && p.second == "$") dollar_in_config = true;
            inline_found.push_back(p);
        }
    }
    for (std::size_t at = find_ci(html, "displaymath"); at != std::string_view::npos;
         at = find_ci(html, "displaymath", at + 1)) {
        auto pairs = parse_delimiter_array(html, at + 11);
        if (!pairs) continue;
        config_found = true;
        for (const auto& p : *pairs) display_found.push_back(p);
    }

    bool dollar = config_found ? dollar_in_config : contains_ci(html, "mathjax");
    DelimiterConfig cfg = default_delimiters(dollar);
    for (auto& p : inline_found) cfg.inline_pairs.push_back(std::move(p));
    for (auto& p : display_found) cfg.display_pairs.push_back(std::move(p));
    cfg.validate();
    return cfg;
}

// ----------------- math extraction -----------------

namespace {

struct Candidate {
    MathSpan span;
    int priority;  // lower wins on equal (begin, end)
};

void scan_environments(std::string_view src, std::size_t base, std::string_view raw,
                       std::vector<Candidate>& out, DropCounts* drops) {
    (void)src;
    std::size_t i = 0;
    while ((i = raw.find("\\begin{", i)) != std::string_view::npos) {
        const char* env = nullptr;
        for (const char* name : kEnvNames) {
            std::string open = std::string("\\begin{") + name + "}";
            if (raw.compare(i, open.size(), open) == 0) {
                env = name;
                break;
            }
        }
        if (!env) {
            i += 7;
            continue;
        }
        std::string open = std::string("\\begin{") + env + "}";
        std::string close = std::string("\\end{") + env + "}";
        std::size_t body = i + open.size();
        std::size_t end = raw.find(close, body);
        if (end == std::string_view::npos) {
            if (drops) drops->bump("unbalanced_env");
            i = body;
            continue;
        }
        std::string latex(trim(decode_html_entities(raw.substr(body, end - body))));
        if (!latex.empty()) {
            Candidate c;
            c.span.latex = std::move(latex);
            c.span.display = true;
            c.span.encoding = MathEncoding::env;
            c.span.begin = base + i;
            c.span.end = base + end + close.size();
            c.priority = 0;
            out.push_back(std::move(c));
        }
        i = end + close.size();
    }
}

void scan_shortcodes(std::size_t base, std::string_view raw, std::vector<Candidate>& out) {
    std::size_t i = 0;
    while ((i = raw.find("[latex]", i)) != std::string_view::npos) {
        std::size_t body = i + 7;
        std::size_t end = raw.find("[/latex]", body);
        if (end == std::string_view::npos) break;
        std::string latex(trim(decode_html_entities(raw.substr(body, end - body))));
        if (!latex.empty()) {
            Candidate c;
            c.span.latex = std::move(latex);
            c.span.display = false;
            c.span.encoding = MathEncoding::wordpress;
            c.span.begin = base + i;
            c.span.end = base + end + 8;
            c.priority = 3;
            out.push_back(std::move(c));
        }
        i = end + 8;
    }
}

bool dollar_escaped(std::string_view raw, std::size_t pos) {
    return pos > 0 && raw[pos - 1] == '\\';
}

// Delimiter pairs in one text node. Single-dollar spans carry extra guards
// against currency: the opener may not be followed by a space or digit, the
// closer may not be preceded by a space, and the body stays on one line.
void scan_delimiters(std::size_t base, std::string_view raw, const DelimiterConfig& cfg,
                     std::vector<Candidate>& out) {
    struct Delim {
        const std::string* open;
        const std::string* close;
        bool display;
    };
    std::vector<Delim> delims;
    for (const auto& p : cfg.display_pairs) delims.push_back({&p.first, &p.second, true});
    for (const auto& p : cfg.inline_pairs) delims.push_back({&p.first, &p.second, false});
    std::stable_sort(delims.begin(), delims.end(), [](const Delim& a, const Delim& b) {
        return a.open->size() > b.open->size();
    });

    std::size_t i = 0;
    while (i < raw.size()) {
        bool matched = false;
        for (const Delim& d : delims) {
            const std::string& open = *d.open;
            const std::string& close = *d.close;
            if (raw.compare(i, open.size(), open) != 0) continue;
            bool dollar = open == "$";
            if (open[0] == '$' && dollar_escaped(raw, i)) continue;
            std::size_t body = i + open.size();
            if (dollar) {
                if (body >= raw.size() || is_ascii_space(raw[body]) || is_digit(raw[body]) ||
                    raw[body] == '$')
                    continue;
            }
            // find the closing delimiter
            std::size_t end = std::string_view::npos;
            for (std::size_t j = body; j + close.size() <= raw.size(); ++j) {
                if (raw.compare(j, close.size(), close) != 0) continue;
                if (close[0] == '$' && dollar_escaped(raw, j)) continue;
                if (dollar && is_ascii_space(raw[j - 1])) continue;
                end = j;
                break;
            }
            if (end == std::string_view::npos) continue;
            std::string_view body_raw = raw.substr(body, end - body);
            if (dollar && body_raw.find('\n') != std::string_view::npos) continue;
            std::string latex(trim(decode_html_entities(body_raw)));
            if (latex.empty()) continue;
            Candidate c;
            c.span.latex = std::move(latex);
            c.span.display = d.display;
            c.span.encoding = MathEncoding::mathjax_text;
            c.span.begin = base + i;
            c.span.end = base + end + close.size();
            c.priority = 6;
            out.push_back(std::move(c));
            i = end + close.size();
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
}

const HtmlNode* find_xtex_annotation(const HtmlNode& node) {
    if (node.kind == HtmlNode::Kind::element && node.tag == "annotation") {
        const std::string* enc = node.attr("encoding");
        if (enc && contains_ci(*enc, "x-tex")) return &node;
    }
    for (const auto& c : node.children) {
        if (const HtmlNode* found = find_xtex_annotation(*c)) return found;
    }
    return nullptr;
}

bool style_is_block(const HtmlNode& el) {
    const std::string* style = el.attr("style");
    if (!style) return false;
    return strip_ws(*style).find("display:block") != std::string::npos;
}

std::string codecogs_latex(const std::string& src_url) {
    std::size_t q = src_url.find('?');
    if (q == std::string::npos || q + 1 >= src_url.size()) return "";
    std::string latex = percent_decode(src_url.substr(q + 1));
    // strip renderer hints
    for (;;) {
        std::string_view v = trim(latex);
        if (starts_with(v, "\\inline")) {
            latex = std::string(trim(v.substr(7)));
            continue;
        }
        if (starts_with(v, "\\dpi{")) {
            std::size_t close = v.find('}');
            if (close == std::string_view::npos) break;
            latex = std::string(trim(v.substr(close + 1)));
            continue;
        }
        latex = std::string(v);
        break;
    }
    return latex;
}

void collect_element_candidates(const HtmlNode& node, std::vector<Candidate>& out) {
    if (node.kind == HtmlNode::Kind::element) {
        if (node.tag == "math") {
            Candidate c;
            c.span.begin = node.src_begin;
            c.span.end = node.src_end;
            c.span.display = style_is_block(node);
            if (const std::string* disp = node.attr("display"); disp && contains_ci(*disp, "block"))
                c.span.display = true;
            if (const std::string* mode = node.attr("mode"); mode && contains_ci(*mode, "display"))
                c.span.display = true;
            if (const HtmlNode* ann = find_xtex_annotation(node)) {
                c.span.latex = std::string(trim(ann->text_content()));
                c.span.encoding = MathEncoding::annotation_xtex;
                c.priority = 1;
            } else if (const std::string* alt = node.attr("alttext"); alt && !trim(*alt).empty()) {
                c.span.latex = std::string(trim(*alt));
                c.span.encoding = MathEncoding::alttext;
                c.priority = 2;
            } else {
                c.span.latex = mathml_to_latex(node);
                c.span.encoding = MathEncoding::mathml;
                c.priority = 4;
            }
            if (!c.span.latex.empty() && c.span.begin < c.span.end) out.push_back(std::move(c));
            return;  // no nested math inside <math>
        }
        if (node.tag == "img") {
            if (const std::string* src = node.attr("src")) {
                if (contains_ci(*src, "codecogs.com") || contains_ci(*src, ".latex?")) {
                    std::string latex = codecogs_latex(*src);
                    if (!latex.empty()) {
                        Candidate c;
                        c.span.latex = std::move(latex);
                        c.span.display = false;
                        c.span.encoding = MathEncoding::img_url;
                        c.span.begin = node.src_begin;
                        c.span.end = node.src_end;
                        c.priority = 2;
                        out.push_back(std::move(c));
                        return;
                    }
                }
            }
            if (node.has_class_containing("latex")) {
                if (const std::string* alt = node.attr("alt"); alt && !trim(*alt).empty()) {
                    Candidate c;
                    c.span.latex = std::string(trim(*alt));
                    c.span.display = false;
                    c.span.encoding = MathEncoding::wordpress;
                    c.span.begin = node.src_begin;
                    c.span.end = node.src_end;
                    c.priority = 3;
                    out.push_back(std::move(c));
                    return;
                }
            }
        } else if (node.has_class_containing("tex")) {
            if (const std::string* alt = node.attr("alttext"); alt && !trim(*alt).empty()) {
                Candidate c;
                c.span.latex = std::string(trim(*alt));
                c.span.display = style_is_block(node);
                c.span.encoding = MathEncoding::alttext;
                c.span.begin = node.src_begin;
                c.span.end = node.src_end;
                c.priority = 2;
                out.push_back(std::move(c));
                return;
            }
        }
    }
    for (const auto& child : node.children) collect_element_candidates(*child, out);
}

void collect_text_candidates(const HtmlNode& node, std::string_view html,
                             const DelimiterConfig& cfg, std::vector<Candidate>& out,
                             DropCounts* drops) {
    if (node.kind == HtmlNode::Kind::element &&
        (node.tag == "script" || node.tag == "style" || node.tag == "textarea" ||
         node.tag == "title"))
        return;
    if (node.kind == HtmlNode::Kind::text) {
        std::string_view raw = html.substr(node.src_begin, node.src_end - node.src_begin);
        scan_environments(html, node.src_begin, raw, out, drops);
        scan_shortcodes(node.src_begin, raw, out);
        scan_delimiters(node.src_begin, raw, cfg, out);
        return;
    }
    for (const auto& child : node.children) collect_text_candidates(*child, html, cfg, out, drops);
}

}  // namespace

std::string mathml_to_latex(const HtmlNode& math_element) {
    std::function<std::string(const HtmlNode&)> conv = [&](const HtmlNode& n) -> std::string {
        if (n.kind == HtmlNode::Kind::text) return std::string(trim(n.text));
        auto concat_children = [&]() {
            std::string s;
            for (const auto& c : n.children) s += conv(*c);
            return s;
        };
        auto element_children = [&]() {
            std::vector<const HtmlNode*> els;
            for (const auto& c : n.children)
                if (c->kind == HtmlNode::Kind::element) els.push_back(c.get());
            return els;
        };
        const std::string& t = n.tag;
        if (t == "mi" || t == "mn" || t == "mo") return std::string(trim(n.text_content()));
        if (t == "mrow" || t == "math" || t == "semantics" || t == "mstyle")
            return concat_children();
        if (t == "msup" || t == "msub") {
            auto els = element_children();
            if (els.size() >= 2)
                return "{" + conv(*els[0]) + "}" + (t == "msup" ? "^" : "_") + "{" +
                       conv(*els[1]) + "}";
            return concat_children();
        }
        if (t == "mfrac") {
            auto els = element_children();
            if (els.size() >= 2) return "\\frac{" + conv(*els[0]) + "}{" + conv(*els[1]) + "}";
            return concat_children();
        }
        if (t == "msqrt") return "\\sqrt{" + concat_children() + "}";
        if (t == "mtext") return "\\text{" + std::string(trim(n.text_content())) + "}";
        if (t == "annotation" || t == "annotation-xml") return "";
        return concat_children();
    };
    return std::string(trim(conv(math_element)));
}

std::vector<MathSpan> extract_math(std::string_view html, const DelimiterConfig& cfg,
                                   DropCounts* drops) {
    HtmlDocument doc = parse_html(html);
    std::vector<Candidate> candidates;
    collect_element_candidates(*doc, candidates);
    collect_text_candidates(*doc, html, cfg, candidates, drops);

    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.span.begin != b.span.begin) return a.span.begin < b.span.begin;
        if (a.span.end != b.span.end) return a.span.end > b.span.end;  // longer first
        return a.priority < b.priority;
    });

    std::vector<MathSpan> spans;
    std::size_t cover_end = 0;
    for (auto& c : candidates) {
        if (c.span.begin < cover_end) continue;
        if (c.span.latex.empty() || c.span.begin >= c.span.end || c.span.end > html.size())
            continue;
        cover_end = c.span.end;
        spans.push_back(std::move(c.span));
    }
    return spans;
}

// ----------------- DOM processing -----------------

namespace {

bool style_hidden(const HtmlNode& el) {
    const std::string* style = el.attr("style");
    if (!style) return false;
    std::string flat = strip_ws(*style);
    return flat.find("display:none") != std::string::npos ||
           flat.find("visibility:hidden") != std::string::npos;
}

// Text characters inside the subtree; `linked` counts those under an <a>.
void count_chars(const HtmlNode& node, bool in_link, std::size_t& total, std::size_t& linked) {
    if (node.kind == HtmlNode::Kind::text) {
        std::size_t n = 0;
        for (char c : node.text)
            if (!is_ascii_space(c)) ++n;
        total += n;
        if (in_link) linked += n;
        return;
    }
    bool link = in_link || (node.kind == HtmlNode::Kind::element && node.tag == "a");
    for (const auto& c : node.children) count_chars(*c, link, total, linked);
}

// Collects outermost nodes matching `pred`, without descending into matches.
void collect_outermost(HtmlNode& node, const std::function<bool(const HtmlNode&)>& pred,
                       std::vector<HtmlNode*>& out) {
    for (auto& child : node.children) {
        if (child->kind == HtmlNode::Kind::element && pred(*child)) {
            out.push_back(child.get());
            continue;
        }
        collect_outermost(*child, pred, out);
    }
}

void remove_matching(HtmlNode& root, const std::function<bool(const HtmlNode&)>& pred,
                     DropCounts& drops, const std::string& reason) {
    std::vector<HtmlNode*> victims;
    collect_outermost(root, pred, victims);
    for (HtmlNode* v : victims) {
        detach_node(v);
        drops.bump(reason);
    }
}

}  // namespace

HtmlDocument process_dom(std::string_view html, const std::vector<std::string>& blacklist,
                         double link_density_threshold, DropCounts& drops) {
    HtmlDocument doc = parse_html(html);

    // never-visible machinery; removed silently
    remove_matching(
        *doc,
        [](const HtmlNode& n) {
            return n.tag == "script" || n.tag == "style" || n.tag == "noscript" ||
                   n.tag == "template" || n.tag == "head" || n.tag == "iframe";
        },
        drops, "machinery");
    drops.by_reason.erase("machinery");

    remove_matching(*doc, [](const HtmlNode& n) { return style_hidden(n); }, drops, "invisible");
    remove_matching(*doc, [](const HtmlNode& n) { return n.tag == "button"; }, drops, "button");

    remove_matching(
        *doc,
        [&](const HtmlNode& n) {
            if (!is_block_tag(n.tag)) return false;
            std::size_t total = 0, linked = 0;
            count_chars(n, false, total, linked);
            if (total == 0) return false;
            return static_cast<double>(linked) / static_cast<double>(total) >
                   link_density_threshold;
        },
        drops, "link_cluster");

    if (!blacklist.empty()) {
        remove_matching(
            *doc,
            [&](const HtmlNode& n) {
                const std::string* cls = n.attr("class");
                const std::string* id = n.attr("id");
                for (const std::string& pat : blacklist) {
                    if (pat.empty()) continue;
                    if (cls && contains_ci(*cls, pat)) return true;
                    if (id && contains_ci(*id, pat)) return true;
                }
                return false;
            },
            drops, "blacklisted");
    }
    return doc;
}

// ----------------- text rendering -----------------

namespace {

std::size_t nonlink_chars(const HtmlNode& node) {
    std::size_t total = 0, linked = 0;
    count_chars(node, false, total, linked);
    return total - linked;
}

const HtmlNode* find_tag(const HtmlNode& node, std::string_view tag) {
    if (node.kind == HtmlNode::Kind::element && node.tag == tag) return &node;
    for (const auto& c : node.children)
        if (const HtmlNode* f = find_tag(*c, tag)) return f;
    return nullptr;
}

bool is_container_tag(std::string_view tag) {
    return tag == "body" || tag == "main" || tag == "article" || tag == "section" ||
           tag == "div";
}

// Deepest container block still holding the majority of the page's non-link
// text. Content leaves (p, headers, tables) are never selected, so sibling
// paragraphs inside the chosen container all survive. Ties cannot occur:
// two siblings cannot both exceed half.
const HtmlNode* select_main_content(const HtmlNode& root) {
    const HtmlNode* start = find_tag(root, "body");
    if (!start) start = &root;
    std::size_t page_total = nonlink_chars(*start);
    if (page_total == 0) return start;

    const HtmlNode* main = start;
    const HtmlNode* cur = start;
    for (;;) {
        const HtmlNode* next = nullptr;
        for (const auto& c : cur->children) {
            if (c->kind != HtmlNode::Kind::element) continue;
            if (2 * nonlink_chars(*c) > page_total) {
                next = c.get();
                break;
            }
        }
        if (!next || !is_container_tag(next->tag)) break;
        cur = next;
        main = cur;
    }
    return main;
}

struct TextRenderer {
    std::vector<std::string> lines;
    std::string cur;

    void end_line() {
        while (!cur.empty() && cur.back() == ' ') cur.pop_back();
        lines.push_back(cur);
        cur.clear();
    }
    void end_line_if_content() {
        if (!cur.empty()) end_line();
    }
    void append_collapsed(std::string_view text) {
        for (char c : text) {
            if (is_ascii_space(c)) {
                if (!cur.empty() && cur.back() != ' ') cur.push_back(' ');
            } else {
                cur.push_back(c);
            }
        }
    }
    void append_raw_lines(std::string_view text) {
        for (char c : text) {
            if (c == '\n')
                end_line();
            else if (c != '\r')
                cur.push_back(c);
        }
    }

    std::string render_inline(const HtmlNode& node) {
        TextRenderer sub;
        sub.walk_children(node);
        sub.end_line_if_content();
        std::string joined;
        for (const std::string& l : sub.lines) {
            std::string_view t = trim(l);
            if (t.empty()) continue;
            if (!joined.empty()) joined += ' ';
            joined += t;
        }
        return joined;
    }

    void render_table(const HtmlNode& table) {
        end_line_if_content();
        std::function<void(const HtmlNode&)> walk_rows = [&](const HtmlNode& n) {
            for (const auto& c : n.children) {
                if (c->kind != HtmlNode::Kind::element) continue;
                if (c->tag == "tr") {
                    std::vector<std::string> cells;
                    for (const auto& cell : c->children) {
                        if (cell->kind == HtmlNode::Kind::element &&
                            (cell->tag == "td" || cell->tag == "th"))
                            cells.push_back(render_inline(*cell));
                    }
                    std::string row;
                    for (std::size_t i = 0; i < cells.size(); ++i) {
                        if (i) row += " | ";
                        row += cells[i];
                    }
                    cur = row;
                    end_line();
                } else if (c->tag == "caption") {
                    cur = render_inline(*c);
                    end_line();
                } else {
                    walk_rows(*c);  // thead/tbody/tfoot
                }
            }
        };
        walk_rows(table);
    }

    void walk(const HtmlNode& node) {
        if (node.kind == HtmlNode::Kind::text) {
            append_collapsed(node.text);
            return;
        }
        if (node.kind != HtmlNode::Kind::element) {
            walk_children(node);
            return;
        }
        const std::string& t = node.tag;
        if (t == "script" || t == "style" || t == "noscript" || t == "head" || t == "title" ||
            t == "textarea" || t == "template" || t == "iframe")
            return;
        if (t == "br") {
            end_line();
            return;
        }
        if (t.size() == 2 && t[0] == 'h' && t[1] >= '1' && t[1] <= '6') {
            end_line_if_content();
            std::string content = render_inline(node);
            cur.assign(static_cast<std::size_t>(t[1] - '0'), '#');
            cur += ' ';
            cur += content;
            end_line();
            return;
        }
        if (t == "pre") {
            end_line_if_content();
            cur = "```";
            end_line();
            append_raw_lines(node.text_content());
            end_line_if_content();
            cur = "```";
            end_line();
            return;
        }
        if (t == "code") {
            cur += '`';
            walk_children(node);
            cur += '`';
            return;
        }
        if (t == "table") {
            render_table(node);
            return;
        }
        if (is_block_tag(t)) {
            end_line_if_content();
            walk_children(node);
            end_line_if_content();
            return;
        }
        walk_children(node);
    }

    void walk_children(const HtmlNode& node) {
        for (const auto& c : node.children) walk(*c);
    }
};

std::string normalize_lines(const std::vector<std::string>& in) {
    std::vector<std::string> out;
    bool blank_pending = false;
    for (const std::string& raw : in) {
        std::string line = raw;
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.pop_back();
        if (trim(line).empty()) {
            blank_pending = !out.empty();  // drop leading blanks
            continue;
        }
        if (blank_pending) {
            out.emplace_back();
            blank_pending = false;
        }
        out.push_back(line);
    }
    std::string joined;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i) joined += '\n';
        joined += out[i];
    }
    return joined;
}

}  // namespace

std::string extract_text(const HtmlNode& dom) {
    const HtmlNode* main = select_main_content(dom);
    TextRenderer r;
    if (main->kind == HtmlNode::Kind::element)
        r.walk(*main);
    else
        r.walk_children(*main);
    r.end_line_if_content();
    return normalize_lines(r.lines);
}

// ----------------- line processing -----------------

std::string process_lines(std::string_view text, const std::vector<std::string>& boilerplate,
                          const std::vector<TextSpan>& math_ranges) {
    // escape dollars that are not inside a math range and not already escaped
    std::string escaped;
    escaped.reserve(text.size());
    std::size_t range_idx = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '$') {
            while (range_idx < math_ranges.size() && math_ranges[range_idx].end <= i) ++range_idx;
            bool in_math = range_idx < math_ranges.size() && math_ranges[range_idx].begin <= i &&
                           i < math_ranges[range_idx].end;
            bool already = i > 0 && text[i - 1] == '\\';
            if (!in_math && !already) escaped.push_back('\\');
        }
        escaped.push_back(c);
    }

    std::set<std::string> phrases;
    for (const std::string& p : boilerplate) phrases.insert(std::string(trim(p)));

    std::vector<std::string> lines = split_lines(escaped);
    std::vector<std::string> kept;
    for (std::string& line : lines) {
        if (!phrases.empty() && phrases.count(std::string(trim(line)))) continue;
        kept.push_back(std::move(line));
    }

    auto is_header = [](const std::string& line) {
        std::string_view t = trim(line);
        return !t.empty() && t[0] == '#';
    };
    std::vector<std::string> result;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (is_header(kept[i])) {
            bool has_content = false;
            for (std::size_t j = i + 1; j < kept.size(); ++j) {
                if (is_header(kept[j])) break;
                if (!trim(kept[j]).empty()) {
                    has_content = true;
                    break;
                }
            }
            if (!has_content) continue;  // empty header
        }
        result.push_back(kept[i]);
    }
    return normalize_lines(result);
}

// ----------------- full pipeline for one document -----------------

namespace {

std::string splice_sentinels(std::string_view html, const std::vector<MathSpan>& spans) {
    std::string out;
    out.reserve(html.size());
    std::size_t pos = 0;
    auto copy_segment = [&](std::size_t from, std::size_t to) {
        std::string_view seg = html.substr(from, to - from);
        // pre-existing sentinel codepoints cannot be allowed to survive
        std::size_t i = 0;
        while (i < seg.size()) {
            if (i + 3 <= seg.size() &&
                (seg.compare(i, 3, kSentinelOpen) == 0 || seg.compare(i, 3, kSentinelClose) == 0)) {
                i += 3;
                continue;
            }
            out.push_back(seg[i]);
            ++i;
        }
    };
    for (std::size_t s = 0; s < spans.size(); ++s) {
        copy_segment(pos, spans[s].begin);
        out += kSentinelOpen;
        out += std::to_string(s);
        out += kSentinelClose;
        pos = spans[s].end;
    }
    copy_segment(pos, html.size());
    return out;
}

struct Substituted {
    std::string text;
    std::vector<MathSpan> spans;
};

Substituted substitute_sentinels(std::string_view text, const std::vector<MathSpan>& spans) {
    Substituted result;
    std::vector<std::string> out_lines;
    std::vector<std::size_t> used;

    for (const std::string& line : split_lines(text)) {
        std::string cur;
        std::size_t i = 0;
        auto flush = [&]() {
            out_lines.push_back(cur);
            cur.clear();
        };
        while (i < line.size()) {
            if (i + 3 <= line.size() && line.compare(i, 3, kSentinelOpen) == 0) {
                std::size_t j = i + 3;
                std::size_t idx = 0;
                bool any = false;
                while (j < line.size() && is_digit(line[j])) {
                    idx = idx * 10 + static_cast<std::size_t>(line[j] - '0');
                    any = true;
                    ++j;
                }
                if (any && j + 3 <= line.size() && line.compare(j, 3, kSentinelClose) == 0 &&
                    idx < spans.size()) {
                    const MathSpan& span = spans[idx];
                    used.push_back(idx);
                    i = j + 3;
                    if (span.display) {
                        while (!cur.empty() && cur.back() == ' ') cur.pop_back();
                        if (!trim(cur).empty()) flush();
                        cur = "$$" + span.latex + "$$";
                        flush();
                        while (i < line.size() && line[i] == ' ') ++i;  // fresh line follows
                    } else {
                        cur += "$" + span.latex + "$";
                    }
                    continue;
                }
            }
            cur.push_back(line[i]);
            ++i;
        }
        out_lines.push_back(cur);
    }

    result.text = normalize_lines(out_lines);
    for (std::size_t idx : used) result.spans.push_back(spans[idx]);
    return result;
}

}  // namespace

ExtractionResult extract_document(std::string_view html, const ExtractionOptions& opts) {
    DelimiterConfig cfg = detect_mathjax_delimiters(html);
    DropCounts drops;
    std::vector<MathSpan> spans = extract_math(html, cfg, &drops);
    std::string spliced = splice_sentinels(html, spans);
    HtmlDocument dom = process_dom(spliced, opts.blacklist_patterns,
                                   opts.link_density_threshold, drops);
    std::string text = extract_text(*dom);
    text = process_lines(text, opts.boilerplate);
    Substituted sub = substitute_sentinels(text, spans);

    ExtractionResult result;
    result.text = std::move(sub.text);
    result.spans = std::move(sub.spans);
    result.dropped_nodes = std::move(drops.by_reason);
    return result;
}

}  // namespace mathcorpus
