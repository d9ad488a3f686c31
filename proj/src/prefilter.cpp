#include "mathcorpus/prefilter.hpp"

#include <set>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

LatexSymbolList LatexSymbolList::from_lines(const std::vector<std::string>& lines) {
    LatexSymbolList list;
    std::set<std::string> seen;
    for (const std::string& raw : lines) {
        std::string sym(trim(raw));
        if (sym.empty()) continue;
        if (sym[0] != '\\')
            throw ConfigError("latex symbol must begin with a backslash: " + sym);
        if (seen.insert(sym).second) list.symbols.push_back(std::move(sym));
    }
    return list;
}

LatexSymbolList LatexSymbolList::load(const std::string& path) {
    return from_lines(read_line_list(path));
}

LatexSymbolList LatexSymbolList::load_default() {
    return load(default_data_dir() + "/latex_symbols.txt");
}

namespace {

// class attribute whose value contains "tex" (substring, case-insensitive)
bool has_tex_class(std::string_view html) {
    std::size_t at = 0;
    while ((at = find_ci(html, "class", at)) != std::string_view::npos) {
        std::size_t i = at + 5;
        while (i < html.size() && (html[i] == ' ' || html[i] == '\t')) ++i;
        if (i >= html.size() || html[i] != '=') {
            at += 5;
            continue;
        }
        ++i;
        while (i < html.size() && (html[i] == ' ' || html[i] == '\t')) ++i;
        std::string_view value;
        if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
            char q = html[i++];
            std::size_t b = i;
            while (i < html.size() && html[i] != q) ++i;
            value = html.substr(b, i - b);
        } else {
            std::size_t b = i;
            while (i < html.size() && html[i] != ' ' && html[i] != '>' && html[i] != '\t' &&
                   html[i] != '\n' && html[i] != '\r')
                ++i;
            value = html.substr(b, i - b);
        }
        if (contains_ci(value, "tex")) return true;
        at = i;
    }
    return false;
}

bool has_math_tag(std::string_view html) {
    std::size_t at = 0;
    while ((at = find_ci(html, "<math", at)) != std::string_view::npos) {
        std::size_t after = at + 5;
        if (after >= html.size()) return false;
        char c = html[after];
        if (c == '>' || c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '/') return true;
        at = after;
    }
    return false;
}

}  // namespace

std::string strip_tags(std::string_view html) {
    std::string kept;
    kept.reserve(html.size());
    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            kept.push_back(html[i++]);
            continue;
        }
        if (html.compare(i, 4, "<!--") == 0) {
            std::size_t end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        // drop script/style bodies entirely
        bool raw_block = false;
        for (std::string_view tag : {std::string_view("script"), std::string_view("style")}) {
            std::size_t after = i + 1 + tag.size();
            bool named = find_ci(html.substr(i + 1, tag.size()), tag) == 0 &&
                         (after >= html.size() || html[after] == '>' || html[after] == ' ' ||
                          html[after] == '\t' || html[after] == '\n' || html[after] == '/');
            if (!named) continue;
            std::string close = "</" + std::string(tag);
            std::size_t end = find_ci(html, close, i + 1);
            if (end == std::string_view::npos) {
                i = html.size();
            } else {
                std::size_t gt = html.find('>', end);
                i = gt == std::string_view::npos ? html.size() : gt + 1;
            }
            raw_block = true;
            break;
        }
        if (raw_block) continue;
        std::size_t gt = html.find('>', i + 1);
        if (gt == std::string_view::npos) {
            kept.push_back(html[i++]);
            continue;
        }
        kept.push_back(' ');
        i = gt + 1;
    }
    std::string decoded = decode_html_entities(kept);
    std::string out;
    out.reserve(decoded.size());
    for (char c : decoded) {
        bool sp = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (sp) {
            if (!out.empty() && out.back() != ' ') out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

FilterDecision prefilter(std::string_view html, const LatexSymbolList& symbols,
                         const MathScoreFn& scorer, double score_threshold,
                         const std::string& doc_id) {
    FilterDecision d;
    d.doc_id = doc_id;
    d.stage_name = "prefilter";

    if (has_tex_class(html) || has_math_tag(html) || contains_ci(html, "mathjax")) {
        d.keep = true;
        d.rule = "keyword";
        return d;
    }
    for (const std::string& sym : symbols.symbols) {
        if (html.find(sym) != std::string_view::npos) {
            d.keep = true;
            d.rule = "symbol";
            return d;
        }
    }
    if (scorer) {
        double score = scorer(strip_tags(html));
        d.score = score;
        if (score > score_threshold) {
            d.keep = true;
            d.rule = "score";
            return d;
        }
    }
    d.keep = false;
    d.rule = "prefilter_drop";
    return d;
}

}  // namespace mathcorpus
