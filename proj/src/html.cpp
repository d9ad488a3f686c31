#include "mathcorpus/html.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

namespace {

const std::set<std::string_view> kVoidTags = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr"};

const std::set<std::string_view> kBlockTags = {
    "address", "article", "aside", "blockquote", "body", "caption", "dd", "details",
    "div", "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form",
    "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "nav",
    "ol", "p", "pre", "section", "summary", "table", "tbody", "td", "tfoot",
    "th", "thead", "tr", "ul"};

// script/style content is consumed verbatim up to the matching close tag
const std::set<std::string_view> kRawTextTags = {"script", "style", "textarea", "title"};

bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '-' || c == '_' || c == ':';
}

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

// Tags whose reopening implicitly closes a sibling of the same kind.
bool implies_close(std::string_view open_tag, std::string_view on_stack) {
    if (open_tag == "p" && on_stack == "p") return true;
    if (open_tag == "li" && on_stack == "li") return true;
    if (open_tag == "tr" && (on_stack == "tr" || on_stack == "td" || on_stack == "th"))
        return true;
    if ((open_tag == "td" || open_tag == "th") && (on_stack == "td" || on_stack == "th"))
        return true;
    if (open_tag == "option" && on_stack == "option") return true;
    if (open_tag == "dt" && (on_stack == "dt" || on_stack == "dd")) return true;
    if (open_tag == "dd" && (on_stack == "dt" || on_stack == "dd")) return true;
    return false;
}

struct Parser {
    std::string_view src;
    std::size_t pos = 0;
    HtmlDocument root;
    std::vector<HtmlNode*> stack;

    explicit Parser(std::string_view html) : src(html) {
        root = std::make_unique<HtmlNode>();
        root->kind = HtmlNode::Kind::document;
        root->src_begin = 0;
        root->src_end = src.size();
        stack.push_back(root.get());
    }

    HtmlNode* top() { return stack.back(); }

    void append_text(std::size_t begin, std::size_t end) {
        if (begin >= end) return;
        auto node = std::make_unique<HtmlNode>();
        node->kind = HtmlNode::Kind::text;
        node->text = decode_html_entities(src.substr(begin, end - begin));
        node->src_begin = begin;
        node->src_end = end;
        node->parent = top();
        top()->children.push_back(std::move(node));
    }

    void append_raw_text(std::size_t begin, std::size_t end) {
        if (begin >= end) return;
        auto node = std::make_unique<HtmlNode>();
        node->kind = HtmlNode::Kind::text;
        node->text = std::string(src.substr(begin, end - begin));
        node->src_begin = begin;
        node->src_end = end;
        node->parent = top();
        top()->children.push_back(std::move(node));
    }

    void close_to(std::size_t stack_index, std::size_t src_end) {
        while (stack.size() > stack_index) {
            stack.back()->src_end = src_end;
            stack.pop_back();
        }
    }

    void parse() {
        std::size_t text_begin = pos;
        while (pos < src.size()) {
            if (src[pos] != '<') {
                ++pos;
                continue;
            }
            // comment
            if (src.compare(pos, 4, "<!--") == 0) {
                append_text(text_begin, pos);
                std::size_t end = src.find("-->", pos + 4);
                pos = end == std::string_view::npos ? src.size() : end + 3;
                text_begin = pos;
                continue;
            }
            // doctype / processing instruction
            if (pos + 1 < src.size() && (src[pos + 1] == '!' || src[pos + 1] == '?')) {
                append_text(text_begin, pos);
                std::size_t end = src.find('>', pos + 1);
                pos = end == std::string_view::npos ? src.size() : end + 1;
                text_begin = pos;
                continue;
            }
            if (pos + 1 < src.size() && src[pos + 1] == '/') {
                std::size_t tag_begin = pos;
                std::size_t i = pos + 2;
                std::size_t name_begin = i;
                while (i < src.size() && is_name_char(src[i])) ++i;
                std::string name = to_lower_ascii(src.substr(name_begin, i - name_begin));
                std::size_t gt = src.find('>', i);
                if (name.empty() || gt == std::string_view::npos) {
                    ++pos;  // literal '<'
                    continue;
                }
                append_text(text_begin, tag_begin);
                handle_close(name, gt + 1);
                pos = gt + 1;
                text_begin = pos;
                continue;
            }
            if (pos + 1 < src.size() &&
                ((src[pos + 1] >= 'a' && src[pos + 1] <= 'z') ||
                 (src[pos + 1] >= 'A' && src[pos + 1] <= 'Z'))) {
                append_text(text_begin, pos);
                parse_open_tag();
                text_begin = pos;
                continue;
            }
            ++pos;  // stray '<'
        }
        append_text(text_begin, src.size());
        close_to(1, src.size());
    }

    void handle_close(const std::string& name, std::size_t src_end) {
        for (std::size_t i = stack.size(); i-- > 1;) {
            if (stack[i]->tag == name) {
                close_to(i, src_end);
                return;
            }
        }
        // unmatched close tag: ignore
    }

    void parse_open_tag() {
        std::size_t tag_begin = pos;
        std::size_t i = pos + 1;
        std::size_t name_begin = i;
        while (i < src.size() && is_name_char(src[i])) ++i;
        std::string name = to_lower_ascii(src.substr(name_begin, i - name_begin));

        std::vector<std::pair<std::string, std::string>> attrs;
        bool self_closing = false;
        while (i < src.size() && src[i] != '>') {
            if (is_space(src[i])) {
                ++i;
                continue;
            }
            if (src[i] == '/') {
                self_closing = true;
                ++i;
                continue;
            }
            std::size_t ab = i;
            while (i < src.size() && !is_space(src[i]) && src[i] != '=' && src[i] != '>' &&
                   src[i] != '/')
                ++i;
            std::string attr_name = to_lower_ascii(src.substr(ab, i - ab));
            std::string attr_value;
            while (i < src.size() && is_space(src[i])) ++i;
            if (i < src.size() && src[i] == '=') {
                ++i;
                while (i < src.size() && is_space(src[i])) ++i;
                if (i < src.size() && (src[i] == '"' || src[i] == '\'')) {
                    char q = src[i++];
                    std::size_t vb = i;
                    while (i < src.size() && src[i] != q) ++i;
                    attr_value = decode_html_entities(src.substr(vb, i - vb));
                    if (i < src.size()) ++i;
                } else {
                    std::size_t vb = i;
                    while (i < src.size() && !is_space(src[i]) && src[i] != '>') ++i;
                    attr_value = decode_html_entities(src.substr(vb, i - vb));
                }
            }
            if (!attr_name.empty()) attrs.emplace_back(std::move(attr_name), std::move(attr_value));
        }
        std::size_t tag_end = i < src.size() ? i + 1 : src.size();
        pos = tag_end;

        if (name.empty()) return;

        // implied sibling closes (e.g. <li> ends an open <li>)
        while (stack.size() > 1 && implies_close(name, stack.back()->tag))
            close_to(stack.size() - 1, tag_begin);

        auto node = std::make_unique<HtmlNode>();
        node->kind = HtmlNode::Kind::element;
        node->tag = name;
        node->attrs = std::move(attrs);
        node->src_begin = tag_begin;
        node->src_end = tag_end;
        node->parent = top();
        HtmlNode* raw = node.get();
        top()->children.push_back(std::move(node));

        if (self_closing || kVoidTags.count(name)) return;

        if (kRawTextTags.count(name)) {
            // consume verbatim until the matching close tag
            std::string close = "</" + name;
            std::size_t end = find_ci(src, close, pos);
            std::size_t content_end = end == std::string_view::npos ? src.size() : end;
            stack.push_back(raw);
            append_raw_text(pos, content_end);
            if (end == std::string_view::npos) {
                close_to(stack.size() - 1, src.size());
                pos = src.size();
            } else {
                std::size_t gt = src.find('>', end);
                std::size_t after = gt == std::string_view::npos ? src.size() : gt + 1;
                close_to(stack.size() - 1, after);
                pos = after;
            }
            return;
        }
        stack.push_back(raw);
    }
};

}  // namespace

const std::string* HtmlNode::attr(std::string_view name) const {
    for (const auto& [k, v] : attrs)
        if (k == name) return &v;
    return nullptr;
}

bool HtmlNode::has_class_containing(std::string_view needle) const {
    const std::string* cls = attr("class");
    return cls && contains_ci(*cls, needle);
}

std::string HtmlNode::text_content() const {
    std::string out;
    std::function<void(const HtmlNode&)> walk = [&](const HtmlNode& n) {
        if (n.kind == Kind::text) out += n.text;
        for (const auto& c : n.children) walk(*c);
    };
    walk(*this);
    return out;
}

HtmlDocument parse_html(std::string_view html) {
    Parser p(html);
    p.parse();
    return std::move(p.root);
}

bool is_block_tag(std::string_view tag) { return kBlockTags.count(tag) > 0; }
bool is_void_tag(std::string_view tag) { return kVoidTags.count(tag) > 0; }

void for_each_element(HtmlNode& root, const std::function<void(HtmlNode&)>& fn) {
    for (auto& child : root.children) {
        if (child->kind == HtmlNode::Kind::element) fn(*child);
        for_each_element(*child, fn);
    }
}

void for_each_text(const HtmlNode& root, const std::function<void(const HtmlNode&)>& fn) {
    for (const auto& child : root.children) {
        if (child->kind == HtmlNode::Kind::text) fn(*child);
        for_each_text(*child, fn);
    }
}

void detach_node(HtmlNode* node) {
    if (!node || !node->parent) return;
    auto& siblings = node->parent->children;
    for (std::size_t i = 0; i < siblings.size(); ++i) {
        if (siblings[i].get() == node) {
            siblings.erase(siblings.begin() + static_cast<std::ptrdiff_t>(i));
            return;
        }
    }
}

}  // namespace mathcorpus
