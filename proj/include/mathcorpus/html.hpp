#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace mathcorpus {

// Minimal lenient HTML tree. Parsing never fails: unknown constructs become
// text, unclosed elements close at their parent or EOF. Every node records
// the byte range it was parsed from, which the math extractor uses to splice
// equations out of the source.
struct HtmlNode {
    enum class Kind { document, element, text };

    Kind kind = Kind::text;
    std::string tag;  // lowercase; elements only
    std::vector<std::pair<std::string, std::string>> attrs;  // values entity-decoded
    std::string text;  // entity-decoded; text nodes only
    std::size_t src_begin = 0;
    std::size_t src_end = 0;
    HtmlNode* parent = nullptr;
    std::vector<std::unique_ptr<HtmlNode>> children;

    const std::string* attr(std::string_view name) const;
    bool has_class_containing(std::string_view needle) const;  // ascii case-insensitive

    // Concatenated text of all descendant text nodes (no separators).
    std::string text_content() const;
};

using HtmlDocument = std::unique_ptr<HtmlNode>;

HtmlDocument parse_html(std::string_view html);

bool is_block_tag(std::string_view tag);
bool is_void_tag(std::string_view tag);

// Walks elements in document order (root excluded).
void for_each_element(HtmlNode& root, const std::function<void(HtmlNode&)>& fn);
void for_each_text(const HtmlNode& root, const std::function<void(const HtmlNode&)>& fn);

// Removes `node` from its parent. No-op on the root.
void detach_node(HtmlNode* node);

}  // namespace mathcorpus
