#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mathcorpus/extraction.hpp"
#include "mathcorpus/util.hpp"

using namespace mathcorpus;

namespace {

bool has_pair(const std::vector<std::pair<std::string, std::string>>& pairs,
              const std::string& open, const std::string& close) {
    for (const auto& p : pairs)
        if (p.first == open && p.second == close) return true;
    return false;
}

ExtractionResult extract_simple(std::string_view html) {
    return extract_document(html, ExtractionOptions{});
}

// the visible text of a page, whitespace-normalized to single spaces
std::string visible_text_oracle(std::string_view html) {
    HtmlDocument dom = parse_html(html);
    std::string raw;
    std::function<void(const HtmlNode&)> walk = [&](const HtmlNode& n) {
        if (n.kind == HtmlNode::Kind::element &&
            (n.tag == "script" || n.tag == "style" || n.tag == "head" || n.tag == "title"))
            return;
        if (n.kind == HtmlNode::Kind::text) raw += n.text + " ";
        for (const auto& c : n.children) walk(*c);
    };
    walk(*dom);
    std::string out;
    for (const Token& t : split_whitespace(raw)) {
        if (!out.empty()) out += ' ';
        out += t.text;
    }
    return out;
}

std::string ws_normalize(std::string_view text) {
    std::string out;
    for (const Token& t : split_whitespace(text)) {
        if (!out.empty()) out += ' ';
        out += t.text;
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("extraction");

// ----------------- detect_mathjax_delimiters -----------------

TEST_CASE("custom inlineMath pairs are parsed and merged with defaults") {
    std::string html = R"(<html><head><script>
        MathJax.Hub.Config({tex2jax: {inlineMath: [['$','$'],['\\(','\\)']]}});
    </script></head><body>x</body></html>)";
    DelimiterConfig cfg = detect_mathjax_delimiters(html);
    CHECK(has_pair(cfg.inline_pairs, "$", "$"));
    CHECK(has_pair(cfg.inline_pairs, "\\(", "\\)"));
    CHECK(has_pair(cfg.display_pairs, "$$", "$$"));  // defaults survive
    CHECK(cfg.dollar_inline_enabled);
}

TEST_CASE("no script tags: defaults with single dollars off") {
    DelimiterConfig cfg = detect_mathjax_delimiters("<html><body>plain page</body></html>");
    CHECK_FALSE(cfg.dollar_inline_enabled);
    CHECK_FALSE(has_pair(cfg.inline_pairs, "$", "$"));
    CHECK(has_pair(cfg.display_pairs, "$$", "$$"));
    CHECK(has_pair(cfg.display_pairs, "\\[", "\\]"));
    CHECK(has_pair(cfg.inline_pairs, "\\(", "\\)"));
}

TEST_CASE("the word mathjax without a config enables single dollars") {
    DelimiterConfig cfg = detect_mathjax_delimiters(
        "<html><script src=\"https://cdn.example/MathJax.js\"></script><body>t</body></html>");
    CHECK(cfg.dollar_inline_enabled);
    CHECK(has_pair(cfg.inline_pairs, "$", "$"));
}

TEST_CASE("a config block without single dollars disables them despite mathjax") {
    std::string html = R"(<script>window.MathJax = {tex: {inlineMath: [['\\(','\\)']]}}</script>)";
    DelimiterConfig cfg = detect_mathjax_delimiters(html);
    CHECK_FALSE(cfg.dollar_inline_enabled);
    CHECK_FALSE(has_pair(cfg.inline_pairs, "$", "$"));
}

TEST_CASE("custom delimiters from displayMath arrays") {
    std::string html =
        R"(<script>MathJax.Hub.Config({tex2jax: {displayMath: [['[[m]]','[[/m]]']]}});</script>)";
    DelimiterConfig cfg = detect_mathjax_delimiters(html);
    CHECK(has_pair(cfg.display_pairs, "[[m]]", "[[/m]]"));
    CHECK(has_pair(cfg.display_pairs, "$$", "$$"));
}

TEST_CASE("ambiguous pairs are dropped at validation") {
    DelimiterConfig cfg;
    cfg.inline_pairs = {{"\\(", "\\)"}, {"\\((", "\\)"}, {"", "x"}, {"\\(", "\\)"}};
    cfg.validate();
    CHECK(cfg.inline_pairs.size() == 1);
}

// ----------------- extract_math: the seven encodings -----------------

TEST_CASE("equation environment") {
    std::string html = "<html><body><p>Consider \\begin{equation}x=1\\end{equation} now.</p>";
    auto spans = extract_math(html, default_delimiters(false));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].latex == "x=1");
    CHECK(spans[0].display);
    CHECK(spans[0].encoding == MathEncoding::env);
}

TEST_CASE("unbalanced environment is dropped and counted") {
    std::string html = "<p>broken \\begin{equation}x=1 and more text</p>";
    DropCounts drops;
    auto spans = extract_math(html, default_delimiters(false), &drops);
    CHECK(spans.empty());
    CHECK(drops.get("unbalanced_env") == 1);
}

TEST_CASE("alttext of an element with a tex class") {
    std::string html = R"(<p>let <span class="tex" alttext="x^2">rendered</span> grow</p>)";
    auto spans = extract_math(html, default_delimiters(false));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].latex == "x^2");
    CHECK(spans[0].encoding == MathEncoding::alttext);
    CHECK_FALSE(spans[0].display);
}

TEST_CASE("codecogs image url, raw and percent-encoded") {
    auto spans1 = extract_math(R"(<img src="https://latex.codecogs.com/svg.latex?\frac{a}{b}">)",
                               default_delimiters(false));
    REQUIRE(spans1.size() == 1);
    CHECK(spans1[0].latex == "\\frac{a}{b}");
    CHECK(spans1[0].encoding == MathEncoding::img_url);

    auto spans2 = extract_math(
        R"(<img src="https://latex.codecogs.com/gif.latex?%5Csum_%7Bi%7D%20x_i">)",
        default_delimiters(false));
    REQUIRE(spans2.size() == 1);
    CHECK(spans2[0].latex == "\\sum_{i} x_i");
}

TEST_CASE("wordpress plugin: img class latex and shortcode") {
    auto spans1 = extract_math(R"(<img class="latex" alt="e^x">)", default_delimiters(false));
    REQUIRE(spans1.size() == 1);
    CHECK(spans1[0].latex == "e^x");
    CHECK(spans1[0].encoding == MathEncoding::wordpress);

    auto spans2 = extract_math("<p>[latex]\\sum_{i=1}^n i[/latex]</p>", default_delimiters(false));
    REQUIRE(spans2.size() == 1);
    CHECK(spans2[0].latex == "\\sum_{i=1}^n i");
    CHECK(spans2[0].encoding == MathEncoding::wordpress);
}

TEST_CASE("annotation with application/x-tex encoding") {
    std::string html =
        R"(<math><semantics><mrow><mi>e</mi></mrow><annotation encoding="application/x-tex">e^{i\pi}</annotation></semantics></math>)";
    auto spans = extract_math(html, default_delimiters(false));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].latex == "e^{i\\pi}");
    CHECK(spans[0].encoding == MathEncoding::annotation_xtex);
}

TEST_CASE("mathml conversion when no annotation present") {
    std::string html = "<math display=\"block\"><mfrac><mi>a</mi><mn>2</mn></mfrac></math>";
    auto spans = extract_math(html, default_delimiters(false));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].latex == "\\frac{a}{2}");
    CHECK(spans[0].encoding == MathEncoding::mathml);
    CHECK(spans[0].display);
}

TEST_CASE("mathml converter handles the rule subset") {
    auto latex = [](std::string_view html) {
        HtmlDocument dom = parse_html(html);
        const HtmlNode* math = nullptr;
        for_each_element(*dom, [&](HtmlNode& n) {
            if (n.tag == "math" && !math) math = &n;
        });
        REQUIRE(math != nullptr);
        return mathml_to_latex(*math);
    };
    CHECK(latex("<math><msup><mi>x</mi><mn>2</mn></msup></math>") == "{x}^{2}");
    CHECK(latex("<math><msub><mi>a</mi><mi>i</mi></msub></math>") == "{a}_{i}");
    CHECK(latex("<math><msqrt><mn>2</mn></msqrt></math>") == "\\sqrt{2}");
    CHECK(latex("<math><mtext>iff</mtext></math>") == "\\text{iff}");
    CHECK(latex("<math><mrow><mi>x</mi><mo>+</mo><mn>1</mn></mrow></math>") == "x+1");
}

TEST_CASE("mathjax text delimiters") {
    DelimiterConfig cfg = default_delimiters(true);
    auto spans = extract_math("<p>inline $a+b$ and display $$c=d$$ done</p>", cfg);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].latex == "a+b");
    CHECK_FALSE(spans[0].display);
    CHECK(spans[0].encoding == MathEncoding::mathjax_text);
    CHECK(spans[1].latex == "c=d");
    CHECK(spans[1].display);
}

TEST_CASE("dollar math is not extracted when disabled") {
    auto spans = extract_math("<p>$a+b$</p>", default_delimiters(false));
    CHECK(spans.empty());
}

TEST_CASE("currency guards on single dollars") {
    DelimiterConfig cfg = default_delimiters(true);
    auto spans = extract_math("<p>costs $5 and $x+1$ holds</p>", cfg);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].latex == "x+1");
}

TEST_CASE("escaped dollars never open a span") {
    DelimiterConfig cfg = default_delimiters(true);
    auto spans = extract_math("<p>price \\$10 then $y$</p>", cfg);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].latex == "y");
}

TEST_CASE("spans are non-overlapping, earliest match wins") {
    // dollar text inside an alttext span must not double-extract
    std::string html = R"(<p><span class="tex" alttext="u_n">$u_n$</span> tail</p>)";
    auto spans = extract_math(html, default_delimiters(true));
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].encoding == MathEncoding::alttext);
}

TEST_CASE("byte ranges address the source html") {
    std::string html = "<p>a $x$ b</p>";
    auto spans = extract_math(html, default_delimiters(true));
    REQUIRE(spans.size() == 1);
    CHECK(html.substr(spans[0].begin, spans[0].end - spans[0].begin) == "$x$");
}

// ----------------- process_dom -----------------

TEST_CASE("display:none content is removed") {
    DropCounts drops;
    HtmlDocument dom =
        process_dom(R"(<p style="display:none">secret</p><p>kept</p>)", {}, 0.8, drops);
    std::string text = extract_text(*dom);
    CHECK(text == "kept");
    CHECK(drops.get("invisible") == 1);
}

TEST_CASE("buttons are removed") {
    DropCounts drops;
    HtmlDocument dom = process_dom("<p>before <button>Click me</button> after</p>", {}, 0.8, drops);
    CHECK(extract_text(*dom) == "before after");
    CHECK(drops.get("button") == 1);
}

TEST_CASE("link cluster with density 1.0 is removed") {
    DropCounts drops;
    HtmlDocument dom = process_dom(
        "<body><div><a>x</a><a>y</a></div><p>content stays here</p></body>", {}, 0.8, drops);
    CHECK(extract_text(*dom) == "content stays here");
    CHECK(drops.get("link_cluster") == 1);
}

TEST_CASE("prose with a citation link survives the density rule") {
    DropCounts drops;
    HtmlDocument dom = process_dom(
        "<p>long explanation with a small <a>ref</a> inside lots of words</p>", {}, 0.8, drops);
    CHECK(drops.get("link_cluster") == 0);
    CHECK(extract_text(*dom) == "long explanation with a small ref inside lots of words");
}

TEST_CASE("blacklisted class and id patterns are removed") {
    DropCounts drops;
    HtmlDocument dom = process_dom(
        R"(<div class="sidebar-widget">junk</div><div id="main">body text</div>)",
        {"sidebar", "footer"}, 0.8, drops);
    CHECK(extract_text(*dom) == "body text");
    CHECK(drops.get("blacklisted") == 1);
}

TEST_CASE("headers render with # prefixes") {
    DropCounts drops;
    HtmlDocument dom = process_dom("<h2>Title</h2>", {}, 0.8, drops);
    CHECK(extract_text(*dom) == "## Title");
}

TEST_CASE("tables render row per line with cell separators") {
    DropCounts drops;
    HtmlDocument dom = process_dom(
        "<table><tr><th>a</th><th>b</th></tr><tr><td>1</td><td>2</td></tr></table>", {}, 0.8,
        drops);
    CHECK(extract_text(*dom) == "a | b\n1 | 2");
}

TEST_CASE("code blocks are fenced") {
    DropCounts drops;
    HtmlDocument dom = process_dom("<p>run</p><pre>x = f(y)\n  z += 1</pre>", {}, 0.8, drops);
    CHECK(extract_text(*dom) == "run\n```\nx = f(y)\n  z += 1\n```");
}

// ----------------- extract_text / extract_document -----------------

TEST_CASE("alttext math re-embeds inline") {
    std::string html =
        R"(<html><body><p>let <span class="tex" alttext="x^2">r</span> grow</p></body></html>)";
    ExtractionResult result = extract_simple(html);
    CHECK(result.text == "let $x^2$ grow");
    REQUIRE(result.spans.size() == 1);
    CHECK(result.spans[0].latex == "x^2");
}

TEST_CASE("page with no math yields plain text and no spans") {
    ExtractionResult result = extract_simple("<html><body><p>just words</p></body></html>");
    CHECK(result.text == "just words");
    CHECK(result.spans.empty());
}

TEST_CASE("display environment inside a paragraph lands on its own line") {
    std::string html = "<p>before \\begin{equation}E=mc^2\\end{equation} after</p>";
    ExtractionResult result = extract_simple(html);
    CHECK(result.text == "before\n$$E=mc^2$$\nafter");
}

TEST_CASE("main content selection keeps the dominant block") {
    std::string html =
        "<body><nav><a>one</a></nav>"
        "<div id=\"content\"><p>the actual article text with many words in it "
        "covering most characters of this page</p></div></body>";
    ExtractionResult result = extract_simple(html);
    CHECK(result.text.find("actual article") != std::string::npos);
    CHECK(result.text.find("one") == std::string::npos);
}

TEST_CASE("math inside hidden elements is dropped from the result spans") {
    std::string html = R"(<p style="display:none">hidden $a$</p><p>shown text</p>)";
    // force dollar math on via a mathjax marker
    std::string page = "<script>var x='mathjax'</script>" + html;
    ExtractionResult result = extract_simple(page);
    CHECK(result.text == "shown text");
    CHECK(result.spans.empty());
    CHECK(result.dropped_nodes.count("invisible"));
}

// ----------------- process_lines -----------------

TEST_CASE("boilerplate lines are removed by exact match") {
    std::string out = process_lines("Skip to main content\nreal text", {"Skip to main content"});
    CHECK(out == "real text");
}

TEST_CASE("empty headers are removed") {
    CHECK(process_lines("# A\n# B\ncontent", {}) == "# B\ncontent");
    CHECK(process_lines("# A\n\n# B\ncontent", {}) == "# B\ncontent");
    CHECK(process_lines("content\n# tail", {}) == "content");
}

TEST_CASE("dollars outside math ranges are escaped") {
    std::string text = "costs $5 and $x+1$ holds";
    std::size_t b = text.find("$x+1$");
    std::string out = process_lines(text, {}, {{b, b + 5}});
    CHECK(out == "costs \\$5 and $x+1$ holds");
}

TEST_CASE("process_lines is idempotent") {
    std::vector<std::string> phrases = {"Menu", "Log in"};
    std::vector<std::string> samples = {
        "costs $5\nMenu\n# A\n# B\nbody $x$ here\n\n\nmore",
        "$a\n\nLog in\n## head\ntext",
        "",
        "# only header",
        "text \\$already escaped $new",
    };
    for (const std::string& s : samples) {
        std::string once = process_lines(s, phrases);
        std::string twice = process_lines(once, phrases);
        CHECK(once == twice);
    }
}

// ----------------- invariants -----------------

TEST_CASE("span preservation: every surviving span's latex appears in the text") {
    std::vector<std::string> pages = {
        "<p>a $x_1$ b $$y^2$$ c</p><script>mathjax</script>",
        R"(<p><span class="tex" alttext="\alpha+\beta">r</span></p>)",
        "<p>\\begin{align}a=b\\end{align} tail</p>",
        R"(<math><annotation encoding="application/x-tex">\frac{1}{2}</annotation></math>)",
    };
    for (const std::string& page : pages) {
        ExtractionResult result = extract_simple(page);
        CHECK_FALSE(result.spans.empty());
        for (const MathSpan& span : result.spans) {
            std::string inl = "$" + span.latex + "$";
            std::string disp = "$$" + span.latex + "$$";
            bool found = result.text.find(span.display ? disp : inl) != std::string::npos;
            CHECK_MESSAGE(found, "missing latex: ", span.latex, " in: ", result.text);
        }
    }
}

TEST_CASE("no-math identity: visible text survives modulo whitespace") {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 20; ++round) {
        std::string body = "<div id=\"c\">";
        int paras = 1 + static_cast<int>(rng() % 4);
        for (int p = 0; p < paras; ++p) {
            body += "<p>" + testutil::random_words(rng, 5 + rng() % 10);
            if (rng() % 2) body += " <em>" + testutil::random_words(rng, 2) + "</em>";
            body += "</p>";
        }
        body += "</div>";
        std::string html = "<html><body>" + body + "</body></html>";
        ExtractionResult result = extract_simple(html);
        CHECK(ws_normalize(result.text) == visible_text_oracle(html));
    }
}

TEST_SUITE_END();
