#include "mathcorpus/code_filter.hpp"

#include <algorithm>
#include <limits>
#include <regex>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

double numerical_density(std::string_view text) {
    std::size_t digits = 0, others = 0;
    for (char32_t cp : utf8_decode(text)) {
        if (cp >= U'0' && cp <= U'9')
            ++digits;
        else
            ++others;
    }
    if (digits == 0 && others == 0) return 0.0;
    if (others == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(digits) / static_cast<double>(others);
}

// ----------------- rules file -----------------

namespace {

// Line format: `key value value ...` with values either bare words or
// "quoted strings" taken literally (no escape processing, so keywords like
// "\chapter{" appear verbatim in the file).
std::vector<std::string> parse_values(std::string_view rest) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < rest.size()) {
        while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
        if (i >= rest.size()) break;
        if (rest[i] == '"') {
            std::size_t close = rest.find('"', i + 1);
            if (close == std::string_view::npos)
                throw ConfigError("unterminated quote in rules file: " + std::string(rest));
            out.emplace_back(rest.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            std::size_t b = i;
            while (i < rest.size() && rest[i] != ' ' && rest[i] != '\t') ++i;
            out.emplace_back(rest.substr(b, i - b));
        }
    }
    return out;
}

}  // namespace

const LanguageRule* RuleSet::find(std::string_view language) const {
    for (const LanguageRule& r : rules)
        if (r.language == language) return &r;
    return nullptr;
}

RuleSet RuleSet::parse(std::string_view text) {
    RuleSet set;
    LanguageRule* cur = nullptr;
    for (const std::string& raw : split_lines(text)) {
        std::string_view line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::size_t sp = line.find_first_of(" \t");
        std::string key(line.substr(0, sp));
        std::string_view rest = sp == std::string_view::npos ? std::string_view() : line.substr(sp);
        std::vector<std::string> values = parse_values(rest);

        if (key == "language") {
            if (values.size() != 1) throw ConfigError("rules: language takes one value");
            set.rules.emplace_back();
            cur = &set.rules.back();
            cur->language = values[0];
            continue;
        }
        if (!cur) throw ConfigError("rules: directive before first language: " + key);
        if (key == "extensions") {
            cur->extensions = values;
        } else if (key == "include") {
            cur->include_keywords = values;
        } else if (key == "exclude") {
            cur->exclude_keywords = values;
        } else if (key == "include_regex") {
            cur->include_regexes = values;
        } else if (key == "exclude_regex") {
            cur->exclude_regexes = values;
        } else if (key == "max_bytes") {
            if (values.size() != 1) throw ConfigError("rules: max_bytes takes one value");
            cur->max_bytes = std::stoull(values[0]);
            if (cur->max_bytes == 0) throw ConfigError("rules: max_bytes must be positive");
        } else if (key == "density_max") {
            if (values.size() != 1) throw ConfigError("rules: density_max takes one value");
            cur->density_max = std::stod(values[0]);
            if (cur->density_max <= 0) throw ConfigError("rules: density_max must be positive");
        } else if (key == "extra") {
            for (std::string& v : values) cur->extras.push_back(std::move(v));
        } else {
            throw ConfigError("rules: unknown directive: " + key);
        }
    }
    for (const LanguageRule& r : set.rules) {
        if (r.extensions.empty())
            throw ConfigError("rules: language " + r.language + " lists no extensions");
    }
    return set;
}

RuleSet RuleSet::load(const std::string& path) { return parse(read_file(path)); }

RuleSet RuleSet::load_default() {
    return load(default_data_dir() + "/../rules/algebraicstack.rules");
}

// ----------------- rule application -----------------

namespace {

bool contains_any(std::string_view text, const std::vector<std::string>& keywords,
                  std::string* which = nullptr) {
    for (const std::string& k : keywords) {
        if (!k.empty() && text.find(k) != std::string_view::npos) {
            if (which) *which = k;
            return true;
        }
    }
    return false;
}

bool matches_any_regex(const std::string& text, const std::vector<std::string>& patterns) {
    for (const std::string& p : patterns) {
        std::regex re(p, std::regex::ECMAScript | std::regex::multiline);
        if (std::regex_search(text, re)) return true;
    }
    return false;
}

bool has_extra(const LanguageRule& rule, std::string_view flag) {
    return std::find(rule.extras.begin(), rule.extras.end(), flag) != rule.extras.end();
}

std::optional<std::string> extra_violation(const Document& doc, const LanguageRule& rule) {
    const std::string& text = doc.content;
    if (has_extra(rule, "xml_prefix") && starts_with(trim(text), "<?xml")) return "xml_prefix";
    if (has_extra(rule, "json_prefix") && starts_with(trim(text), "{")) return "json_prefix";
    if (has_extra(rule, "autogenerated") && contains_ci(text, "automatically generated"))
        return "autogenerated";
    if (has_extra(rule, "macos_resource_fork")) {
        bool fork_magic = text.size() >= 4 && text[0] == '\x00' && text[1] == '\x05' &&
                          text[2] == '\x16' && text[3] == '\x07';
        if (fork_magic || text.substr(0, 100).find("Mac OS X") != std::string::npos)
            return "macos_resource_fork";
    }
    if (has_extra(rule, "julia_size_density")) {
        std::size_t chars = utf8_codepoint_count(text);
        if (chars > 10000 && !contains_ci(text, "test") && numerical_density(text) < 0.5)
            return "julia_size_density";
    }
    if (has_extra(rule, "dir_blacklist_latex")) {
        auto it = doc.meta.find("path");
        if (it != doc.meta.end() && it->second.find("latex/") != std::string::npos)
            return "dir_blacklist_latex";
    }
    if (has_extra(rule, "gnuplot") && text.find("gnuplot") != std::string::npos) return "gnuplot";
    if (has_extra(rule, "english_only")) {
        auto it = doc.meta.find("lang");
        if (it != doc.meta.end() && it->second != "en") return "not_english";
    }
    return std::nullopt;
}

}  // namespace

FilterDecision apply_language_rule(const Document& doc, const LanguageRule& rule) {
    FilterDecision d;
    d.doc_id = doc.id;
    d.stage_name = "code_filter:" + rule.language;
    d.keep = true;

    auto drop = [&](const std::string& rule_id) {
        d.keep = false;
        d.rule = rule_id;
        return d;
    };

    if (doc.content.size() > rule.max_bytes) return drop("max_bytes");

    // julia ignores the standard density gate in favor of its extra
    if (!has_extra(rule, "julia_size_density")) {
        double density = numerical_density(doc.content);
        d.score = density;
        if (density > rule.density_max) return drop("density");
    }

    std::string which;
    if (contains_any(doc.content, rule.exclude_keywords, &which)) return drop("exclude:" + which);
    if (!rule.exclude_regexes.empty() && matches_any_regex(doc.content, rule.exclude_regexes))
        return drop("exclude_regex");

    if (!rule.include_keywords.empty() || !rule.include_regexes.empty()) {
        bool included = contains_any(doc.content, rule.include_keywords) ||
                        (!rule.include_regexes.empty() &&
                         matches_any_regex(doc.content, rule.include_regexes));
        if (!included) return drop("include");
    }

    if (auto violation = extra_violation(doc, rule)) return drop(*violation);
    return d;
}

// ----------------- decontamination -----------------

DecontaminationList DecontaminationList::load(const std::string& path, std::string source_label) {
    DecontaminationList list;
    list.source = source_label.empty() ? path : std::move(source_label);
    for (const std::string& line : read_line_list(path)) list.names.insert(line);
    return list;
}

namespace {

bool is_identifier_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '\'' || c == '.' || c == '!' || c == '?' ||
           static_cast<unsigned char>(c) >= 0x80;
}

// the keyword at column 0 that `line` starts with, if any
const std::string* block_keyword(std::string_view line, const std::vector<std::string>& keywords) {
    for (const std::string& k : keywords)
        if (starts_with(line, k)) return &k;
    return nullptr;
}

std::string identifier_after(std::string_view line, std::size_t from) {
    while (from < line.size() && (line[from] == ' ' || line[from] == '\t')) ++from;
    std::size_t b = from;
    while (from < line.size() && is_identifier_char(line[from])) ++from;
    return std::string(line.substr(b, from - b));
}

}  // namespace

std::string decontaminate_theorems(std::string_view text, const DecontaminationList& list,
                                   const std::vector<std::string>& keywords) {
    if (list.names.empty()) return std::string(text);

    // split into lines, keeping each line's original byte span so kept text
    // survives byte-exactly
    std::vector<std::pair<std::size_t, std::size_t>> line_spans;  // [begin, end incl. newline)
    std::size_t begin = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::size_t end = i == text.size() ? i : i + 1;
            if (begin < end || i < text.size()) line_spans.emplace_back(begin, end);
            begin = i + 1;
        }
    }

    auto line_view = [&](std::size_t idx) {
        auto [b, e] = line_spans[idx];
        std::string_view v = text.substr(b, e - b);
        while (!v.empty() && (v.back() == '\n' || v.back() == '\r')) v.remove_suffix(1);
        return v;
    };

    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < line_spans.size()) {
        std::string_view line = line_view(i);
        const std::string* kw = block_keyword(line, keywords);
        bool remove = false;
        if (kw) {
            std::string name = identifier_after(line, kw->size());
            remove = !name.empty() && list.names.count(name) > 0;
        }
        if (!remove) {
            auto [b, e] = line_spans[i];
            out.append(text.substr(b, e - b));
            ++i;
            continue;
        }
        ++i;  // skip the keyword line and its block
        while (i < line_spans.size() && !block_keyword(line_view(i), keywords)) ++i;
    }
    return out;
}

}  // namespace mathcorpus
