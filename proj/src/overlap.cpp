#include "mathcorpus/overlap.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "mathcorpus/util.hpp"

using json = nlohmann::json;

namespace mathcorpus {

std::string_view seq_kind_name(SeqKind k) {
    switch (k) {
        case SeqKind::problem: return "problem";
        case SeqKind::solution: return "solution";
        case SeqKind::generation: return "generation";
    }
    return "problem";
}

std::optional<SeqKind> seq_kind_from_name(std::string_view name) {
    if (name == "problem") return SeqKind::problem;
    if (name == "solution") return SeqKind::solution;
    if (name == "generation") return SeqKind::generation;
    return std::nullopt;
}

std::vector<TestSequence> load_test_sequences(const std::string& path) {
    std::vector<TestSequence> out;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    for (const std::string& line : split_lines(read_file(path))) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": bad record: " + e.what());
        }
        TestSequence t;
        t.id = j.at("id").get<std::string>();
        auto kind = seq_kind_from_name(j.at("kind").get<std::string>());
        if (!kind) throw DataError(path + ": unknown kind for " + t.id);
        t.kind = *kind;
        t.text = j.at("text").get<std::string>();
        t.level = j.value("level", std::string());
        if (j.contains("correct") && !j.at("correct").is_null())
            t.correct = j.at("correct").get<bool>();
        if (!ids.insert(t.id).second) throw DataError(path + ": duplicate sequence id " + t.id);
        out.push_back(std::move(t));
    }
    return out;
}

// ----------------- hit detection -----------------

namespace {

struct TokenizedText {
    std::vector<std::string> tokens;
    std::vector<std::size_t> begins;  // byte offset per token
    std::vector<std::size_t> ends;
};

TokenizedText tokenize_overlap(std::string_view text, bool lowercase) {
    TokenizedText out;
    for (const Token& t : split_whitespace(text)) {
        std::string tok(t.text);
        if (lowercase) tok = to_lower_ascii(tok);
        out.tokens.push_back(std::move(tok));
        out.begins.push_back(t.begin);
        out.ends.push_back(t.begin + t.text.size());
    }
    return out;
}

// polynomial rolling hash over per-token FNV hashes
std::vector<std::uint64_t> window_hashes(const std::vector<std::uint64_t>& token_hashes,
                                         std::size_t n) {
    std::vector<std::uint64_t> out;
    if (token_hashes.size() < n) return out;
    std::uint64_t top = 1;
    for (std::size_t i = 1; i < n; ++i) top *= kFnvPrime;
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < n; ++i) h = h * kFnvPrime + token_hashes[i];
    out.push_back(h);
    for (std::size_t i = n; i < token_hashes.size(); ++i) {
        h = (h - token_hashes[i - n] * top) * kFnvPrime + token_hashes[i];
        out.push_back(h);
    }
    return out;
}

std::vector<std::uint64_t> hash_tokens(const std::vector<std::string>& tokens) {
    std::vector<std::uint64_t> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(fnv1a64(t));
    return out;
}

}  // namespace

HitReport find_hits(const std::vector<TestSequence>& tests, const std::vector<Document>& corpus,
                    const OverlapOptions& opts) {
    if (opts.n < 2) throw ConfigError("n must be >= 2");
    const std::size_t n = static_cast<std::size_t>(opts.n);

    HitReport report;
    report.n = opts.n;

    // index every test window
    std::vector<TokenizedText> test_tokens(tests.size());
    std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, std::size_t>>> index;
    bool any_window = false;
    for (std::size_t t = 0; t < tests.size(); ++t) {
        test_tokens[t] = tokenize_overlap(tests[t].text, opts.lowercase);
        auto hashes = window_hashes(hash_tokens(test_tokens[t].tokens), n);
        for (std::size_t w = 0; w < hashes.size(); ++w) index[hashes[w]].emplace_back(t, w);
        if (!hashes.empty()) any_window = true;
    }
    if (!any_window) {
        report.too_short_warning = true;
        return report;
    }

    // stream the corpus against the index; dedupe on (sequence, doc, doc window)
    std::map<std::string, std::set<std::pair<std::string, std::size_t>>> seen;
    std::map<std::string, std::set<std::string>> kind_examples, kind_docs;

    for (const Document& doc : corpus) {
        TokenizedText dt = tokenize_overlap(doc.content, opts.lowercase);
        auto hashes = window_hashes(hash_tokens(dt.tokens), n);
        for (std::size_t w = 0; w < hashes.size(); ++w) {
            auto it = index.find(hashes[w]);
            if (it == index.end()) continue;
            for (const auto& [t, tw] : it->second) {
                const auto& ttoks = test_tokens[t].tokens;
                if (!std::equal(ttoks.begin() + static_cast<std::ptrdiff_t>(tw),
                                ttoks.begin() + static_cast<std::ptrdiff_t>(tw + n),
                                dt.tokens.begin() + static_cast<std::ptrdiff_t>(w)))
                    continue;  // hash collision
                const TestSequence& seq = tests[t];
                if (!seen[seq.id].insert({doc.id, w}).second) continue;
                Hit hit;
                hit.doc_id = doc.id;
                hit.position = dt.begins[w];
                hit.ngram = doc.content.substr(dt.begins[w], dt.ends[w + n - 1] - dt.begins[w]);
                report.per_sequence[seq.id].push_back(std::move(hit));
                kind_examples[std::string(seq_kind_name(seq.kind))].insert(seq.id);
                kind_docs[std::string(seq_kind_name(seq.kind))].insert(doc.id);
            }
        }
    }

    // deterministic order independent of corpus order
    for (auto& [id, hits] : report.per_sequence) {
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
            if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
            return a.position < b.position;
        });
    }
    for (const auto& [kind, examples] : kind_examples) {
        report.summary[kind].examples = examples.size();
        report.summary[kind].docs = kind_docs[kind].size();
    }
    return report;
}

// ----------------- report serialization -----------------

std::string HitReport::to_json() const {
    json j;
    j["n"] = n;
    j["too_short_warning"] = too_short_warning;
    json per = json::object();
    for (const auto& [id, hits] : per_sequence) {
        json arr = json::array();
        for (const Hit& h : hits)
            arr.push_back({{"doc_id", h.doc_id}, {"ngram", h.ngram}, {"position", h.position}});
        per[id] = arr;
    }
    j["per_sequence"] = per;
    json sum = json::object();
    for (const auto& [kind, s] : summary)
        sum[kind] = {{"examples", s.examples}, {"docs", s.docs}};
    j["summary"] = sum;
    return j.dump(2);
}

HitReport HitReport::from_json(std::string_view text) {
    json j = json::parse(text);
    HitReport r;
    r.n = j.at("n").get<int>();
    r.too_short_warning = j.value("too_short_warning", false);
    for (auto& [id, arr] : j.at("per_sequence").items()) {
        for (auto& h : arr) {
            Hit hit;
            hit.doc_id = h.at("doc_id").get<std::string>();
            hit.ngram = h.at("ngram").get<std::string>();
            hit.position = h.at("position").get<std::size_t>();
            r.per_sequence[id].push_back(std::move(hit));
        }
    }
    if (j.contains("summary")) {
        for (auto& [kind, s] : j.at("summary").items()) {
            r.summary[kind].examples = s.at("examples").get<std::size_t>();
            r.summary[kind].docs = s.at("docs").get<std::size_t>();
        }
    }
    return r;
}

std::string HitReport::summary_table() const {
    std::string out = "Kind        Example  Docs\n";
    for (const auto& [kind, s] : summary) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-10s %8zu %5zu\n", kind.c_str(), s.examples, s.docs);
        out += buf;
    }
    return out;
}

// ----------------- accuracy partition -----------------

std::vector<AccuracyRow> partition_accuracy(const std::vector<TestSequence>& tests,
                                            const HitReport& report) {
    std::vector<std::string> missing;
    for (const TestSequence& t : tests)
        if (!t.correct) missing.push_back(t.id);
    if (!missing.empty()) {
        std::string msg = "tests missing correctness flags:";
        for (const std::string& id : missing) msg += " " + id;
        throw DataError(msg);
    }

    struct Cell {
        std::size_t correct = 0;
        std::size_t total = 0;
    };
    std::map<std::string, Cell> hit_cells, nonhit_cells;
    std::map<std::string, std::size_t> hit_counts;
    for (const TestSequence& t : tests) {
        bool hit = report.per_sequence.count(t.id) > 0 && !report.per_sequence.at(t.id).empty();
        Cell& cell = hit ? hit_cells[t.level] : nonhit_cells[t.level];
        ++cell.total;
        if (*t.correct) ++cell.correct;
        if (hit) ++hit_counts[t.level];
    }

    std::set<std::string> levels;
    for (const TestSequence& t : tests) levels.insert(t.level);

    auto pct = [](const Cell& c) -> std::optional<double> {
        if (c.total == 0) return std::nullopt;  // empty cell stays absent
        double v = 100.0 * static_cast<double>(c.correct) / static_cast<double>(c.total);
        return std::round(v * 100.0) / 100.0;
    };

    std::vector<AccuracyRow> rows;
    for (const std::string& level : levels) {
        AccuracyRow row;
        row.level = level;
        row.hit_accuracy = pct(hit_cells[level]);
        row.nonhit_accuracy = pct(nonhit_cells[level]);
        row.hit_count = hit_counts[level];
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_partition_table(const std::vector<AccuracyRow>& rows) {
    std::string out = "Level | Hit Accuracy | Nonhit Accuracy | # Hits\n";
    for (const AccuracyRow& r : rows) {
        char buf[160];
        std::string hit = r.hit_accuracy ? [&] {
            char b[32];
            std::snprintf(b, sizeof(b), "%.2f", *r.hit_accuracy);
            return std::string(b);
        }() : std::string("-");
        std::string nonhit = r.nonhit_accuracy ? [&] {
            char b[32];
            std::snprintf(b, sizeof(b), "%.2f", *r.nonhit_accuracy);
            return std::string(b);
        }() : std::string("-");
        std::snprintf(buf, sizeof(buf), "%s | %s | %s | %zu\n", r.level.c_str(), hit.c_str(),
                      nonhit.c_str(), r.hit_count);
        out += buf;
    }
    return out;
}

std::vector<AccuracyRow> parse_partition_table(std::string_view text) {
    std::vector<AccuracyRow> rows;
    bool first = true;
    for (const std::string& line : split_lines(text)) {
        if (first) {  // header
            first = false;
            continue;
        }
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::size_t b = 0;
        for (;;) {
            std::size_t sep = line.find(" | ", b);
            if (sep == std::string::npos) {
                cells.emplace_back(trim(std::string_view(line).substr(b)));
                break;
            }
            cells.emplace_back(trim(std::string_view(line).substr(b, sep - b)));
            b = sep + 3;
        }
        if (cells.size() != 4) throw DataError("bad partition table row: " + line);
        AccuracyRow r;
        r.level = cells[0];
        if (cells[1] != "-") r.hit_accuracy = std::stod(cells[1]);
        if (cells[2] != "-") r.nonhit_accuracy = std::stod(cells[2]);
        r.hit_count = std::stoull(cells[3]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ----------------- context excerpts -----------------

std::vector<std::string> hit_context(const HitReport& report,
                                     const std::vector<Document>& corpus,
                                     const std::string& sequence_id, std::size_t context_chars) {
    auto it = report.per_sequence.find(sequence_id);
    if (it == report.per_sequence.end() || it->second.empty())
        throw DataError("no hits recorded for sequence " + sequence_id);

    std::map<std::string, const Document*> docs;
    for (const Document& d : corpus) docs[d.id] = &d;

    std::vector<std::string> out;
    for (const Hit& hit : it->second) {
        auto dit = docs.find(hit.doc_id);
        if (dit == docs.end()) throw DataError("document missing from corpus: " + hit.doc_id);
        const std::string& text = dit->second->content;

        // codepoint-aligned window of context_chars/2 on each side
        std::vector<char32_t> cps = utf8_decode(text);
        // map byte offsets to codepoint offsets
        std::size_t cp_begin = utf8_codepoint_count(std::string_view(text).substr(0, hit.position));
        std::size_t cp_len = utf8_codepoint_count(hit.ngram);
        std::size_t half = context_chars / 2;
        std::size_t from = cp_begin > half ? cp_begin - half : 0;
        std::size_t to = std::min(cps.size(), cp_begin + cp_len + (context_chars - half));

        std::string excerpt;
        if (from > 0) excerpt += "...";
        excerpt += utf8_encode(std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(from),
                                                     cps.begin() + static_cast<std::ptrdiff_t>(to)));
        if (to < cps.size()) excerpt += "...";
        out.push_back(std::move(excerpt));
    }
    return out;
}

}  // namespace mathcorpus
