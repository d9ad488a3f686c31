#include "mathcorpus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

std::vector<std::string> load_suffix_rules(const std::string& path) {
    std::vector<std::string> rules = read_line_list(path);
    for (std::string& r : rules) r = to_lower_ascii(r);
    return rules;
}

std::vector<std::string> load_default_suffix_rules() {
    return load_suffix_rules(default_data_dir() + "/public_suffix.dat");
}

namespace {

std::vector<std::string_view> split_labels(std::string_view host) {
    std::vector<std::string_view> out;
    std::size_t b = 0;
    for (std::size_t i = 0; i <= host.size(); ++i) {
        if (i == host.size() || host[i] == '.') {
            out.push_back(host.substr(b, i - b));
            b = i + 1;
        }
    }
    return out;
}

}  // namespace

std::string registrable_domain(std::string_view url,
                               const std::vector<std::string>& suffix_rules) {
    std::string_view rest = url;
    if (std::size_t scheme = rest.find("://"); scheme != std::string_view::npos)
        rest = rest.substr(scheme + 3);
    std::size_t host_end = rest.find_first_of("/?#");
    std::string_view host_port = rest.substr(0, host_end);
    if (std::size_t at = host_port.rfind('@'); at != std::string_view::npos)
        host_port = host_port.substr(at + 1);
    std::size_t port = host_port.find(':');
    std::string host = to_lower_ascii(host_port.substr(0, port));
    if (starts_with(host, "www.")) host = host.substr(4);

    if (host.empty() || host.find('.') == std::string::npos ||
        host.front() == '.' || host.back() == '.')
        return "(unknown)";

    std::vector<std::string_view> labels = split_labels(host);
    for (const std::string_view& label : labels)
        if (label.empty()) return "(unknown)";

    // the longest suffix rule matching the tail of the host
    std::size_t best_labels = 0;
    for (const std::string& rule : suffix_rules) {
        std::vector<std::string_view> rl = split_labels(rule);
        if (rl.size() >= labels.size()) continue;  // need one label to the left
        bool match = true;
        for (std::size_t i = 0; i < rl.size(); ++i) {
            if (labels[labels.size() - rl.size() + i] != rl[i]) {
                match = false;
                break;
            }
        }
        if (match) best_labels = std::max(best_labels, rl.size());
    }
    std::size_t keep = best_labels > 0 ? best_labels + 1 : std::min<std::size_t>(2, labels.size());
    std::string out;
    for (std::size_t i = labels.size() - keep; i < labels.size(); ++i) {
        if (!out.empty()) out += '.';
        out += labels[i];
    }
    return out;
}

DomainTable domain_table(const std::vector<Document>& docs, DomainMetric metric,
                         std::size_t top_k, const std::vector<std::string>& suffix_rules) {
    if (top_k < 1) throw ConfigError("top_k must be >= 1");
    std::map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const Document& d : docs) {
        std::uint64_t weight = metric == DomainMetric::documents
                                   ? 1
                                   : utf8_codepoint_count(d.content);
        counts[registrable_domain(d.url, suffix_rules)] += weight;
        total += weight;
    }

    std::vector<DomainRow> rows;
    rows.reserve(counts.size());
    for (const auto& [domain, count] : counts) {
        DomainRow r;
        r.domain = domain;
        r.count = count;
        r.percent = total == 0 ? 0.0
                               : std::round(10000.0 * static_cast<double>(count) /
                                            static_cast<double>(total)) /
                                     100.0;
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const DomainRow& a, const DomainRow& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.domain < b.domain;
    });
    if (rows.size() > top_k) rows.resize(top_k);

    DomainTable table;
    table.rows = std::move(rows);
    table.metric = metric;
    table.total = total;
    return table;
}

std::string format_domain_table(const DomainTable& table) {
    const char* unit = table.metric == DomainMetric::documents ? "Documents" : "Characters";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-28s %14s %9s\n", "Domain", unit, "%");
    std::string out = buf;
    for (const DomainRow& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%-28s %14llu %8.2f%%\n", r.domain.c_str(),
                      static_cast<unsigned long long>(r.count), r.percent);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-28s %14llu\n", "(total)",
                  static_cast<unsigned long long>(table.total));
    out += buf;
    return out;
}

std::uint64_t whitespace_token_count(std::string_view text) {
    return split_whitespace(text).size();
}

std::pair<std::uint64_t, std::uint64_t> char_and_token_counts(const std::vector<Document>& docs,
                                                              const TokenCounter& tokenizer) {
    std::uint64_t chars = 0, tokens = 0;
    for (const Document& d : docs) {
        chars += utf8_codepoint_count(d.content);
        tokens += tokenizer(d.content);
    }
    return {chars, tokens};
}

}  // namespace mathcorpus
