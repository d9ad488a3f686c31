#include "mathcorpus/dedup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

namespace {

std::vector<std::string> lower_tokens(std::string_view text) {
    std::string lower = to_lower_ascii(text);
    std::vector<std::string> out;
    for (const Token& t : split_whitespace(lower)) out.emplace_back(t.text);
    return out;
}

// union-find over document indices
struct Dsu {
    std::vector<std::size_t> parent;
    explicit Dsu(std::size_t n) : parent(n) {
        for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

DuplicateReport clusters_from_edges(const std::vector<Document>& docs,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                                    const std::set<std::string>& dropped) {
    Dsu dsu(docs.size());
    for (const auto& [a, b] : edges) dsu.unite(a, b);

    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < docs.size(); ++i) groups[dsu.find(i)].push_back(docs[i].id);

    DuplicateReport report;
    report.dropped = dropped;
    for (auto& [root, ids] : groups) {
        if (ids.size() < 2) continue;
        std::sort(ids.begin(), ids.end());
        DuplicateCluster c;
        c.representative = ids.front();
        c.members.assign(ids.begin() + 1, ids.end());
        report.clusters.push_back(std::move(c));
    }
    std::sort(report.clusters.begin(), report.clusters.end(),
              [](const DuplicateCluster& a, const DuplicateCluster& b) {
                  return a.representative < b.representative;
              });
    return report;
}

}  // namespace

std::uint64_t simhash64(std::string_view text) {
    std::vector<std::string> tokens = lower_tokens(text);
    std::map<std::string, std::int64_t> features;
    if (tokens.size() >= 3) {
        for (std::size_t i = 0; i + 3 <= tokens.size(); ++i)
            ++features[tokens[i] + " " + tokens[i + 1] + " " + tokens[i + 2]];
    } else if (!tokens.empty()) {
        std::string joined = tokens[0];
        for (std::size_t i = 1; i < tokens.size(); ++i) joined += " " + tokens[i];
        ++features[joined];
    }

    std::int64_t votes[64] = {0};
    for (const auto& [feature, weight] : features) {
        std::uint64_t h = fnv1a64(feature);
        for (int b = 0; b < 64; ++b)
            votes[b] += (h >> b) & 1 ? weight : -weight;
    }
    std::uint64_t sig = 0;
    for (int b = 0; b < 64; ++b)
        if (votes[b] > 0) sig |= 1ULL << b;  // ties vote 0
    return sig;
}

int simhash_max_distance(double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw ConfigError("similarity threshold must be in (0,1]");
    return static_cast<int>(std::floor((1.0 - threshold) * 64.0));
}

std::vector<std::pair<std::size_t, std::size_t>> near_duplicate_pairs(
    const std::vector<std::uint64_t>& signatures, double threshold) {
    int k = simhash_max_distance(threshold);
    int bands = k + 1;

    // k+1 disjoint blocks covering all 64 bits: any pair within distance k
    // agrees on at least one block
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    int bit = 0;
    for (int band = 0; band < bands; ++band) {
        int width = 64 / bands + (band < 64 % bands ? 1 : 0);
        std::uint64_t mask = width == 64 ? ~0ULL : ((1ULL << width) - 1) << bit;
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
        for (std::size_t i = 0; i < signatures.size(); ++i)
            buckets[signatures[i] & mask].push_back(i);
        for (const auto& [key, docs] : buckets) {
            for (std::size_t a = 0; a < docs.size(); ++a) {
                for (std::size_t b = a + 1; b < docs.size(); ++b) {
                    if (hamming64(signatures[docs[a]], signatures[docs[b]]) <= k)
                        pairs.emplace(docs[a], docs[b]);
                }
            }
        }
        bit += width;
    }
    return {pairs.begin(), pairs.end()};
}

DuplicateReport near_dedup(const std::vector<Document>& docs, double similarity_threshold) {
    std::vector<std::uint64_t> sigs;
    sigs.reserve(docs.size());
    for (const Document& d : docs) sigs.push_back(simhash64(d.content));

    auto pairs = near_duplicate_pairs(sigs, similarity_threshold);

    Dsu dsu(docs.size());
    for (const auto& [a, b] : pairs) dsu.unite(a, b);
    std::map<std::size_t, std::string> smallest;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::size_t root = dsu.find(i);
        auto it = smallest.find(root);
        if (it == smallest.end() || docs[i].id < it->second) smallest[root] = docs[i].id;
    }
    std::set<std::string> dropped;
    for (std::size_t i = 0; i < docs.size(); ++i)
        if (docs[i].id != smallest[dsu.find(i)]) dropped.insert(docs[i].id);

    DuplicateReport report = clusters_from_edges(docs, pairs, dropped);
    report.method = "simhash";
    report.threshold = similarity_threshold;
    return report;
}

// ----------------- exact chunk dedup -----------------

std::uint64_t polynomial_hash(const std::vector<char32_t>& cps, std::size_t begin,
                              std::size_t len) {
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < len; ++i)
        h = h * kFnvPrime + static_cast<std::uint64_t>(cps[begin + i]);
    return h;
}

std::vector<std::uint64_t> rolling_window_hashes(const std::vector<char32_t>& cps,
                                                 std::size_t window) {
    std::vector<std::uint64_t> out;
    if (cps.empty()) return out;
    if (cps.size() <= window) {
        out.push_back(polynomial_hash(cps, 0, cps.size()));
        return out;
    }
    std::uint64_t top = 1;  // base^(window-1)
    for (std::size_t i = 1; i < window; ++i) top *= kFnvPrime;
    std::uint64_t h = polynomial_hash(cps, 0, window);
    out.push_back(h);
    for (std::size_t i = window; i < cps.size(); ++i) {
        h = (h - static_cast<std::uint64_t>(cps[i - window]) * top) * kFnvPrime +
            static_cast<std::uint64_t>(cps[i]);
        out.push_back(h);
    }
    return out;
}

DuplicateReport exact_chunk_dedup(const std::vector<Document>& docs, std::size_t window,
                                  bool verify_collisions) {
    if (window < 1) throw ConfigError("window must be positive");

    struct Owner {
        std::size_t doc_index;
        std::size_t position;  // codepoint offset of the window
    };
    std::unordered_map<std::uint64_t, Owner> index;

    std::vector<std::vector<char32_t>> decoded;
    decoded.reserve(docs.size());
    for (const Document& d : docs) decoded.push_back(utf8_decode(d.content));

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::set<std::string> dropped;

    for (std::size_t i = 0; i < docs.size(); ++i) {
        const std::vector<char32_t>& cps = decoded[i];
        std::vector<std::uint64_t> hashes = rolling_window_hashes(cps, window);

        bool duplicate = false;
        for (std::size_t pos = 0; pos < hashes.size() && !duplicate; ++pos) {
            auto it = index.find(hashes[pos]);
            if (it == index.end() || it->second.doc_index == i) continue;
            if (verify_collisions) {
                const std::vector<char32_t>& other = decoded[it->second.doc_index];
                std::size_t len = std::min(window, cps.size());
                std::size_t other_len = std::min(window, other.size());
                if (len != other_len ||
                    !std::equal(cps.begin() + static_cast<std::ptrdiff_t>(pos),
                                cps.begin() + static_cast<std::ptrdiff_t>(pos + len),
                                other.begin() + static_cast<std::ptrdiff_t>(it->second.position)))
                    continue;  // true hash collision, not a duplicate
            }
            edges.emplace_back(i, it->second.doc_index);
            dropped.insert(docs[i].id);
            duplicate = true;
        }
        // duplicates still contribute windows so later copies of them collapse
        // into the same cluster
        for (std::size_t pos = 0; pos < hashes.size(); ++pos)
            index.emplace(hashes[pos], Owner{i, pos});
    }

    DuplicateReport report = clusters_from_edges(docs, edges, dropped);
    report.method = "exact_chunk";
    report.window = window;
    return report;
}

std::string DuplicateReport::to_text() const {
    std::string out = "method " + method;
    if (method == "simhash") out += " threshold " + std::to_string(threshold);
    if (method == "exact_chunk") out += " window " + std::to_string(window);
    out += "\n";
    for (const DuplicateCluster& c : clusters) {
        out += c.representative;
        for (const std::string& m : c.members) {
            out += ' ';
            out += m;
        }
        out += '\n';
    }
    return out;
}

}  // namespace mathcorpus
