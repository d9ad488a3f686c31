#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

// 64-bit SimHash over lowercase word 3-shingles weighted by occurrence
// count; documents with fewer than 3 tokens contribute their whole token
// list as one feature, empty documents have no features. Tie votes resolve
// to bit 0.
std::uint64_t simhash64(std::string_view text);

inline int hamming64(std::uint64_t a, std::uint64_t b) {
    return __builtin_popcountll(a ^ b);
}

// Max Hamming distance considered duplicate at `threshold`:
// floor((1 - threshold) * 64).
int simhash_max_distance(double threshold);

// All index pairs (i < j) within the threshold, found via pigeonhole
// banding over k+1 disjoint bit blocks; output equals brute-force pairwise
// comparison exactly.
std::vector<std::pair<std::size_t, std::size_t>> near_duplicate_pairs(
    const std::vector<std::uint64_t>& signatures, double threshold);

struct DuplicateCluster {
    std::string representative;        // smallest id in the cluster
    std::vector<std::string> members;  // the rest, sorted
};

struct DuplicateReport {
    std::string method;  // "simhash" | "exact_chunk"
    double threshold = 0.0;
    std::size_t window = 0;
    std::vector<DuplicateCluster> clusters;
    std::set<std::string> dropped;  // survivors = docs not listed here

    std::string to_text() const;  // cluster listing for the report file
};

// SimHash near-dedup: clusters are connected components of the pair graph;
// the smallest id in each cluster survives.
DuplicateReport near_dedup(const std::vector<Document>& docs, double similarity_threshold);

// Exact dedup on overlapping character windows (stride 1, 64-bit polynomial
// rolling hash over code points; shorter documents hashed whole). Documents
// are processed in corpus order and the first occurrence survives; every
// document's windows enter the index, so chains of copies collapse into one
// transitively-closed cluster. With `verify_collisions`, a window-hash match
// must also match as a string before it counts.
DuplicateReport exact_chunk_dedup(const std::vector<Document>& docs, std::size_t window = 2048,
                                  bool verify_collisions = false);

// Rolling-hash primitives, exposed for the oracle tests.
std::uint64_t polynomial_hash(const std::vector<char32_t>& cps, std::size_t begin,
                              std::size_t len);
std::vector<std::uint64_t> rolling_window_hashes(const std::vector<char32_t>& cps,
                                                 std::size_t window);

}  // namespace mathcorpus
