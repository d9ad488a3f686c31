#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

enum class SeqKind { problem, solution, generation };

std::string_view seq_kind_name(SeqKind k);
std::optional<SeqKind> seq_kind_from_name(std::string_view name);

struct TestSequence {
    std::string id;
    SeqKind kind = SeqKind::problem;
    std::string text;
    std::string level;  // optional difficulty label
    std::optional<bool> correct;
};

// one JSON record per line with fields id, kind, text, level, correct
std::vector<TestSequence> load_test_sequences(const std::string& path);

struct Hit {
    std::string doc_id;
    std::string ngram;      // the matched window, verbatim from the document
    std::size_t position;   // byte offset of the window in the document
};

struct KindSummary {
    std::size_t examples = 0;  // unique test sequences with a hit
    std::size_t docs = 0;      // unique documents hit
};

struct HitReport {
    int n = 30;
    std::map<std::string, std::vector<Hit>> per_sequence;
    std::map<std::string, KindSummary> summary;  // keyed by kind name
    bool too_short_warning = false;  // n exceeded every test sequence

    std::string to_json() const;
    static HitReport from_json(std::string_view text);
    std::string summary_table() const;
};

struct OverlapOptions {
    int n = 30;
    bool lowercase = false;  // fold case before n-gramming (default off)
};

// Hit detection: a hit is any length-n whitespace token window shared
// verbatim between a test sequence and a document. Test windows are hashed
// into an index once; the corpus streams through it, candidates verified
// token by token. Tokenization is whitespace splitting, case preserved
// unless opts.lowercase.
HitReport find_hits(const std::vector<TestSequence>& tests, const std::vector<Document>& corpus,
                    const OverlapOptions& opts = {});

struct AccuracyRow {
    std::string level;
    std::optional<double> hit_accuracy;     // percent, 2 decimals; absent cell = nullopt
    std::optional<double> nonhit_accuracy;
    std::size_t hit_count = 0;  // sequences with a hit at this level
};

// Accuracy partitioned by (level, hit-status). Throws DataError listing ids
// when any test lacks a correctness flag.
std::vector<AccuracyRow> partition_accuracy(const std::vector<TestSequence>& tests,
                                            const HitReport& report);

std::string format_partition_table(const std::vector<AccuracyRow>& rows);
std::vector<AccuracyRow> parse_partition_table(std::string_view text);

// Excerpts around each hit of one sequence, trimmed to `context_chars`
// codepoints around the matched n-gram; an ellipsis marks truncated sides.
std::vector<std::string> hit_context(const HitReport& report,
                                     const std::vector<Document>& corpus,
                                     const std::string& sequence_id,
                                     std::size_t context_chars = 400);

}  // namespace mathcorpus
