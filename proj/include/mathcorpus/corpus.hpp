#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

enum class Stage { raw, extracted, filtered, deduped };

std::string_view stage_name(Stage s);
std::optional<Stage> stage_from_name(std::string_view name);

// The universal corpus record. `content` holds raw HTML bytes at stage raw
// and UTF-8 text at every later stage. Immutable once constructed, safe to
// share across threads.
struct Document {
    std::string id;
    std::string url;
    std::string content;
    Stage stage = Stage::raw;
    std::map<std::string, std::string> meta;
};

struct FilterDecision {
    std::string doc_id;
    std::string stage_name;
    bool keep = true;
    std::string rule;  // non-empty whenever keep == false
    std::optional<double> score;
};

struct CorpusManifest {
    std::vector<std::string> shard_paths;  // relative to corpus root
    std::uint64_t doc_count = 0;
    std::uint64_t char_count = 0;  // codepoints for text stages, bytes for raw
    Stage stage = Stage::raw;
    std::string config_digest;  // 64 hex digits

    std::string to_json() const;
    static CorpusManifest from_json(std::string_view json_text);
};

// Malformed shard record; carries the shard path and 0-based record index.
class CorpusError : public DataError {
public:
    CorpusError(const std::string& msg, std::string shard, std::size_t record_index)
        : DataError(msg), shard_path(std::move(shard)), index(record_index) {}
    std::string shard_path;
    std::size_t index;
};

std::string document_to_json(const Document& doc);
Document document_from_json(std::string_view line);

std::string decision_to_json(const FilterDecision& d);
FilterDecision decision_from_json(std::string_view line);

// Streams documents shard by shard in manifest order. Readers are
// independent; use one instance per thread.
class CorpusReader {
public:
    // `path` names a corpus root (directory with a `manifest` file) or a
    // single shard file. If `expected_config_digest` is given and disagrees
    // with the manifest, a warning is recorded but reading proceeds.
    explicit CorpusReader(const std::string& path,
                          std::optional<std::string> expected_config_digest = std::nullopt);

    std::optional<Document> next();

    const CorpusManifest& manifest() const { return manifest_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    void open_next_shard();

    std::string root_;
    CorpusManifest manifest_;
    std::vector<std::string> warnings_;
    std::vector<std::string> shard_files_;  // absolute paths
    std::size_t shard_idx_ = 0;
    std::size_t loaded_ = 0;  // shards consumed so far
    std::vector<std::string> lines_;
    std::size_t line_idx_ = 0;
    std::uint64_t yielded_ = 0;
    bool done_ = false;
    std::map<std::string, bool> seen_ids_;
};

// One writer per corpus; documents are sharded in arrival order.
class CorpusWriter {
public:
    CorpusWriter(const std::string& root, std::size_t shard_size);

    void add(const Document& doc);
    // Writes the manifest and returns it. `config_digest` must be 64 hex
    // digits; pass digest_of_config() output.
    CorpusManifest finalize(const std::string& config_digest);

private:
    void flush_shard();

    std::string root_;
    std::size_t shard_size_;
    std::vector<std::string> pending_;
    std::vector<std::string> shard_paths_;
    std::optional<Stage> stage_;
    std::uint64_t doc_count_ = 0;
    std::uint64_t char_count_ = 0;
    std::map<std::string, bool> seen_ids_;
    bool finalized_ = false;
};

// SHA-256 over the canonical serialization of a config JSON string.
std::string digest_of_config(std::string_view canonical_config_json);
const std::string& empty_config_digest();

// Convenience wrappers used by tests and small tools.
std::vector<Document> read_corpus(const std::string& path);
CorpusManifest write_corpus(const std::vector<Document>& docs, const std::string& root,
                            std::size_t shard_size,
                            const std::string& config_digest = empty_config_digest());

}  // namespace mathcorpus
