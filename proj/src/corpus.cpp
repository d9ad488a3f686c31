#include "mathcorpus/corpus.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mathcorpus {

namespace {

constexpr const char* kManifestName = "manifest";

std::string shard_name(std::size_t idx) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "shard-%05zu.jsonl", idx);
    return buf;
}

std::uint64_t content_chars(const Document& doc) {
    return doc.stage == Stage::raw ? doc.content.size() : utf8_codepoint_count(doc.content);
}

}  // namespace

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::raw: return "raw";
        case Stage::extracted: return "extracted";
        case Stage::filtered: return "filtered";
        case Stage::deduped: return "deduped";
    }
    return "raw";
}

std::optional<Stage> stage_from_name(std::string_view name) {
    if (name == "raw") return Stage::raw;
    if (name == "extracted") return Stage::extracted;
    if (name == "filtered") return Stage::filtered;
    if (name == "deduped") return Stage::deduped;
    return std::nullopt;
}

std::string document_to_json(const Document& doc) {
    if (doc.id.empty()) throw DataError("document id must be non-empty");
    json j;
    j["id"] = doc.id;
    j["url"] = doc.url;
    j["stage"] = std::string(stage_name(doc.stage));
    if (doc.stage == Stage::raw) {
        j["content_b64"] = base64_encode(doc.content);
    } else {
        if (!utf8_valid(doc.content))
            throw DataError("document " + doc.id + ": content is not valid UTF-8 at stage " +
                            std::string(stage_name(doc.stage)));
        j["content"] = doc.content;
    }
    json m = json::object();
    for (const auto& [k, v] : doc.meta) m[k] = v;
    j["meta"] = m;
    return j.dump();
}

Document document_from_json(std::string_view line) {
    json j = json::parse(line);  // throws json::exception on malformed input
    Document doc;
    doc.id = j.at("id").get<std::string>();
    if (doc.id.empty()) throw DataError("record with empty id");
    doc.url = j.value("url", std::string());
    auto st = stage_from_name(j.at("stage").get<std::string>());
    if (!st) throw DataError("record " + doc.id + ": unknown stage");
    doc.stage = *st;
    if (doc.stage == Stage::raw) {
        auto decoded = base64_decode(j.at("content_b64").get<std::string>());
        if (!decoded) throw DataError("record " + doc.id + ": bad base64 content");
        doc.content = std::move(*decoded);
    } else {
        doc.content = j.at("content").get<std::string>();
    }
    if (j.contains("meta")) {
        for (auto& [k, v] : j.at("meta").items()) doc.meta[k] = v.get<std::string>();
    }
    return doc;
}

std::string decision_to_json(const FilterDecision& d) {
    json j;
    j["doc_id"] = d.doc_id;
    j["stage"] = d.stage_name;
    j["keep"] = d.keep;
    j["rule"] = d.rule;
    if (d.score) j["score"] = *d.score;
    return j.dump();
}

FilterDecision decision_from_json(std::string_view line) {
    json j = json::parse(line);
    FilterDecision d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.stage_name = j.at("stage").get<std::string>();
    d.keep = j.at("keep").get<bool>();
    d.rule = j.value("rule", std::string());
    if (j.contains("score")) d.score = j.at("score").get<double>();
    return d;
}

std::string CorpusManifest::to_json() const {
    json j;
    j["stage"] = std::string(stage_name(stage));
    j["doc_count"] = doc_count;
    j["char_count"] = char_count;
    j["shard_paths"] = shard_paths;
    j["config_digest"] = config_digest;
    return j.dump(2) + "\n";
}

CorpusManifest CorpusManifest::from_json(std::string_view text) {
    json j = json::parse(text);
    CorpusManifest m;
    auto st = stage_from_name(j.at("stage").get<std::string>());
    if (!st) throw DataError("manifest: unknown stage");
    m.stage = *st;
    m.doc_count = j.at("doc_count").get<std::uint64_t>();
    m.char_count = j.at("char_count").get<std::uint64_t>();
    m.shard_paths = j.at("shard_paths").get<std::vector<std::string>>();
    m.config_digest = j.at("config_digest").get<std::string>();
    if (m.config_digest.size() != 64) throw DataError("manifest: config_digest must be 64 hex digits");
    return m;
}

// ----------------- reader -----------------

CorpusReader::CorpusReader(const std::string& path, std::optional<std::string> expected_digest) {
    fs::path p(path);
    if (fs::is_directory(p)) {
        root_ = path;
        fs::path mpath = p / kManifestName;
        if (!fs::exists(mpath)) throw DataError("no manifest in corpus directory: " + path);
        manifest_ = CorpusManifest::from_json(read_file(mpath.string()));
        for (const auto& rel : manifest_.shard_paths) shard_files_.push_back((p / rel).string());
    } else if (fs::exists(p)) {
        // single shard, synthesize a manifest-less stream
        shard_files_.push_back(path);
        manifest_.config_digest = empty_config_digest();
        manifest_.doc_count = 0;  // unknown; count check skipped
    } else {
        throw DataError("corpus path does not exist: " + path);
    }
    if (expected_digest && !root_.empty() && manifest_.config_digest != *expected_digest) {
        warnings_.push_back("config digest mismatch: manifest " + manifest_.config_digest +
                            " vs expected " + *expected_digest);
    }
}

void CorpusReader::open_next_shard() {
    shard_idx_ = loaded_++;
    lines_ = split_lines(read_file(shard_files_[shard_idx_]));
    line_idx_ = 0;
}

std::optional<Document> CorpusReader::next() {
    if (done_) return std::nullopt;
    while (line_idx_ >= lines_.size()) {
        if (loaded_ >= shard_files_.size()) {
            done_ = true;
            if (!root_.empty() && yielded_ != manifest_.doc_count)
                throw DataError("corpus " + root_ + ": manifest doc_count " +
                                std::to_string(manifest_.doc_count) + " but shards hold " +
                                std::to_string(yielded_));
            return std::nullopt;
        }
        open_next_shard();
    }
    const std::string& line = lines_[line_idx_];
    const std::string& shard = shard_files_[shard_idx_];
    try {
        Document doc = document_from_json(line);
        if (seen_ids_.count(doc.id)) throw DataError("duplicate document id: " + doc.id);
        seen_ids_[doc.id] = true;
        ++line_idx_;
        ++yielded_;
        return doc;
    } catch (const std::exception& e) {
        throw CorpusError("malformed record in " + shard + " at record index " +
                              std::to_string(line_idx_) + ": " + e.what(),
                          shard, line_idx_);
    }
}

// ----------------- writer -----------------

CorpusWriter::CorpusWriter(const std::string& root, std::size_t shard_size)
    : root_(root), shard_size_(shard_size) {
    if (shard_size_ < 1) throw ConfigError("shard_size must be >= 1");
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (!fs::is_directory(root_)) throw DataError("cannot create corpus directory: " + root_);
}

void CorpusWriter::add(const Document& doc) {
    if (finalized_) throw DataError("corpus writer already finalized");
    if (stage_ && *stage_ != doc.stage)
        throw DataError("mixed stages in one corpus: " + std::string(stage_name(*stage_)) +
                        " vs " + std::string(stage_name(doc.stage)));
    stage_ = doc.stage;
    if (seen_ids_.count(doc.id)) throw DataError("duplicate document id: " + doc.id);
    seen_ids_[doc.id] = true;
    pending_.push_back(document_to_json(doc));
    ++doc_count_;
    char_count_ += content_chars(doc);
    if (pending_.size() >= shard_size_) flush_shard();
}

void CorpusWriter::flush_shard() {
    if (pending_.empty()) return;
    std::string rel = shard_name(shard_paths_.size());
    std::string body;
    for (const std::string& line : pending_) {
        body += line;
        body += '\n';
    }
    write_file((fs::path(root_) / rel).string(), body);
    shard_paths_.push_back(rel);
    pending_.clear();
}

CorpusManifest CorpusWriter::finalize(const std::string& config_digest) {
    if (finalized_) throw DataError("corpus writer already finalized");
    if (config_digest.size() != 64) throw ConfigError("config_digest must be 64 hex digits");
    flush_shard();
    finalized_ = true;
    CorpusManifest m;
    m.shard_paths = shard_paths_;
    m.doc_count = doc_count_;
    m.char_count = char_count_;
    m.stage = stage_.value_or(Stage::raw);
    m.config_digest = config_digest;
    write_file((fs::path(root_) / kManifestName).string(), m.to_json());
    return m;
}

// ----------------- convenience -----------------

std::vector<Document> read_corpus(const std::string& path) {
    CorpusReader reader(path);
    std::vector<Document> docs;
    while (auto doc = reader.next()) docs.push_back(std::move(*doc));
    return docs;
}

CorpusManifest write_corpus(const std::vector<Document>& docs, const std::string& root,
                            std::size_t shard_size, const std::string& config_digest) {
    CorpusWriter writer(root, shard_size);
    for (const Document& d : docs) writer.add(d);
    return writer.finalize(config_digest);
}

std::string digest_of_config(std::string_view canonical_config_json) {
    return sha256_hex(canonical_config_json);
}

const std::string& empty_config_digest() {
    static const std::string digest = sha256_hex("{}");
    return digest;
}

}  // namespace mathcorpus
