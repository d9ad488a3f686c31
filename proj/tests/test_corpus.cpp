#include <doctest.h>

#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "mathcorpus/corpus.hpp"
#include "mathcorpus/util.hpp"

using namespace mathcorpus;
using testutil::TempDir;
using testutil::make_doc;

namespace {

// random documents with awkward content: control chars, unpaired math
// delimiters, non-ascii
std::vector<Document> random_docs(std::mt19937_64& rng, std::size_t count) {
    static const char* kPieces[] = {"plain text",  "$x+1$",   "unpaired $ dollar",
                                    "line\nbreak", "tab\t",   "caf\xC3\xA9",
                                    "$$display",   "\\alpha", "quote\"and'",
                                    "{brace}",     "\x01ctl", "price $5"};
    std::uniform_int_distribution<int> n_pieces(0, 8);
    std::uniform_int_distribution<std::size_t> pick(0, 11);
    std::vector<Document> docs;
    for (std::size_t i = 0; i < count; ++i) {
        std::string content;
        int n = n_pieces(rng);
        for (int p = 0; p < n; ++p) {
            content += kPieces[pick(rng)];
            content += ' ';
        }
        Document d = make_doc("doc-" + std::to_string(i), content);
        d.url = "https://example.com/" + std::to_string(i);
        d.meta["k" + std::to_string(i % 3)] = "v" + std::to_string(i);
        docs.push_back(std::move(d));
    }
    return docs;
}

}  // namespace

TEST_SUITE_BEGIN("corpus");

TEST_CASE("empty corpus round trips with empty shard list") {
    TempDir tmp("corpus_empty_");
    CorpusManifest m = write_corpus({}, tmp.str(), 4);
    CHECK(m.doc_count == 0);
    CHECK(m.shard_paths.empty());
    CHECK(read_corpus(tmp.str()).empty());
}

TEST_CASE("sharding: 10 docs at shard_size 4 gives shards of 4,4,2") {
    TempDir tmp("corpus_shard_");
    std::vector<Document> docs;
    for (int i = 0; i < 10; ++i) docs.push_back(make_doc("d" + std::to_string(i), "text"));
    CorpusManifest m = write_corpus(docs, tmp.str(), 4);
    REQUIRE(m.shard_paths.size() == 3);
    auto count_lines = [&](const std::string& rel) {
        return split_lines(read_file(tmp.sub(rel))).size();
    };
    CHECK(count_lines(m.shard_paths[0]) == 4);
    CHECK(count_lines(m.shard_paths[1]) == 4);
    CHECK(count_lines(m.shard_paths[2]) == 2);
}

TEST_CASE("two shards of three docs read back in shard order") {
    TempDir tmp("corpus_order_");
    std::vector<Document> docs;
    for (int i = 0; i < 6; ++i) docs.push_back(make_doc("d" + std::to_string(i), "c"));
    write_corpus(docs, tmp.str(), 3);
    std::vector<Document> back = read_corpus(tmp.str());
    REQUIRE(back.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(back[i].id == "d" + std::to_string(i));
}

TEST_CASE("round trip preserves every field byte for byte") {
    TempDir tmp("corpus_rt_");
    std::mt19937_64 rng(7);
    for (int round = 0; round < 5; ++round) {
        std::vector<Document> docs = random_docs(rng, 17);
        std::string dir = tmp.sub("r" + std::to_string(round));
        CorpusManifest m = write_corpus(docs, dir, 1 + round);
        std::vector<Document> back = read_corpus(dir);
        REQUIRE(back.size() == docs.size());
        CHECK(m.doc_count == docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            CHECK(back[i].id == docs[i].id);
            CHECK(back[i].url == docs[i].url);
            CHECK(back[i].content == docs[i].content);
            CHECK(back[i].stage == docs[i].stage);
            CHECK(back[i].meta == docs[i].meta);
        }
    }
}

TEST_CASE("raw stage stores arbitrary bytes") {
    TempDir tmp("corpus_raw_");
    std::string bytes;
    for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<char>(i));
    Document d = make_doc("raw1", bytes, Stage::raw);
    write_corpus({d}, tmp.str(), 8);
    std::vector<Document> back = read_corpus(tmp.str());
    REQUIRE(back.size() == 1);
    CHECK(back[0].content == bytes);
    CHECK(back[0].stage == Stage::raw);
}

TEST_CASE("invalid utf-8 in a text stage is rejected at write") {
    TempDir tmp("corpus_bad_");
    Document d = make_doc("bad", "not utf8 \xFF\xFE", Stage::extracted);
    CorpusWriter writer(tmp.str(), 4);
    CHECK_THROWS_AS(writer.add(d), DataError);
}

TEST_CASE("manifest counts match shard contents for any shard size") {
    std::mt19937_64 rng(11);
    std::vector<Document> docs = random_docs(rng, 23);
    for (std::size_t shard_size : {1u, 2u, 5u, 23u, 100u}) {
        TempDir tmp("corpus_count_");
        CorpusManifest m = write_corpus(docs, tmp.str(), shard_size);
        CHECK(m.doc_count == 23);
        std::uint64_t lines = 0;
        for (const std::string& rel : m.shard_paths)
            lines += split_lines(read_file(tmp.sub(rel))).size();
        CHECK(lines == m.doc_count);
        std::uint64_t chars = 0;
        for (const Document& d : docs) chars += utf8_codepoint_count(d.content);
        CHECK(m.char_count == chars);
    }
}

TEST_CASE("truncated final record reports the shard and record index") {
    TempDir tmp("corpus_trunc_");
    std::vector<Document> docs;
    for (int i = 0; i < 3; ++i) docs.push_back(make_doc("d" + std::to_string(i), "ok"));
    CorpusManifest m = write_corpus(docs, tmp.str(), 10);
    // append a truncated record to the only shard and fix up the count
    std::string shard_path = tmp.sub(m.shard_paths[0]);
    std::string data = read_file(shard_path);
    data += R"({"id":"d3","stage":"extracted","content":"cut off)";
    data += "\n";
    write_file(shard_path, data);
    m.doc_count = 4;
    write_file(tmp.sub("manifest"), m.to_json());

    CorpusReader reader(tmp.str());
    for (int i = 0; i < 3; ++i) REQUIRE(reader.next().has_value());
    try {
        reader.next();
        FAIL("expected CorpusError");
    } catch (const CorpusError& e) {
        CHECK(e.index == 3);
        CHECK(e.shard_path == shard_path);
        CHECK(std::string(e.what()).find("record index 3") != std::string::npos);
    }
}

TEST_CASE("duplicate ids are rejected") {
    TempDir tmp("corpus_dup_");
    CorpusWriter writer(tmp.str(), 4);
    writer.add(make_doc("same", "a"));
    CHECK_THROWS_AS(writer.add(make_doc("same", "b")), DataError);
}

TEST_CASE("digest mismatch is a warning, not an error") {
    TempDir tmp("corpus_digest_");
    write_corpus({make_doc("d0", "x")}, tmp.str(), 4);
    CorpusReader reader(tmp.str(), std::string(64, 'f'));
    CHECK_FALSE(reader.warnings().empty());
    CHECK(reader.next().has_value());
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("manifest doc_count disagreement is an error") {
    TempDir tmp("corpus_mismatch_");
    CorpusManifest m = write_corpus({make_doc("a", "1"), make_doc("b", "2")}, tmp.str(), 10);
    m.doc_count = 3;
    write_file(tmp.sub("manifest"), m.to_json());
    CorpusReader reader(tmp.str());
    REQUIRE(reader.next().has_value());
    REQUIRE(reader.next().has_value());
    CHECK_THROWS_AS(reader.next(), DataError);
}

TEST_SUITE_END();
