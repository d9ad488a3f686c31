#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <random>
#include <string>

#include "mathcorpus/corpus.hpp"

namespace testutil {

// Unique scratch directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& prefix) {
        auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (prefix + std::to_string(stamp) + "_" + std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string sub(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline mathcorpus::Document make_doc(std::string id, std::string content,
                                     mathcorpus::Stage stage = mathcorpus::Stage::extracted,
                                     std::string url = "") {
    mathcorpus::Document d;
    d.id = std::move(id);
    d.content = std::move(content);
    d.stage = stage;
    d.url = std::move(url);
    return d;
}

// Deterministic word-salad generator used by dedup/overlap fixtures.
inline std::string random_words(std::mt19937_64& rng, std::size_t count,
                                std::size_t vocab = 50) {
    static const char* kWords[] = {
        "integral", "matrix", "prime", "lemma",  "group",  "field",  "vector", "limit",
        "series",   "graph",  "node",  "edge",   "proof",  "theory", "space",  "metric",
        "norm",     "basis",  "kernel", "image", "domain", "range",  "axiom",  "logic",
        "measure",  "tensor", "cycle", "path",   "tree",   "forest", "method", "result",
        "number",   "digit",  "factor", "power", "root",   "zero",   "unit",   "ring",
        "ideal",    "module", "chain",  "bound", "upper",  "lower",  "closed", "open",
        "dense",    "compact"};
    std::uniform_int_distribution<std::size_t> pick(0, std::min<std::size_t>(vocab, 50) - 1);
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += kWords[pick(rng)];
    }
    return out;
}

}  // namespace testutil
