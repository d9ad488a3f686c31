#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mathcorpus/corpus.hpp"

namespace mathcorpus {

// One nested key-value config file (JSON). Unknown keys are rejected at
// load; every threshold is range-checked and ships with its production
// default.
struct PipelineConfig {
    std::string input;
    std::string output;
    std::uint64_t seed = 42;
    unsigned worker_count = 1;
    std::size_t shard_size = 1000;

    struct Prefilter {
        bool enabled = true;
        std::string symbols_file;  // default data/latex_symbols.txt
        double score_threshold = 0.8;
        std::string model;  // math-score model; empty = no scorer path
    } prefilter;

    struct Extraction {
        bool enabled = true;
        std::vector<std::string> blacklist_patterns;
        std::string boilerplate_file;  // default data/boilerplate.txt
        double link_density_threshold = 0.8;
    } extraction;

    struct LangFilter {
        bool enabled = false;
        std::string model;  // MLNG1 profiles
        std::string language = "en";
        double threshold = 0.5;
    } lang;

    struct MathScoreFilter {
        bool enabled = false;
        std::string model;  // MCLS1
        double threshold_with_math = 0.17;
        double threshold_no_math = 0.8;
    } mathscore;

    struct PerplexityFilter {
        bool enabled = false;
        std::string model;  // MKNL1
        double threshold = 15000.0;
        std::string direction = "keep_below";
    } perplexity;

    struct NearDedup {
        bool enabled = true;
        double threshold = 0.7;
    } dedup_near;

    struct ExactDedup {
        bool enabled = false;
        std::size_t window = 2048;
        bool verify = false;
    } dedup_exact;

    struct CodeFilter {
        std::string rules_file;  // default rules/algebraicstack.rules
        std::uint64_t max_bytes = 1048575;
        double density_max = 0.5;
    } codefilter;

    struct Overlap {
        int n = 30;
        bool lowercase = false;
    } overlap;

    struct Stats {
        bool enabled = true;
        std::string suffix_file;  // default data/public_suffix.dat
        std::size_t top_k = 20;
    } stats;

    static PipelineConfig from_json_text(std::string_view text);
    static PipelineConfig load(const std::string& path);

    std::string canonical_params_json() const;  // io paths excluded
    std::string digest() const;                 // sha256 of the canonical params
};

struct StageFunnel {
    std::string stage;
    std::uint64_t docs_in = 0;
    std::uint64_t kept = 0;
    std::map<std::string, std::uint64_t> dropped_by_rule;

    std::uint64_t dropped() const {
        std::uint64_t n = 0;
        for (const auto& [rule, count] : dropped_by_rule) n += count;
        return n;
    }
};

struct RunReport {
    std::vector<StageFunnel> funnels;
    std::string final_corpus;  // directory of the last written corpus
    std::vector<std::string> warnings;
};

// Individual stage runners; each reads a corpus, writes the output corpus
// plus a decisions.jsonl beside it, and returns the funnel. run_pipeline is
// exactly the composition of these.
StageFunnel run_prefilter_stage(const PipelineConfig& cfg, const std::string& in,
                                const std::string& out);
StageFunnel run_extract_stage(const PipelineConfig& cfg, const std::string& in,
                              const std::string& out);
StageFunnel run_lang_stage(const PipelineConfig& cfg, const std::string& in,
                           const std::string& out);
StageFunnel run_mathscore_stage(const PipelineConfig& cfg, const std::string& in,
                                const std::string& out);
StageFunnel run_perplexity_stage(const PipelineConfig& cfg, const std::string& in,
                                 const std::string& out);
StageFunnel run_dedup_stage(const PipelineConfig& cfg, const std::string& in,
                            const std::string& out);
void run_stats_stage(const PipelineConfig& cfg, const std::string& in,
                     const std::string& out_dir);

// prefilter -> extract -> lang -> math score -> perplexity -> dedup -> stats;
// identical config and input produce byte-identical outputs.
RunReport run_pipeline(const PipelineConfig& cfg);

// Human-readable per-stage funnel table.
std::string stage_report(const RunReport& run);

}  // namespace mathcorpus
