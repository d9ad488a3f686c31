#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "fixture_corpus.hpp"
#include "helpers.hpp"
#include "mathcorpus/pipeline.hpp"
#include "mathcorpus/util.hpp"

using namespace mathcorpus;
using testutil::TempDir;
using testutil::make_doc;

namespace fs = std::filesystem;

namespace {

std::set<std::string> dropped_ids(const std::string& stage_dir, const std::string& stage) {
    std::set<std::string> out;
    for (const std::string& line : split_lines(read_file(stage_dir + "/decisions.jsonl"))) {
        FilterDecision d = decision_from_json(line);
        if (!d.keep && d.stage_name == stage) out.insert(d.doc_id);
    }
    return out;
}

std::set<std::string> corpus_ids(const std::string& dir) {
    std::set<std::string> out;
    for (const Document& d : read_corpus(dir)) out.insert(d.id);
    return out;
}

std::string slurp_manifests(const std::string& output_dir) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::recursive_directory_iterator(output_dir))
        if (entry.is_regular_file() && entry.path().filename() == "manifest")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    std::string all;
    for (const std::string& p : paths) {
        all += fs::relative(p, output_dir).string();
        all += '\n';
        all += read_file(p);
    }
    return all;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

// ----------------- config -----------------

TEST_CASE("unknown config keys are rejected with their path") {
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"bogus": 1})"), ConfigError);
    try {
        PipelineConfig::from_json_text(R"({"prefilter": {"scorethreshold": 0.5}})");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("prefilter.scorethreshold") != std::string::npos);
    }
}

TEST_CASE("thresholds are range-checked at load") {
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"prefilter": {"score_threshold": 1.5}})"),
                    ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"dedup": {"near": {"threshold": 0}}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        PipelineConfig::from_json_text(R"({"filter": {"perplexity": {"direction": "sideways"}}})"),
        ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json_text(R"({"worker_count": 0})"), ConfigError);
    CHECK_NOTHROW(PipelineConfig::from_json_text(
        R"({"filter": {"perplexity": {"threshold": 15000.0}}})"));
}

TEST_CASE("paper thresholds are the config defaults") {
    PipelineConfig cfg;
    CHECK(cfg.prefilter.score_threshold == 0.8);
    CHECK(cfg.mathscore.threshold_with_math == 0.17);
    CHECK(cfg.mathscore.threshold_no_math == 0.8);
    CHECK(cfg.perplexity.threshold == 15000.0);
    CHECK(cfg.dedup_near.threshold == 0.7);
    CHECK(cfg.dedup_exact.window == 2048);
    CHECK(cfg.codefilter.max_bytes == 1048575);
    CHECK(cfg.codefilter.density_max == 0.5);
    CHECK(cfg.overlap.n == 30);
}

TEST_CASE("config digest ignores io paths but tracks parameters") {
    PipelineConfig a;
    PipelineConfig b;
    b.input = "/elsewhere";
    b.output = "/other";
    CHECK(a.digest() == b.digest());
    b.dedup_near.threshold = 0.8;
    CHECK(a.digest() != b.digest());
}

// ----------------- identity and preconditions -----------------

TEST_CASE("all stages disabled copies the input corpus unchanged") {
    TempDir tmp("pipe_identity_");
    std::vector<Document> docs = {make_doc("a", "one two three"),
                                  make_doc("b", "four five six")};
    write_corpus(docs, tmp.sub("in"), 10);

    PipelineConfig cfg;
    cfg.input = tmp.sub("in");
    cfg.output = tmp.sub("out");
    cfg.prefilter.enabled = false;
    cfg.extraction.enabled = false;
    cfg.dedup_near.enabled = false;
    cfg.stats.enabled = false;

    RunReport report = run_pipeline(cfg);
    CHECK(report.funnels.empty());
    std::vector<Document> out = read_corpus(report.final_corpus);
    REQUIRE(out.size() == 2);
    CHECK(out[0].content == "one two three");
    CHECK(out[1].content == "four five six");
}

TEST_CASE("stage preconditions fail before any work starts") {
    TempDir tmp("pipe_precond_");
    write_corpus({make_doc("a", "text here")}, tmp.sub("in"), 10);  // extracted stage

    PipelineConfig cfg;
    cfg.input = tmp.sub("in");
    cfg.output = tmp.sub("out");
    cfg.prefilter.enabled = true;  // prefilter wants raw
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
    CHECK_FALSE(fs::exists(tmp.sub("out/01-prefilter")));

    cfg.prefilter.enabled = false;
    cfg.extraction.enabled = false;
    cfg.perplexity.enabled = true;  // model path missing
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

// ----------------- the 20-page fixture -----------------

TEST_CASE("planted fixture corpus drops the right pages at every stage") {
    TempDir tmp("pipe_fixture_");
    testutil::PipelineFixture fx = testutil::build_pipeline_fixture(tmp.str());
    REQUIRE(fx.pages.size() == 20);
    write_corpus(fx.pages, tmp.sub("in"), 6);

    PipelineConfig cfg = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("out"));
    RunReport report = run_pipeline(cfg);

    CHECK(dropped_ids(tmp.sub("out/01-prefilter"), "prefilter") == fx.prefilter_dropped);
    CHECK(dropped_ids(tmp.sub("out/03-language"), "language") == fx.lang_dropped);
    CHECK(dropped_ids(tmp.sub("out/04-mathscore"), "math_score") == fx.mathscore_dropped);
    CHECK(dropped_ids(tmp.sub("out/05-perplexity"), "perplexity") == fx.ppl_dropped);
    CHECK(dropped_ids(tmp.sub("out/06-dedup"), "dedup") == fx.dedup_dropped);
    CHECK(corpus_ids(report.final_corpus) == fx.survivors);

    // funnel conservation at every stage: in = kept + dropped
    std::uint64_t expect_in = 20;
    for (const StageFunnel& f : report.funnels) {
        CHECK(f.docs_in == expect_in);
        CHECK(f.docs_in == f.kept + f.dropped());
        expect_in = f.kept;
    }
    CHECK(expect_in == fx.survivors.size());

    // the report text partitions the dropped count by rule
    std::string text = stage_report(report);
    CHECK(text.find("prefilter") != std::string::npos);
    CHECK(text.find("prefilter_drop=4") != std::string::npos);
}

TEST_CASE("reruns produce byte-identical manifests and corpora") {
    TempDir tmp("pipe_rerun_");
    testutil::PipelineFixture fx = testutil::build_pipeline_fixture(tmp.str());
    write_corpus(fx.pages, tmp.sub("in"), 6);

    PipelineConfig cfg1 = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("out1"));
    run_pipeline(cfg1);
    PipelineConfig cfg2 = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("out2"));
    run_pipeline(cfg2);

    CHECK(slurp_manifests(tmp.sub("out1")) == slurp_manifests(tmp.sub("out2")));
    CHECK(read_file(tmp.sub("out1/final/shard-00000.jsonl")) ==
          read_file(tmp.sub("out2/final/shard-00000.jsonl")));
    CHECK(read_file(tmp.sub("out1/report.txt")) == read_file(tmp.sub("out2/report.txt")));
}

TEST_CASE("output is independent of the worker count") {
    TempDir tmp("pipe_workers_");
    testutil::PipelineFixture fx = testutil::build_pipeline_fixture(tmp.str());
    write_corpus(fx.pages, tmp.sub("in"), 6);

    PipelineConfig one = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("w1"));
    one.worker_count = 1;
    run_pipeline(one);
    PipelineConfig many = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("w4"));
    many.worker_count = 4;
    run_pipeline(many);

    CHECK(read_file(tmp.sub("w1/final/shard-00000.jsonl")) ==
          read_file(tmp.sub("w4/final/shard-00000.jsonl")));
}

TEST_CASE("stage composition: individual runners equal the pipeline") {
    TempDir tmp("pipe_compose_");
    testutil::PipelineFixture fx = testutil::build_pipeline_fixture(tmp.str());
    write_corpus(fx.pages, tmp.sub("in"), 6);

    PipelineConfig cfg = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("whole"));
    run_pipeline(cfg);

    // the same stages, invoked one by one
    run_prefilter_stage(cfg, tmp.sub("in"), tmp.sub("s1"));
    run_extract_stage(cfg, tmp.sub("s1"), tmp.sub("s2"));
    run_lang_stage(cfg, tmp.sub("s2"), tmp.sub("s3"));
    run_mathscore_stage(cfg, tmp.sub("s3"), tmp.sub("s4"));
    run_perplexity_stage(cfg, tmp.sub("s4"), tmp.sub("s5"));
    run_dedup_stage(cfg, tmp.sub("s5"), tmp.sub("s6"));

    const char* whole_dirs[] = {"whole/01-prefilter", "whole/02-extract", "whole/03-language",
                                "whole/04-mathscore", "whole/05-perplexity", "whole/06-dedup"};
    const char* step_dirs[] = {"s1", "s2", "s3", "s4", "s5", "s6"};
    for (int i = 0; i < 6; ++i) {
        std::string a = read_file(tmp.sub(std::string(whole_dirs[i]) + "/manifest"));
        std::string b = read_file(tmp.sub(std::string(step_dirs[i]) + "/manifest"));
        CHECK(a == b);
    }
    CHECK(read_file(tmp.sub("whole/06-dedup/shard-00000.jsonl")) ==
          read_file(tmp.sub("s6/shard-00000.jsonl")));
}

// ----------------- CLI smoke -----------------

TEST_CASE("the CLI runs the pipeline end to end") {
    TempDir tmp("pipe_cli_");
    testutil::PipelineFixture fx = testutil::build_pipeline_fixture(tmp.str());
    write_corpus(fx.pages, tmp.sub("in"), 6);

    PipelineConfig cfg = testutil::fixture_config(fx, tmp.sub("in"), tmp.sub("out"));
    // write the config as JSON for the binary
    std::string config_json = std::string("{\n") +
        "  \"input\": \"" + tmp.sub("in") + "\",\n" +
        "  \"output\": \"" + tmp.sub("out") + "\",\n" +
        "  \"shard_size\": 6,\n" +
        "  \"prefilter\": {\"model\": \"" + fx.mathscore_model + "\"},\n" +
        "  \"filter\": {\n" +
        "    \"lang\": {\"enabled\": true, \"model\": \"" + fx.langid_model + "\"},\n" +
        "    \"mathscore\": {\"enabled\": true, \"model\": \"" + fx.mathscore_model + "\"},\n" +
        "    \"perplexity\": {\"enabled\": true, \"model\": \"" + fx.lm_model +
        "\", \"threshold\": " + std::to_string(fx.ppl_threshold) + "}\n" +
        "  }\n" +
        "}\n";
    write_file(tmp.sub("config.json"), config_json);

    std::string cmd = std::string(MATHCORPUS_CLI_PATH) + " --config " + tmp.sub("config.json") +
                      " pipeline run > /dev/null 2>" + tmp.sub("stderr.txt");
    int rc = std::system(cmd.c_str());
    CHECK(rc == 0);
    CHECK(corpus_ids(tmp.sub("out/final")) == fx.survivors);

    // config errors exit with status 1
    write_file(tmp.sub("bad.json"), "{\"bogus\": true}");
    std::string bad_cmd = std::string(MATHCORPUS_CLI_PATH) + " --config " + tmp.sub("bad.json") +
                          " pipeline run > /dev/null 2>&1";
    int bad_rc = std::system(bad_cmd.c_str());
    CHECK(WEXITSTATUS(bad_rc) == 1);
}

TEST_SUITE_END();
