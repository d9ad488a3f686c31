// mathcorpus: corpus construction and audit toolkit.
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "mathcorpus/classifiers.hpp"
#include "mathcorpus/code_filter.hpp"
#include "mathcorpus/corpus.hpp"
#include "mathcorpus/dedup.hpp"
#include "mathcorpus/extraction.hpp"
#include "mathcorpus/ngram_lm.hpp"
#include "mathcorpus/overlap.hpp"
#include "mathcorpus/pipeline.hpp"
#include "mathcorpus/prefilter.hpp"
#include "mathcorpus/stats.hpp"
#include "mathcorpus/util.hpp"

namespace fs = std::filesystem;
using namespace mathcorpus;

namespace {

PipelineConfig load_config(const std::string& config_path) {
    std::string path = config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("MATHCORPUS_CONFIG"); env && *env) path = env;
    }
    if (path.empty()) return PipelineConfig();
    return PipelineConfig::load(path);
}

std::vector<Document> read_text_corpus(const std::string& path) {
    std::vector<Document> docs = read_corpus(path);
    for (const Document& d : docs) {
        if (d.stage == Stage::raw)
            throw DataError("expected a text-stage corpus, got raw HTML: " + path);
    }
    return docs;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"mathcorpus: math-preserving corpus construction and audit toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "pipeline config file (env MATHCORPUS_CONFIG)");

    // ---- pipeline ----
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full pipeline");
    auto* pipeline_run = pipeline_cmd->add_subcommand("run", "run all configured stages");
    std::string pl_input, pl_output;
    pipeline_run->add_option("--input", pl_input, "input corpus (overrides config)");
    pipeline_run->add_option("--output", pl_output, "output directory (overrides config)");

    // ---- single stages ----
    struct StageArgs {
        std::string input, output;
    };
    auto add_io = [](CLI::App* cmd, StageArgs& args) {
        cmd->add_option("--input", args.input, "input corpus")->required();
        cmd->add_option("--output", args.output, "output corpus directory")->required();
    };

    StageArgs prefilter_args;
    auto* prefilter_cmd = app.add_subcommand("prefilter", "keyword/symbol/score gate on raw HTML");
    add_io(prefilter_cmd, prefilter_args);

    StageArgs extract_args;
    auto* extract_cmd = app.add_subcommand("extract", "math-preserving text extraction");
    add_io(extract_cmd, extract_args);

    StageArgs lang_args;
    auto* lang_cmd = app.add_subcommand("filter-lang", "language identification filter");
    add_io(lang_cmd, lang_args);
    std::string lang_model, lang_code;
    lang_cmd->add_option("--model", lang_model, "MLNG1 profile file");
    lang_cmd->add_option("--language", lang_code, "language to keep (default en)");

    StageArgs mathscore_args;
    auto* mathscore_cmd = app.add_subcommand("filter-mathscore", "math-score filter");
    add_io(mathscore_cmd, mathscore_args);
    std::string mathscore_model;
    mathscore_cmd->add_option("--model", mathscore_model, "MCLS1 model file");

    StageArgs ppl_args;
    auto* ppl_cmd = app.add_subcommand("filter-ppl", "perplexity filter");
    add_io(ppl_cmd, ppl_args);
    std::string ppl_model, ppl_direction;
    double ppl_threshold = -1;
    ppl_cmd->add_option("--model", ppl_model, "MKNL1 model file");
    ppl_cmd->add_option("--threshold", ppl_threshold, "perplexity threshold (default 15000)");
    ppl_cmd->add_option("--direction", ppl_direction, "keep_below (default) or keep_above");

    // ---- dedup ----
    auto* dedup_cmd = app.add_subcommand("dedup", "duplicate removal");
    auto* dedup_near_cmd = dedup_cmd->add_subcommand("near", "SimHash near-dedup");
    StageArgs dedup_near_args;
    add_io(dedup_near_cmd, dedup_near_args);
    double near_threshold = 0.7;
    dedup_near_cmd->add_option("--threshold", near_threshold, "similarity threshold (default 0.7)");
    auto* dedup_exact_cmd = dedup_cmd->add_subcommand("exact", "overlapping-chunk exact dedup");
    StageArgs dedup_exact_args;
    add_io(dedup_exact_cmd, dedup_exact_args);
    std::size_t exact_window = 2048;
    bool exact_verify = false;
    dedup_exact_cmd->add_option("--window", exact_window, "chunk window (default 2048)");
    dedup_exact_cmd->add_flag("--verify", exact_verify, "confirm hash matches by substring");

    // ---- training ----
    auto* train_ms_cmd = app.add_subcommand("train-mathscore", "train the math-score classifier");
    std::string tms_input, tms_output, tms_symbols;
    int tms_epochs = 20;
    double tms_lr = 0.5;
    std::uint64_t tms_seed = 42;
    unsigned tms_dim = 20;
    train_ms_cmd->add_option("--input", tms_input, "extracted-stage corpus")->required();
    train_ms_cmd->add_option("--output", tms_output, "model file")->required();
    train_ms_cmd->add_option("--symbols", tms_symbols, "latex symbol list");
    train_ms_cmd->add_option("--epochs", tms_epochs, "epochs (default 20)");
    train_ms_cmd->add_option("--lr", tms_lr, "learning rate (default 0.5)");
    train_ms_cmd->add_option("--seed", tms_seed, "rng seed (default 42)");
    train_ms_cmd->add_option("--dim-log2", tms_dim, "hashed feature dimension log2 (default 20)");

    auto* train_lang_cmd = app.add_subcommand("train-langid", "train language profiles");
    std::vector<std::string> tl_specs;
    std::string tl_output;
    train_lang_cmd->add_option("--lang", tl_specs, "code=textfile (repeatable)")->required();
    train_lang_cmd->add_option("--output", tl_output, "model file")->required();

    auto* train_lm_cmd = app.add_subcommand("train-lm", "train the Kneser-Ney LM");
    std::string tlm_input, tlm_output;
    int tlm_order = 5;
    train_lm_cmd->add_option("--input", tlm_input, "text corpus")->required();
    train_lm_cmd->add_option("--output", tlm_output, "model file")->required();
    train_lm_cmd->add_option("--order", tlm_order, "n-gram order in [2,5] (default 5)");

    // ---- code filter ----
    auto* code_cmd = app.add_subcommand("code-filter", "per-language source filters");
    StageArgs code_args;
    add_io(code_cmd, code_args);
    std::string code_language, code_rules, code_decontaminate;
    code_cmd->add_option("--language", code_language, "rule to apply")->required();
    code_cmd->add_option("--rules", code_rules, "rules file (default shipped rules)");
    code_cmd->add_option("--decontaminate", code_decontaminate, "theorem-name list file");

    // ---- overlap ----
    auto* overlap_cmd = app.add_subcommand("overlap", "n-gram contamination audit");
    auto* overlap_find = overlap_cmd->add_subcommand("find", "find n-gram hits");
    std::string ov_tests, ov_corpus, ov_report;
    int ov_n = 30;
    bool ov_lowercase = false;
    overlap_find->add_option("--tests", ov_tests, "test sequence file")->required();
    overlap_find->add_option("--corpus", ov_corpus, "corpus to scan")->required();
    overlap_find->add_option("--report", ov_report, "report output file")->required();
    overlap_find->add_option("--n", ov_n, "n-gram size (default 30)");
    overlap_find->add_flag("--lowercase", ov_lowercase, "case-fold before matching");

    auto* overlap_partition = overlap_cmd->add_subcommand("partition", "hit/non-hit accuracy");
    std::string ovp_tests, ovp_report;
    overlap_partition->add_option("--tests", ovp_tests, "test sequence file")->required();
    overlap_partition->add_option("--report", ovp_report, "report from overlap find")->required();

    auto* overlap_context = overlap_cmd->add_subcommand("context", "excerpts around hits");
    std::string ovc_id, ovc_report, ovc_corpus;
    std::size_t ovc_chars = 400;
    overlap_context->add_option("id", ovc_id, "sequence id")->required();
    overlap_context->add_option("--report", ovc_report, "report from overlap find")->required();
    overlap_context->add_option("--corpus", ovc_corpus, "corpus with the hit documents")
        ->required();
    overlap_context->add_option("--chars", ovc_chars, "context characters (default 400)");

    // ---- stats ----
    auto* stats_cmd = app.add_subcommand("stats", "corpus statistics");
    auto* stats_domains = stats_cmd->add_subcommand("domains", "domain distribution table");
    std::string sd_input, sd_by = "documents", sd_suffixes;
    std::size_t sd_top = 20;
    stats_domains->add_option("--input", sd_input, "corpus")->required();
    stats_domains->add_option("--by", sd_by, "documents or characters");
    stats_domains->add_option("--top", sd_top, "rows to print (default 20)");
    stats_domains->add_option("--suffixes", sd_suffixes, "public suffix rules file");
    auto* stats_counts = stats_cmd->add_subcommand("counts", "character and token counts");
    std::string sc_input;
    stats_counts->add_option("--input", sc_input, "corpus")->required();

    CLI11_PARSE(app, argc, argv);

    PipelineConfig cfg = load_config(config_path);

    if (pipeline_run->parsed()) {
        if (!pl_input.empty()) cfg.input = pl_input;
        if (!pl_output.empty()) cfg.output = pl_output;
        RunReport report = run_pipeline(cfg);
        std::cerr << stage_report(report);
        std::cout << report.final_corpus << "\n";
        return 0;
    }
    if (prefilter_cmd->parsed()) {
        StageFunnel f = run_prefilter_stage(cfg, prefilter_args.input, prefilter_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (extract_cmd->parsed()) {
        StageFunnel f = run_extract_stage(cfg, extract_args.input, extract_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (lang_cmd->parsed()) {
        if (!lang_model.empty()) cfg.lang.model = lang_model;
        if (!lang_code.empty()) cfg.lang.language = lang_code;
        cfg.lang.enabled = true;
        StageFunnel f = run_lang_stage(cfg, lang_args.input, lang_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (mathscore_cmd->parsed()) {
        if (!mathscore_model.empty()) cfg.mathscore.model = mathscore_model;
        cfg.mathscore.enabled = true;
        StageFunnel f = run_mathscore_stage(cfg, mathscore_args.input, mathscore_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (ppl_cmd->parsed()) {
        if (!ppl_model.empty()) cfg.perplexity.model = ppl_model;
        if (ppl_threshold > 0) cfg.perplexity.threshold = ppl_threshold;
        if (!ppl_direction.empty()) cfg.perplexity.direction = ppl_direction;
        if (cfg.perplexity.direction != "keep_below" && cfg.perplexity.direction != "keep_above")
            throw ConfigError("--direction must be keep_below or keep_above");
        cfg.perplexity.enabled = true;
        StageFunnel f = run_perplexity_stage(cfg, ppl_args.input, ppl_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (dedup_near_cmd->parsed()) {
        cfg.dedup_near.enabled = true;
        cfg.dedup_near.threshold = near_threshold;
        cfg.dedup_exact.enabled = false;
        StageFunnel f = run_dedup_stage(cfg, dedup_near_args.input, dedup_near_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (dedup_exact_cmd->parsed()) {
        cfg.dedup_near.enabled = false;
        cfg.dedup_exact.enabled = true;
        cfg.dedup_exact.window = exact_window;
        cfg.dedup_exact.verify = exact_verify;
        StageFunnel f = run_dedup_stage(cfg, dedup_exact_args.input, dedup_exact_args.output);
        std::cerr << stage_report(RunReport{{f}, "", {}});
        return 0;
    }
    if (train_ms_cmd->parsed()) {
        LatexSymbolList symbols = tms_symbols.empty() ? LatexSymbolList::load_default()
                                                      : LatexSymbolList::load(tms_symbols);
        std::vector<std::pair<std::string, bool>> labeled;
        for (const Document& d : read_text_corpus(tms_input))
            labeled.push_back(autolabel_math(d.content, symbols));
        LinearTextModel model = train_math_score(labeled, tms_epochs, tms_lr, tms_seed, tms_dim);
        model.save(tms_output);
        std::cerr << "trained math-score model on " << labeled.size() << " documents\n";
        return 0;
    }
    if (train_lang_cmd->parsed()) {
        std::vector<LangProfile> profiles;
        for (const std::string& spec : tl_specs) {
            std::size_t eq = spec.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--lang expects code=textfile, got: " + spec);
            profiles.push_back(
                train_lang_profile(read_file(spec.substr(eq + 1)), spec.substr(0, eq)));
        }
        if (profiles.size() < 2) throw ConfigError("train-langid needs at least two --lang");
        save_lang_profiles(profiles, tl_output);
        std::cerr << "trained " << profiles.size() << " language profiles\n";
        return 0;
    }
    if (train_lm_cmd->parsed()) {
        std::vector<std::string> texts;
        for (const Document& d : read_text_corpus(tlm_input)) texts.push_back(d.content);
        NgramModel model = train_lm(texts, tlm_order);
        model.save(tlm_output);
        std::cerr << "trained order-" << tlm_order << " LM on " << texts.size() << " documents\n";
        return 0;
    }
    if (code_cmd->parsed()) {
        RuleSet rules = code_rules.empty() ? RuleSet::load_default() : RuleSet::load(code_rules);
        const LanguageRule* rule = rules.find(code_language);
        if (!rule) throw ConfigError("no rule for language: " + code_language);
        std::optional<DecontaminationList> decon;
        if (!code_decontaminate.empty())
            decon = DecontaminationList::load(code_decontaminate);

        std::vector<Document> docs = read_text_corpus(code_args.input);
        std::vector<FilterDecision> decisions;
        CorpusWriter writer(code_args.output, cfg.shard_size);
        for (Document& doc : docs) {
            FilterDecision d = apply_language_rule(doc, *rule);
            decisions.push_back(d);
            if (!d.keep) continue;
            if (decon) doc.content = decontaminate_theorems(doc.content, *decon);
            doc.stage = Stage::filtered;
            writer.add(doc);
        }
        writer.finalize(cfg.digest());
        std::string body;
        for (const FilterDecision& d : decisions) body += decision_to_json(d) + "\n";
        write_file((fs::path(code_args.output) / "decisions.jsonl").string(), body);
        std::cerr << "kept " << (decisions.size() -
                                 std::count_if(decisions.begin(), decisions.end(),
                                               [](const FilterDecision& d) { return !d.keep; }))
                  << " of " << decisions.size() << " files\n";
        return 0;
    }
    if (overlap_find->parsed()) {
        OverlapOptions opts;
        opts.n = ov_n;
        opts.lowercase = ov_lowercase;
        std::vector<TestSequence> tests = load_test_sequences(ov_tests);
        std::vector<Document> corpus = read_text_corpus(ov_corpus);
        HitReport report = find_hits(tests, corpus, opts);
        write_file(ov_report, report.to_json());
        if (report.too_short_warning)
            std::cerr << "warning: n exceeds every test sequence length\n";
        std::cerr << report.summary_table();
        return 0;
    }
    if (overlap_partition->parsed()) {
        std::vector<TestSequence> tests = load_test_sequences(ovp_tests);
        HitReport report = HitReport::from_json(read_file(ovp_report));
        std::cout << format_partition_table(partition_accuracy(tests, report));
        return 0;
    }
    if (overlap_context->parsed()) {
        HitReport report = HitReport::from_json(read_file(ovc_report));
        std::vector<Document> corpus = read_text_corpus(ovc_corpus);
        for (const std::string& excerpt : hit_context(report, corpus, ovc_id, ovc_chars)) {
            std::cout << excerpt << "\n----\n";
        }
        return 0;
    }
    if (stats_domains->parsed()) {
        std::vector<Document> docs = read_corpus(sd_input);
        std::vector<std::string> suffixes = sd_suffixes.empty()
                                                ? load_default_suffix_rules()
                                                : load_suffix_rules(sd_suffixes);
        DomainMetric metric;
        if (sd_by == "documents")
            metric = DomainMetric::documents;
        else if (sd_by == "characters")
            metric = DomainMetric::characters;
        else
            throw ConfigError("--by must be documents or characters");
        std::cout << format_domain_table(domain_table(docs, metric, sd_top, suffixes));
        return 0;
    }
    if (stats_counts->parsed()) {
        std::vector<Document> docs = read_corpus(sc_input);
        auto [chars, tokens] = char_and_token_counts(docs);
        std::cout << "documents " << docs.size() << "\ncharacters " << chars
                  << "\nwhitespace_tokens " << tokens << "\n";
        return 0;
    }
    std::cerr << app.help();
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
