#include "mathcorpus/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>

#include "mathcorpus/classifiers.hpp"
#include "mathcorpus/dedup.hpp"
#include "mathcorpus/extraction.hpp"
#include "mathcorpus/ngram_lm.hpp"
#include "mathcorpus/prefilter.hpp"
#include "mathcorpus/stats.hpp"
#include "mathcorpus/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mathcorpus {

// ----------------- config -----------------

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown config key: " + (where.empty() ? key : where + "." + key));
    }
}

void check_range(double v, double lo, double hi, const std::string& key) {
    if (v < lo || v > hi)
        throw ConfigError("config " + key + " out of range [" + std::to_string(lo) + "," +
                          std::to_string(hi) + "]");
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config JSON: ") + e.what());
    }
    PipelineConfig cfg;
    reject_unknown_keys(j, {"input", "output", "seed", "worker_count", "shard_size", "prefilter",
                            "extraction", "filter", "dedup", "codefilter", "overlap", "stats"},
                        "");
    cfg.input = j.value("input", std::string());
    cfg.output = j.value("output", std::string());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.worker_count = j.value("worker_count", cfg.worker_count);
    cfg.shard_size = j.value("shard_size", cfg.shard_size);
    if (cfg.worker_count < 1) throw ConfigError("config worker_count must be >= 1");
    if (cfg.shard_size < 1) throw ConfigError("config shard_size must be >= 1");

    if (j.contains("prefilter")) {
        const json& p = j["prefilter"];
        reject_unknown_keys(p, {"enabled", "symbols_file", "score_threshold", "model"},
                            "prefilter");
        cfg.prefilter.enabled = p.value("enabled", cfg.prefilter.enabled);
        cfg.prefilter.symbols_file = p.value("symbols_file", cfg.prefilter.symbols_file);
        cfg.prefilter.score_threshold = p.value("score_threshold", cfg.prefilter.score_threshold);
        cfg.prefilter.model = p.value("model", cfg.prefilter.model);
        check_range(cfg.prefilter.score_threshold, 0.0, 1.0, "prefilter.score_threshold");
    }
    if (j.contains("extraction")) {
        const json& e = j["extraction"];
        reject_unknown_keys(
            e, {"enabled", "blacklist_patterns", "boilerplate_file", "link_density_threshold"},
            "extraction");
        cfg.extraction.enabled = e.value("enabled", cfg.extraction.enabled);
        if (e.contains("blacklist_patterns"))
            cfg.extraction.blacklist_patterns =
                e["blacklist_patterns"].get<std::vector<std::string>>();
        cfg.extraction.boilerplate_file =
            e.value("boilerplate_file", cfg.extraction.boilerplate_file);
        cfg.extraction.link_density_threshold =
            e.value("link_density_threshold", cfg.extraction.link_density_threshold);
        check_range(cfg.extraction.link_density_threshold, 0.0, 1.0,
                    "extraction.link_density_threshold");
    }
    if (j.contains("filter")) {
        const json& f = j["filter"];
        reject_unknown_keys(f, {"lang", "mathscore", "perplexity"}, "filter");
        if (f.contains("lang")) {
            const json& l = f["lang"];
            reject_unknown_keys(l, {"enabled", "model", "language", "threshold"}, "filter.lang");
            cfg.lang.enabled = l.value("enabled", cfg.lang.enabled);
            cfg.lang.model = l.value("model", cfg.lang.model);
            cfg.lang.language = l.value("language", cfg.lang.language);
            cfg.lang.threshold = l.value("threshold", cfg.lang.threshold);
            check_range(cfg.lang.threshold, 0.0, 1.0, "filter.lang.threshold");
        }
        if (f.contains("mathscore")) {
            const json& m = f["mathscore"];
            reject_unknown_keys(m, {"enabled", "model", "threshold_with_math",
                                    "threshold_no_math"},
                                "filter.mathscore");
            cfg.mathscore.enabled = m.value("enabled", cfg.mathscore.enabled);
            cfg.mathscore.model = m.value("model", cfg.mathscore.model);
            cfg.mathscore.threshold_with_math =
                m.value("threshold_with_math", cfg.mathscore.threshold_with_math);
            cfg.mathscore.threshold_no_math =
                m.value("threshold_no_math", cfg.mathscore.threshold_no_math);
            check_range(cfg.mathscore.threshold_with_math, 0.0, 1.0,
                        "filter.mathscore.threshold_with_math");
            check_range(cfg.mathscore.threshold_no_math, 0.0, 1.0,
                        "filter.mathscore.threshold_no_math");
        }
        if (f.contains("perplexity")) {
            const json& p = f["perplexity"];
            reject_unknown_keys(p, {"enabled", "model", "threshold", "direction"},
                                "filter.perplexity");
            cfg.perplexity.enabled = p.value("enabled", cfg.perplexity.enabled);
            cfg.perplexity.model = p.value("model", cfg.perplexity.model);
            cfg.perplexity.threshold = p.value("threshold", cfg.perplexity.threshold);
            cfg.perplexity.direction = p.value("direction", cfg.perplexity.direction);
            if (cfg.perplexity.threshold <= 0)
                throw ConfigError("config filter.perplexity.threshold must be positive");
            if (cfg.perplexity.direction != "keep_below" &&
                cfg.perplexity.direction != "keep_above")
                throw ConfigError("config filter.perplexity.direction must be keep_below or "
                                  "keep_above");
        }
    }
    if (j.contains("dedup")) {
        const json& d = j["dedup"];
        reject_unknown_keys(d, {"near", "exact"}, "dedup");
        if (d.contains("near")) {
            const json& nd = d["near"];
            reject_unknown_keys(nd, {"enabled", "threshold"}, "dedup.near");
            cfg.dedup_near.enabled = nd.value("enabled", cfg.dedup_near.enabled);
            cfg.dedup_near.threshold = nd.value("threshold", cfg.dedup_near.threshold);
            if (cfg.dedup_near.threshold <= 0.0 || cfg.dedup_near.threshold > 1.0)
                throw ConfigError("config dedup.near.threshold must be in (0,1]");
        }
        if (d.contains("exact")) {
            const json& ed = d["exact"];
            reject_unknown_keys(ed, {"enabled", "window", "verify"}, "dedup.exact");
            cfg.dedup_exact.enabled = ed.value("enabled", cfg.dedup_exact.enabled);
            cfg.dedup_exact.window = ed.value("window", cfg.dedup_exact.window);
            cfg.dedup_exact.verify = ed.value("verify", cfg.dedup_exact.verify);
            if (cfg.dedup_exact.window < 1)
                throw ConfigError("config dedup.exact.window must be >= 1");
        }
    }
    if (j.contains("codefilter")) {
        const json& c = j["codefilter"];
        reject_unknown_keys(c, {"rules_file", "max_bytes", "density_max"}, "codefilter");
        cfg.codefilter.rules_file = c.value("rules_file", cfg.codefilter.rules_file);
        cfg.codefilter.max_bytes = c.value("max_bytes", cfg.codefilter.max_bytes);
        cfg.codefilter.density_max = c.value("density_max", cfg.codefilter.density_max);
        if (cfg.codefilter.max_bytes < 1)
            throw ConfigError("config codefilter.max_bytes must be >= 1");
        if (cfg.codefilter.density_max <= 0)
            throw ConfigError("config codefilter.density_max must be positive");
    }
    if (j.contains("overlap")) {
        const json& o = j["overlap"];
        reject_unknown_keys(o, {"n", "lowercase"}, "overlap");
        cfg.overlap.n = o.value("n", cfg.overlap.n);
        cfg.overlap.lowercase = o.value("lowercase", cfg.overlap.lowercase);
        if (cfg.overlap.n < 2) throw ConfigError("config overlap.n must be >= 2");
    }
    if (j.contains("stats")) {
        const json& s = j["stats"];
        reject_unknown_keys(s, {"enabled", "suffix_file", "top_k"}, "stats");
        cfg.stats.enabled = s.value("enabled", cfg.stats.enabled);
        cfg.stats.suffix_file = s.value("suffix_file", cfg.stats.suffix_file);
        cfg.stats.top_k = s.value("top_k", cfg.stats.top_k);
        if (cfg.stats.top_k < 1) throw ConfigError("config stats.top_k must be >= 1");
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    return from_json_text(read_file(path));
}

std::string PipelineConfig::canonical_params_json() const {
    json j;
    j["seed"] = seed;
    j["worker_count"] = worker_count;
    j["shard_size"] = shard_size;
    j["prefilter"] = {{"enabled", prefilter.enabled},
                      {"symbols_file", prefilter.symbols_file},
                      {"score_threshold", prefilter.score_threshold},
                      {"model", prefilter.model}};
    j["extraction"] = {{"enabled", extraction.enabled},
                       {"blacklist_patterns", extraction.blacklist_patterns},
                       {"boilerplate_file", extraction.boilerplate_file},
                       {"link_density_threshold", extraction.link_density_threshold}};
    j["filter"] = {{"lang",
                    {{"enabled", lang.enabled},
                     {"model", lang.model},
                     {"language", lang.language},
                     {"threshold", lang.threshold}}},
                   {"mathscore",
                    {{"enabled", mathscore.enabled},
                     {"model", mathscore.model},
                     {"threshold_with_math", mathscore.threshold_with_math},
                     {"threshold_no_math", mathscore.threshold_no_math}}},
                   {"perplexity",
                    {{"enabled", perplexity.enabled},
                     {"model", perplexity.model},
                     {"threshold", perplexity.threshold},
                     {"direction", perplexity.direction}}}};
    j["dedup"] = {{"near", {{"enabled", dedup_near.enabled}, {"threshold", dedup_near.threshold}}},
                  {"exact",
                   {{"enabled", dedup_exact.enabled},
                    {"window", dedup_exact.window},
                    {"verify", dedup_exact.verify}}}};
    j["codefilter"] = {{"rules_file", codefilter.rules_file},
                       {"max_bytes", codefilter.max_bytes},
                       {"density_max", codefilter.density_max}};
    j["overlap"] = {{"n", overlap.n}, {"lowercase", overlap.lowercase}};
    j["stats"] = {{"enabled", stats.enabled},
                  {"suffix_file", stats.suffix_file},
                  {"top_k", stats.top_k}};
    return j.dump();
}

std::string PipelineConfig::digest() const { return digest_of_config(canonical_params_json()); }

// ----------------- stage helpers -----------------

namespace {

void write_decisions(const std::string& dir, const std::vector<FilterDecision>& decisions) {
    std::string body;
    for (const FilterDecision& d : decisions) {
        body += decision_to_json(d);
        body += '\n';
    }
    write_file((fs::path(dir) / "decisions.jsonl").string(), body);
}

StageFunnel funnel_from(const std::string& stage,
                        const std::vector<FilterDecision>& decisions) {
    StageFunnel f;
    f.stage = stage;
    f.docs_in = decisions.size();
    for (const FilterDecision& d : decisions) {
        if (d.keep)
            ++f.kept;
        else
            ++f.dropped_by_rule[d.rule];
    }
    return f;
}

std::string default_or(const std::string& configured, const std::string& fallback) {
    return configured.empty() ? fallback : configured;
}

// map-stage scaffold: decide per document in parallel, write survivors in
// input order
template <typename DecideFn, typename TransformFn>
StageFunnel run_map_stage(const std::string& stage_name, const PipelineConfig& cfg,
                          const std::string& in, const std::string& out, DecideFn decide,
                          TransformFn transform) {
    std::vector<Document> docs = read_corpus(in);
    std::vector<FilterDecision> decisions(docs.size());
    std::vector<Document> outputs(docs.size());

    parallel_for_ordered(docs.size(), cfg.worker_count, [&](std::size_t i) {
        decisions[i] = decide(docs[i]);
        if (decisions[i].keep) outputs[i] = transform(std::move(docs[i]));
    });

    CorpusWriter writer(out, cfg.shard_size);
    for (std::size_t i = 0; i < outputs.size(); ++i)
        if (decisions[i].keep) writer.add(outputs[i]);
    writer.finalize(cfg.digest());
    write_decisions(out, decisions);
    return funnel_from(stage_name, decisions);
}

}  // namespace

// ----------------- stages -----------------

StageFunnel run_prefilter_stage(const PipelineConfig& cfg, const std::string& in,
                                const std::string& out) {
    LatexSymbolList symbols = LatexSymbolList::load(
        default_or(cfg.prefilter.symbols_file, default_data_dir() + "/latex_symbols.txt"));
    std::optional<LinearTextModel> model;
    if (!cfg.prefilter.model.empty()) model = LinearTextModel::load(cfg.prefilter.model);
    MathScoreFn scorer;
    if (model) scorer = [&model](std::string_view text) { return model->score(text); };

    return run_map_stage(
        "prefilter", cfg, in, out,
        [&](const Document& doc) {
            return prefilter(doc.content, symbols, scorer, cfg.prefilter.score_threshold, doc.id);
        },
        [](Document doc) { return doc; });
}

StageFunnel run_extract_stage(const PipelineConfig& cfg, const std::string& in,
                              const std::string& out) {
    ExtractionOptions opts;
    opts.blacklist_patterns = cfg.extraction.blacklist_patterns;
    opts.link_density_threshold = cfg.extraction.link_density_threshold;
    std::string boilerplate_path =
        default_or(cfg.extraction.boilerplate_file, default_data_dir() + "/boilerplate.txt");
    opts.boilerplate = read_line_list(boilerplate_path);

    return run_map_stage(
        "extract", cfg, in, out,
        [](const Document& doc) {
            FilterDecision d;
            d.doc_id = doc.id;
            d.stage_name = "extract";
            d.keep = true;
            d.rule = "extracted";
            return d;
        },
        [&](Document doc) {
            ExtractionResult result = extract_document(doc.content, opts);
            Document out_doc;
            out_doc.id = doc.id;
            out_doc.url = doc.url;
            out_doc.stage = Stage::extracted;
            out_doc.content = std::move(result.text);
            out_doc.meta = std::move(doc.meta);
            out_doc.meta["math_spans"] = std::to_string(result.spans.size());
            for (const auto& [reason, count] : result.dropped_nodes)
                out_doc.meta["dropped_" + reason] = std::to_string(count);
            return out_doc;
        });
}

StageFunnel run_lang_stage(const PipelineConfig& cfg, const std::string& in,
                           const std::string& out) {
    if (cfg.lang.model.empty())
        throw ConfigError("filter.lang.model is required when the language filter is enabled");
    std::vector<LangProfile> profiles = load_lang_profiles(cfg.lang.model);

    return run_map_stage(
        "language", cfg, in, out,
        [&](const Document& doc) {
            // identify on prose; embedded latex is language-less noise
            LangResult r = identify_language(profiles, strip_math_spans(doc.content));
            FilterDecision d;
            d.doc_id = doc.id;
            d.stage_name = "language";
            d.score = r.probability;
            d.keep = r.language == cfg.lang.language && r.probability > cfg.lang.threshold;
            if (!d.keep) d.rule = "language";
            return d;
        },
        [&](Document doc) {
            doc.stage = Stage::filtered;
            doc.meta["lang"] = cfg.lang.language;
            return doc;
        });
}

StageFunnel run_mathscore_stage(const PipelineConfig& cfg, const std::string& in,
                                const std::string& out) {
    if (cfg.mathscore.model.empty())
        throw ConfigError("filter.mathscore.model is required when the math-score filter is "
                          "enabled");
    LinearTextModel model = LinearTextModel::load(cfg.mathscore.model);

    return run_map_stage(
        "math_score", cfg, in, out,
        [&](const Document& doc) {
            double score = model.score(doc.content);
            auto it = doc.meta.find("math_spans");
            bool has_math = it != doc.meta.end() && it->second != "0";
            double threshold =
                has_math ? cfg.mathscore.threshold_with_math : cfg.mathscore.threshold_no_math;
            FilterDecision d;
            d.doc_id = doc.id;
            d.stage_name = "math_score";
            d.score = score;
            d.keep = score > threshold;
            if (!d.keep) d.rule = "math_score";
            return d;
        },
        [](Document doc) {
            doc.stage = Stage::filtered;
            return doc;
        });
}

StageFunnel run_perplexity_stage(const PipelineConfig& cfg, const std::string& in,
                                 const std::string& out) {
    if (cfg.perplexity.model.empty())
        throw ConfigError("filter.perplexity.model is required when the perplexity filter is "
                          "enabled");
    NgramModel model = NgramModel::load(cfg.perplexity.model);
    PerplexityDirection direction = cfg.perplexity.direction == "keep_above"
                                        ? PerplexityDirection::keep_above
                                        : PerplexityDirection::keep_below;

    return run_map_stage(
        "perplexity", cfg, in, out,
        [&](const Document& doc) {
            return perplexity_decision(model, doc, cfg.perplexity.threshold, direction);
        },
        [](Document doc) {
            doc.stage = Stage::filtered;
            return doc;
        });
}

StageFunnel run_dedup_stage(const PipelineConfig& cfg, const std::string& in,
                            const std::string& out) {
    std::vector<Document> docs = read_corpus(in);

    std::vector<FilterDecision> decisions;
    decisions.reserve(docs.size());
    std::string report_text;

    std::set<std::string> dropped_near, dropped_exact;
    if (cfg.dedup_near.enabled) {
        DuplicateReport report = near_dedup(docs, cfg.dedup_near.threshold);
        dropped_near = report.dropped;
        report_text += report.to_text();
    }
    if (cfg.dedup_exact.enabled) {
        std::vector<Document> survivors;
        for (const Document& d : docs)
            if (!dropped_near.count(d.id)) survivors.push_back(d);
        DuplicateReport report =
            exact_chunk_dedup(survivors, cfg.dedup_exact.window, cfg.dedup_exact.verify);
        dropped_exact = report.dropped;
        report_text += report.to_text();
    }

    CorpusWriter writer(out, cfg.shard_size);
    for (Document& doc : docs) {
        FilterDecision d;
        d.doc_id = doc.id;
        d.stage_name = "dedup";
        if (dropped_near.count(doc.id)) {
            d.keep = false;
            d.rule = "near_duplicate";
        } else if (dropped_exact.count(doc.id)) {
            d.keep = false;
            d.rule = "exact_duplicate";
        } else {
            d.keep = true;
            doc.stage = Stage::deduped;
            writer.add(doc);
        }
        decisions.push_back(std::move(d));
    }
    writer.finalize(cfg.digest());
    write_decisions(out, decisions);
    write_file((fs::path(out) / "duplicates.txt").string(), report_text);
    return funnel_from("dedup", decisions);
}

void run_stats_stage(const PipelineConfig& cfg, const std::string& in,
                     const std::string& out_dir) {
    std::vector<Document> docs = read_corpus(in);
    std::vector<std::string> suffixes = load_suffix_rules(
        default_or(cfg.stats.suffix_file, default_data_dir() + "/public_suffix.dat"));
    fs::create_directories(out_dir);

    DomainTable by_docs = domain_table(docs, DomainMetric::documents, cfg.stats.top_k, suffixes);
    DomainTable by_chars = domain_table(docs, DomainMetric::characters, cfg.stats.top_k, suffixes);
    auto [chars, tokens] = char_and_token_counts(docs);

    write_file((fs::path(out_dir) / "domains_by_documents.txt").string(),
               format_domain_table(by_docs));
    write_file((fs::path(out_dir) / "domains_by_characters.txt").string(),
               format_domain_table(by_chars));
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "documents %zu\ncharacters %llu\nwhitespace_tokens %llu\n", docs.size(),
                  static_cast<unsigned long long>(chars),
                  static_cast<unsigned long long>(tokens));
    write_file((fs::path(out_dir) / "counts.txt").string(), buf);
}

// ----------------- pipeline -----------------

namespace {

void copy_corpus(const PipelineConfig& cfg, const std::string& in, const std::string& out) {
    CorpusReader reader(in);
    CorpusWriter writer(out, cfg.shard_size);
    while (auto doc = reader.next()) writer.add(*doc);
    writer.finalize(cfg.digest());
}

Stage stage_of(const std::string& corpus_path) {
    CorpusReader reader(corpus_path);
    return reader.manifest().stage;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
    if (cfg.input.empty() || cfg.output.empty())
        throw ConfigError("pipeline requires input and output paths");
    if (!fs::exists(cfg.input)) throw ConfigError("input corpus does not exist: " + cfg.input);

    // every enabled stage's preconditions are checked before any work starts
    Stage current = stage_of(cfg.input);
    auto require_text = [&](const std::string& name) {
        if (current == Stage::raw)
            throw ConfigError(name + " requires extracted text but the corpus is raw HTML");
    };
    if (cfg.prefilter.enabled && current != Stage::raw)
        throw ConfigError("prefilter requires a raw-stage corpus");
    if (cfg.extraction.enabled) {
        if (current != Stage::raw) throw ConfigError("extract requires a raw-stage corpus");
        current = Stage::extracted;
    }
    if (cfg.lang.enabled) {
        require_text("filter.lang");
        if (cfg.lang.model.empty()) throw ConfigError("filter.lang.model not configured");
        if (!fs::exists(cfg.lang.model))
            throw ConfigError("filter.lang.model missing: " + cfg.lang.model);
        current = Stage::filtered;
    }
    if (cfg.mathscore.enabled) {
        require_text("filter.mathscore");
        if (cfg.mathscore.model.empty())
            throw ConfigError("filter.mathscore.model not configured");
        if (!fs::exists(cfg.mathscore.model))
            throw ConfigError("filter.mathscore.model missing: " + cfg.mathscore.model);
        current = Stage::filtered;
    }
    if (cfg.perplexity.enabled) {
        require_text("filter.perplexity");
        if (cfg.perplexity.model.empty())
            throw ConfigError("filter.perplexity.model not configured");
        if (!fs::exists(cfg.perplexity.model))
            throw ConfigError("filter.perplexity.model missing: " + cfg.perplexity.model);
        current = Stage::filtered;
    }
    if (cfg.dedup_near.enabled || cfg.dedup_exact.enabled) require_text("dedup");

    RunReport report;
    fs::create_directories(cfg.output);
    std::string last = cfg.input;
    int step = 0;
    auto stage_dir = [&](const std::string& name) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%02d-%s", ++step, name.c_str());
        return (fs::path(cfg.output) / buf).string();
    };

    if (cfg.prefilter.enabled) {
        std::string dir = stage_dir("prefilter");
        report.funnels.push_back(run_prefilter_stage(cfg, last, dir));
        last = dir;
    }
    if (cfg.extraction.enabled) {
        std::string dir = stage_dir("extract");
        report.funnels.push_back(run_extract_stage(cfg, last, dir));
        last = dir;
    }
    if (cfg.lang.enabled) {
        std::string dir = stage_dir("language");
        report.funnels.push_back(run_lang_stage(cfg, last, dir));
        last = dir;
    }
    if (cfg.mathscore.enabled) {
        std::string dir = stage_dir("mathscore");
        report.funnels.push_back(run_mathscore_stage(cfg, last, dir));
        last = dir;
    }
    if (cfg.perplexity.enabled) {
        std::string dir = stage_dir("perplexity");
        report.funnels.push_back(run_perplexity_stage(cfg, last, dir));
        last = dir;
    }
    if (cfg.dedup_near.enabled || cfg.dedup_exact.enabled) {
        std::string dir = stage_dir("dedup");
        report.funnels.push_back(run_dedup_stage(cfg, last, dir));
        last = dir;
    }
    if (cfg.stats.enabled) run_stats_stage(cfg, last, stage_dir("stats"));

    std::string final_dir = (fs::path(cfg.output) / "final").string();
    copy_corpus(cfg, last, final_dir);
    report.final_corpus = final_dir;

    write_file((fs::path(cfg.output) / "report.txt").string(), stage_report(report));
    return report;
}

std::string stage_report(const RunReport& run) {
    std::string out = "stage        in      kept    dropped  by rule\n";
    for (const StageFunnel& f : run.funnels) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-12s %-7llu %-7llu %-8llu ", f.stage.c_str(),
                      static_cast<unsigned long long>(f.docs_in),
                      static_cast<unsigned long long>(f.kept),
                      static_cast<unsigned long long>(f.dropped()));
        out += buf;
        bool first = true;
        for (const auto& [rule, count] : f.dropped_by_rule) {
            if (!first) out += ' ';
            out += rule + "=" + std::to_string(count);
            first = false;
        }
        out += '\n';
    }
    return out;
}

}  // namespace mathcorpus
