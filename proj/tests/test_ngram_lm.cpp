#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "mathcorpus/ngram_lm.hpp"
#include "mathcorpus/util.hpp"

using namespace mathcorpus;
using testutil::TempDir;

namespace {

// Independent interpolated-KN oracle. Works on string tokens and recomputes
// every probability from raw counts at query time; it shares nothing with
// the model's id/table machinery except the tokenizer contract.
struct KnOracle {
    int order;
    std::vector<std::map<std::vector<std::string>, std::uint64_t>> raw, adj;
    std::vector<double> discount;
    std::set<std::string> vocab;  // observed tokens except <s>

    KnOracle(const std::vector<std::string>& docs, int n) : order(n) {
        raw.resize(n);
        adj.resize(n);
        for (const std::string& doc : docs) {
            std::vector<std::string> toks = tokenize_lm(doc);
            for (const std::string& t : toks)
                if (t != "<s>") vocab.insert(t);
            for (int k = 1; k <= n; ++k)
                for (std::size_t i = 0; i + k <= toks.size(); ++i)
                    ++raw[k - 1][std::vector<std::string>(toks.begin() + i, toks.begin() + i + k)];
        }
        adj[n - 1] = raw[n - 1];
        for (int k = n - 1; k >= 1; --k) {
            std::map<std::vector<std::string>, std::uint64_t> cont;
            for (const auto& [gram, c] : raw[k]) {
                (void)c;
                ++cont[std::vector<std::string>(gram.begin() + 1, gram.end())];
            }
            for (const auto& [gram, c] : raw[k - 1]) {
                if (k == 1 && gram[0] == "<s>") continue;
                if (gram[0] == "<s>")
                    adj[k - 1][gram] = c;
                else
                    adj[k - 1][gram] = cont.count(gram) ? cont.at(gram) : c;
            }
        }
        discount.resize(n);
        for (int k = 1; k <= n; ++k) {
            std::uint64_t n1 = 0, n2 = 0;
            for (const auto& [g, c] : adj[k - 1]) {
                if (c == 1) ++n1;
                if (c == 2) ++n2;
            }
            discount[k - 1] = (n1 > 0 && n2 > 0)
                                  ? static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2)
                                  : 0.5;
        }
    }

    std::string map_token(const std::string& t) const {
        return vocab.count(t) || t == "<s>" ? t : "<unk>";
    }

    double prob(std::vector<std::string> ctx, const std::string& word_in) const {
        std::string word = map_token(word_in);
        if (word == "<s>") return 0.0;
        if (ctx.size() > static_cast<std::size_t>(order - 1))
            ctx.erase(ctx.begin(),
                      ctx.end() - static_cast<std::ptrdiff_t>(order - 1));
        for (std::string& t : ctx) t = map_token(t);
        return level_prob(ctx, word);
    }

    double level_prob(const std::vector<std::string>& ctx, const std::string& word) const {
        int k = static_cast<int>(ctx.size()) + 1;
        if (k == 1) {
            double d1 = discount[0];
            double c1 = 0, u1 = 0;
            for (const auto& [g, c] : adj[0]) {
                c1 += static_cast<double>(c);
                u1 += 1;
            }
            double p0 = 1.0 / (static_cast<double>(adj[0].size()) + 1.0);
            double base = d1 * u1 / c1 * p0;
            std::vector<std::string> key = {word};
            if (!adj[0].count(key)) return base;  // <unk> path
            return std::max(static_cast<double>(adj[0].at(key)) - d1, 0.0) / c1 + base;
        }
        double den = 0, types = 0;
        for (const auto& [g, c] : adj[k - 1]) {
            if (std::equal(ctx.begin(), ctx.end(), g.begin())) {
                den += static_cast<double>(c);
                types += 1;
            }
        }
        std::vector<std::string> lower(ctx.begin() + 1, ctx.end());
        if (den == 0) return level_prob(lower, word);
        double dk = discount[k - 1];
        std::vector<std::string> key = ctx;
        key.push_back(word);
        double count = adj[k - 1].count(key) ? static_cast<double>(adj[k - 1].at(key)) : 0.0;
        return std::max(count - dk, 0.0) / den + dk * types / den * level_prob(lower, word);
    }

    double perplexity(const std::string& text) const {
        std::vector<std::string> toks = tokenize_lm(text);
        double sum = 0;
        for (std::size_t i = 1; i < toks.size(); ++i) {
            std::size_t b = i > static_cast<std::size_t>(order - 1)
                                ? i - static_cast<std::size_t>(order - 1)
                                : 0;
            sum += std::log(
                prob(std::vector<std::string>(toks.begin() + b, toks.begin() + i), toks[i]));
        }
        return std::exp(-sum / static_cast<double>(toks.size() - 1));
    }
};

std::vector<std::string> random_corpus(std::uint64_t seed, std::size_t docs,
                                       std::size_t words_per_doc) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < docs; ++i)
        out.push_back(testutil::random_words(rng, 3 + rng() % words_per_doc, 12));
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("ngram_lm");

// ----------------- tokenizer -----------------

TEST_CASE("tokenizer: lowercase, punct split, digit conflation, wrapping") {
    CHECK(tokenize_lm("The cost is 15!") ==
          std::vector<std::string>{"<s>", "the", "cost", "is", "<num>", "!", "</s>"});
    CHECK(tokenize_lm("") == std::vector<std::string>{"<s>", "</s>"});
    CHECK(tokenize_lm("x^2 + y") == std::vector<std::string>{"<s>", "x^2", "+", "y", "</s>"});
    CHECK(tokenize_lm("a,b") == std::vector<std::string>{"<s>", "a", ",", "b", "</s>"});
    CHECK(tokenize_lm("3.14") == std::vector<std::string>{"<s>", "<num>", ".", "<num>", "</s>"});
}

// ----------------- training basics -----------------

TEST_CASE("training rejects empty and undersized corpora") {
    CHECK_THROWS_AS(train_lm({}, 2), DataError);
    CHECK_THROWS_AS(train_lm({"a b"}, 5), DataError);  // 3 scored tokens < order 5
    CHECK_NOTHROW(train_lm({"a b c d"}, 5));
    CHECK_THROWS_AS(train_lm({"x"}, 6), ConfigError);
    CHECK_THROWS_AS(train_lm({"x"}, 1), ConfigError);
}

TEST_CASE("discounts stay inside (0,1)") {
    for (int order = 2; order <= 5; ++order) {
        NgramModel model = train_lm(random_corpus(order, 30, 12), order);
        for (double d : model.discounts()) {
            CHECK(d > 0.0);
            CHECK(d < 1.0);
        }
    }
    // degenerate count-of-counts (all counts 1) falls back to 0.5
    NgramModel tiny = train_lm({"a b"}, 2);
    CHECK(tiny.discounts()[0] == 0.5);
    CHECK(tiny.discounts()[1] == 0.5);
}

// ----------------- hand-derived closed form -----------------

TEST_CASE("closed-form perplexity on the two-token corpus") {
    // corpus "a b", bigram model. All adjusted counts are 1, so D = 0.5 at
    // both orders. Predictable vocabulary {a, b, </s>}, uniform base 1/4.
    //   p1(w)       = 0.5/3 + 0.5 * (3/3) * 1/4          = 7/24
    //   p(w | ctx)  = 0.5/1 + 0.5 * (1/1) * 7/24          = 31/48
    // for each scored token (a|<s>), (b|a), (</s>|b), hence
    //   ppl = (31/48)^-1 = 48/31.
    NgramModel model = train_lm({"a b"}, 2);
    CHECK(model.perplexity("a b") == doctest::Approx(48.0 / 31.0).epsilon(1e-9));

    double p_b = model.prob({model.token_id("a")}, model.token_id("b"));
    CHECK(p_b == doctest::Approx(31.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("unseen token takes the <unk> mass path") {
    NgramModel model = train_lm({"a b"}, 2);
    // alpha(<s>) = 0.5, p1(<unk>) = 0.5 * (3/3) * 1/4 = 1/8
    double p = model.prob({NgramModel::kBosId}, model.token_id("zzz"));
    CHECK(p == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    // unseen context backs off with weight 1
    double p2 = model.prob({model.token_id("zzz")}, NgramModel::kEosId);
    CHECK(p2 == doctest::Approx(7.0 / 24.0).epsilon(1e-12));
}

TEST_CASE("equal unigram corpus: continuation ratio is 1/V") {
    // one sentence, all unigrams equally frequent, no repeated bigrams
    NgramModel model = train_lm({"a b c d e"}, 2);
    KnOracle oracle({"a b c d e"}, 2);
    // six predictable types (a..e, </s>), each with continuation count 1
    CHECK(oracle.adj[0].size() == 6);
    for (const auto& [gram, count] : oracle.adj[0]) CHECK(count == 1);
    // query under an unseen context reduces to the unigram distribution
    double p = model.prob({model.token_id("zzz")}, model.token_id("c"));
    double p1 = model.prob({}, model.token_id("c"));
    CHECK(p == doctest::Approx(p1).epsilon(1e-12));
}

TEST_CASE("memorization limit: repeated sentence scores near perplexity 1") {
    std::vector<std::string> docs(100, "the integral of x squared");
    NgramModel model = train_lm(docs, 3);
    CHECK(model.perplexity("the integral of x squared") < 1.2);
}

// ----------------- oracle equivalence -----------------

TEST_CASE("model probabilities equal the count-based oracle") {
    for (int order : {2, 3, 5}) {
        std::vector<std::string> docs = random_corpus(100 + order, 25, 10);
        NgramModel model = train_lm(docs, order);
        KnOracle oracle(docs, order);

        std::mt19937_64 rng(55);
        std::vector<std::string> queries = random_corpus(200 + order, 10, 8);
        for (const std::string& q : queries) {
            double got = model.perplexity(q);
            double want = oracle.perplexity(q);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }

        // spot probabilities, observed and unseen contexts alike
        for (int i = 0; i < 50; ++i) {
            std::vector<std::string> ctx;
            for (std::size_t c = rng() % order; c-- > 0;)
                ctx.push_back(testutil::random_words(rng, 1, 12));
            std::string word = testutil::random_words(rng, 1, 12);
            std::vector<int> ctx_ids;
            for (const std::string& t : ctx) ctx_ids.push_back(model.token_id(t));
            double got = model.prob(ctx_ids, model.token_id(word));
            double want = oracle.prob(ctx, word);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
    }
}

// ----------------- distribution properties -----------------

TEST_CASE("conditional distributions sum to one over vocab plus <unk>") {
    std::vector<std::string> docs = random_corpus(42, 30, 12);
    NgramModel model = train_lm(docs, 5);
    std::vector<std::vector<int>> contexts = model.observed_contexts();
    REQUIRE(!contexts.empty());

    std::mt19937_64 rng(4242);
    std::shuffle(contexts.begin(), contexts.end(), rng);
    std::size_t probes = std::min<std::size_t>(contexts.size(), 1000);
    int vocab_size = static_cast<int>(model.vocab().size());
    for (std::size_t i = 0; i < probes; ++i) {
        double sum = 0;
        for (int w = 0; w < vocab_size; ++w) sum += model.prob(contexts[i], w);
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    // the empty context (unigram distribution) as well
    double sum = 0;
    for (int w = 0; w < vocab_size; ++w) sum += model.prob({}, w);
    CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("training text never beats its token-shuffled version on average") {
    std::vector<std::string> docs = random_corpus(77, 20, 15);
    NgramModel model = train_lm(docs, 3);

    double trained = 0;
    for (const std::string& d : docs) trained += model.perplexity(d);
    trained /= static_cast<double>(docs.size());

    std::mt19937_64 rng(7777);
    double shuffled_total = 0;
    for (int round = 0; round < 20; ++round) {
        double round_total = 0;
        for (const std::string& d : docs) {
            std::vector<Token> toks = split_whitespace(d);
            std::vector<std::string> words;
            for (const Token& t : toks) words.emplace_back(t.text);
            std::shuffle(words.begin(), words.end(), rng);
            std::string shuffled;
            for (const std::string& w : words) {
                if (!shuffled.empty()) shuffled += ' ';
                shuffled += w;
            }
            round_total += model.perplexity(shuffled);
        }
        shuffled_total += round_total / static_cast<double>(docs.size());
    }
    CHECK(trained <= shuffled_total / 20.0);
}

TEST_CASE("appending a training sentence obeys the log-perplexity bound") {
    std::vector<std::string> docs = random_corpus(99, 15, 10);
    NgramModel model = train_lm(docs, 3);
    const std::string& high_prob = docs[0];

    for (int i = 1; i <= 5; ++i) {
        const std::string& doc = docs[i];
        std::string combined = doc + " " + high_prob;

        double n = static_cast<double>(tokenize_lm(doc).size() - 1);
        double total = static_cast<double>(tokenize_lm(combined).size() - 1);
        double m = total - n;

        // smallest probability assigned anywhere in the combined scoring
        std::vector<std::string> toks = tokenize_lm(combined);
        double p_min = 1.0;
        for (std::size_t t = 1; t < toks.size(); ++t) {
            std::size_t b = t > 2 ? t - 2 : 0;
            std::vector<int> ctx;
            for (std::size_t c = b; c < t; ++c) ctx.push_back(model.token_id(toks[c]));
            p_min = std::min(p_min, model.prob(ctx, model.token_id(toks[t])));
        }

        double delta = std::log(model.perplexity(combined)) - std::log(model.perplexity(doc));
        CHECK(delta <= m * std::log(1.0 / p_min) / (n + m) + 1e-9);
    }
}

// ----------------- serialization and filtering -----------------

TEST_CASE("training twice yields bit-identical model files") {
    TempDir tmp("mknl_");
    std::vector<std::string> docs = random_corpus(13, 20, 10);
    train_lm(docs, 4).save(tmp.sub("a.mknl"));
    train_lm(docs, 4).save(tmp.sub("b.mknl"));
    CHECK(read_file(tmp.sub("a.mknl")) == read_file(tmp.sub("b.mknl")));
}

TEST_CASE("model round-trips through the MKNL1 container") {
    TempDir tmp("mknl_rt_");
    std::vector<std::string> docs = random_corpus(21, 20, 10);
    NgramModel model = train_lm(docs, 3);
    model.save(tmp.sub("m.mknl"));
    NgramModel back = NgramModel::load(tmp.sub("m.mknl"));
    for (const std::string& q : random_corpus(22, 10, 8))
        CHECK(model.perplexity(q) == back.perplexity(q));
}

TEST_CASE("perplexity filter thresholds and directions") {
    NgramModel model = train_lm({"a b"}, 2);
    auto decide = [&](double fake_threshold, PerplexityDirection dir, const std::string& text) {
        Document d = testutil::make_doc("q", text);
        return perplexity_decision(model, d, fake_threshold, dir);
    };
    // ppl("a b") = 48/31 < 2
    CHECK(decide(2.0, PerplexityDirection::keep_below, "a b").keep);
    CHECK_FALSE(decide(1.0, PerplexityDirection::keep_below, "a b").keep);
    CHECK_FALSE(decide(2.0, PerplexityDirection::keep_above, "a b").keep);
    CHECK(decide(1.0, PerplexityDirection::keep_above, "a b").keep);

    // verdict flips exactly at the threshold value
    double ppl = model.perplexity("a b");
    CHECK_FALSE(decide(ppl, PerplexityDirection::keep_below, "a b").keep);
    CHECK(decide(std::nextafter(ppl, 2.0), PerplexityDirection::keep_below, "a b").keep);
    FilterDecision d = decide(2.0, PerplexityDirection::keep_below, "a b");
    CHECK(d.score == doctest::Approx(ppl));
}

TEST_SUITE_END();
