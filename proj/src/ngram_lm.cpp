#include "mathcorpus/ngram_lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

namespace {

bool is_split_punct(char c) {
    switch (c) {
        case '.':
        case ',':
        case ';':
        case ':':
        case '!':
        case '?':
        case '(':
        case ')':
        case '[':
        case ']':
        case '{':
        case '}':
        case '"':
        case '\'':
        case '`':
            return true;
        default:
            return false;
    }
}

// a digit run is a whole token of digits; "x^2" keeps its 2
std::string conflate_digits(std::string_view token) {
    if (token.empty()) return std::string(token);
    for (char c : token)
        if (c < '0' || c > '9') return std::string(token);
    return "<num>";
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<char*>(buf), 4);
}

void write_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<char*>(buf), 8);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw DataError("LM file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw DataError("LM file truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

std::vector<std::string> tokenize_lm(std::string_view text) {
    std::string lower = to_lower_ascii(text);
    std::vector<std::string> tokens;
    tokens.emplace_back("<s>");
    std::size_t i = 0;
    auto flush = [&](std::size_t b, std::size_t e) {
        if (e > b) tokens.push_back(conflate_digits(std::string_view(lower).substr(b, e - b)));
    };
    std::size_t word_begin = 0;
    bool in_word = false;
    while (i < lower.size()) {
        char c = lower[i];
        bool sp = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (sp || is_split_punct(c)) {
            if (in_word) flush(word_begin, i);
            in_word = false;
            if (!sp) tokens.emplace_back(1, c);
        } else if (!in_word) {
            in_word = true;
            word_begin = i;
        }
        ++i;
    }
    if (in_word) flush(word_begin, lower.size());
    tokens.emplace_back("</s>");
    return tokens;
}

// ----------------- training -----------------

NgramModel train_lm(const std::vector<std::string>& docs, int order) {
    if (order < 2 || order > 5) throw ConfigError("LM order must be in [2,5]");
    if (docs.empty()) throw DataError("LM training corpus is empty");

    NgramModel model;
    model.order_ = order;
    model.vocab_ = {"<unk>", "<s>", "</s>"};
    model.vocab_ids_ = {{"<unk>", 0}, {"<s>", 1}, {"</s>", 2}};

    std::vector<std::vector<int>> sentences;
    std::size_t scored_tokens = 0;
    for (const std::string& doc : docs) {
        std::vector<std::string> toks = tokenize_lm(doc);
        std::vector<int> ids;
        ids.reserve(toks.size());
        for (const std::string& t : toks) {
            auto it = model.vocab_ids_.find(t);
            if (it == model.vocab_ids_.end()) {
                int id = static_cast<int>(model.vocab_.size());
                model.vocab_.push_back(t);
                it = model.vocab_ids_.emplace(t, id).first;
            }
            ids.push_back(it->second);
        }
        scored_tokens += ids.size() - 1;  // everything but <s>
        sentences.push_back(std::move(ids));
    }
    if (scored_tokens < static_cast<std::size_t>(order))
        throw DataError("LM training corpus holds fewer tokens than the model order");

    // raw counts per order
    std::vector<std::map<std::vector<int>, std::uint64_t>> raw(order);
    for (const std::vector<int>& s : sentences) {
        for (int k = 1; k <= order; ++k) {
            if (s.size() < static_cast<std::size_t>(k)) continue;
            for (std::size_t i = 0; i + k <= s.size(); ++i)
                ++raw[k - 1][std::vector<int>(s.begin() + i, s.begin() + i + k)];
        }
    }

    // adjusted counts: raw at the top order, continuation counts below,
    // except n-grams starting <s> keep raw counts (nothing precedes them)
    std::vector<std::map<std::vector<int>, std::uint64_t>> adj(order);
    adj[order - 1] = raw[order - 1];
    for (int k = order - 1; k >= 1; --k) {
        std::map<std::vector<int>, std::uint64_t> cont;
        for (const auto& [gram, count] : raw[k]) {
            (void)count;
            ++cont[std::vector<int>(gram.begin() + 1, gram.end())];
        }
        for (const auto& [gram, count] : raw[k - 1]) {
            if (k == 1 && gram[0] == NgramModel::kBosId) continue;  // <s> is never predicted
            if (gram[0] == NgramModel::kBosId) {
                adj[k - 1][gram] = count;
            } else {
                auto it = cont.find(gram);
                adj[k - 1][gram] = it == cont.end() ? count : it->second;
            }
        }
    }

    // one discount per order from count-of-counts; 0.5 when degenerate
    model.discounts_.resize(order);
    for (int k = 1; k <= order; ++k) {
        std::uint64_t n1 = 0, n2 = 0;
        for (const auto& [gram, count] : adj[k - 1]) {
            if (count == 1) ++n1;
            if (count == 2) ++n2;
        }
        model.discounts_[k - 1] =
            (n1 > 0 && n2 > 0) ? static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2) : 0.5;
    }

    // denominators and continuation-type counts per context
    std::vector<std::map<std::vector<int>, std::uint64_t>> den(order), types(order);
    for (int k = 1; k <= order; ++k) {
        for (const auto& [gram, count] : adj[k - 1]) {
            std::vector<int> ctx(gram.begin(), gram.end() - 1);
            den[k - 1][ctx] += count;
            ++types[k - 1][ctx];
        }
    }

    model.logprobs_.resize(order);
    model.logbackoffs_.resize(order - 1);

    // unigrams: interpolate with the uniform base over predictable vocab + <unk>
    {
        double d1 = model.discounts_[0];
        const auto& uni = adj[0];
        double c1 = static_cast<double>(den[0].at({}));
        double u1 = static_cast<double>(types[0].at({}));
        double p0 = 1.0 / (static_cast<double>(uni.size()) + 1.0);
        double backoff_mass = d1 * u1 / c1;
        for (const auto& [gram, count] : uni) {
            double p = std::max(static_cast<double>(count) - d1, 0.0) / c1 + backoff_mass * p0;
            model.logprobs_[0][gram] = std::log(p);
        }
        model.logprobs_[0][{NgramModel::kUnkId}] = std::log(backoff_mass * p0);
    }

    for (int k = 2; k <= order; ++k) {
        double dk = model.discounts_[k - 1];
        for (const auto& [ctx, total] : den[k - 1]) {
            double alpha = dk * static_cast<double>(types[k - 1].at(ctx)) /
                           static_cast<double>(total);
            model.logbackoffs_[ctx.size() - 1][ctx] = std::log(alpha);
        }
        for (const auto& [gram, count] : adj[k - 1]) {
            std::vector<int> ctx(gram.begin(), gram.end() - 1);
            int word = gram.back();
            double total = static_cast<double>(den[k - 1].at(ctx));
            double alpha = std::exp(model.logbackoffs_[ctx.size() - 1].at(ctx));
            std::vector<int> lower_ctx(gram.begin() + 1, gram.end() - 1);
            double p = std::max(static_cast<double>(count) - dk, 0.0) / total +
                       alpha * model.prob(lower_ctx, word);
            model.logprobs_[k - 1][gram] = std::log(p);
        }
    }
    return model;
}

// ----------------- queries -----------------

int NgramModel::token_id(std::string_view token) const {
    auto it = vocab_ids_.find(std::string(token));
    return it == vocab_ids_.end() ? kUnkId : it->second;
}

namespace {

double prob_impl(const std::vector<std::map<std::vector<int>, double>>& logprobs,
                 const std::vector<std::map<std::vector<int>, double>>& logbackoffs,
                 const int* ctx, std::size_t len, int word) {
    if (len == 0) {
        auto it = logprobs[0].find({word});
        if (it == logprobs[0].end()) it = logprobs[0].find({NgramModel::kUnkId});
        return std::exp(it->second);
    }
    std::vector<int> key(ctx, ctx + len);
    key.push_back(word);
    auto it = logprobs[len].find(key);
    if (it != logprobs[len].end()) return std::exp(it->second);

    key.pop_back();
    auto bo = logbackoffs[len - 1].find(key);
    double alpha = bo == logbackoffs[len - 1].end() ? 1.0 : std::exp(bo->second);
    return alpha * prob_impl(logprobs, logbackoffs, ctx + 1, len - 1, word);
}

}  // namespace

double NgramModel::prob(const std::vector<int>& context, int word) const {
    if (word == kBosId) return 0.0;
    std::size_t len = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
    const int* ctx = context.data() + (context.size() - len);
    return prob_impl(logprobs_, logbackoffs_, ctx, len, word);
}

double NgramModel::prob_tokens(const std::vector<std::string>& context,
                               const std::string& word) const {
    std::vector<int> ctx;
    ctx.reserve(context.size());
    for (const std::string& t : context) ctx.push_back(token_id(t));
    return prob(ctx, token_id(word));
}

double NgramModel::perplexity(std::string_view text) const {
    std::vector<std::string> toks = tokenize_lm(text);
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const std::string& t : toks) ids.push_back(token_id(t));

    double sum = 0.0;
    std::size_t n = ids.size() - 1;
    for (std::size_t i = 1; i < ids.size(); ++i) {
        std::size_t b = i > static_cast<std::size_t>(order_ - 1)
                            ? i - static_cast<std::size_t>(order_ - 1)
                            : 0;
        std::vector<int> ctx(ids.begin() + b, ids.begin() + i);
        sum += std::log(prob(ctx, ids[i]));
    }
    return std::exp(-sum / static_cast<double>(n));
}

std::vector<std::vector<int>> NgramModel::observed_contexts() const {
    std::vector<std::vector<int>> out;
    for (const auto& table : logbackoffs_)
        for (const auto& [ctx, alpha] : table) out.push_back(ctx);
    return out;
}

// ----------------- serialization -----------------

void NgramModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write LM file: " + path);
    out.write("MKNL1", 5);
    write_u32(out, static_cast<std::uint32_t>(order_));
    for (double d : discounts_) write_f64(out, d);
    write_u32(out, static_cast<std::uint32_t>(vocab_.size()));
    for (const std::string& t : vocab_) {
        write_u32(out, static_cast<std::uint32_t>(t.size()));
        out.write(t.data(), static_cast<std::streamsize>(t.size()));
    }
    auto write_table = [&](const std::map<std::vector<int>, double>& table) {
        write_u32(out, static_cast<std::uint32_t>(table.size()));
        for (const auto& [key, value] : table) {
            write_u32(out, static_cast<std::uint32_t>(key.size()));
            for (int id : key) write_u32(out, static_cast<std::uint32_t>(id));
            write_f64(out, value);
        }
    };
    for (const auto& t : logprobs_) write_table(t);
    for (const auto& t : logbackoffs_) write_table(t);
    if (!out.good()) throw DataError("LM write failed: " + path);
}

NgramModel NgramModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open LM file: " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "MKNL1", 5) != 0) throw DataError("not a MKNL1 file: " + path);
    NgramModel m;
    m.order_ = static_cast<int>(read_u32(in));
    if (m.order_ < 2 || m.order_ > 5) throw DataError("bad LM order in " + path);
    m.discounts_.resize(m.order_);
    for (double& d : m.discounts_) d = read_f64(in);
    std::uint32_t vsize = read_u32(in);
    m.vocab_.resize(vsize);
    for (std::string& t : m.vocab_) {
        std::uint32_t n = read_u32(in);
        t.resize(n);
        in.read(t.data(), n);
        if (!in) throw DataError("LM file truncated");
    }
    for (std::uint32_t i = 0; i < vsize; ++i) m.vocab_ids_[m.vocab_[i]] = static_cast<int>(i);
    auto read_table = [&](std::map<std::vector<int>, double>& table) {
        std::uint32_t entries = read_u32(in);
        for (std::uint32_t e = 0; e < entries; ++e) {
            std::uint32_t klen = read_u32(in);
            std::vector<int> key(klen);
            for (std::uint32_t j = 0; j < klen; ++j) key[j] = static_cast<int>(read_u32(in));
            table[std::move(key)] = read_f64(in);
        }
    };
    m.logprobs_.resize(m.order_);
    m.logbackoffs_.resize(m.order_ - 1);
    for (auto& t : m.logprobs_) read_table(t);
    for (auto& t : m.logbackoffs_) read_table(t);
    return m;
}

// ----------------- filtering -----------------

FilterDecision perplexity_decision(const NgramModel& model, const Document& doc, double threshold,
                                   PerplexityDirection direction) {
    if (threshold <= 0) throw ConfigError("perplexity threshold must be positive");
    double ppl = model.perplexity(doc.content);
    bool below = ppl < threshold;
    FilterDecision d;
    d.doc_id = doc.id;
    d.stage_name = "perplexity";
    d.score = ppl;
    d.keep = direction == PerplexityDirection::keep_below ? below : !below;
    if (!d.keep) d.rule = "perplexity";
    return d;
}

std::vector<FilterDecision> perplexity_filter(const NgramModel& model,
                                              const std::vector<Document>& docs, double threshold,
                                              PerplexityDirection direction) {
    std::vector<FilterDecision> out;
    out.reserve(docs.size());
    for (const Document& doc : docs)
        out.push_back(perplexity_decision(model, doc, threshold, direction));
    return out;
}

}  // namespace mathcorpus
