#include "mathcorpus/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "mathcorpus/util.hpp"

namespace mathcorpus {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           static_cast<unsigned char>(c) >= 0x80;
}

std::vector<std::string> feature_tokens(std::string_view text) {
    std::string lower = to_lower_ascii(strip_math_spans(text));
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < lower.size()) {
        while (i < lower.size() && !is_word_char(lower[i])) ++i;
        std::size_t b = i;
        while (i < lower.size() && is_word_char(lower[i])) ++i;
        if (i > b) tokens.emplace_back(lower.substr(b, i - b));
    }
    return tokens;
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<char*>(buf), 4);
}

void write_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<char*>(buf), 8);
}

void write_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

void write_str(std::ofstream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw DataError("model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw DataError("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::ifstream& in) {
    std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string read_str(std::ifstream& in) {
    std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw DataError("model file truncated");
    return s;
}

}  // namespace

std::string strip_math_spans(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '$' && (i == 0 || text[i - 1] != '\\')) {
            bool display = i + 1 < text.size() && text[i + 1] == '$';
            std::string_view close = display ? "$$" : "$";
            std::size_t body = i + close.size();
            std::size_t end = std::string_view::npos;
            for (std::size_t j = body; j + close.size() <= text.size(); ++j) {
                if (text.compare(j, close.size(), close) == 0 && text[j - 1] != '\\') {
                    end = j;
                    break;
                }
            }
            if (end != std::string_view::npos) {
                i = end + close.size();
                continue;
            }
        }
        out.push_back(text[i]);
        ++i;
    }
    return out;
}

std::vector<std::pair<std::uint32_t, double>> hashed_features(std::string_view text,
                                                              std::uint32_t dim_log2) {
    std::vector<std::string> tokens = feature_tokens(text);
    std::map<std::uint64_t, double> acc;
    std::uint32_t mask = (1u << dim_log2) - 1;
    auto add = [&](const std::string& feat) {
        std::uint64_t h = fnv1a64(feat);
        double sign = (h >> 63) ? -1.0 : 1.0;
        acc[h & mask] += sign;
    };
    for (const std::string& t : tokens) add(t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) add(tokens[i] + " " + tokens[i + 1]);

    double norm = 0.0;
    for (const auto& [idx, v] : acc) norm += v * v;
    norm = norm > 0 ? std::sqrt(norm) : 1.0;

    std::vector<std::pair<std::uint32_t, double>> out;
    out.reserve(acc.size());
    for (const auto& [idx, v] : acc) {
        if (v != 0.0) out.emplace_back(static_cast<std::uint32_t>(idx), v / norm);
    }
    return out;
}

double LinearTextModel::score(std::string_view text) const {
    double z = bias;
    for (const auto& [idx, v] : hashed_features(text, dim_log2)) z += weights[idx] * v;
    return logistic(z);
}

void LinearTextModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file: " + path);
    out.write("MCLS1", 5);
    write_u32(out, dim_log2);
    write_str(out, positive_label);
    write_f64(out, bias);
    write_u64(out, weights.size());
    for (double w : weights) write_f64(out, w);
    if (!out.good()) throw DataError("model write failed: " + path);
}

LinearTextModel LinearTextModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "MCLS1", 5) != 0)
        throw DataError("not a MCLS1 model file: " + path);
    LinearTextModel m;
    m.dim_log2 = read_u32(in);
    m.positive_label = read_str(in);
    m.bias = read_f64(in);
    std::uint64_t n = read_u64(in);
    if (n != (1ull << m.dim_log2)) throw DataError("model dimension mismatch: " + path);
    m.weights.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) m.weights[i] = read_f64(in);
    return m;
}

std::pair<std::string, bool> autolabel_math(std::string_view text,
                                            const LatexSymbolList& symbols) {
    bool positive = false;
    for (const std::string& sym : symbols.symbols) {
        if (text.find(sym) != std::string_view::npos) {
            positive = true;
            break;
        }
    }
    std::string stripped = strip_math_spans(text);
    // listed commands may also occur outside math spans; longer commands go
    // first so \int is gone before \in is searched
    std::vector<std::string> by_length = symbols.symbols;
    std::stable_sort(by_length.begin(), by_length.end(),
                     [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    for (const std::string& sym : by_length) {
        std::size_t at;
        while ((at = stripped.find(sym)) != std::string::npos) stripped.erase(at, sym.size());
    }
    // squeeze the leftover whitespace
    std::string out;
    out.reserve(stripped.size());
    for (char c : stripped) {
        bool sp = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (sp) {
            if (!out.empty() && out.back() != ' ') out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return {out, positive};
}

LinearTextModel train_math_score(const std::vector<std::pair<std::string, bool>>& labeled,
                                 int epochs, double lr, std::uint64_t seed,
                                 std::uint32_t dim_log2) {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (lr <= 0) throw ConfigError("learning rate must be positive");
    bool has_pos = false, has_neg = false;
    for (const auto& [text, label] : labeled) (label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw DataError("degenerate labels");

    LinearTextModel model;
    model.dim_log2 = dim_log2;
    model.weights.assign(1ull << dim_log2, 0.0);

    std::vector<std::vector<std::pair<std::uint32_t, double>>> feats;
    feats.reserve(labeled.size());
    for (const auto& [text, label] : labeled) feats.push_back(hashed_features(text, dim_log2));

    std::vector<std::size_t> order(labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            double z = model.bias;
            for (const auto& [idx, v] : feats[i]) z += model.weights[idx] * v;
            double g = logistic(z) - (labeled[i].second ? 1.0 : 0.0);
            for (const auto& [idx, v] : feats[i]) model.weights[idx] -= lr * g * v;
            model.bias -= lr * g;
        }
    }
    return model;
}

// ----------------- language identification -----------------

namespace {

std::vector<std::string> char_ngrams(std::string_view text, int order) {
    std::vector<char32_t> cps = utf8_decode(text);
    std::vector<std::string> grams;
    if (static_cast<int>(cps.size()) < order) return grams;
    for (std::size_t i = 0; i + order <= cps.size(); ++i) {
        std::string g;
        for (int j = 0; j < order; ++j) utf8_append(g, cps[i + j]);
        grams.push_back(std::move(g));
    }
    return grams;
}

}  // namespace

double LangProfile::gram_logprob(int order, const std::string& gram) const {
    const auto& table = counts[order];
    auto it = table.find(gram);
    double denom = static_cast<double>(totals[order] + table.size() + 1);
    if (it == table.end()) return std::log(1.0 / denom);
    return std::log((static_cast<double>(it->second) + 1.0) / denom);
}

double LangProfile::oov_logprob(int order) const {
    const auto& table = counts[order];
    return std::log(1.0 / static_cast<double>(totals[order] + table.size() + 1));
}

LangProfile train_lang_profile(std::string_view text, const std::string& language, double prior) {
    if (language.empty()) throw ConfigError("language code must be non-empty");
    LangProfile p;
    p.language = language;
    p.prior = prior;
    for (int order = 0; order < 3; ++order) {
        for (std::string& g : char_ngrams(text, order + 1)) {
            ++p.counts[order][g];
            ++p.totals[order];
        }
    }
    return p;
}

std::vector<double> language_posteriors(const std::vector<LangProfile>& profiles,
                                        std::string_view text) {
    if (profiles.size() < 2) throw ConfigError("need at least two language profiles");
    std::vector<double> loglik(profiles.size(), 0.0);
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const LangProfile& p = profiles[i];
        double ll = std::log(p.prior > 0 ? p.prior : 1e-12);
        for (int order = 0; order < 3; ++order) {
            for (const std::string& g : char_ngrams(text, order + 1))
                ll += p.gram_logprob(order, g);
        }
        loglik[i] = ll;
    }
    double mx = *std::max_element(loglik.begin(), loglik.end());
    double z = 0.0;
    for (double& ll : loglik) {
        ll = std::exp(ll - mx);
        z += ll;
    }
    for (double& ll : loglik) ll /= z;
    return loglik;
}

LangResult identify_language(const std::vector<LangProfile>& profiles, std::string_view text) {
    std::vector<double> post = language_posteriors(profiles, text);
    std::size_t best = 0;
    for (std::size_t i = 1; i < post.size(); ++i) {
        if (post[i] > post[best] ||
            (post[i] == post[best] && profiles[i].language < profiles[best].language))
            best = i;
    }
    LangResult r;
    r.language = profiles[best].language;
    r.probability = post[best];
    r.low_confidence = utf8_codepoint_count(text) < 20;
    return r;
}

void save_lang_profiles(const std::vector<LangProfile>& profiles, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file: " + path);
    out.write("MLNG1", 5);
    write_u32(out, static_cast<std::uint32_t>(profiles.size()));
    for (const LangProfile& p : profiles) {
        write_str(out, p.language);
        write_f64(out, p.prior);
        for (int order = 0; order < 3; ++order) {
            write_u64(out, p.totals[order]);
            write_u64(out, p.counts[order].size());
            for (const auto& [gram, count] : p.counts[order]) {
                write_str(out, gram);
                write_u64(out, count);
            }
        }
    }
    if (!out.good()) throw DataError("model write failed: " + path);
}

std::vector<LangProfile> load_lang_profiles(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "MLNG1", 5) != 0)
        throw DataError("not a MLNG1 model file: " + path);
    std::uint32_t n = read_u32(in);
    std::vector<LangProfile> profiles(n);
    for (LangProfile& p : profiles) {
        p.language = read_str(in);
        p.prior = read_f64(in);
        for (int order = 0; order < 3; ++order) {
            p.totals[order] = read_u64(in);
            std::uint64_t entries = read_u64(in);
            for (std::uint64_t i = 0; i < entries; ++i) {
                std::string gram = read_str(in);
                p.counts[order][gram] = read_u64(in);
            }
        }
    }
    return profiles;
}

}  // namespace mathcorpus
