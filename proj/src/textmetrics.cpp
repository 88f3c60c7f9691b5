#include "emocue/textmetrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "emocue/errors.hpp"

namespace emocue {

TokenSequence tokenize(std::string_view text) {
    TokenSequence out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.tokens.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            out.tokens.push_back(std::string(1, static_cast<char>(c)));
        } else {
            cur.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return out;
}

namespace {

constexpr char kSep = '\x1f';

using NgramCounts = std::unordered_map<std::string, double>;

NgramCounts count_ngrams(const TokenSequence& seq, int n) {
    NgramCounts counts;
    if (static_cast<int>(seq.tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= seq.tokens.size(); ++i) {
        std::string key = seq.tokens[i];
        for (int k = 1; k < n; ++k) {
            key.push_back(kSep);
            key += seq.tokens[i + k];
        }
        counts[key] += 1.0;
    }
    return counts;
}

}  // namespace

BleuResult bleu(const TokenSequence& candidate,
                std::span<const TokenSequence> references, int max_n) {
    if (max_n != 1 && max_n != 4)
        throw DataError("bleu: max_n must be 1 or 4");
    if (references.empty()) throw DataError("bleu: empty reference list");
    if (candidate.tokens.empty()) return {0.0, true};

    constexpr double kEps = 1e-9;
    double log_p_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        NgramCounts cand = count_ngrams(candidate, n);
        NgramCounts max_ref;
        for (const auto& ref : references) {
            for (const auto& [gram, c] : count_ngrams(ref, n)) {
                auto& slot = max_ref[gram];
                slot = std::max(slot, c);
            }
        }
        double clipped = 0.0, total = 0.0;
        for (const auto& [gram, c] : cand) {
            total += c;
            auto it = max_ref.find(gram);
            if (it != max_ref.end()) clipped += std::min(c, it->second);
        }
        double p = (total > 0.0) ? clipped / total : 0.0;
        if (p == 0.0) p = kEps;
        log_p_sum += std::log(p);
    }

    // Brevity penalty against the closest reference length (ties: shorter).
    size_t c = candidate.tokens.size();
    size_t r = references[0].tokens.size();
    for (const auto& ref : references) {
        size_t len = ref.tokens.size();
        auto dist = [c](size_t l) {
            return l > c ? l - c : c - l;
        };
        if (dist(len) < dist(r) || (dist(len) == dist(r) && len < r)) r = len;
    }
    double bp = (c > r) ? 1.0
                        : std::exp(1.0 - static_cast<double>(r) /
                                             static_cast<double>(c));
    return {bp * std::exp(log_p_sum / max_n), false};
}

DocFreq build_doc_freq(
    std::span<const std::vector<TokenSequence>> references_per_doc) {
    DocFreq stats;
    stats.num_docs = references_per_doc.size();
    for (const auto& refs : references_per_doc) {
        NgramCounts seen;
        for (const auto& ref : refs)
            for (int n = 1; n <= 4; ++n)
                for (const auto& [gram, c] : count_ngrams(ref, n))
                    seen[gram] = 1.0;
        for (const auto& [gram, one] : seen) stats.df[gram] += 1.0;
    }
    return stats;
}

double cider(const TokenSequence& candidate,
             std::span<const TokenSequence> references,
             const DocFreq& stats) {
    if (stats.num_docs == 0)
        throw DataError("cider: empty document-frequency table");
    if (references.empty()) throw DataError("cider: empty reference list");

    double log_docs = std::log(static_cast<double>(stats.num_docs));
    auto tfidf = [&](const TokenSequence& seq, int n) {
        NgramCounts vec = count_ngrams(seq, n);
        for (auto& [gram, tf] : vec) {
            auto it = stats.df.find(gram);
            double df = it == stats.df.end() ? 0.0 : it->second;
            tf *= log_docs - std::log(std::max(1.0, df));
        }
        return vec;
    };

    double score = 0.0;
    for (int n = 1; n <= 4; ++n) {
        NgramCounts cand = tfidf(candidate, n);
        double cand_norm = 0.0;
        for (const auto& [gram, w] : cand) cand_norm += w * w;
        cand_norm = std::sqrt(cand_norm);
        double sim_sum = 0.0;
        for (const auto& ref : references) {
            NgramCounts rv = tfidf(ref, n);
            double ref_norm = 0.0, dot = 0.0;
            for (const auto& [gram, w] : rv) {
                ref_norm += w * w;
                auto it = cand.find(gram);
                if (it != cand.end()) dot += w * it->second;
            }
            ref_norm = std::sqrt(ref_norm);
            if (cand_norm > 0.0 && ref_norm > 0.0)
                sim_sum += dot / (cand_norm * ref_norm);
        }
        score += sim_sum / static_cast<double>(references.size());
    }
    return 10.0 * score / 4.0;
}

}  // namespace emocue
