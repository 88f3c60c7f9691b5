#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace emocue {

// Fixed tokenizer, version 1: case-fold, split punctuation into separate
// tokens, split on whitespace. BLEU/CIDEr values are tokenizer-dependent,
// so the tokenizer is frozen and versioned.
inline constexpr int kTokenizerVersion = 1;

struct TokenSequence {
    std::vector<std::string> tokens;
};

TokenSequence tokenize(std::string_view text);

struct BleuResult {
    double score = 0.0;
    bool empty_candidate = false;
};

// Sentence BLEU: clipped n-gram precisions p_1..p_max_n with uniform
// weights, brevity penalty exp(1 - r/c) when c <= r, add-epsilon (1e-9)
// smoothing on zero precisions. max_n is 1 or 4.
BleuResult bleu(const TokenSequence& candidate,
                std::span<const TokenSequence> references, int max_n);

// Document-frequency table over the evaluation corpus references.
// df[ngram] counts documents whose reference set contains the n-gram.
struct DocFreq {
    std::unordered_map<std::string, double> df;
    size_t num_docs = 0;
};

DocFreq build_doc_freq(
    std::span<const std::vector<TokenSequence>> references_per_doc);

// Plain CIDEr: TF-IDF n-gram cosine for n = 1..4, averaged over n and over
// references, scaled by 10. IDF convention: log(num_docs) - log(max(1, df)).
double cider(const TokenSequence& candidate,
             std::span<const TokenSequence> references, const DocFreq& stats);

}  // namespace emocue
