#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emocue/core.hpp"
#include "emocue/embed.hpp"
#include "emocue/extract.hpp"

namespace emocue {

struct DispersionStats {
    double p_std = 0.0, r_std = 0.0, f1_std = 0.0;
    double p_range = 0.0, r_range = 0.0, f1_range = 0.0;
};

struct SweepResult {
    // template id -> dimension -> corpus-level score (populated dims only)
    std::map<std::string, std::map<Dimension, DimensionScore>> per_template;
    // Computed from exactly the per_template values (population convention).
    std::map<Dimension, DispersionStats> dispersion;
};

// Re-extracts candidate and reference cues under each of the five
// templates, scores the corpus per template, and reports per-dimension
// std/range of P, R, F1. Any extraction failure aborts the whole sweep
// (partial dispersion statistics would bias std/range).
SweepResult run_template_sweep(const Corpus& corpus,
                               std::span<const PromptTemplate> templates,
                               const Extractor& extractor, Embedder& embedder,
                               size_t jobs = 1);

// Stored values are raw; the text-table rendering scales by 10^3.
void write_sweep_json(std::ostream& out, const SweepResult& result);
void write_sweep_table(std::ostream& out, const SweepResult& result);

// Style template for pair synthesis. The body must contain at least one of
// {visual} {audio} {global}; drawn cues are joined with "; " in place of
// each placeholder.
struct StyleTemplate {
    std::string id;
    std::string body;
};

// JSON array of {"id": ..., "body": ...}.
std::vector<StyleTemplate> load_style_templates(
    const std::filesystem::path& path);

struct StylePair {
    std::string text_a;
    std::string text_b;
    CueSet planted_cues;  // present verbatim in both texts
    uint64_t seed = 0;
};

struct SynthOptions {
    int n_pairs = 50;
    uint64_t seed = 20240101;
    // When false, the two texts carry overlapping-but-distinct subsets and
    // planted_cues is their common part.
    bool identical_subsets = true;
};

// Seeded, machine-independent pair synthesis: each pair draws a random cue
// subset from the pool and renders it into two different style templates
// (cue order independently shuffled per text).
std::vector<StylePair> synthesize_style_pairs(
    const CueSet& cue_pool, std::span<const StyleTemplate> style_templates,
    const SynthOptions& options);

void write_pairs_jsonl(std::ostream& out, std::span<const StylePair> pairs);
std::vector<StylePair> read_pairs_jsonl(std::istream& in);

struct PairComparison {
    double bleu1 = 0.0;
    double bleu4 = 0.0;
    double cider = 0.0;
    double emocue_f1 = 0.0;
};

struct ComparisonTable {
    std::vector<PairComparison> rows;
    PairComparison mean;
};

// Per pair and in aggregate: BLEU-1/BLEU-4/CIDEr between the two surface
// texts versus EmoCue-360 F1 between their extracted cue sets.
ComparisonTable compare_metrics_on_pairs(std::span<const StylePair> pairs,
                                         const Extractor& extractor,
                                         Embedder& embedder);

void write_comparison_json(std::ostream& out, const ComparisonTable& table);

}  // namespace emocue
