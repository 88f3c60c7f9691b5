#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emocue/core.hpp"

namespace emocue {

// Max cosine between `cue` and any member of `set`, clamped below at zero.
// Result in [0, 1]. Throws on empty set.
double sim_phi(const EmbeddingVector& cue,
               std::span<const EmbeddingVector> set);

// Mean over candidate cues of their best match in the reference set.
double precision(std::span<const EmbeddingVector> ca_vecs,
                 std::span<const EmbeddingVector> gt_vecs);
// Mean over reference cues of their best match in the candidate set.
double recall(std::span<const EmbeddingVector> ca_vecs,
              std::span<const EmbeddingVector> gt_vecs);
// Harmonic mean; 0 when p + r == 0. Inputs must be in [0, 1].
double f1(double p, double r);

// Resolved embeddings keyed by normalized cue text.
using CueEmbeddings = std::map<std::string, EmbeddingVector>;

// Per-dimension scores for one sample. Policy per dimension:
//   - unsupported                -> null ("-" cell)
//   - both sides non-empty       -> full P/R/F1
//   - exactly one side empty     -> (0, 0, 0) with counts recorded
//   - both sides empty           -> (1, 1, 1) flagged vacuous
// Requires both cue sets present and an embedding for every cue.
SampleScores score_sample(const EvalSample& sample,
                          const CueEmbeddings& embeddings);

// Macro aggregation over samples: corpus P/R per dimension averages the
// non-null, non-vacuous sample scores; corpus F1 is recomputed from corpus
// P/R; mean averages all non-null corpus P and R on the 0-100 scale.
// Throws when every dimension is null everywhere.
MetricReport aggregate(
    const std::map<std::string, SampleScores>& per_sample);

// The table Mean column: plain average of P/R values already on the 0-100
// scale (unrounded; callers round at the rendering boundary).
double table_mean(std::span<const double> pr_percent);

// Report serialization. JSON schema carries "schema_version": 1.
void write_report_json(std::ostream& out, const MetricReport& report);
MetricReport read_report_json(std::istream& in);
// Aligned-column table, scores on the 0-100 scale rounded to one decimal,
// "-" for null dimensions.
void write_report_table(std::ostream& out, const std::string& name,
                        const MetricReport& report);
// Multi-report comparison, best value per column marked with '*'.
void write_comparison_table(
    std::ostream& out,
    const std::vector<std::pair<std::string, MetricReport>>& reports);

}  // namespace emocue
