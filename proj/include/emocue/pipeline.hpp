#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emocue/core.hpp"
#include "emocue/embed.hpp"
#include "emocue/extract.hpp"
#include "emocue/harness.hpp"

namespace emocue {

struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path templates_dir;
    std::filesystem::path style_templates_path;
    std::filesystem::path cue_pool_path;  // corpus-schema JSONL or cue JSON
    std::filesystem::path out_dir = "out";

    // "structured" or "llm"
    std::string extractor_kind = "structured";
    std::string llm_base_url;
    std::string llm_model;

    EmbedderSpec embedder{EmbedderSpec::Kind::deterministic_test, "det-test",
                          256};
    std::string embed_base_url;
    std::filesystem::path embed_cache_path;
    std::filesystem::path extract_cache_path;

    uint64_t seed = 20240101;
    size_t jobs = 1;
    bool force = false;
    int n_pairs = 50;
    bool identical_subsets = true;
    bool compare_pairs = false;
};

// Factories honoring the config; throw UsageError on inconsistent setups
// (e.g. remote extraction without a base URL or API key).
std::unique_ptr<Embedder> make_embedder(const RunConfig& config);
Extractor make_extractor(const RunConfig& config);

// Extract cues for every sample whose cue blocks are null; writes the
// annotated corpus to out_dir/corpus_extracted.jsonl.
void cmd_extract(const RunConfig& config);

// Warm the embedding cache for every cue in the corpus.
void cmd_embed_cache(const RunConfig& config);

// Full pipeline: extract missing cues, embed, score, aggregate; writes
// report.json and report.txt into out_dir.
MetricReport cmd_score(const RunConfig& config);

// Five-template robustness sweep; writes sweep.json and sweep.txt.
SweepResult cmd_sweep(const RunConfig& config);

// Style-pair synthesis (and optional metric comparison); writes
// pairs.jsonl and, with compare_pairs, comparison.json.
std::vector<StylePair> cmd_synth(const RunConfig& config);

// Gradient check over a JSON loss fixture
// {"anchors": [[f64]], "targets": [[f64]], "tau": f64}; writes the
// GradCheckReport JSON to `out` and returns max relative error.
double cmd_losscheck(const std::filesystem::path& fixture,
                     const std::filesystem::path& out, double step);

// Multi-report comparison table rendered to stdout-like stream.
void cmd_report(const std::vector<std::filesystem::path>& report_files,
                std::ostream& out);

}  // namespace emocue
