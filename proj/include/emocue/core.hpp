#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emocue/errors.hpp"

namespace emocue {

// Trim, collapse internal whitespace to single spaces, ASCII case-fold.
// This is the canonical form used for cue dedup and cache keys.
std::string normalize_text(std::string_view raw);

// Banker's rounding to `decimals` fractional digits.
double round_half_even(double x, int decimals);

// Hex-encoded SHA-256 of a string (cache keys, deterministic embedder seed).
std::string sha256_hex(std::string_view data);

enum class Dimension { visual, audio, global };

inline constexpr std::array<Dimension, 3> kDimensions = {
    Dimension::visual, Dimension::audio, Dimension::global};

const char* to_string(Dimension d);
std::optional<Dimension> dimension_from_string(std::string_view s);

// Smallest semantic evidence unit. Text is stored normalized and non-empty.
struct AtomicCue {
    std::string text;

    // Throws DataError if `raw` is empty after normalization.
    static AtomicCue make(std::string_view raw);

    friend bool operator==(const AtomicCue&, const AtomicCue&) = default;
};

// Per-dimension cue lists. Construction normalizes and drops exact
// duplicates within each dimension; any dimension may be empty.
struct CueSet {
    std::vector<AtomicCue> visual;
    std::vector<AtomicCue> audio;
    std::vector<AtomicCue> global;

    static CueSet make(std::vector<std::string> visual,
                       std::vector<std::string> audio,
                       std::vector<std::string> global);

    const std::vector<AtomicCue>& dim(Dimension d) const;
    std::vector<AtomicCue>& dim(Dimension d);
    bool empty() const;
    size_t size() const;

    friend bool operator==(const CueSet&, const CueSet&) = default;
};

struct EvalSample {
    std::string id;
    std::string candidate_text;
    std::string reference_text;
    std::optional<CueSet> candidate_cues;
    std::optional<CueSet> reference_cues;
    std::set<Dimension> supported_dimensions;

    friend bool operator==(const EvalSample&, const EvalSample&) = default;
};

using Corpus = std::vector<EvalSample>;

enum class CorpusSchema { candidate_reference, reference_only };

// One JSON object per line; see save_corpus for the writer. Errors carry
// the offending line number; duplicate ids name the id.
Corpus load_corpus(const std::filesystem::path& path,
                   CorpusSchema schema = CorpusSchema::candidate_reference);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

// L2-normalized embedding. `normalized` rescales to unit length and
// rejects non-finite or zero input.
struct EmbeddingVector {
    std::vector<double> values;

    size_t dim() const { return values.size(); }
    static EmbeddingVector normalized(std::vector<double> values);

    friend bool operator==(const EmbeddingVector&,
                           const EmbeddingVector&) = default;
};

// cos(a, b) in [-1, 1]. Throws on dimension mismatch or zero vector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct DimensionScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t candidate_count = 0;
    size_t reference_count = 0;
    // Both cue sets empty: scored (1,1,1) but excluded from aggregation.
    bool vacuous = false;

    friend bool operator==(const DimensionScore&,
                           const DimensionScore&) = default;
};

using SampleScores = std::map<Dimension, std::optional<DimensionScore>>;

struct MetricReport {
    std::map<std::string, SampleScores> per_sample;
    SampleScores corpus;
    // Average of all non-null corpus-level P and R values on the 0-100
    // scale, unrounded; rendering rounds to one decimal.
    double mean = 0.0;
};

// Population std (sqrt of mean squared deviation) and max-min range.
// Throws DataError on empty input.
std::pair<double, double> population_std_and_range(std::span<const double> xs);

}  // namespace emocue
