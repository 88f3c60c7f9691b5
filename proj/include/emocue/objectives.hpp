#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace emocue {

enum class Modality { video, audio };

// Time-major embedding matrix, shape (length, dim).
struct EmbeddingSequence {
    size_t length = 0;
    size_t dim = 0;
    std::vector<double> data;  // row-major, length * dim
    Modality modality = Modality::video;

    static EmbeddingSequence make(size_t length, size_t dim,
                                  std::vector<double> data,
                                  Modality modality = Modality::video);
    std::span<const double> row(size_t i) const;
};

// Arithmetic mean across the temporal dimension (unnormalized).
std::vector<double> temporal_pool(const EmbeddingSequence& seq);

// Paired anchor/target batch for the contrastive alignment losses.
// Vectors are unnormalized; the loss normalizes inside the cosine.
struct AlignmentBatch {
    size_t n = 0;
    size_t dim = 0;
    std::vector<double> anchors;  // row-major, n * dim
    std::vector<double> targets;  // row-major, n * dim
    double temperature = 0.07;

    static AlignmentBatch make(size_t n, size_t dim,
                               std::vector<double> anchors,
                               std::vector<double> targets,
                               double temperature);
};

struct InfoNceResult {
    double loss = 0.0;
    std::vector<double> grad_anchors;
    std::vector<double> grad_targets;
    double grad_temperature = 0.0;
};

// InfoNCE over cosine similarities with temperature. Default follows the
// one-directional form (in-batch negatives over targets only); the
// bidirectional flag averages both directions.
InfoNceResult infonce_loss(const AlignmentBatch& batch,
                           bool bidirectional = false);

struct BceResult {
    double loss = 0.0;
    double grad = 0.0;  // d loss / d p (resp. d logit)
};

// Binary cross-entropy on a probability; clamped to [1e-12, 1 - 1e-12].
BceResult temporal_bce(double predicted_prob, int label);
// Convenience wrapper taking a logit (sigmoid applied internally).
BceResult temporal_bce_logit(double logit, int label);

struct MaskedBatch {
    EmbeddingSequence original;
    std::vector<double> predicted;      // same shape as original.data
    std::vector<size_t> mask_positions;  // non-empty, in [0, length)

    static MaskedBatch make(EmbeddingSequence original,
                            std::vector<double> predicted,
                            std::vector<size_t> mask_positions);
};

struct MfmResult {
    double loss = 0.0;
    // Gradient w.r.t. predicted rows; zero outside mask positions.
    std::vector<double> grad_predicted;
};

// Sum over masked positions of squared L2 reconstruction error.
MfmResult mfm_loss(const MaskedBatch& batch);

struct VecbLossWeights {
    double w1 = 0.0;
    double w2 = 0.0;
};

// cl + w1 * temp + w2 * mfm
double vecb_loss(double cl, double temp, double mfm, VecbLossWeights w);
// Identity on the audio-text contrastive loss.
double aecb_loss(double cl_at);

struct GradCheckReport {
    double max_relative_error = 0.0;
    size_t parameter_count = 0;
    double step = 0.0;
};

// Central finite differences over all coordinates of x, compared against
// the analytic gradient. Relative error denominator is
// max(|g_num|, |g_ana|, 1e-8). h must be in [1e-7, 1e-3].
GradCheckReport finite_difference_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic_grad,
    double h);

}  // namespace emocue
