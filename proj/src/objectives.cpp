#include "emocue/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emocue/errors.hpp"
#include "emocue/kernels.hpp"

namespace emocue {

EmbeddingSequence EmbeddingSequence::make(size_t length, size_t dim,
                                          std::vector<double> data,
                                          Modality modality) {
    if (length < 1) throw DataError("embedding sequence: length must be >= 1");
    if (dim < 1) throw DataError("embedding sequence: dim must be >= 1");
    if (data.size() != length * dim)
        throw DataError("embedding sequence: data size mismatch");
    for (double v : data)
        if (!std::isfinite(v))
            throw DataError("embedding sequence: non-finite entry");
    return EmbeddingSequence{length, dim, std::move(data), modality};
}

std::span<const double> EmbeddingSequence::row(size_t i) const {
    return std::span<const double>(data).subspan(i * dim, dim);
}

std::vector<double> temporal_pool(const EmbeddingSequence& seq) {
    std::vector<double> out(seq.dim, 0.0);
    for (size_t t = 0; t < seq.length; ++t)
        kernels::axpy(1.0, seq.row(t), out);
    double inv = 1.0 / static_cast<double>(seq.length);
    for (double& v : out) v *= inv;
    return out;
}

AlignmentBatch AlignmentBatch::make(size_t n, size_t dim,
                                    std::vector<double> anchors,
                                    std::vector<double> targets,
                                    double temperature) {
    if (n < 1) throw DataError("alignment batch: N must be >= 1");
    if (dim < 1) throw DataError("alignment batch: dim must be >= 1");
    if (anchors.size() != n * dim || targets.size() != n * dim)
        throw DataError("alignment batch: matrix size mismatch");
    if (!(temperature > 0.0))
        throw DataError("alignment batch: temperature must be positive");
    return AlignmentBatch{n, dim, std::move(anchors), std::move(targets),
                          temperature};
}

namespace {

struct Normalized {
    std::vector<double> unit;   // n * dim
    std::vector<double> norms;  // n
};

Normalized normalize_rows(const std::vector<double>& rows, size_t n,
                          size_t dim, const char* what) {
    Normalized out;
    out.unit.resize(n * dim);
    out.norms.resize(n);
    for (size_t i = 0; i < n; ++i) {
        std::span<const double> row(rows.data() + i * dim, dim);
        double norm = std::sqrt(kernels::sum_squares(row));
        if (norm == 0.0)
            throw DataError(std::string("infonce: zero-norm ") + what +
                            " at row " + std::to_string(i));
        out.norms[i] = norm;
        for (size_t k = 0; k < dim; ++k) out.unit[i * dim + k] = row[k] / norm;
    }
    return out;
}

// One-directional InfoNCE: anchors index rows, negatives over targets.
// Accumulates loss and gradients into the result.
void infonce_one_direction(const Normalized& a, const Normalized& t,
                           size_t n, size_t dim, double tau, double weight,
                           InfoNceResult& res) {
    auto arow = [&](size_t i) {
        return std::span<const double>(a.unit.data() + i * dim, dim);
    };
    auto trow = [&](size_t j) {
        return std::span<const double>(t.unit.data() + j * dim, dim);
    };

    std::vector<double> sim(n * n);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            sim[i * n + j] = kernels::dot(arow(i), trow(j));

    std::vector<double> prob(n * n);
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double zmax = -1e300;
        for (size_t j = 0; j < n; ++j)
            zmax = std::max(zmax, sim[i * n + j] / tau);
        double denom = 0.0;
        for (size_t j = 0; j < n; ++j) {
            double e = std::exp(sim[i * n + j] / tau - zmax);
            prob[i * n + j] = e;
            denom += e;
        }
        for (size_t j = 0; j < n; ++j) prob[i * n + j] /= denom;
        loss += std::log(denom) + zmax - sim[i * n + i] / tau;
    }
    loss /= static_cast<double>(n);
    res.loss += weight * loss;

    // dL/ds_ij, then back through the cosine normalization of each row.
    std::vector<double> dsim(n * n);
    double dtau = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double g = (prob[i * n + j] - (i == j ? 1.0 : 0.0)) /
                       (static_cast<double>(n) * tau);
            dsim[i * n + j] = g;
            dtau -= g * sim[i * n + j] / tau;
        }
    }
    res.grad_temperature += weight * dtau;

    std::vector<double> u(dim);
    for (size_t i = 0; i < n; ++i) {
        std::fill(u.begin(), u.end(), 0.0);
        for (size_t j = 0; j < n; ++j)
            kernels::axpy(dsim[i * n + j], trow(j), u);
        double proj = kernels::dot(u, arow(i));
        for (size_t k = 0; k < dim; ++k)
            res.grad_anchors[i * dim + k] +=
                weight * (u[k] - proj * a.unit[i * dim + k]) / a.norms[i];
    }
    for (size_t j = 0; j < n; ++j) {
        std::fill(u.begin(), u.end(), 0.0);
        for (size_t i = 0; i < n; ++i)
            kernels::axpy(dsim[i * n + j], arow(i), u);
        double proj = kernels::dot(u, trow(j));
        for (size_t k = 0; k < dim; ++k)
            res.grad_targets[j * dim + k] +=
                weight * (u[k] - proj * t.unit[j * dim + k]) / t.norms[j];
    }
}

}  // namespace

InfoNceResult infonce_loss(const AlignmentBatch& batch, bool bidirectional) {
    size_t n = batch.n, dim = batch.dim;
    Normalized a = normalize_rows(batch.anchors, n, dim, "anchor");
    Normalized t = normalize_rows(batch.targets, n, dim, "target");

    InfoNceResult res;
    res.grad_anchors.assign(n * dim, 0.0);
    res.grad_targets.assign(n * dim, 0.0);
    if (!bidirectional) {
        infonce_one_direction(a, t, n, dim, batch.temperature, 1.0, res);
    } else {
        // Average of the two directions. The reversed direction swaps the
        // roles of anchors and targets, so swap the gradient sinks too.
        infonce_one_direction(a, t, n, dim, batch.temperature, 0.5, res);
        InfoNceResult rev;
        rev.grad_anchors.assign(n * dim, 0.0);
        rev.grad_targets.assign(n * dim, 0.0);
        infonce_one_direction(t, a, n, dim, batch.temperature, 0.5, rev);
        res.loss += rev.loss;
        res.grad_temperature += rev.grad_temperature;
        kernels::axpy(1.0, rev.grad_anchors, res.grad_targets);
        kernels::axpy(1.0, rev.grad_targets, res.grad_anchors);
    }
    return res;
}

BceResult temporal_bce(double predicted_prob, int label) {
    if (label != 0 && label != 1)
        throw DataError("temporal_bce: label must be 0 or 1");
    constexpr double kEps = 1e-12;
    double p = std::clamp(predicted_prob, kEps, 1.0 - kEps);
    double loss = -(label * std::log(p) + (1 - label) * std::log(1.0 - p));
    double grad = label ? -1.0 / p : 1.0 / (1.0 - p);
    return {loss, grad};
}

BceResult temporal_bce_logit(double logit, int label) {
    if (label != 0 && label != 1)
        throw DataError("temporal_bce: label must be 0 or 1");
    // Numerically stable log(1 + exp(.)) form; gradient is sigmoid(z) - y.
    double z = logit;
    double loss = std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
    double grad = 1.0 / (1.0 + std::exp(-z)) - label;
    return {loss, grad};
}

MaskedBatch MaskedBatch::make(EmbeddingSequence original,
                              std::vector<double> predicted,
                              std::vector<size_t> mask_positions) {
    if (predicted.size() != original.data.size())
        throw DataError("masked batch: predicted shape mismatch");
    if (mask_positions.empty())
        throw DataError("masked batch: mask set must be non-empty");
    for (size_t i : mask_positions)
        if (i >= original.length)
            throw DataError("masked batch: mask index out of range");
    // Canonical mask order: the loss must not depend on how callers happened
    // to enumerate the masked rows.
    std::sort(mask_positions.begin(), mask_positions.end());
    mask_positions.erase(
        std::unique(mask_positions.begin(), mask_positions.end()),
        mask_positions.end());
    return MaskedBatch{std::move(original), std::move(predicted),
                       std::move(mask_positions)};
}

MfmResult mfm_loss(const MaskedBatch& batch) {
    const auto& seq = batch.original;
    MfmResult res;
    res.grad_predicted.assign(batch.predicted.size(), 0.0);
    for (size_t i : batch.mask_positions) {
        for (size_t k = 0; k < seq.dim; ++k) {
            size_t idx = i * seq.dim + k;
            double diff = batch.predicted[idx] - seq.data[idx];
            res.loss += diff * diff;
            res.grad_predicted[idx] = 2.0 * diff;
        }
    }
    return res;
}

double vecb_loss(double cl, double temp, double mfm, VecbLossWeights w) {
    if (!(std::isfinite(cl) && std::isfinite(temp) && std::isfinite(mfm)))
        throw DataError("vecb_loss: component losses must be finite");
    if (w.w1 < 0.0 || w.w2 < 0.0)
        throw DataError("vecb_loss: weights must be non-negative");
    return cl + w.w1 * temp + w.w2 * mfm;
}

double aecb_loss(double cl_at) { return cl_at; }

GradCheckReport finite_difference_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic_grad,
    double h) {
    if (h < 1e-7 || h > 1e-3)
        throw DataError("finite_difference_check: h must be in [1e-7, 1e-3]");
    if (x.size() != analytic_grad.size())
        throw DataError("finite_difference_check: gradient size mismatch");
    std::vector<double> work(x.begin(), x.end());
    double max_rel = 0.0;
    for (size_t i = 0; i < work.size(); ++i) {
        double orig = work[i];
        work[i] = orig + h;
        double fp = f(work);
        work[i] = orig - h;
        double fm = f(work);
        work[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw DataError(
                "finite_difference_check: non-finite loss at perturbed point");
        double num = (fp - fm) / (2.0 * h);
        double denom =
            std::max({std::abs(num), std::abs(analytic_grad[i]), 1e-8});
        max_rel = std::max(max_rel, std::abs(num - analytic_grad[i]) / denom);
    }
    return {max_rel, work.size(), h};
}

}  // namespace emocue
