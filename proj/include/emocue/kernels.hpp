#pragma once

#include <cstddef>
#include <span>

// Vector arithmetic kernels used by the cosine / pooling / gradient inner
// loops. Scalar reference implementations always exist; an AVX2 (x86-64) or
// NEON (aarch64) variant is selected once at startup when the CPU supports
// it. Set EMOCUE_KERNELS=scalar in the environment to force the reference
// path. The SIMD variants are equivalence-tested against the scalar ones.

namespace emocue::kernels {

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Name of the dispatched backend: "scalar", "avx2" or "neon".
const char* active_backend();

// Reference implementations, exposed for equivalence tests.
namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
}  // namespace scalar

}  // namespace emocue::kernels
