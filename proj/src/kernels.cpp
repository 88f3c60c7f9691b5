#include "emocue/kernels.hpp"

#include <cassert>
#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#define EMOCUE_X86 1
#include <immintrin.h>
#else
#define EMOCUE_X86 0
#endif

#if defined(__aarch64__)
#define EMOCUE_NEON 1
#include <arm_neon.h>
#else
#define EMOCUE_NEON 0
#endif

namespace emocue::kernels {

namespace scalar {

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

double sum_squares(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

#if EMOCUE_X86

namespace avx2 {

__attribute__((target("avx2")))
static double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

__attribute__((target("avx2")))
double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    size_t n = a.size();
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d va = _mm256_loadu_pd(a.data() + i);
        __m256d vb = _mm256_loadu_pd(b.data() + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

__attribute__((target("avx2")))
double sum(std::span<const double> x) {
    size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

__attribute__((target("avx2")))
double sum_squares(std::span<const double> x) {
    size_t n = x.size();
    __m256d acc = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x.data() + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
    }
    double r = hsum(acc);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

__attribute__((target("avx2")))
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    size_t n = x.size();
    __m256d va = _mm256_set1_pd(alpha);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y.data() + i);
        __m256d vx = _mm256_loadu_pd(x.data() + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y.data() + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace avx2

#endif  // EMOCUE_X86

#if EMOCUE_NEON

namespace neon {

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    size_t n = a.size();
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t va = vld1q_f64(a.data() + i);
        float64x2_t vb = vld1q_f64(b.data() + i);
        acc = vaddq_f64(acc, vmulq_f64(va, vb));
    }
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double sum(std::span<const double> x) {
    size_t n = x.size();
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x.data() + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

double sum_squares(std::span<const double> x) {
    size_t n = x.size();
    float64x2_t acc = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(x.data() + i);
        acc = vaddq_f64(acc, vmulq_f64(v, v));
    }
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    size_t n = x.size();
    float64x2_t va = vdupq_n_f64(alpha);
    size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y.data() + i);
        vy = vaddq_f64(vy, vmulq_f64(va, vld1q_f64(x.data() + i)));
        vst1q_f64(y.data() + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace neon

#endif  // EMOCUE_NEON

namespace {

struct Dispatch {
    double (*dot)(std::span<const double>, std::span<const double>);
    double (*sum)(std::span<const double>);
    double (*sum_squares)(std::span<const double>);
    void (*axpy)(double, std::span<const double>, std::span<double>);
    const char* name;
};

Dispatch select_backend() {
    const char* forced = std::getenv("EMOCUE_KERNELS");
    bool force_scalar = forced && std::strcmp(forced, "scalar") == 0;
#if EMOCUE_X86
    if (!force_scalar && __builtin_cpu_supports("avx2")) {
        return {avx2::dot, avx2::sum, avx2::sum_squares, avx2::axpy, "avx2"};
    }
#elif EMOCUE_NEON
    if (!force_scalar) {
        return {neon::dot, neon::sum, neon::sum_squares, neon::axpy, "neon"};
    }
#endif
    (void)force_scalar;
    return {scalar::dot, scalar::sum, scalar::sum_squares, scalar::axpy,
            "scalar"};
}

const Dispatch& backend() {
    static const Dispatch d = select_backend();
    return d;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    return backend().dot(a, b);
}
double sum(std::span<const double> x) { return backend().sum(x); }
double sum_squares(std::span<const double> x) {
    return backend().sum_squares(x);
}
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    backend().axpy(alpha, x, y);
}
const char* active_backend() { return backend().name; }

}  // namespace emocue::kernels
