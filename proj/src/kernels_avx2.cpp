// AVX2 variants of the kernels in kernels_scalar.cpp. This translation unit is
// the only one compiled with -mavx2 -mfma; callers reach it through the
// dispatch table after a CPUID check.

#include "clusteradj/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace clusteradj::kernels::avx2 {

namespace {

struct Lanes {
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();

    void add(__m256d x) {
        const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
        const __m256d t = _mm256_add_pd(s, x);
        const __m256d s_big =
            _mm256_cmp_pd(_mm256_and_pd(s, abs_mask), _mm256_and_pd(x, abs_mask), _CMP_GE_OQ);
        const __m256d when_s = _mm256_add_pd(_mm256_sub_pd(s, t), x);
        const __m256d when_x = _mm256_add_pd(_mm256_sub_pd(x, t), s);
        c = _mm256_add_pd(c, _mm256_blendv_pd(when_x, when_s, s_big));
        s = t;
    }
};

inline void neumaier_add(double& s, double& c, double x) {
    const double t = s + x;
    if (std::fabs(s) >= std::fabs(x)) {
        c += (s - t) + x;
    } else {
        c += (x - t) + s;
    }
    s = t;
}

// Folds the vector accumulators and a scalar tail into one compensated total.
double finish(const Lanes& a, const Lanes& b, double tail_s, double tail_c) {
    alignas(32) double sa[4], ca[4], sb[4], cb[4];
    _mm256_store_pd(sa, a.s);
    _mm256_store_pd(ca, a.c);
    _mm256_store_pd(sb, b.s);
    _mm256_store_pd(cb, b.c);
    double s = 0.0;
    double c = 0.0;
    for (int k = 0; k < 4; ++k) {
        neumaier_add(s, c, sa[k]);
        neumaier_add(s, c, sb[k]);
    }
    neumaier_add(s, c, tail_s);
    c += ca[0] + ca[1] + ca[2] + ca[3] + cb[0] + cb[1] + cb[2] + cb[3] + tail_c;
    return s + c;
}

}  // namespace

double sum(const double* x, std::size_t n) {
    Lanes a, b;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a.add(_mm256_loadu_pd(x + i));
        b.add(_mm256_loadu_pd(x + i + 4));
    }
    double ts = 0.0, tc = 0.0;
    for (; i < n; ++i) neumaier_add(ts, tc, x[i]);
    return finish(a, b, ts, tc);
}

double dot(const double* x, const double* y, std::size_t n) {
    Lanes a, b;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        a.add(_mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        b.add(_mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    double ts = 0.0, tc = 0.0;
    for (; i < n; ++i) neumaier_add(ts, tc, x[i] * y[i]);
    return finish(a, b, ts, tc);
}

void affine_residual(const double* y, const double* w, double a, double b, double* out,
                     std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(y + i), va);
        _mm256_storeu_pd(out + i, _mm256_sub_pd(t, _mm256_mul_pd(vb, _mm256_loadu_pd(w + i))));
    }
    for (; i < n; ++i) out[i] = y[i] - a - b * w[i];
}

void multiply(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) out[i] = x[i] * y[i];
}

void shift(const double* x, double c, double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), vc));
    }
    for (; i < n; ++i) out[i] = x[i] - c;
}

}  // namespace clusteradj::kernels::avx2
