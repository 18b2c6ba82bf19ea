#pragma once

// Data-parallel inner loops shared by every estimator and estimand pass.
//
// Each kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active backend is picked once at startup from CPUID and can be
// forced for testing. Reductions use Neumaier compensated summation in both
// backends; results agree to within a few ulps of the exact sum but are not
// bit-identical across backends because the summation order differs.

#include <cstddef>
#include <span>
#include <string_view>

namespace clusteradj::kernels {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);

/// True when the backend was compiled in and the CPU supports it.
bool backend_available(Backend b);

/// Backend chosen at first use: AVX2 when available, scalar otherwise.
Backend active_backend();

/// Force a backend. Throws ConfigError when it is not available.
void set_backend(Backend b);

/// Compensated sum of x.
double sum(std::span<const double> x);

/// Compensated sum of x[i] * y[i].
double dot(std::span<const double> x, std::span<const double> y);

/// out[i] = y[i] - a - b * w[i]
void affine_residual(std::span<const double> y, std::span<const double> w, double a, double b,
                     std::span<double> out);

/// out[i] = x[i] * y[i]
void multiply(std::span<const double> x, std::span<const double> y, std::span<double> out);

/// out[i] = x[i] - c
void shift(std::span<const double> x, double c, std::span<double> out);

/// Per-segment compensated sums; offsets has one more entry than out.
void segment_sums(std::span<const double> x, std::span<const std::size_t> offsets,
                  std::span<double> out);

// Direct access to each implementation, used by the equivalence tests.
namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void affine_residual(const double* y, const double* w, double a, double b, double* out,
                     std::size_t n);
void multiply(const double* x, const double* y, double* out, std::size_t n);
void shift(const double* x, double c, double* out, std::size_t n);
}  // namespace scalar

#if defined(CLUSTERADJ_HAVE_AVX2)
namespace avx2 {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void affine_residual(const double* y, const double* w, double a, double b, double* out,
                     std::size_t n);
void multiply(const double* x, const double* y, double* out, std::size_t n);
void shift(const double* x, double c, double* out, std::size_t n);
}  // namespace avx2
#endif

}  // namespace clusteradj::kernels
