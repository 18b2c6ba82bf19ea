#include "clusteradj/kernels.hpp"

#include "clusteradj/error.hpp"

#include <atomic>
#include <cassert>
#include <string>

namespace clusteradj::kernels {

namespace {

struct Table {
    double (*sum)(const double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    void (*affine_residual)(const double*, const double*, double, double, double*, std::size_t);
    void (*multiply)(const double*, const double*, double*, std::size_t);
    void (*shift)(const double*, double, double*, std::size_t);
};

constexpr Table kScalar{scalar::sum, scalar::dot, scalar::affine_residual, scalar::multiply,
                        scalar::shift};
#if defined(CLUSTERADJ_HAVE_AVX2)
constexpr Table kAvx2{avx2::sum, avx2::dot, avx2::affine_residual, avx2::multiply, avx2::shift};
#endif

bool cpu_has_avx2() {
#if defined(CLUSTERADJ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

std::atomic<Backend>& selected() {
    static std::atomic<Backend> b{detect()};
    return b;
}

const Table& table() {
#if defined(CLUSTERADJ_HAVE_AVX2)
    if (selected().load(std::memory_order_relaxed) == Backend::avx2) return kAvx2;
#endif
    return kScalar;
}

}  // namespace

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

bool backend_available(Backend b) {
    if (b == Backend::scalar) return true;
    static const bool avx2 = cpu_has_avx2();
    return avx2;
}

Backend active_backend() { return selected().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!backend_available(b)) {
        throw ConfigError("kernel backend '" + std::string(backend_name(b)) +
                          "' is not available on this build/CPU");
    }
    selected().store(b, std::memory_order_relaxed);
}

double sum(std::span<const double> x) { return table().sum(x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    return table().dot(x.data(), y.data(), x.size());
}

void affine_residual(std::span<const double> y, std::span<const double> w, double a, double b,
                     std::span<double> out) {
    assert(y.size() == w.size() && out.size() == y.size());
    table().affine_residual(y.data(), w.data(), a, b, out.data(), y.size());
}

void multiply(std::span<const double> x, std::span<const double> y, std::span<double> out) {
    assert(x.size() == y.size() && out.size() == x.size());
    table().multiply(x.data(), y.data(), out.data(), x.size());
}

void shift(std::span<const double> x, double c, std::span<double> out) {
    assert(out.size() == x.size());
    table().shift(x.data(), c, out.data(), x.size());
}

void segment_sums(std::span<const double> x, std::span<const std::size_t> offsets,
                  std::span<double> out) {
    assert(offsets.size() == out.size() + 1);
    const Table& t = table();
    for (std::size_t g = 0; g < out.size(); ++g) {
        out[g] = t.sum(x.data() + offsets[g], offsets[g + 1] - offsets[g]);
    }
}

}  // namespace clusteradj::kernels
