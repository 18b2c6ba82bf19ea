#include "clusteradj/error.hpp"
#include "clusteradj/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

using namespace clusteradj;
namespace k = clusteradj::kernels;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 1.0, double offset = 0.0) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z(offset, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = z(eng);
    return v;
}

// Exact sum via long double pairwise accumulation of exactly representable
// doubles; reference for ill-conditioned inputs.
long double reference_sum(const std::vector<double>& x) {
    long double s = 0.0L, c = 0.0L;
    for (double v : x) {
        const long double t = s + v;
        c += std::fabs(static_cast<double>(s)) >= std::fabs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar reductions on small exact inputs") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{2, 0, -1, 1, 0.5};
    CHECK(k::scalar::sum(x.data(), x.size()) == 15.0);
    CHECK(k::scalar::dot(x.data(), y.data(), x.size()) == doctest::Approx(2 + 0 - 3 + 4 + 2.5));
    CHECK(k::scalar::sum(x.data(), 0) == 0.0);
}

TEST_CASE("compensated sum recovers cancellation that naive summation loses") {
    std::vector<double> x{1e16, 1.0, -1e16, 1.0};
    CHECK(k::scalar::sum(x.data(), x.size()) == 2.0);
    double naive = 0.0;
    for (double v : x) naive += v;
    CHECK(naive != 2.0);
}

TEST_CASE("dispatch reports a usable backend") {
    CHECK(k::backend_available(k::Backend::scalar));
    const auto before = k::active_backend();
    k::set_backend(k::Backend::scalar);
    CHECK(k::active_backend() == k::Backend::scalar);
    if (!k::backend_available(k::Backend::avx2)) {
        CHECK_THROWS_AS(k::set_backend(k::Backend::avx2), ConfigError);
    }
    k::set_backend(before);
}

#if defined(CLUSTERADJ_HAVE_AVX2)

TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!k::backend_available(k::Backend::avx2)) {
        MESSAGE("AVX2 not supported on this CPU; skipping");
        return;
    }
    // Lengths cover empty input, pure tails, one block and ragged tails.
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 1000u, 100003u}) {
        CAPTURE(n);
        const auto x = noise(n, 11 + n, 3.0, 1.0);
        const auto y = noise(n, 97 + n);
        const auto w = noise(n, 5 + n);

        const double ss = k::scalar::sum(x.data(), n), sv = k::avx2::sum(x.data(), n);
        CHECK(std::fabs(ss - sv) <= 4e-16 * (1.0 + std::fabs(ss)) * std::sqrt(double(n) + 1.0));
        const double ds = k::scalar::dot(x.data(), y.data(), n), dv = k::avx2::dot(x.data(), y.data(), n);
        CHECK(std::fabs(ds - dv) <= 4e-16 * (1.0 + std::fabs(ds)) * std::sqrt(double(n) + 1.0));

        // Elementwise kernels round each element once: bit-identical.
        std::vector<double> a(n), b(n);
        k::scalar::affine_residual(y.data(), w.data(), 0.25, -1.5, a.data(), n);
        k::avx2::affine_residual(y.data(), w.data(), 0.25, -1.5, b.data(), n);
        CHECK(bit_equal(a, b));
        k::scalar::multiply(x.data(), y.data(), a.data(), n);
        k::avx2::multiply(x.data(), y.data(), b.data(), n);
        CHECK(bit_equal(a, b));
        k::scalar::shift(x.data(), 0.125, a.data(), n);
        k::avx2::shift(x.data(), 0.125, b.data(), n);
        CHECK(bit_equal(a, b));
    }
}

TEST_CASE("avx2 compensated sum is accurate on ill-conditioned input") {
    if (!k::backend_available(k::Backend::avx2)) return;
    std::vector<double> x;
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const double big = std::ldexp(u(eng), 40);
        x.push_back(big);
        x.push_back(u(eng));
        x.push_back(-big);
    }
    const double ref = static_cast<double>(reference_sum(x));
    CHECK(k::avx2::sum(x.data(), x.size()) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(k::scalar::sum(x.data(), x.size()) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("span API gives the same answers under either backend") {
    if (!k::backend_available(k::Backend::avx2)) return;
    const auto before = k::active_backend();
    const auto x = noise(777, 1);
    std::vector<std::size_t> off{0, 5, 5, 300, 777};
    std::vector<double> seg_s(4), seg_v(4);
    k::set_backend(k::Backend::scalar);
    const double s = k::sum(x);
    k::segment_sums(x, off, seg_s);
    k::set_backend(k::Backend::avx2);
    const double v = k::sum(x);
    k::segment_sums(x, off, seg_v);
    k::set_backend(before);
    CHECK(s == doctest::Approx(v).epsilon(1e-14));
    CHECK(seg_s[1] == 0.0);
    for (int g = 0; g < 4; ++g) CHECK(seg_s[g] == doctest::Approx(seg_v[g]).epsilon(1e-14));
}

#endif

TEST_CASE("segment sums partition the total") {
    const auto x = noise(1001, 8);
    std::vector<std::size_t> off{0, 1, 400, 401, 1001};
    std::vector<double> seg(4);
    k::segment_sums(x, off, seg);
    CHECK(seg[0] == x[0]);
    CHECK(seg[2] == x[400]);
    CHECK(seg[0] + seg[1] + seg[2] + seg[3] == doctest::Approx(k::sum(x)).epsilon(1e-13));
}

}  // TEST_SUITE
