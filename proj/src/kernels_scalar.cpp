#include "clusteradj/kernels.hpp"

#include <cmath>

namespace clusteradj::kernels::scalar {

namespace {

inline void neumaier_add(double& s, double& c, double x) {
    const double t = s + x;
    if (std::fabs(s) >= std::fabs(x)) {
        c += (s - t) + x;
    } else {
        c += (x - t) + s;
    }
    s = t;
}

}  // namespace

double sum(const double* x, std::size_t n) {
    double s = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) neumaier_add(s, c, x[i]);
    return s + c;
}

double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) neumaier_add(s, c, x[i] * y[i]);
    return s + c;
}

void affine_residual(const double* y, const double* w, double a, double b, double* out,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] - a - b * w[i];
}

void multiply(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void shift(const double* x, double c, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - c;
}

}  // namespace clusteradj::kernels::scalar
