#pragma once

#include <cmath>

namespace clusteradj {

// Running compensated sum for streaming accumulation outside the kernels.
struct Neumaier {
    double s = 0.0;
    double c = 0.0;

    void add(double x) {
        const double t = s + x;
        if (std::fabs(s) >= std::fabs(x)) {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    double value() const { return s + c; }
};

}  // namespace clusteradj
