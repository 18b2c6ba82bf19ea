#pragma once

#include "clusteradj/population.hpp"
#include "clusteradj/sample.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace testing {

inline bool close(double a, double b, double rel, double abs = 0.0) {
    return std::fabs(a - b) <= std::max(abs, rel * std::max(std::fabs(a), std::fabs(b)));
}

inline clusteradj::Sample make_sample(const std::vector<double>& y, const std::vector<double>& w,
                                      const std::vector<std::int64_t>& cluster) {
    clusteradj::Sample s;
    for (std::size_t i = 0; i < y.size(); ++i) s.push(cluster[i], y[i], w[i]);
    s.finish();
    return s;
}

inline clusteradj::Population hand_population() {
    const std::vector<clusteradj::UnitRow> rows = {{1, 0, 1}, {1, 2, 3}, {2, 1, 0}, {2, 3, 2}};
    return clusteradj::Population::from_table(rows);
}

/// Random population with the given cluster sizes and cluster-level effects.
inline clusteradj::Population random_population(std::mt19937_64& eng,
                                                const std::vector<std::size_t>& sizes,
                                                double effect_sd = 1.0, bool homogeneous = false) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<clusteradj::UnitRow> rows;
    const double common = z(eng);
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        const double tau_c = homogeneous ? common : effect_sd * z(eng);
        for (std::size_t u = 0; u < sizes[c]; ++u) {
            const double y0 = z(eng) + 0.3 * static_cast<double>(c);
            const double y1 = y0 + tau_c + (homogeneous ? 0.0 : 0.5 * z(eng));
            rows.push_back({static_cast<std::int64_t>(c) + 1, y0, y1});
        }
    }
    return clusteradj::Population::from_table(rows);
}

/// Random sample with grouped clusters, both arms present.
inline clusteradj::Sample random_sample(std::mt19937_64& eng, std::size_t clusters,
                                        std::size_t max_size) {
    std::uniform_int_distribution<std::size_t> size(1, max_size);
    std::normal_distribution<double> z(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (;;) {
        clusteradj::Sample s;
        bool t = false, c = false;
        for (std::size_t g = 0; g < clusters; ++g) {
            const double shift = z(eng);
            const std::size_t m = size(eng);
            for (std::size_t i = 0; i < m; ++i) {
                const double w = coin(eng) ? 1.0 : 0.0;
                t = t || w == 1.0;
                c = c || w == 0.0;
                s.push(static_cast<std::int64_t>(g) + 1, shift + 0.7 * w + z(eng), w);
            }
        }
        s.finish();
        if (t && c) return s;
    }
}

}  // namespace testing
