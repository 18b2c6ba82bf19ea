#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace clusteradj {

/// Observed data: outcome, binary treatment and cluster membership per unit.
/// Rows are grouped by cluster; rows of the g-th observed cluster occupy
/// [offsets[g], offsets[g + 1]). Clusters with no rows are not listed.
struct Sample {
    std::vector<double> y;
    std::vector<double> w;  ///< 0.0 or 1.0
    std::vector<std::size_t> offsets{0};
    std::vector<std::int64_t> cluster_ids;  ///< label of each observed cluster

    std::size_t size() const { return y.size(); }
    std::size_t clusters() const { return cluster_ids.size(); }
    std::size_t cluster_size(std::size_t g) const { return offsets[g + 1] - offsets[g]; }

    std::span<const double> y_of(std::size_t g) const {
        return std::span<const double>(y).subspan(offsets[g], cluster_size(g));
    }
    std::span<const double> w_of(std::size_t g) const {
        return std::span<const double>(w).subspan(offsets[g], cluster_size(g));
    }

    /// Appends a row to the cluster currently being filled, opening a new
    /// segment when `cluster` differs from the last one.
    void push(std::int64_t cluster, double y_value, double w_value) {
        if (cluster_ids.empty() || cluster_ids.back() != cluster) {
            if (!cluster_ids.empty()) offsets.push_back(y.size());
            cluster_ids.push_back(cluster);
        }
        y.push_back(y_value);
        w.push_back(w_value);
    }

    /// Closes the last segment; call once after the final push.
    void finish() {
        if (offsets.size() == cluster_ids.size()) offsets.push_back(y.size());
    }
};

}  // namespace clusteradj
