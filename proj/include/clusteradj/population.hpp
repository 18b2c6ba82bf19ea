#pragma once

// Finite populations with cluster structure and both potential outcomes per
// unit, plus the non-stochastic estimands every design-variance formula reads.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace clusteradj {

struct PopulationSpec;

/// One unit of an explicit population table. Cluster ids are 1-based.
struct UnitRow {
    std::int64_t cluster = 1;
    double y0 = 0.0;
    double y1 = 0.0;
};

/// Full finite population. Units are stored grouped by cluster: the units of
/// cluster c (0-based) occupy [offsets()[c], offsets()[c + 1]).
class Population {
public:
    /// Builds from an explicit table. Every id in 1..C must appear at least
    /// once and all outcomes must be finite; throws ConfigError otherwise.
    /// Rows are reordered (stably) so that clusters are contiguous.
    static Population from_table(std::span<const UnitRow> rows);

    std::size_t unit_count() const { return y0_.size(); }
    std::size_t cluster_count() const { return offsets_.size() - 1; }

    std::span<const double> y0() const { return y0_; }
    std::span<const double> y1() const { return y1_; }
    /// 0-based cluster index per unit.
    std::span<const std::uint32_t> cluster_index() const { return cluster_; }
    std::span<const std::size_t> offsets() const { return offsets_; }

    std::size_t cluster_size(std::size_t c) const { return offsets_[c + 1] - offsets_[c]; }
    std::vector<std::size_t> cluster_sizes() const;

    /// 1-based cluster id of unit i, as used in tables and CSV files.
    std::int64_t cluster_id(std::size_t i) const { return static_cast<std::int64_t>(cluster_[i]) + 1; }

private:
    friend Population build_population(const PopulationSpec& spec, std::uint64_t seed);
    Population() = default;
    static Population from_sorted(std::vector<double> y0, std::vector<double> y1,
                                  std::span<const std::size_t> sizes);

    std::vector<double> y0_;
    std::vector<double> y1_;
    std::vector<std::uint32_t> cluster_;
    std::vector<std::size_t> offsets_;
};

/// How build_population constructs units.
enum class GeneratorKind { generated, explicit_table };

/// Parameters of a generated population: Y(0) = nu, Y(1) = tau_c + nu with
/// nu ~ N(0, noise_sd^2) independent across units.
struct PopulationSpec {
    GeneratorKind kind = GeneratorKind::generated;
    std::size_t cluster_count = 100;
    /// One entry applies to every cluster; otherwise one entry per cluster.
    std::vector<std::size_t> units_per_cluster{100000};
    /// Per-cluster effects. Empty selects the default split: -1 for the first
    /// half of the clusters and +1 for the second half (requires even C).
    std::vector<double> tau_pattern;
    double noise_sd = 1.0;
    /// Source CSV (`cluster,y0,y1`) when kind == explicit_table.
    std::filesystem::path table_path;

    void validate() const;
};

/// Deterministic in (spec, seed). Throws ConfigError on an invalid spec.
Population build_population(const PopulationSpec& spec, std::uint64_t seed);

/// Reads `cluster,y0,y1` (header required). Throws DataError with the row
/// number on malformed rows and ConfigError on invalid populations.
Population load_population_csv(const std::filesystem::path& path);

/// Population-level derived quantities.
struct Estimands {
    double tau = 0.0;    ///< finite-population average treatment effect
    double ybar0 = 0.0;  ///< mean of Y(0)
    double ybar1 = 0.0;  ///< mean of Y(1)
    std::vector<double> tau_c;       ///< per-cluster average effect
    std::vector<double> eps0;        ///< Y(0) - ybar0 per unit
    std::vector<double> eps1;        ///< Y(1) - ybar1 per unit
    std::vector<double> eps0_bar_c;  ///< cluster means of eps0
    std::vector<double> eps1_bar_c;  ///< cluster means of eps1
    std::vector<std::size_t> offsets;  ///< cluster segments, as in Population

    std::size_t unit_count() const { return eps0.size(); }
    std::size_t cluster_count() const { return tau_c.size(); }
    std::size_t cluster_size(std::size_t c) const { return offsets[c + 1] - offsets[c]; }
};

Estimands compute_estimands(const Population& pop);

}  // namespace clusteradj
