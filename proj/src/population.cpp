#include "clusteradj/population.hpp"

#include "clusteradj/error.hpp"
#include "clusteradj/kernels.hpp"
#include "clusteradj/rng.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace clusteradj {

std::vector<std::size_t> Population::cluster_sizes() const {
    std::vector<std::size_t> out(cluster_count());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = cluster_size(c);
    return out;
}

Population Population::from_sorted(std::vector<double> y0, std::vector<double> y1,
                                   std::span<const std::size_t> sizes) {
    Population pop;
    pop.y0_ = std::move(y0);
    pop.y1_ = std::move(y1);
    if (sizes.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("population: too many clusters");
    }
    pop.offsets_.assign(sizes.size() + 1, 0);
    for (std::size_t c = 0; c < sizes.size(); ++c) pop.offsets_[c + 1] = pop.offsets_[c] + sizes[c];
    pop.cluster_.resize(pop.y0_.size());
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        std::fill(pop.cluster_.begin() + static_cast<std::ptrdiff_t>(pop.offsets_[c]),
                  pop.cluster_.begin() + static_cast<std::ptrdiff_t>(pop.offsets_[c + 1]),
                  static_cast<std::uint32_t>(c));
    }
    return pop;
}

Population Population::from_table(std::span<const UnitRow> rows) {
    if (rows.empty()) throw ConfigError("population table is empty");
    std::int64_t max_id = 0;
    for (const auto& r : rows) {
        if (r.cluster < 1) {
            throw ConfigError("population table: cluster id " + std::to_string(r.cluster) +
                              " is not in 1..C");
        }
        if (!std::isfinite(r.y0) || !std::isfinite(r.y1)) {
            throw ConfigError("population table: non-finite potential outcome");
        }
        max_id = std::max(max_id, r.cluster);
    }
    std::vector<std::size_t> sizes(static_cast<std::size_t>(max_id), 0);
    for (const auto& r : rows) ++sizes[static_cast<std::size_t>(r.cluster - 1)];
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        if (sizes[c] == 0) {
            throw ConfigError("population table: cluster id " + std::to_string(c + 1) +
                              " has no units (ids must cover 1..C)");
        }
    }
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].cluster < rows[b].cluster; });
    std::vector<double> y0(rows.size()), y1(rows.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        y0[k] = rows[order[k]].y0;
        y1[k] = rows[order[k]].y1;
    }
    return from_sorted(std::move(y0), std::move(y1), sizes);
}

void PopulationSpec::validate() const {
    if (kind == GeneratorKind::explicit_table) {
        if (table_path.empty()) throw ConfigError("population: explicit table requires a CSV path");
        return;
    }
    if (cluster_count == 0) throw ConfigError("population.clusters must be positive");
    if (units_per_cluster.size() != 1 && units_per_cluster.size() != cluster_count) {
        throw ConfigError("population.units_per_cluster needs 1 or C entries");
    }
    for (auto m : units_per_cluster) {
        if (m == 0) throw ConfigError("population.units_per_cluster must be >= 1");
    }
    if (tau_pattern.empty()) {
        if (cluster_count % 2 != 0) {
            throw ConfigError("population.clusters must be even for the default -1/+1 effect split");
        }
    } else if (tau_pattern.size() != cluster_count) {
        throw ConfigError("population.tau_pattern needs one entry per cluster");
    }
    for (double t : tau_pattern) {
        if (!std::isfinite(t)) throw ConfigError("population.tau_pattern has a non-finite entry");
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw ConfigError("population.noise_sd must be finite and >= 0");
    }
}

Population build_population(const PopulationSpec& spec, std::uint64_t seed) {
    spec.validate();
    if (spec.kind == GeneratorKind::explicit_table) return load_population_csv(spec.table_path);

    const std::size_t C = spec.cluster_count;
    std::vector<std::size_t> sizes(C);
    for (std::size_t c = 0; c < C; ++c) {
        sizes[c] = spec.units_per_cluster.size() == 1 ? spec.units_per_cluster[0]
                                                      : spec.units_per_cluster[c];
    }
    const std::size_t M = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});

    std::vector<double> tau_c = spec.tau_pattern;
    if (tau_c.empty()) {
        tau_c.resize(C);
        for (std::size_t c = 0; c < C; ++c) tau_c[c] = c < C / 2 ? -1.0 : 1.0;
    }

    // Marsaglia polar method (libstdc++ normal_distribution) over mt19937_64.
    Engine eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> y0(M), y1(M);
    std::size_t i = 0;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < sizes[c]; ++k, ++i) {
            const double nu = spec.noise_sd == 0.0 ? 0.0 : spec.noise_sd * normal(eng);
            y0[i] = nu;
            y1[i] = tau_c[c] + nu;
        }
    }
    return Population::from_sorted(std::move(y0), std::move(y1), sizes);
}

Population load_population_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open population file '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::size_t> cols;
    std::vector<UnitRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (line_no == 1) view = csv::strip_bom(view);
        if (csv::trim(view).empty()) continue;
        auto fields = csv::split(view);
        if (cols.empty()) {
            cols = csv::locate_columns(fields, {"cluster", "y0", "y1"});
            continue;
        }
        const std::size_t need = *std::max_element(cols.begin(), cols.end()) + 1;
        if (fields.size() < need) {
            throw DataError(csv::row_context(line_no) + ": expected at least " +
                            std::to_string(need) + " fields");
        }
        UnitRow r;
        r.cluster = csv::parse_integer(fields[cols[0]], "cluster", line_no);
        r.y0 = csv::parse_real(fields[cols[1]], "y0", line_no);
        r.y1 = csv::parse_real(fields[cols[2]], "y1", line_no);
        rows.push_back(r);
    }
    if (cols.empty()) throw DataError("population file '" + path.string() + "' has no header");
    return Population::from_table(rows);
}

Estimands compute_estimands(const Population& pop) {
    Estimands e;
    const std::size_t M = pop.unit_count();
    const std::size_t C = pop.cluster_count();
    const auto off = pop.offsets();
    e.offsets.assign(off.begin(), off.end());

    e.ybar0 = kernels::sum(pop.y0()) / static_cast<double>(M);
    e.ybar1 = kernels::sum(pop.y1()) / static_cast<double>(M);
    e.tau = e.ybar1 - e.ybar0;

    e.eps0.resize(M);
    e.eps1.resize(M);
    kernels::shift(pop.y0(), e.ybar0, e.eps0);
    kernels::shift(pop.y1(), e.ybar1, e.eps1);

    e.tau_c.resize(C);
    e.eps0_bar_c.resize(C);
    e.eps1_bar_c.resize(C);
    std::vector<double> s0(C), s1(C), r0(C), r1(C);
    kernels::segment_sums(pop.y0(), off, s0);
    kernels::segment_sums(pop.y1(), off, s1);
    kernels::segment_sums(e.eps0, off, r0);
    kernels::segment_sums(e.eps1, off, r1);
    for (std::size_t c = 0; c < C; ++c) {
        const double m = static_cast<double>(pop.cluster_size(c));
        e.tau_c[c] = s1[c] / m - s0[c] / m;
        e.eps0_bar_c[c] = r0[c] / m;
        e.eps1_bar_c[c] = r1[c] / m;
    }
    return e;
}

}  // namespace clusteradj
