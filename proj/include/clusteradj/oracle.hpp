#pragma once

// Exhaustive enumeration of every sampling/assignment configuration of a tiny
// population. Used as ground truth for the closed-form design variances.

#include "clusteradj/design.hpp"
#include "clusteradj/population.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace clusteradj {

inline constexpr std::size_t kOracleMaxUnits = 14;
inline constexpr std::uint64_t kOracleDefaultBudget = 50'000'000;

/// Moments of sqrt(N) (tau_hat - tau) over configurations where the
/// estimator is defined.
struct EstimatorMoments {
    double degenerate_probability = 0.0;  ///< mass of configurations where it is not
    double mean = 0.0;                    ///< conditional on being defined
    double variance = 0.0;
};

struct OracleResult {
    std::uint64_t configurations = 0;  ///< leaves visited

    // Plain linearized statistic and its sampling / assignment split.
    double eta_mean = 0.0;
    double eta_variance = 0.0;
    double s_mean = 0.0, d_mean = 0.0;
    double s2 = 0.0, d2 = 0.0, sd = 0.0;
    double ehw_limit = 0.0;  ///< expected normalized EHW meat
    double lz_limit = 0.0;   ///< expected normalized LZ meat

    // Fixed-effects counterparts; absent when sigma2 = 1/4.
    std::optional<double> eta_fe_mean;
    std::optional<double> eta_fe_variance;
    std::optional<double> ehw_fe_limit;
    std::optional<double> lz_fe_limit;

    EstimatorMoments tau_hat;
    std::optional<EstimatorMoments> tau_hat_fe;
};

/// Number of leaves the enumeration would visit.
double oracle_support_size(const Population& pop, const SamplingDesign& sampling,
                           const AssignmentDesign& assignment);

/// Enumerates cluster inclusion x q_c x unit inclusion x W. W is marginalized
/// for unsampled units since no statistic depends on it. Throws
/// OracleSizeError when M exceeds kOracleMaxUnits or the support exceeds
/// `budget`, and ConfigError for an assignment family without finite support.
OracleResult enumeration_oracle(const Population& pop, const SamplingDesign& sampling,
                                const AssignmentDesign& assignment,
                                std::uint64_t budget = kOracleDefaultBudget);

/// Joint moments of the indicators for two distinct units of one cluster,
/// by enumeration of (cluster inclusion, q_c, R_i, R_j, W_i, W_j).
MomentTable enumerate_indicator_moments(const SamplingDesign& sampling,
                                        const AssignmentDesign& assignment);

/// Fixed set of small populations (M <= max_units) with equal and unequal
/// clusters, heterogeneous and homogeneous effects, and singletons.
struct FixturePopulation {
    std::string id;
    Population population;
};
std::vector<FixturePopulation> fixture_populations(std::size_t max_units, std::uint64_t seed);

struct FixtureRow {
    std::string fixture_id;
    double p_c = 1.0;
    double p_u = 1.0;
    double sigma2 = 0.0;
    std::string model;  ///< "plain" or "fe"
    double formula_value = 0.0;
    double oracle_value = 0.0;

    double discrepancy() const;
    /// |formula - oracle| <= tol * max(1, |oracle|)
    bool agrees(double tol) const;
};

struct OracleGrid {
    std::vector<double> p_c{0.25, 0.5, 1.0};
    std::vector<double> p_u{0.5, 1.0};
    std::vector<double> sigma2{0.0, 0.09, 0.25};
};

/// Formula-vs-enumeration rows for every fixture and grid point. Plain rows
/// use every sigma2; FE rows skip sigma2 = 1/4. Two-point family throughout.
std::vector<FixtureRow> oracle_fixture_rows(const std::vector<FixturePopulation>& fixtures,
                                            const OracleGrid& grid);

void write_fixture_csv(const std::filesystem::path& path, const std::vector<FixtureRow>& rows);

}  // namespace clusteradj
