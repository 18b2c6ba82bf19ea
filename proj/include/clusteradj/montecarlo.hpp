#pragma once

// Replication harness: draw repeatedly from one fixed population, fit both
// models, and aggregate confidence-interval coverage, standard errors and
// empirical variances against the exact design variances.

#include "clusteradj/design.hpp"
#include "clusteradj/estimators.hpp"
#include "clusteradj/population.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clusteradj {

enum class EstimatorKind { ols, ehw, lz, cca };

std::string_view estimator_name(EstimatorKind k);
EstimatorKind parse_estimator(std::string_view name);

struct ExperimentConfig {
    PopulationSpec population;
    /// Seed for the population; defaults to a stream of `seed`.
    std::optional<std::uint64_t> population_seed;
    SamplingDesign sampling;
    AssignmentDesign assignment;
    std::size_t replications = 2000;
    std::vector<ModelKind> models{ModelKind::plain, ModelKind::fixed_effects};
    std::vector<EstimatorKind> estimators{EstimatorKind::ols, EstimatorKind::ehw, EstimatorKind::lz,
                                          EstimatorKind::cca};
    std::uint64_t seed = 20240101;
    double confidence = 0.95;
    unsigned threads = 0;  ///< 0 = hardware concurrency

    void validate() const;
    std::uint64_t resolved_population_seed() const;
};

/// Two-sided normal critical value for `confidence`.
double critical_value(double confidence);

struct CoverageRow {
    ModelKind model = ModelKind::plain;
    EstimatorKind estimator = EstimatorKind::ehw;
    bool applicable = true;
    std::size_t valid = 0;          ///< replications where the estimator was defined
    double coverage = 0.0;
    double coverage_se = 0.0;       ///< sqrt(p (1 - p) / valid)
    double mean_se = 0.0;
    double mean_se_se = 0.0;
    double mean_scaled_variance = 0.0;     ///< mean of N * v_hat
    double mean_scaled_variance_se = 0.0;
    std::size_t floored = 0;        ///< CCA replications floored at zero
};

struct ModelSummary {
    ModelKind model = ModelKind::plain;
    std::size_t valid = 0;
    std::size_t degenerate = 0;
    double mean_tau_hat = 0.0;
    double mean_tau_hat_se = 0.0;
    double sd_tau_hat = 0.0;
    double empirical_variance = 0.0;     ///< Var(sqrt(N) (tau_hat - tau))
    double empirical_variance_se = 0.0;
    std::optional<double> exact_variance;
    std::optional<double> ehw_limit;
    std::optional<double> lz_limit;
    std::optional<double> lz_gap;
};

struct CoverageReport {
    ExperimentConfig config;
    double tau = 0.0;
    double critical = 0.0;
    std::size_t population_units = 0;
    std::size_t population_clusters = 0;
    double expected_sample_size = 0.0;
    double mean_sample_size = 0.0;
    std::vector<ModelSummary> models;
    std::vector<CoverageRow> rows;
    std::vector<std::string> warnings;

    const CoverageRow* find(ModelKind m, EstimatorKind e) const;
    const ModelSummary* find(ModelKind m) const;
};

/// Builds the population from the config and runs the replications.
CoverageReport run_experiment(const ExperimentConfig& config);

/// Same on an already constructed population (config.population ignored).
CoverageReport run_experiment(const ExperimentConfig& config, const Population& pop);

struct DesignPoint {
    SamplingDesign sampling;
    AssignmentDesign assignment;
};

struct ValidationRow {
    DesignPoint point;
    ModelKind model = ModelKind::plain;
    std::size_t valid = 0;
    double empirical_variance = 0.0;
    double empirical_variance_se = 0.0;
    double exact_variance = 0.0;
    bool exact_agrees = false;  ///< within 3 MC standard errors
    double mean_scaled_lz = 0.0;
    double mean_scaled_lz_se = 0.0;
    double lz_limit = 0.0;
    bool lz_agrees = false;
    /// Plain model with p_c = 1 only.
    std::optional<double> mean_scaled_cca;
    std::optional<double> mean_scaled_cca_se;
    std::optional<bool> cca_agrees;
};

/// Runs `config` at each design point on one shared population and compares
/// the empirical aggregates with the exact and limiting functionals.
std::vector<ValidationRow> variance_validation(const ExperimentConfig& config, const Population& pop,
                                               const std::vector<DesignPoint>& grid);

}  // namespace clusteradj
