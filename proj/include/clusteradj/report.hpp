#pragma once

// JSON and CSV output for simulation reports and single-dataset estimates,
// plus the decision guidance attached to an estimate.

#include "clusteradj/dataset.hpp"
#include "clusteradj/diagnostics.hpp"
#include "clusteradj/estimators.hpp"
#include "clusteradj/montecarlo.hpp"
#include "clusteradj/variance.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace clusteradj {

nlohmann::json to_json(const CoverageReport& report);

/// One row per model x estimator.
void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& report);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct AnalysisOptions {
    bool fixed_effects = false;  ///< also fit the cluster fixed-effects model
    /// Subset of ols, ehw, lz, kloek, cca; empty means all.
    std::set<std::string> estimators;
    double confidence = 0.95;
    // Design facts declared by the user; the data cannot answer these.
    std::optional<bool> sampling_clustered;
    std::optional<bool> assignment_clustered;
    std::optional<bool> all_clusters_sampled;
};

struct ModelEstimate {
    ModelKind model = ModelKind::plain;
    std::optional<FitResult> fit;  ///< empty when the model is not estimable
    std::string error;
    std::optional<VarianceReport> variances;
    DiagnosticsReport diagnostics;
};

struct EstimateReport {
    std::string source;
    std::size_t n = 0, n1 = 0, n0 = 0;
    std::size_t clusters = 0;
    std::size_t min_cluster_size = 0, max_cluster_size = 0;
    double critical = 0.0;
    std::vector<ModelEstimate> models;
    std::vector<std::string> guidance;
};

/// Fits the requested models and computes every applicable estimate.
EstimateReport analyze(const AnalysisInput& input, const AnalysisOptions& options);

/// Decision guidance keyed to the declared design facts and, where it
/// matters, to whether the clustering adjustment changes the answer.
std::vector<std::string> decision_guidance(const EstimateReport& report, const AnalysisOptions& options);

nlohmann::json to_json(const EstimateReport& report, const AnalysisOptions& options);

}  // namespace clusteradj
