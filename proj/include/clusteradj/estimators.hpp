#pragma once

// Least-squares slope estimators for a binary treatment: the plain regression
// on (1, W) and the regression with one dummy per cluster.

#include "clusteradj/sample.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace clusteradj {

enum class ModelKind { plain, fixed_effects };

std::string_view model_name(ModelKind k);

struct FitResult {
    ModelKind kind = ModelKind::plain;
    double tau_hat = 0.0;
    double alpha = 0.0;              ///< plain intercept (control mean)
    std::vector<double> alpha_c;     ///< per-cluster intercepts (fixed effects)
    std::vector<double> residuals;   ///< per sample row
    /// Treatment with the nuisance regressors partialled out: W - mean(W)
    /// for the plain model, W - mean_c(W) for fixed effects. The tau row of
    /// (X'X)^{-1} X' is regressor / sxx for either model.
    std::vector<double> regressor;
    double sxx = 0.0;  ///< sum of squared `regressor`
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    std::vector<std::size_t> n_c1;  ///< per observed cluster
    std::vector<std::size_t> n_c0;
};

/// tau_hat = mean(Y | W=1) - mean(Y | W=0). Throws DegenerateSampleError
/// when either arm is empty.
FitResult fit_plain(const Sample& s);

/// Within-transformation estimator with cluster intercepts. Throws
/// SingularDesignError when no observed cluster has both arms.
FitResult fit_fixed_effects(const Sample& s);

FitResult fit(const Sample& s, ModelKind kind);

/// Per-cluster difference in arm means.
struct ClusterEffects {
    std::vector<std::size_t> cluster;   ///< observed-cluster index (into Sample)
    std::vector<double> tau_hat_c;
    std::vector<std::size_t> n_c;
    std::vector<std::size_t> uncorrectable;  ///< observed clusters missing an arm
};

ClusterEffects cluster_effects(const Sample& s);

}  // namespace clusteradj
