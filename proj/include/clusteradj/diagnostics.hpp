#pragma once

// Within-cluster correlation diagnostics: the between-cluster share of a
// vector's variance, measured by demeaning with and without cluster means.

#include "clusteradj/estimators.hpp"
#include "clusteradj/sample.hpp"

#include <optional>
#include <span>
#include <string>

namespace clusteradj {

/// [Var(v) - Var(v - cluster mean)] / Var(v) with variances divided by N.
/// `offsets` delimits contiguous clusters. Throws UndefinedDiagnosticError
/// when Var(v) is zero or there are fewer than two values.
double within_cluster_correlation(std::span<const double> v, std::span<const std::size_t> offsets);

struct DiagnosticsReport {
    std::optional<double> rho_eps;   ///< residuals
    std::optional<double> rho_w;     ///< treatment indicator
    std::optional<double> rho_epsw;  ///< residual times grand-demeaned treatment
    /// Reason for each diagnostic that is undefined, empty otherwise.
    std::string rho_eps_error, rho_w_error, rho_epsw_error;
};

/// Applies within_cluster_correlation to the residuals, to W, and to the
/// product of the residuals with W - mean(W). Undefined components are left
/// empty with the reason recorded instead of throwing.
DiagnosticsReport full_diagnostics(const FitResult& fit, const Sample& s);

}  // namespace clusteradj
