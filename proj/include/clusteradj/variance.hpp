#pragma once

// Sample-based variance estimators for tau_hat (homoskedastic OLS, Moulton/
// Kloek, EHW, Liang-Zeger, cluster-adjusted) and the exact design variances
// and large-sample limits computed from the full population.

#include "clusteradj/design.hpp"
#include "clusteradj/estimators.hpp"
#include "clusteradj/population.hpp"
#include "clusteradj/sample.hpp"

#include <cmath>
#include <cstddef>
#include <optional>

namespace clusteradj {

// ---------------------------------------------------------------------------
// Sample-based estimators
// ---------------------------------------------------------------------------

/// Homoskedastic OLS variance sigma2_hat / sxx, sigma2_hat = sum(e^2) / N.
double v_ols(const FitResult& fit);

/// Eicker-Huber-White sandwich, tau coordinate: sum((e x)^2) / sxx^2.
double v_ehw(const FitResult& fit, const Sample& s);

/// Liang-Zeger sandwich with cluster score sums, no degrees-of-freedom
/// correction: sum_c (sum_{i in c} e_i x_i)^2 / sxx^2.
double v_lz(const FitResult& fit, const Sample& s);

/// Moulton/Kloek inflation of the OLS variance: v_ols (1 + rho_eps rho_w N / C)
/// with C the number of observed clusters.
double v_kloek(const FitResult& fit, const Sample& s, double rho_eps, double rho_w);

struct CcaResult {
    bool applicable = false;   ///< at least one cluster has both arms
    double value = 0.0;        ///< max(raw, 0); meaningful only when applicable
    double raw = 0.0;          ///< v_lz minus the heterogeneity correction
    double correction = 0.0;   ///< (1/N^2) sum_c N_c^2 (tau_hat_c - tau_hat)^2
    bool floored = false;      ///< raw was negative
    std::size_t used_clusters = 0;
    std::size_t dropped_clusters = 0;  ///< clusters missing an arm
};

/// Cluster-adjusted variance: LZ minus the between-cluster treatment-effect
/// heterogeneity term, over clusters where both arms are observed. Requires
/// a plain fit (throws std::invalid_argument for fixed effects).
CcaResult v_cca(const FitResult& fit, const Sample& s);

struct VarianceReport {
    double v_ols = 0.0;
    double v_ehw = 0.0;
    double v_lz = 0.0;
    std::optional<double> v_kloek;  ///< plain model with defined diagnostics
    std::optional<CcaResult> cca;   ///< plain model only

    static double se(double v) { return std::sqrt(v); }
};

VarianceReport variance_report(const FitResult& fit, const Sample& s,
                               std::optional<double> rho_eps = std::nullopt,
                               std::optional<double> rho_w = std::nullopt);

// ---------------------------------------------------------------------------
// Population functionals
// ---------------------------------------------------------------------------

/// Exact variance of the normalized linearized statistic.
struct ExactVariance {
    double total = 0.0;
    double unit_term = 0.0;     ///< (1/M) sum over units
    double cluster_term = 0.0;  ///< (p_u/M) sum over clusters of M_c^2 (...)
    std::optional<double> s_part;  ///< E[S^2], sampling component (plain)
    std::optional<double> d_part;  ///< E[D^2], assignment component (plain)
};

/// Plain model, in the form obtained from the second moments of the sampling
/// and assignment components. unit_term/cluster_term and s_part/d_part are
/// computed along separate algebraic routes.
ExactVariance exact_variance_plain(const Estimands& est, const SamplingDesign& sampling,
                                   const AssignmentDesign& assignment);

/// Plain model with the per-unit assignment term +4 p_u sigma2 (e1 - e0)^2,
/// as it is commonly printed. Kept for side-by-side reporting only.
ExactVariance exact_variance_plain_printed(const Estimands& est, const SamplingDesign& sampling,
                                           const AssignmentDesign& assignment);

/// Fixed-effects model. With a = E[q(1-q)], d = e1 - e0, g = e1 - e1bar_c,
/// h = e0 - e0bar_c, the per-unit term is
///   [(a - (3 + p_u) k22) d^2 + k31 g^2 + 2 k22 g h + k13 h^2
///     + 2 d ((k22 - k31) g + (k13 - k22) h)] / a^2
/// and the cluster term p_u M_c^2 [(1 - p_c) + kappa / a^2] (e1bar - e0bar)^2.
/// Throws ConfigError for sigma2 = 1/4.
ExactVariance exact_variance_fe(const Estimands& est, const SamplingDesign& sampling,
                                const AssignmentDesign& assignment);

/// Fixed-effects variance without the same-unit cross moments and with
/// E[(q(1-q))^2] in place of E[(W-q)^4]. Kept for side-by-side reporting; it
/// coincides with exact_variance_fe only when the within-cluster residual
/// deviations vanish and sigma2 = 0.
ExactVariance exact_variance_fe_printed(const Estimands& est, const SamplingDesign& sampling,
                                        const AssignmentDesign& assignment);

ExactVariance exact_variance(const Estimands& est, const SamplingDesign& sampling,
                             const AssignmentDesign& assignment, ModelKind kind);

struct LimitFunctionals {
    double v_ehw_limit = 0.0;
    double v_lz_limit = 0.0;
    double lz_minus_true = 0.0;  ///< (p_c p_u / M) sum_c M_c^2 (e1bar - e0bar)^2
    double lz_minus_ehw = 0.0;   ///< v_lz_limit - v_ehw_limit
};

/// Probability limits of N v_ehw and N v_lz for the plain model.
LimitFunctionals limit_functionals(const Estimands& est, const SamplingDesign& sampling,
                                   const AssignmentDesign& assignment);

/// Same for the fixed-effects model, built from per-unit and within-cluster
/// pair moments of R (W - q) times the adjusted residual.
LimitFunctionals limit_functionals_fe(const Estimands& est, const SamplingDesign& sampling,
                                      const AssignmentDesign& assignment);

/// The LZ-minus-EHW difference with a leading 2 p_u on the per-unit sum, as
/// commonly printed; differs from limit_functionals().lz_minus_ehw.
double lz_minus_ehw_printed(const Estimands& est, const SamplingDesign& sampling,
                            const AssignmentDesign& assignment);

/// (p_c p_u / M) sum_c M_c^2 (e1bar_c - e0bar_c)^2.
double lz_gap(const Estimands& est, const SamplingDesign& sampling);

}  // namespace clusteradj
