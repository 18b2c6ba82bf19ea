#pragma once

// Two-stage sampling (clusters, then units within sampled clusters) and
// two-stage assignment (a cluster-level probability q_c, then independent
// unit-level Bernoulli(q_c) treatment), plus their analytic moments.

#include "clusteradj/population.hpp"
#include "clusteradj/rng.hpp"
#include "clusteradj/sample.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace clusteradj {

struct SamplingDesign {
    double p_c = 1.0;  ///< cluster sampling probability, in (0, 1]
    double p_u = 1.0;  ///< unit sampling probability within sampled clusters, in (0, 1]

    void validate() const;
};

enum class AssignmentFamily { degenerate, two_point, beta };

std::string_view family_name(AssignmentFamily f);
AssignmentFamily parse_family(std::string_view name);

/// Distribution of the cluster-level assignment probability q_c. The mean is
/// always 1/2; sigma2 is Var(q_c).
///   degenerate: q_c = 1/2 (sigma2 = 0)
///   two_point:  q_c = 1/2 +/- sigma with probability 1/2 each
///   beta:       q_c ~ Beta(a, a), a = (1 - 4 sigma2) / (8 sigma2)
struct AssignmentDesign {
    double sigma2 = 0.0;
    AssignmentFamily family = AssignmentFamily::degenerate;

    AssignmentDesign() = default;
    /// Throws ConfigError unless sigma2 is in [0, 1/4], the family is
    /// degenerate exactly when sigma2 = 0, and beta has sigma2 in (0, 1/4).
    AssignmentDesign(double sigma2, AssignmentFamily family);

    /// two_point for sigma2 > 0, degenerate for sigma2 = 0.
    static AssignmentDesign two_point_or_degenerate(double sigma2);

    void validate() const;

    /// Beta shape parameter (beta family only).
    double beta_shape() const;

    /// E[q^j (1 - q)^k], exact for every family.
    double moment(int j, int k) const;

    /// Finite support of q as (value, probability) pairs. Empty for beta.
    std::vector<std::pair<double, double>> support() const;

    double draw_q(Engine& eng) const;
};

/// Raw moments of the assignment-probability distribution that enter the
/// fixed-effects variance.
struct KappaMoments {
    double eq1q = 0.25;      ///< E[q(1-q)] = (1 - 4 sigma2) / 4
    double kappa = 0.0;      ///< Var(q(1-q))
    double kappa_31 = 0.0625;  ///< E[q^3 (1-q)]
    double kappa_13 = 0.0625;  ///< E[q (1-q)^3]
    double kappa_22 = 0.0625;  ///< E[q^2 (1-q)^2] = kappa + eq1q^2
};

/// Throws ConfigError for beta with sigma2 in {0, 1/4}.
KappaMoments kappa_moments(const AssignmentDesign& assignment);

/// Mean, variance and within-cluster covariance of one indicator.
struct MomentRow {
    double mean = 0.0;
    double variance = 0.0;
    double within_cov = 0.0;
    double between_cov = 0.0;
};

struct MomentTable {
    MomentRow r;   ///< sampling indicator R_i
    MomentRow w;   ///< treatment indicator W_i
    MomentRow rw;  ///< product R_i W_i
};

MomentTable analytic_moments(const SamplingDesign& sampling, const AssignmentDesign& assignment);

/// One sampled unit as seen by an estimator.
struct SampleRecord {
    std::size_t unit = 0;         ///< index into the population
    std::int64_t cluster = 0;     ///< 1-based cluster id
    int w = 0;
    double y = 0.0;
};

/// One full realization of the design. `sample` is the estimator-facing view;
/// the remaining members are oracle metadata.
struct SampleDraw {
    Sample sample;
    std::vector<std::size_t> unit_index;  ///< population unit per sample row
    std::vector<std::uint8_t> r;          ///< R for every population unit
    std::vector<std::uint8_t> w;          ///< W for every population unit
    std::vector<double> q;                ///< realized q_c per cluster
    std::vector<std::uint8_t> cluster_sampled;

    std::size_t n() const { return sample.size(); }
    std::size_t n1() const;
    std::size_t n0() const { return n() - n1(); }
    std::vector<SampleRecord> records() const;
};

/// Draws R and W for every population unit. R and W use independent
/// sub-streams of `seed`, so the assignment does not depend on the sampling.
SampleDraw draw_sample(const Population& pop, const SamplingDesign& sampling,
                       const AssignmentDesign& assignment, std::uint64_t seed);

/// Same distribution over the sampled units as draw_sample, but only the
/// sampled units are touched: Bernoulli sweep for large p_u, geometric
/// skipping for small p_u. Used by the Monte Carlo harness.
Sample draw_sampled_units(const Population& pop, const SamplingDesign& sampling,
                          const AssignmentDesign& assignment, Engine& eng);

/// Expected sample size M p_c p_u.
double expected_sample_size(const Population& pop, const SamplingDesign& sampling);

}  // namespace clusteradj
