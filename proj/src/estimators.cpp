#include "clusteradj/estimators.hpp"

#include "clusteradj/error.hpp"
#include "clusteradj/kernels.hpp"

#include <string>

namespace clusteradj {

std::string_view model_name(ModelKind k) {
    return k == ModelKind::plain ? "plain" : "fe";
}

namespace {

struct ArmSums {
    std::size_t n1 = 0;
    double sum1 = 0.0;  // sum of Y over treated rows
    double sum_all = 0.0;
};

// Arm counts and sums for a span of rows; w is 0/1 so sum(w) counts treated
// rows and dot(w, y) sums their outcomes.
ArmSums arm_sums(std::span<const double> y, std::span<const double> w) {
    ArmSums a;
    a.n1 = static_cast<std::size_t>(kernels::sum(w) + 0.5);
    a.sum1 = kernels::dot(w, y);
    a.sum_all = kernels::sum(y);
    return a;
}

void per_cluster_counts(const Sample& s, FitResult& f) {
    const std::size_t G = s.clusters();
    f.n_c1.resize(G);
    f.n_c0.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
        f.n_c1[g] = static_cast<std::size_t>(kernels::sum(s.w_of(g)) + 0.5);
        f.n_c0[g] = s.cluster_size(g) - f.n_c1[g];
    }
}

}  // namespace

FitResult fit_plain(const Sample& s) {
    FitResult f;
    f.kind = ModelKind::plain;
    const std::size_t n = s.size();
    const ArmSums a = arm_sums(s.y, s.w);
    f.n1 = a.n1;
    f.n0 = n - a.n1;
    if (f.n1 == 0 || f.n0 == 0) {
        throw DegenerateSampleError("sample has an empty treatment arm (N1 = " +
                                    std::to_string(f.n1) + ", N0 = " + std::to_string(f.n0) + ")");
    }
    const double mean1 = a.sum1 / static_cast<double>(f.n1);
    const double mean0 = (a.sum_all - a.sum1) / static_cast<double>(f.n0);
    f.tau_hat = mean1 - mean0;
    f.alpha = mean0;

    f.residuals.resize(n);
    kernels::affine_residual(s.y, s.w, f.alpha, f.tau_hat, f.residuals);
    f.regressor.resize(n);
    kernels::shift(s.w, static_cast<double>(f.n1) / static_cast<double>(n), f.regressor);
    f.sxx = kernels::dot(f.regressor, f.regressor);
    per_cluster_counts(s, f);
    return f;
}

FitResult fit_fixed_effects(const Sample& s) {
    FitResult f;
    f.kind = ModelKind::fixed_effects;
    const std::size_t n = s.size();
    const std::size_t G = s.clusters();
    per_cluster_counts(s, f);
    for (std::size_t g = 0; g < G; ++g) f.n1 += f.n_c1[g];
    f.n0 = n - f.n1;

    std::vector<double> wbar(G), ybar(G);
    bool any_variation = false;
    f.regressor.resize(n);
    for (std::size_t g = 0; g < G; ++g) {
        const double m = static_cast<double>(s.cluster_size(g));
        wbar[g] = static_cast<double>(f.n_c1[g]) / m;
        ybar[g] = kernels::sum(s.y_of(g)) / m;
        any_variation = any_variation || (f.n_c1[g] > 0 && f.n_c0[g] > 0);
        kernels::shift(s.w_of(g), wbar[g],
                       std::span<double>(f.regressor).subspan(s.offsets[g], s.cluster_size(g)));
    }
    if (!any_variation) {
        throw SingularDesignError("no observed cluster contains both treated and control units");
    }
    f.sxx = kernels::dot(f.regressor, f.regressor);
    f.tau_hat = kernels::dot(f.regressor, s.y) / f.sxx;

    f.alpha_c.resize(G);
    f.residuals.resize(n);
    for (std::size_t g = 0; g < G; ++g) {
        f.alpha_c[g] = ybar[g] - f.tau_hat * wbar[g];
        kernels::affine_residual(
            s.y_of(g), s.w_of(g), f.alpha_c[g], f.tau_hat,
            std::span<double>(f.residuals).subspan(s.offsets[g], s.cluster_size(g)));
    }
    return f;
}

FitResult fit(const Sample& s, ModelKind kind) {
    return kind == ModelKind::plain ? fit_plain(s) : fit_fixed_effects(s);
}

ClusterEffects cluster_effects(const Sample& s) {
    ClusterEffects e;
    for (std::size_t g = 0; g < s.clusters(); ++g) {
        const ArmSums a = arm_sums(s.y_of(g), s.w_of(g));
        const std::size_t m = s.cluster_size(g);
        if (a.n1 == 0 || a.n1 == m) {
            e.uncorrectable.push_back(g);
            continue;
        }
        const double mean1 = a.sum1 / static_cast<double>(a.n1);
        const double mean0 = (a.sum_all - a.sum1) / static_cast<double>(m - a.n1);
        e.cluster.push_back(g);
        e.tau_hat_c.push_back(mean1 - mean0);
        e.n_c.push_back(m);
    }
    return e;
}

}  // namespace clusteradj
