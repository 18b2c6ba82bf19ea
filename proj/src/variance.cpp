#include "clusteradj/variance.hpp"

#include "clusteradj/error.hpp"
#include "clusteradj/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace clusteradj {

// ---------------------------------------------------------------------------
// Sample-based estimators
// ---------------------------------------------------------------------------

double v_ols(const FitResult& fit) {
    const double n = static_cast<double>(fit.residuals.size());
    const double sigma2 = kernels::dot(fit.residuals, fit.residuals) / n;
    return sigma2 / fit.sxx;
}

namespace {

std::vector<double> scores(const FitResult& fit) {
    std::vector<double> sc(fit.residuals.size());
    kernels::multiply(fit.residuals, fit.regressor, sc);
    return sc;
}

}  // namespace

double v_ehw(const FitResult& fit, const Sample& s) {
    (void)s;
    if (fit.n1 == 0 || fit.n0 == 0) throw DegenerateSampleError("v_ehw: empty treatment arm");
    const auto sc = scores(fit);
    return kernels::dot(sc, sc) / (fit.sxx * fit.sxx);
}

double v_lz(const FitResult& fit, const Sample& s) {
    if (fit.n1 == 0 || fit.n0 == 0) throw DegenerateSampleError("v_lz: empty treatment arm");
    const auto sc = scores(fit);
    std::vector<double> per_cluster(s.clusters());
    kernels::segment_sums(sc, s.offsets, per_cluster);
    return kernels::dot(per_cluster, per_cluster) / (fit.sxx * fit.sxx);
}

double v_kloek(const FitResult& fit, const Sample& s, double rho_eps, double rho_w) {
    const double n = static_cast<double>(s.size());
    const double c = static_cast<double>(s.clusters());
    return v_ols(fit) * (1.0 + rho_eps * rho_w * n / c);
}

CcaResult v_cca(const FitResult& fit, const Sample& s) {
    if (fit.kind != ModelKind::plain) {
        throw std::invalid_argument("v_cca is defined for the plain (no fixed effects) model");
    }
    CcaResult r;
    const ClusterEffects ce = cluster_effects(s);
    r.used_clusters = ce.cluster.size();
    r.dropped_clusters = ce.uncorrectable.size();
    if (ce.cluster.empty()) return r;
    r.applicable = true;

    const double n = static_cast<double>(s.size());
    std::vector<double> terms(ce.cluster.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const double nc = static_cast<double>(ce.n_c[k]);
        const double dev = ce.tau_hat_c[k] - fit.tau_hat;
        terms[k] = nc * nc * dev * dev;
    }
    r.correction = kernels::sum(terms) / (n * n);
    r.raw = v_lz(fit, s) - r.correction;
    r.floored = r.raw < 0.0;
    r.value = std::max(r.raw, 0.0);
    return r;
}

VarianceReport variance_report(const FitResult& fit, const Sample& s,
                               std::optional<double> rho_eps, std::optional<double> rho_w) {
    VarianceReport v;
    v.v_ols = v_ols(fit);
    v.v_ehw = v_ehw(fit, s);
    v.v_lz = v_lz(fit, s);
    if (fit.kind == ModelKind::plain) {
        if (rho_eps && rho_w) v.v_kloek = v_kloek(fit, s, *rho_eps, *rho_w);
        v.cca = v_cca(fit, s);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Population functionals
// ---------------------------------------------------------------------------

namespace {

// Sums over units and clusters shared by the plain-model functionals.
struct PlainSums {
    double m = 0.0;
    double e11 = 0.0, e00 = 0.0, e10 = 0.0;  // sum e1^2, e0^2, e1 e0
    double dd = 0.0, pp = 0.0;               // sum (e1-e0)^2, (e1+e0)^2
    double cdd = 0.0, cpp = 0.0;             // sum_c M_c^2 (e1bar -/+ e0bar)^2
};

std::vector<double> difference(std::span<const double> a, std::span<const double> b, double sign) {
    // a - sign * b
    std::vector<double> out(a.size());
    kernels::affine_residual(a, b, 0.0, sign, out);
    return out;
}

void cluster_sums(const Estimands& est, double& cdd, double& cpp) {
    const std::size_t C = est.cluster_count();
    std::vector<double> td(C), tp(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double mc = static_cast<double>(est.cluster_size(c));
        const double dm = est.eps1_bar_c[c] - est.eps0_bar_c[c];
        const double pm = est.eps1_bar_c[c] + est.eps0_bar_c[c];
        td[c] = mc * mc * dm * dm;
        tp[c] = mc * mc * pm * pm;
    }
    cdd = kernels::sum(td);
    cpp = kernels::sum(tp);
}

PlainSums plain_sums(const Estimands& est) {
    PlainSums s;
    s.m = static_cast<double>(est.unit_count());
    s.e11 = kernels::dot(est.eps1, est.eps1);
    s.e00 = kernels::dot(est.eps0, est.eps0);
    s.e10 = kernels::dot(est.eps1, est.eps0);
    const auto d = difference(est.eps1, est.eps0, 1.0);
    const auto p = difference(est.eps1, est.eps0, -1.0);
    s.dd = kernels::dot(d, d);
    s.pp = kernels::dot(p, p);
    cluster_sums(est, s.cdd, s.cpp);
    return s;
}

// Additional sums for the fixed-effects functionals: d = e1 - e0,
// g = e1 - e1bar_c, h = e0 - e0bar_c.
struct FeSums {
    double m = 0.0;
    double dd = 0.0, gg = 0.0, hh = 0.0, gh = 0.0, dg = 0.0, dh = 0.0;
    double cdd = 0.0, cpp = 0.0;
};

FeSums fe_sums(const Estimands& est) {
    FeSums s;
    const std::size_t M = est.unit_count();
    s.m = static_cast<double>(M);
    const auto d = difference(est.eps1, est.eps0, 1.0);
    std::vector<double> g(M), h(M);
    for (std::size_t c = 0; c < est.cluster_count(); ++c) {
        const std::size_t lo = est.offsets[c], len = est.cluster_size(c);
        kernels::shift(std::span<const double>(est.eps1).subspan(lo, len), est.eps1_bar_c[c],
                       std::span<double>(g).subspan(lo, len));
        kernels::shift(std::span<const double>(est.eps0).subspan(lo, len), est.eps0_bar_c[c],
                       std::span<double>(h).subspan(lo, len));
    }
    s.dd = kernels::dot(d, d);
    s.gg = kernels::dot(g, g);
    s.hh = kernels::dot(h, h);
    s.gh = kernels::dot(g, h);
    s.dg = kernels::dot(d, g);
    s.dh = kernels::dot(d, h);
    cluster_sums(est, s.cdd, s.cpp);
    return s;
}

void require_fe_design(const AssignmentDesign& a) {
    a.validate();
    if (a.sigma2 >= 0.25) {
        throw ConfigError(
            "fixed-effects variance needs sigma2 < 1/4: perfectly correlated within-cluster "
            "assignment leaves no within-cluster treatment variation");
    }
}

}  // namespace

ExactVariance exact_variance_plain(const Estimands& est, const SamplingDesign& sampling,
                                   const AssignmentDesign& assignment) {
    sampling.validate();
    assignment.validate();
    const PlainSums s = plain_sums(est);
    const double pc = sampling.p_c, pu = sampling.p_u, s2 = assignment.sigma2;

    ExactVariance v;
    // Coefficient form: squares and cross product of e1, e0.
    const double sq = 2.0 - pu * (1.0 + 4.0 * s2);
    v.unit_term = (sq * (s.e11 + s.e00) + pu * (2.0 - 8.0 * s2) * s.e10) / s.m;
    v.cluster_term = pu / s.m * ((1.0 - pc) * s.cdd + 4.0 * s2 * s.cpp);
    v.total = v.unit_term + v.cluster_term;
    // Sampling / assignment components.
    v.s_part = (1.0 - pu) / s.m * s.dd + pu * (1.0 - pc) / s.m * s.cdd;
    v.d_part = (1.0 - 4.0 * s2 * pu) / s.m * s.pp + 4.0 * s2 * pu / s.m * s.cpp;
    return v;
}

ExactVariance exact_variance_plain_printed(const Estimands& est, const SamplingDesign& sampling,
                                           const AssignmentDesign& assignment) {
    sampling.validate();
    assignment.validate();
    const PlainSums s = plain_sums(est);
    const double pc = sampling.p_c, pu = sampling.p_u, s2 = assignment.sigma2;
    ExactVariance v;
    v.unit_term = (2.0 * (s.e11 + s.e00) - pu * s.dd + 4.0 * pu * s2 * s.dd) / s.m;
    v.cluster_term = pu / s.m * ((1.0 - pc) * s.cdd + 4.0 * s2 * s.cpp);
    v.total = v.unit_term + v.cluster_term;
    return v;
}

ExactVariance exact_variance_fe(const Estimands& est, const SamplingDesign& sampling,
                                const AssignmentDesign& assignment) {
    sampling.validate();
    require_fe_design(assignment);
    const FeSums s = fe_sums(est);
    const KappaMoments k = kappa_moments(assignment);
    const double pc = sampling.p_c, pu = sampling.p_u;
    const double a2 = k.eq1q * k.eq1q;

    const double unit = (k.eq1q - (3.0 + pu) * k.kappa_22) * s.dd + k.kappa_31 * s.gg +
                        2.0 * k.kappa_22 * s.gh + k.kappa_13 * s.hh +
                        2.0 * ((k.kappa_22 - k.kappa_31) * s.dg + (k.kappa_13 - k.kappa_22) * s.dh);
    ExactVariance v;
    v.unit_term = unit / (a2 * s.m);
    v.cluster_term = pu / s.m * ((1.0 - pc) + k.kappa / a2) * s.cdd;
    v.total = v.unit_term + v.cluster_term;
    return v;
}

ExactVariance exact_variance_fe_printed(const Estimands& est, const SamplingDesign& sampling,
                                        const AssignmentDesign& assignment) {
    sampling.validate();
    require_fe_design(assignment);
    const FeSums s = fe_sums(est);
    const KappaMoments k = kappa_moments(assignment);
    const double pc = sampling.p_c, pu = sampling.p_u;
    const double f = 1.0 / (k.eq1q * k.eq1q);  // 16 / (1 - 4 sigma2)^2
    ExactVariance v;
    v.unit_term =
        ((1.0 - pu) * (1.0 + k.kappa * f) * s.dd + f * k.kappa_31 * s.gg + f * k.kappa_13 * s.hh) /
        s.m;
    v.cluster_term = pu / s.m * ((1.0 - pc) + f * k.kappa) * s.cdd;
    v.total = v.unit_term + v.cluster_term;
    return v;
}

ExactVariance exact_variance(const Estimands& est, const SamplingDesign& sampling,
                             const AssignmentDesign& assignment, ModelKind kind) {
    return kind == ModelKind::plain ? exact_variance_plain(est, sampling, assignment)
                                    : exact_variance_fe(est, sampling, assignment);
}

double lz_gap(const Estimands& est, const SamplingDesign& sampling) {
    sampling.validate();
    double cdd = 0.0, cpp = 0.0;
    cluster_sums(est, cdd, cpp);
    return sampling.p_c * sampling.p_u / static_cast<double>(est.unit_count()) * cdd;
}

LimitFunctionals limit_functionals(const Estimands& est, const SamplingDesign& sampling,
                                   const AssignmentDesign& assignment) {
    sampling.validate();
    assignment.validate();
    const PlainSums s = plain_sums(est);
    const double pu = sampling.p_u, s2 = assignment.sigma2;
    LimitFunctionals l;
    l.v_ehw_limit = 2.0 / s.m * (s.e11 + s.e00);
    const double sq = 2.0 - pu * (1.0 + 4.0 * s2);
    l.v_lz_limit = (sq * (s.e11 + s.e00) + pu * (2.0 - 8.0 * s2) * s.e10) / s.m +
                   pu / s.m * (s.cdd + 4.0 * s2 * s.cpp);
    l.lz_minus_true = lz_gap(est, sampling);
    l.lz_minus_ehw = l.v_lz_limit - l.v_ehw_limit;
    return l;
}

LimitFunctionals limit_functionals_fe(const Estimands& est, const SamplingDesign& sampling,
                                      const AssignmentDesign& assignment) {
    sampling.validate();
    require_fe_design(assignment);
    const FeSums s = fe_sums(est);
    const KappaMoments k = kappa_moments(assignment);
    const double pu = sampling.p_u;
    const double a2 = k.eq1q * k.eq1q;

    // E[X_i^2] / (p_c p_u) for X_i = R_i (W_i - q) times the adjusted residual.
    const double fourth = k.eq1q - 3.0 * k.kappa_22;  // E[(W - q)^4]
    const double own = fourth * s.dd + k.kappa_31 * s.gg + 2.0 * k.kappa_22 * s.gh +
                       k.kappa_13 * s.hh +
                       2.0 * ((k.kappa_22 - k.kappa_31) * s.dg + (k.kappa_13 - k.kappa_22) * s.dh);
    // Pairs i != j in one cluster: E[X_i X_j] = p_c p_u^2 kappa_22 d_i d_j.
    const double pairs = pu * k.kappa_22 * (s.cdd - s.dd);

    LimitFunctionals l;
    l.v_ehw_limit = own / (a2 * s.m);
    l.v_lz_limit = (own + pairs) / (a2 * s.m);
    l.lz_minus_true = lz_gap(est, sampling);
    l.lz_minus_ehw = l.v_lz_limit - l.v_ehw_limit;
    return l;
}

double lz_minus_ehw_printed(const Estimands& est, const SamplingDesign& sampling,
                            const AssignmentDesign& assignment) {
    sampling.validate();
    assignment.validate();
    const PlainSums s = plain_sums(est);
    const double pu = sampling.p_u, s2 = assignment.sigma2;
    return -2.0 * pu / s.m * (s.dd + 4.0 * s2 * s.pp) + pu / s.m * (s.cdd + 4.0 * s2 * s.cpp);
}

}  // namespace clusteradj
