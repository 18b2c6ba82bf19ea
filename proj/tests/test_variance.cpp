#include "clusteradj/error.hpp"
#include "clusteradj/variance.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace clusteradj;

namespace {

// Sandwich from explicit matrices: (X'X)^-1 (sum_c X_c' e_c e_c' X_c) (X'X)^-1,
// tau coordinate. `by_cluster` false gives the unit-level (EHW) meat.
double matrix_sandwich(const Sample& s, const FitResult& f, bool fe, bool by_cluster) {
    const auto n = static_cast<Eigen::Index>(s.size());
    const auto G = static_cast<Eigen::Index>(s.clusters());
    const Eigen::Index k = fe ? G + 1 : 2;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, k);
    for (std::size_t g = 0; g < s.clusters(); ++g) {
        for (std::size_t i = s.offsets[g]; i < s.offsets[g + 1]; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            if (fe) X(r, static_cast<Eigen::Index>(g)) = 1.0;
            else X(r, 0) = 1.0;
            X(r, k - 1) = s.w[i];
        }
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    if (by_cluster) {
        for (std::size_t g = 0; g < s.clusters(); ++g) {
            Eigen::VectorXd score = Eigen::VectorXd::Zero(k);
            for (std::size_t i = s.offsets[g]; i < s.offsets[g + 1]; ++i) {
                score += X.row(static_cast<Eigen::Index>(i)).transpose() * f.residuals[i];
            }
            meat += score * score.transpose();
        }
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd x = X.row(i).transpose();
            meat += x * x.transpose() * f.residuals[static_cast<std::size_t>(i)] *
                    f.residuals[static_cast<std::size_t>(i)];
        }
    }
    const Eigen::MatrixXd bread = (X.transpose() * X).inverse();
    return (bread * meat * bread)(k - 1, k - 1);
}

const AssignmentDesign kDegenerate(0.0, AssignmentFamily::degenerate);

}  // namespace

TEST_SUITE("variance") {

TEST_CASE("hand example: EHW by both routes and LZ") {
    const Sample s = testing::make_sample({1, 3, 2, 4}, {1, 1, 0, 0}, {1, 1, 2, 2});
    const FitResult f = fit_plain(s);
    CHECK(v_ehw(f, s) == 1.0);
    // Arm-wise route: sum_{W=1} e^2 / N1^2 + sum_{W=0} e^2 / N0^2.
    const double arm = (f.residuals[0] * f.residuals[0] + f.residuals[1] * f.residuals[1]) / 4.0 +
                       (f.residuals[2] * f.residuals[2] + f.residuals[3] * f.residuals[3]) / 4.0;
    CHECK(arm == 1.0);
    CHECK(v_lz(f, s) == 0.0);
    CHECK(v_ols(f) == doctest::Approx(1.0));  // sigma2 = 1, sxx = 1
}

TEST_CASE("sandwich estimators equal explicit matrix sandwiches") {
    std::mt19937_64 eng(17);
    for (int rep = 0; rep < 30; ++rep) {
        const Sample s = testing::random_sample(eng, 2 + rep % 5, 7);
        const FitResult p = fit_plain(s);
        CHECK(testing::close(v_ehw(p, s), matrix_sandwich(s, p, false, false), 1e-9));
        CHECK(testing::close(v_lz(p, s), matrix_sandwich(s, p, false, true), 1e-9, 1e-14));
        double arm = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double n = static_cast<double>(s.w[i] ? p.n1 : p.n0);
            arm += p.residuals[i] * p.residuals[i] / (n * n);
        }
        CHECK(testing::close(v_ehw(p, s), arm, 1e-10));
        try {
            const FitResult fe = fit_fixed_effects(s);
            CHECK(testing::close(v_ehw(fe, s), matrix_sandwich(s, fe, true, false), 1e-8));
            CHECK(testing::close(v_lz(fe, s), matrix_sandwich(s, fe, true, true), 1e-8, 1e-14));
        } catch (const SingularDesignError&) {
        }
    }
}

TEST_CASE("singleton clusters: LZ equals EHW") {
    std::mt19937_64 eng(3);
    const Sample s = testing::random_sample(eng, 40, 1);
    const FitResult f = fit_plain(s);
    CHECK(testing::close(v_lz(f, s), v_ehw(f, s), 1e-12));
}

TEST_CASE("Kloek factor") {
    const Sample s = testing::make_sample({1, 3, 2, 4}, {1, 1, 0, 0}, {1, 1, 2, 2});
    const FitResult f = fit_plain(s);
    CHECK(v_kloek(f, s, 0.0, 0.7) == v_ols(f));
    // rho_eps = 0.1, rho_w = 0.5, N / C = 20 doubles the OLS variance.
    Sample big;
    for (int g = 0; g < 50; ++g)
        for (int i = 0; i < 20; ++i) big.push(g + 1, (i * 7 + g) % 5, i % 2);
    big.finish();
    const FitResult fb = fit_plain(big);
    CHECK(v_kloek(fb, big, 0.1, 0.5) == doctest::Approx(2.0 * v_ols(fb)).epsilon(1e-15));
}

TEST_CASE("CCA: correction arithmetic, equality case, floor and FE refusal") {
    // Two clusters of two; tau_c = +1 and -1; tau_hat = 0; N = 4.
    const Sample s = testing::make_sample({1, 0, 0, 1}, {1, 0, 1, 0}, {1, 1, 2, 2});
    const FitResult f = fit_plain(s);
    CHECK(f.tau_hat == 0.0);
    const CcaResult c = v_cca(f, s);
    CHECK(c.applicable);
    CHECK(c.correction == 0.5);
    CHECK(c.used_clusters == 2);
    CHECK(c.raw == v_lz(f, s) - 0.5);
    CHECK(c.value >= 0.0);
    CHECK(c.floored == (c.raw < 0.0));
    CHECK(c.value <= v_lz(f, s));

    // Identical cluster effects: no correction.
    const Sample eq = testing::make_sample({2, 1, 5, 3, 4, 3}, {1, 0, 1, 0, 1, 0}, {1, 1, 2, 2, 2, 3});
    const FitResult fe = fit_plain(eq);
    const CcaResult ce = v_cca(fe, eq);
    CHECK(ce.dropped_clusters == 1);
    CHECK(ce.used_clusters == 2);

    const Sample none = testing::make_sample({1, 2, 3, 4}, {1, 1, 0, 0}, {1, 1, 2, 2});
    const CcaResult cn = v_cca(fit_plain(none), none);
    CHECK_FALSE(cn.applicable);

    const Sample fe_s = testing::make_sample({1, 3, 2, 4}, {1, 0, 0, 1}, {1, 1, 2, 2});
    CHECK_THROWS_AS(v_cca(fit_fixed_effects(fe_s), fe_s), std::invalid_argument);
}

TEST_CASE("CCA equals LZ when every cluster effect equals tau_hat") {
    const Sample s = testing::make_sample({3, 1, 6, 4, 2, 0}, {1, 0, 1, 0, 1, 0}, {1, 1, 2, 2, 3, 3});
    const FitResult f = fit_plain(s);
    const CcaResult c = v_cca(f, s);
    CHECK(c.correction < 1e-28);
    CHECK(testing::close(c.value, v_lz(f, s), 1e-14, 1e-15));
}

TEST_CASE("variance report bundles estimators by model") {
    const Sample s = testing::make_sample({1, 0, 0, 1, 2}, {1, 0, 1, 0, 1}, {1, 1, 2, 2, 2});
    const VarianceReport p = variance_report(fit_plain(s), s, 0.1, 0.2);
    CHECK(p.v_kloek.has_value());
    CHECK(p.cca.has_value());
    const VarianceReport fe = variance_report(fit_fixed_effects(s), s, 0.1, 0.2);
    CHECK_FALSE(fe.v_kloek.has_value());
    CHECK_FALSE(fe.cca.has_value());
    CHECK(VarianceReport::se(4.0) == 2.0);
}

// ---------------------------------------------------------------------------

TEST_CASE("exact variance: decomposition and invariants") {
    std::mt19937_64 eng(101);
    for (int rep = 0; rep < 20; ++rep) {
        const Population pop = testing::random_population(eng, {3, 1, 4, 2, 5});
        const Estimands e = compute_estimands(pop);
        for (double pc : {0.25, 0.5, 1.0})
            for (double pu : {0.5, 1.0})
                for (double s2 : {0.0, 0.09, 0.25}) {
                    const SamplingDesign sd{pc, pu};
                    const auto ad = AssignmentDesign::two_point_or_degenerate(s2);
                    const ExactVariance v = exact_variance_plain(e, sd, ad);
                    CHECK(testing::close(v.total, v.unit_term + v.cluster_term, 1e-14));
                    CHECK(testing::close(v.total, *v.s_part + *v.d_part, 1e-10));
                    const LimitFunctionals l = limit_functionals(e, sd, ad);
                    CHECK(l.lz_minus_true >= 0.0);
                    CHECK(testing::close(l.v_lz_limit - v.total, l.lz_minus_true, 1e-10, 1e-13));
                    CHECK(testing::close(l.lz_minus_ehw, l.v_lz_limit - l.v_ehw_limit, 1e-14, 1e-14));
                    if (s2 < 0.25) {
                        const ExactVariance f = exact_variance_fe(e, sd, ad);
                        CHECK(testing::close(f.total, f.unit_term + f.cluster_term, 1e-14));
                        const LimitFunctionals lf = limit_functionals_fe(e, sd, ad);
                        CHECK(testing::close(lf.v_lz_limit - f.total, lf.lz_minus_true, 1e-10, 1e-13));
                    }
                }
    }
}

TEST_CASE("exact variance: d_part is affine in sigma2 with the stated slope") {
    std::mt19937_64 eng(55);
    const Population pop = testing::random_population(eng, {4, 2, 6});
    const Estimands e = compute_estimands(pop);
    const double M = static_cast<double>(pop.unit_count());
    double sum_pp = 0, cl_pp = 0;
    for (std::size_t i = 0; i < e.unit_count(); ++i) sum_pp += std::pow(e.eps1[i] + e.eps0[i], 2);
    for (std::size_t c = 0; c < e.cluster_count(); ++c) {
        const double mc = static_cast<double>(e.cluster_size(c));
        cl_pp += mc * mc * std::pow(e.eps1_bar_c[c] + e.eps0_bar_c[c], 2);
    }
    const SamplingDesign sd{0.5, 0.7};
    const double d0 = *exact_variance_plain(e, sd, kDegenerate).d_part;
    for (double s2 : {0.01, 0.09, 0.2, 0.25}) {
        const double d = *exact_variance_plain(e, sd, AssignmentDesign(s2, AssignmentFamily::two_point)).d_part;
        const double slope = 4.0 * 0.7 * (cl_pp - sum_pp) / M;
        CHECK(testing::close(d, d0 + s2 * slope, 1e-12, 1e-13));
    }
}

TEST_CASE("exact variance: small p_u tends to the EHW limit") {
    std::mt19937_64 eng(8);
    const Population pop = testing::random_population(eng, {5, 5, 5});
    const Estimands e = compute_estimands(pop);
    const auto ad = AssignmentDesign(0.09, AssignmentFamily::two_point);
    const double ehw = limit_functionals(e, {0.3, 0.5}, ad).v_ehw_limit;
    const double v = exact_variance_plain(e, {0.3, 1e-9}, ad).total;
    CHECK(testing::close(v, ehw, 1e-7));
}

TEST_CASE("no clustering adjustment needed: homogeneous effects, sigma2 = 0, p_c = 1") {
    std::mt19937_64 eng(12);
    const Population pop = testing::random_population(eng, {3, 5, 2, 4}, 1.0, true);
    const Estimands e = compute_estimands(pop);
    for (double pu : {0.2, 1.0}) {
        const SamplingDesign sd{1.0, pu};
        CHECK(exact_variance_plain(e, sd, kDegenerate).cluster_term == 0.0);
        CHECK(exact_variance_fe(e, sd, kDegenerate).cluster_term == 0.0);
        CHECK(limit_functionals(e, sd, kDegenerate).lz_minus_true < 1e-28);
    }
}

TEST_CASE("single-unit clusters: LZ and EHW limits coincide") {
    const std::vector<UnitRow> rows = {{1, 0.5, 2.0}, {2, -1.0, 0.25}, {3, 2.0, 1.5}, {4, 0.0, -0.75}};
    const Estimands e = compute_estimands(Population::from_table(rows));
    for (double s2 : {0.0, 0.09, 0.25}) {
        const auto l = limit_functionals(e, {0.5, 0.5}, AssignmentDesign::two_point_or_degenerate(s2));
        CHECK(std::fabs(l.lz_minus_ehw) < 1e-14);
    }
}

TEST_CASE("FE with point-mass assignment reduces to the simple form") {
    std::mt19937_64 eng(21);
    const Population pop = testing::random_population(eng, {4, 3, 5});
    const Estimands e = compute_estimands(pop);
    const double M = static_cast<double>(pop.unit_count());
    const SamplingDesign sd{0.5, 0.6};
    double unit = 0, cl = 0;
    for (std::size_t c = 0; c < e.cluster_count(); ++c) {
        const double mc = static_cast<double>(e.cluster_size(c));
        const double dbar = e.eps1_bar_c[c] - e.eps0_bar_c[c];
        cl += mc * mc * dbar * dbar;
        for (std::size_t i = e.offsets[c]; i < e.offsets[c + 1]; ++i) {
            const double d = e.eps1[i] - e.eps0[i];
            const double g = e.eps1[i] - e.eps1_bar_c[c];
            const double h = e.eps0[i] - e.eps0_bar_c[c];
            unit += (1 - 0.6) * d * d + g * g + h * h;
        }
    }
    const ExactVariance printed = exact_variance_fe_printed(e, sd, kDegenerate);
    CHECK(testing::close(printed.unit_term, unit / M, 1e-12));
    CHECK(testing::close(printed.cluster_term, 0.6 * 0.5 * cl / M, 1e-12));
    // The enumeration-verified form keeps the same cluster term.
    CHECK(testing::close(exact_variance_fe(e, sd, kDegenerate).cluster_term, printed.cluster_term, 1e-12));
}

TEST_CASE("FE variance refuses perfectly correlated assignment") {
    const Estimands e = compute_estimands(testing::hand_population());
    const AssignmentDesign a(0.25, AssignmentFamily::two_point);
    CHECK_THROWS_AS(exact_variance_fe(e, {1, 1}, a), ConfigError);
    CHECK_THROWS_AS(limit_functionals_fe(e, {1, 1}, a), ConfigError);
}

TEST_CASE("printed variants differ from the verified forms") {
    std::mt19937_64 eng(4);
    const Population pop = testing::random_population(eng, {3, 3, 3});
    const Estimands e = compute_estimands(pop);
    const SamplingDesign sd{0.5, 0.5};
    const AssignmentDesign ad(0.09, AssignmentFamily::two_point);
    CHECK_FALSE(testing::close(exact_variance_plain_printed(e, sd, ad).total,
                               exact_variance_plain(e, sd, ad).total, 1e-6));
    CHECK_FALSE(testing::close(lz_minus_ehw_printed(e, sd, ad), limit_functionals(e, sd, ad).lz_minus_ehw,
                               1e-6));
    // With sigma2 = 0 the printed plain form and the verified form agree.
    CHECK(testing::close(exact_variance_plain_printed(e, sd, kDegenerate).total,
                         exact_variance_plain(e, sd, kDegenerate).total, 1e-12));
}

}  // TEST_SUITE
