#include "clusteradj/diagnostics.hpp"

#include "clusteradj/error.hpp"
#include "clusteradj/kernels.hpp"

#include <vector>

namespace clusteradj {

double within_cluster_correlation(std::span<const double> v, std::span<const std::size_t> offsets) {
    const std::size_t n = v.size();
    if (n < 2) throw UndefinedDiagnosticError("within-cluster correlation needs at least two values");
    const double mean = kernels::sum(v) / static_cast<double>(n);
    std::vector<double> centered(n);
    kernels::shift(v, mean, centered);
    const double total = kernels::dot(centered, centered);
    if (!(total > 0.0)) {
        throw UndefinedDiagnosticError("within-cluster correlation is undefined for a constant vector");
    }
    std::vector<double> within(n);
    const std::span<const double> cv(centered);
    for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
        const std::size_t lo = offsets[g], len = offsets[g + 1] - offsets[g];
        const double m = kernels::sum(cv.subspan(lo, len)) / static_cast<double>(len);
        kernels::shift(cv.subspan(lo, len), m, std::span<double>(within).subspan(lo, len));
    }
    const double rest = kernels::dot(within, within);
    return (total - rest) / total;
}

DiagnosticsReport full_diagnostics(const FitResult& fit, const Sample& s) {
    DiagnosticsReport r;
    auto attempt = [&](std::span<const double> v, std::optional<double>& out, std::string& err) {
        try {
            out = within_cluster_correlation(v, s.offsets);
        } catch (const UndefinedDiagnosticError& e) {
            err = e.what();
        }
    };
    attempt(fit.residuals, r.rho_eps, r.rho_eps_error);
    attempt(s.w, r.rho_w, r.rho_w_error);

    const double wbar = kernels::sum(s.w) / static_cast<double>(s.size());
    std::vector<double> wt(s.size()), prod(s.size());
    kernels::shift(s.w, wbar, wt);
    kernels::multiply(fit.residuals, wt, prod);
    attempt(prod, r.rho_epsw, r.rho_epsw_error);
    return r;
}

}  // namespace clusteradj
