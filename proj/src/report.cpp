#include "clusteradj/report.hpp"

#include "clusteradj/config.hpp"
#include "clusteradj/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace clusteradj {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string hex(std::uint64_t h) {
    std::ostringstream s;
    s << std::hex << h;
    return s.str();
}

}  // namespace

json to_json(const CoverageReport& r) {
    json j;
    j["config"] = {
        {"text", serialize_config(r.config)},
        {"hash", hex(config_hash(r.config))},
        {"seed", r.config.seed},
        {"population_seed", r.config.resolved_population_seed()},
        {"replications", r.config.replications},
        {"p_c", r.config.sampling.p_c},
        {"p_u", r.config.sampling.p_u},
        {"sigma2", r.config.assignment.sigma2},
        {"assignment_family", std::string(family_name(r.config.assignment.family))},
        {"confidence", r.config.confidence},
    };
    j["critical_value"] = r.critical;
    j["critical_value_note"] = "two-sided normal quantile; assumed, not stated for the reference table";
    j["population"] = {{"units", r.population_units},
                       {"clusters", r.population_clusters},
                       {"tau", r.tau}};
    j["expected_sample_size"] = r.expected_sample_size;
    j["mean_sample_size"] = r.mean_sample_size;
    j["warnings"] = r.warnings;
    json models = json::array();
    for (const auto& m : r.models) {
        models.push_back({
            {"model", std::string(model_name(m.model))},
            {"valid", m.valid},
            {"degenerate", m.degenerate},
            {"mean_tau_hat", m.mean_tau_hat},
            {"mean_tau_hat_se", m.mean_tau_hat_se},
            {"sd_tau_hat", m.sd_tau_hat},
            {"empirical_variance", m.empirical_variance},
            {"empirical_variance_se", m.empirical_variance_se},
            {"exact_variance", optional_number(m.exact_variance)},
            {"ehw_limit", optional_number(m.ehw_limit)},
            {"lz_limit", optional_number(m.lz_limit)},
            {"lz_gap", optional_number(m.lz_gap)},
        });
    }
    j["models"] = models;
    json rows = json::array();
    for (const auto& row : r.rows) {
        json o = {
            {"model", std::string(model_name(row.model))},
            {"estimator", std::string(estimator_name(row.estimator))},
            {"applicable", row.applicable},
        };
        if (row.applicable) {
            o["valid"] = row.valid;
            o["coverage"] = row.coverage;
            o["coverage_se"] = row.coverage_se;
            o["mean_se"] = row.mean_se;
            o["mean_se_se"] = row.mean_se_se;
            o["mean_scaled_variance"] = row.mean_scaled_variance;
            o["mean_scaled_variance_se"] = row.mean_scaled_variance_se;
            if (row.estimator == EstimatorKind::cca) o["floored"] = row.floored;
        }
        rows.push_back(o);
    }
    j["rows"] = rows;
    return j;
}

void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& r) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "model,estimator,applicable,valid,coverage,coverage_se,mean_se,mean_se_se,"
           "mean_scaled_variance,mean_scaled_variance_se\n";
    for (const auto& row : r.rows) {
        out << model_name(row.model) << ',' << estimator_name(row.estimator) << ','
            << (row.applicable ? 1 : 0) << ',' << row.valid;
        if (row.applicable) {
            for (double v : {row.coverage, row.coverage_se, row.mean_se, row.mean_se_se,
                             row.mean_scaled_variance, row.mean_scaled_variance_se}) {
                out << ',' << csv::format_real(v);
            }
        } else {
            out << ",,,,,,";
        }
        out << '\n';
    }
    if (!out) throw Error("write failed: '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed: '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Single-dataset estimates
// ---------------------------------------------------------------------------

namespace {

bool wants(const AnalysisOptions& o, const std::string& name) {
    return o.estimators.empty() || o.estimators.count(name) > 0;
}

}  // namespace

EstimateReport analyze(const AnalysisInput& input, const AnalysisOptions& options) {
    for (const auto& e : options.estimators) {
        if (e != "ols" && e != "ehw" && e != "lz" && e != "kloek" && e != "cca") {
            throw ConfigError("unknown estimator '" + e + "' (expected ols, ehw, lz, kloek, cca)");
        }
    }
    const Sample& s = input.sample;
    EstimateReport r;
    r.source = input.source.string();
    r.n = s.size();
    r.clusters = s.clusters();
    r.critical = critical_value(options.confidence);
    r.min_cluster_size = r.n;
    for (std::size_t g = 0; g < s.clusters(); ++g) {
        r.min_cluster_size = std::min(r.min_cluster_size, s.cluster_size(g));
        r.max_cluster_size = std::max(r.max_cluster_size, s.cluster_size(g));
    }
    for (double w : s.w) r.n1 += w != 0.0;
    r.n0 = r.n - r.n1;

    std::vector<ModelKind> kinds{ModelKind::plain};
    if (options.fixed_effects) kinds.push_back(ModelKind::fixed_effects);
    for (ModelKind k : kinds) {
        ModelEstimate m;
        m.model = k;
        try {
            m.fit = fit(s, k);
        } catch (const SingularDesignError& e) {
            m.error = e.what();
            r.models.push_back(m);
            continue;
        }
        m.diagnostics = full_diagnostics(*m.fit, s);
        m.variances = variance_report(*m.fit, s, m.diagnostics.rho_eps, m.diagnostics.rho_w);
        r.models.push_back(std::move(m));
    }
    r.guidance = decision_guidance(r, options);
    return r;
}

std::vector<std::string> decision_guidance(const EstimateReport& r, const AnalysisOptions& o) {
    std::vector<std::string> g;
    const ModelEstimate* plain = nullptr;
    const ModelEstimate* fe = nullptr;
    for (const auto& m : r.models) {
        if (m.model == ModelKind::plain && m.variances) plain = &m;
        if (m.model == ModelKind::fixed_effects && m.variances) fe = &m;
    }
    if (plain) {
        const double se_ehw = std::sqrt(plain->variances->v_ehw);
        const double se_lz = std::sqrt(plain->variances->v_lz);
        std::ostringstream s;
        s << "In this sample the cluster adjustment ";
        if (se_ehw > 0.0) {
            s << "changes the standard error by a factor of " << se_lz / se_ehw
              << " (LZ / EHW). Whether it matters is not the same as whether it should be applied.";
        } else {
            s << "cannot be compared: the EHW standard error is zero.";
        }
        g.push_back(s.str());
    }

    if (!o.sampling_clustered || !o.assignment_clustered) {
        g.push_back("Declare --sampling-clustered and --assignment-clustered (yes/no). Whether to "
                    "adjust depends on how the sample was drawn and how treatment was assigned, and "
                    "the data alone cannot settle it.");
        return g;
    }
    const bool sc = *o.sampling_clustered, ac = *o.assignment_clustered;
    if (!sc && !ac) {
        g.push_back("Neither sampling nor assignment is clustered: do not adjust for clustering. "
                    "Report the EHW standard error, whether or not the adjustment would change it.");
        return g;
    }
    g.push_back(std::string("Clustering is justified: ") +
                (sc ? "sampling is clustered (clusters of the population are missing from the sample)"
                    : "") +
                (sc && ac ? " and " : "") +
                (ac ? "assignment is correlated within clusters" : "") + ".");
    g.push_back("The Liang-Zeger standard error is conservative unless treatment effects are "
                "homogeneous, only a small fraction of the population's clusters is sampled, or at "
                "most about one unit per cluster is sampled.");
    if (r.max_cluster_size <= 1) {
        g.push_back("Every observed cluster has a single unit, so LZ and EHW coincide.");
    }
    if (o.all_clusters_sampled && *o.all_clusters_sampled) {
        if (plain && plain->variances->cca && plain->variances->cca->applicable) {
            g.push_back("All population clusters are in the sample and treatment varies within "
                        "clusters: the cluster-adjusted (CCA) variance removes the LZ overstatement.");
            if (plain->variances->cca->dropped_clusters > 0) {
                g.push_back(std::to_string(plain->variances->cca->dropped_clusters) +
                            " cluster(s) lack one treatment arm and are left out of the CCA correction.");
            }
        } else {
            g.push_back("All clusters are sampled, but no cluster has both arms, so the CCA "
                        "correction is unavailable; LZ remains conservative.");
        }
    } else if (!o.all_clusters_sampled) {
        g.push_back("If every cluster of the population is in the sample, declare "
                    "--all-clusters-sampled yes to use the CCA correction.");
    }
    if (fe) {
        g.push_back("With cluster fixed effects, an adjustment is needed only when treatment effects "
                    "vary across clusters (or assignment probabilities vary in their dispersion).");
    }
    return g;
}

json to_json(const EstimateReport& r, const AnalysisOptions& o) {
    json j;
    j["source"] = r.source;
    j["n"] = r.n;
    j["n1"] = r.n1;
    j["n0"] = r.n0;
    j["clusters"] = r.clusters;
    j["cluster_size_range"] = {r.min_cluster_size, r.max_cluster_size};
    j["confidence"] = o.confidence;
    j["critical_value"] = r.critical;
    auto declared = [](const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); };
    j["declared"] = {{"sampling_clustered", declared(o.sampling_clustered)},
                     {"assignment_clustered", declared(o.assignment_clustered)},
                     {"all_clusters_sampled", declared(o.all_clusters_sampled)}};
    json models = json::array();
    for (const auto& m : r.models) {
        json mj;
        mj["model"] = std::string(model_name(m.model));
        if (!m.fit) {
            mj["error"] = m.error;
            models.push_back(mj);
            continue;
        }
        const FitResult& f = *m.fit;
        mj["tau_hat"] = f.tau_hat;
        if (m.model == ModelKind::plain) mj["alpha"] = f.alpha;
        json est = json::object();
        auto put = [&](const std::string& name, double v) {
            if (!wants(o, name)) return;
            const double se = std::sqrt(v);
            est[name] = {{"variance", v},
                         {"se", se},
                         {"ci", {f.tau_hat - r.critical * se, f.tau_hat + r.critical * se}}};
        };
        const VarianceReport& v = *m.variances;
        put("ols", v.v_ols);
        put("ehw", v.v_ehw);
        put("lz", v.v_lz);
        if (m.model == ModelKind::plain && wants(o, "kloek")) {
            if (v.v_kloek) {
                put("kloek", *v.v_kloek);
            } else {
                est["kloek"] = {{"applicable", false},
                                {"reason", "within-cluster correlation diagnostics are undefined"}};
            }
        }
        if (v.cca && wants(o, "cca")) {
            const CcaResult& c = *v.cca;
            if (c.applicable) {
                put("cca", c.value);
                est["cca"]["applicable"] = true;
                est["cca"]["floored"] = c.floored;
                est["cca"]["raw"] = c.raw;
                est["cca"]["correction"] = c.correction;
            } else {
                est["cca"] = {{"applicable", false}};
            }
            est["cca"]["used_clusters"] = c.used_clusters;
            est["cca"]["dropped_clusters"] = c.dropped_clusters;
        }
        mj["estimates"] = est;
        auto diag = [](const std::optional<double>& x, const std::string& err) {
            return x ? json(*x) : json({{"undefined", err}});
        };
        mj["diagnostics"] = {{"rho_eps", diag(m.diagnostics.rho_eps, m.diagnostics.rho_eps_error)},
                             {"rho_w", diag(m.diagnostics.rho_w, m.diagnostics.rho_w_error)},
                             {"rho_epsw", diag(m.diagnostics.rho_epsw, m.diagnostics.rho_epsw_error)}};
        models.push_back(mj);
    }
    j["models"] = models;
    j["guidance"] = r.guidance;
    return j;
}

}  // namespace clusteradj
