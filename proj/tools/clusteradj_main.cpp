// clusteradj: simulate coverage experiments, check the closed-form design
// variances against enumeration, and analyze y,w,cluster datasets.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include "clusteradj/config.hpp"
#include "clusteradj/dataset.hpp"
#include "clusteradj/error.hpp"
#include "clusteradj/kernels.hpp"
#include "clusteradj/montecarlo.hpp"
#include "clusteradj/oracle.hpp"
#include "clusteradj/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace clusteradj;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out_dir = ".";
};

ExperimentConfig resolve(const Common& c) {
    Settings overrides;
    for (const auto& kv : c.sets) overrides.push_back(parse_override(kv));
    ExperimentConfig cfg = load_config(c.config, overrides);
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    return cfg;
}

fs::path out_dir(const Common& c) {
    fs::path d(c.out_dir);
    fs::create_directories(d);
    return d;
}

std::optional<bool> yes_no(const std::string& v, const char* flag) {
    if (v.empty()) return std::nullopt;
    if (v == "yes" || v == "true" || v == "1") return true;
    if (v == "no" || v == "false" || v == "0") return false;
    throw ConfigError(std::string(flag) + ": expected yes or no, got '" + v + "'");
}

int cmd_simulate(const Common& c) {
    const ExperimentConfig cfg = resolve(c);
    std::cout << "# resolved config\n" << serialize_config(cfg);
    const CoverageReport rep = run_experiment(cfg);
    const fs::path dir = out_dir(c);
    write_json(dir / "coverage.json", to_json(rep));
    write_coverage_csv(dir / "coverage.csv", rep);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';

    std::cout << "# tau = " << rep.tau << ", mean N = " << rep.mean_sample_size
              << ", critical value = " << rep.critical << '\n';
    std::cout << "model  estimator  coverage (se)        mean_se\n";
    for (const auto& row : rep.rows) {
        std::cout << model_name(row.model) << "  " << estimator_name(row.estimator) << "  ";
        if (!row.applicable) {
            std::cout << "n/a\n";
            continue;
        }
        std::cout << row.coverage << " (" << row.coverage_se << ")  " << row.mean_se << '\n';
    }
    std::cout << "wrote " << (dir / "coverage.json").string() << " and "
              << (dir / "coverage.csv").string() << '\n';
    return kOk;
}

struct AnalyzeArgs {
    std::string csv;
    bool fixed_effects = false;
    std::vector<std::string> estimators;
    std::string sampling, assignment, all_clusters;
    double confidence = 0.95;
};

int cmd_analyze(const AnalyzeArgs& a, const Common& c) {
    AnalysisOptions o;
    o.fixed_effects = a.fixed_effects;
    o.estimators.insert(a.estimators.begin(), a.estimators.end());
    o.confidence = a.confidence;
    o.sampling_clustered = yes_no(a.sampling, "--sampling-clustered");
    o.assignment_clustered = yes_no(a.assignment, "--assignment-clustered");
    o.all_clusters_sampled = yes_no(a.all_clusters, "--all-clusters-sampled");
    const AnalysisInput in = load_dataset_csv(a.csv);
    const EstimateReport r = analyze(in, o);
    const auto j = to_json(r, o);
    const fs::path dir = out_dir(c);
    write_json(dir / "estimate.json", j);
    std::cout << j.dump(2) << '\n';
    return kOk;
}

struct OracleArgs {
    std::size_t max_units = 10;
    std::vector<double> p_c{0.25, 0.5, 1.0};
    std::vector<double> p_u{0.5, 1.0};
    std::vector<double> sigma2{0.0, 0.09, 0.25};
    double tolerance = 1e-10;
};

int cmd_oracle(const OracleArgs& a, const Common& c) {
    if (a.max_units > kOracleMaxUnits) {
        throw OracleSizeError("--max-units " + std::to_string(a.max_units) + " exceeds the limit of " +
                              std::to_string(kOracleMaxUnits));
    }
    OracleGrid grid{a.p_c, a.p_u, a.sigma2};
    const std::uint64_t seed = c.seed ? *c.seed : 7;
    const auto fixtures = fixture_populations(a.max_units, seed);
    const auto rows = oracle_fixture_rows(fixtures, grid);
    const fs::path dir = out_dir(c);
    write_fixture_csv(dir / "oracle_fixtures.csv", rows);

    double worst = 0.0;
    std::size_t bad = 0;
    for (const auto& r : rows) {
        worst = std::max(worst, r.discrepancy());
        bad += !r.agrees(a.tolerance);
    }
    std::cout << rows.size() << " rows over " << fixtures.size() << " populations; max |formula - "
              << "enumeration| = " << worst << "; " << bad << " above tolerance " << a.tolerance << '\n';
    std::cout << "wrote " << (dir / "oracle_fixtures.csv").string() << '\n';
    return bad == 0 ? kOk : kRuntime;
}

int cmd_export(const Common& c) {
    const ExperimentConfig cfg = resolve(c);
    const Population pop = build_population(cfg.population, cfg.resolved_population_seed());
    const SampleDraw d = draw_sample(pop, cfg.sampling, cfg.assignment, cfg.seed);
    const fs::path dir = out_dir(c);
    write_dataset_csv(dir / "sample.csv", d.sample);
    std::cout << "N = " << d.n() << " (treated " << d.n1() << "), clusters = " << d.sample.clusters()
              << "; wrote " << (dir / "sample.csv").string() << '\n';
    return kOk;
}

void add_common(CLI::App* sub, Common& c, bool with_config) {
    if (with_config) {
        sub->add_option("-c,--config", c.config, "flat key = value config file");
        sub->add_option("--set", c.sets, "override a config key (key=value), repeatable");
        sub->add_option("--threads", c.threads, "worker threads (default: all cores)");
    }
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster-robust standard errors under sampling and assignment designs"};
    app.require_subcommand(1);
    std::string backend;
    app.add_option("--backend", backend, "force kernel backend: scalar or avx2");

    Common common;
    AnalyzeArgs an;
    OracleArgs orc;

    auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage experiment");
    add_common(sim, common, true);

    auto* ana = app.add_subcommand("analyze", "estimates, standard errors and diagnostics for a CSV");
    ana->add_option("csv", an.csv, "file with header y,w,cluster")->required();
    ana->add_flag("--fixed-effects", an.fixed_effects, "also fit cluster fixed effects");
    ana->add_option("--estimators", an.estimators, "subset of ols,ehw,lz,kloek,cca")->delimiter(',');
    ana->add_option("--sampling-clustered", an.sampling, "yes if population clusters are unsampled");
    ana->add_option("--assignment-clustered", an.assignment, "yes if assignment is clustered");
    ana->add_option("--all-clusters-sampled", an.all_clusters, "yes if every cluster is in the sample");
    ana->add_option("--confidence", an.confidence, "confidence level")->capture_default_str();
    add_common(ana, common, false);

    auto* ora = app.add_subcommand("oracle", "compare closed forms with exhaustive enumeration");
    ora->add_option("--max-units", orc.max_units, "largest fixture population")->capture_default_str();
    ora->add_option("--p-c", orc.p_c, "grid of p_c")->delimiter(',');
    ora->add_option("--p-u", orc.p_u, "grid of p_u")->delimiter(',');
    ora->add_option("--sigma2", orc.sigma2, "grid of sigma2")->delimiter(',');
    ora->add_option("--tolerance", orc.tolerance, "relative tolerance")->capture_default_str();
    add_common(ora, common, false);

    auto* exp = app.add_subcommand("export-sample", "write one design draw as y,w,cluster CSV");
    add_common(exp, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (backend == "scalar") kernels::set_backend(kernels::Backend::scalar);
        else if (backend == "avx2") kernels::set_backend(kernels::Backend::avx2);
        else if (!backend.empty()) throw ConfigError("--backend: expected scalar or avx2");

        if (*sim) return cmd_simulate(common);
        if (*ana) return cmd_analyze(an, common);
        if (*ora) return cmd_oracle(orc, common);
        if (*exp) return cmd_export(common);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const OracleSizeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
