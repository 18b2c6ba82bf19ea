#include "clusteradj/montecarlo.hpp"

#include "clusteradj/error.hpp"
#include "clusteradj/rng.hpp"
#include "clusteradj/variance.hpp"
#include "neumaier.hpp"

#include <boost/math/distributions/normal.hpp>

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace clusteradj {

std::string_view estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::ols: return "ols";
        case EstimatorKind::ehw: return "ehw";
        case EstimatorKind::lz: return "lz";
        case EstimatorKind::cca: return "cca";
    }
    return "unknown";
}

EstimatorKind parse_estimator(std::string_view name) {
    if (name == "ols") return EstimatorKind::ols;
    if (name == "ehw") return EstimatorKind::ehw;
    if (name == "lz") return EstimatorKind::lz;
    if (name == "cca") return EstimatorKind::cca;
    throw ConfigError("unknown estimator '" + std::string(name) + "' (expected ols, ehw, lz, cca)");
}

void ExperimentConfig::validate() const {
    population.validate();
    sampling.validate();
    assignment.validate();
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    if (models.empty()) throw ConfigError("no model selected");
    if (estimators.empty()) throw ConfigError("no estimator selected");
}

std::uint64_t ExperimentConfig::resolved_population_seed() const {
    return population_seed ? *population_seed : stream_seed(seed, kPopulationStream);
}

double critical_value(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    const boost::math::normal_distribution<double> z;
    return boost::math::quantile(z, 1.0 - (1.0 - confidence) / 2.0);
}

const CoverageRow* CoverageReport::find(ModelKind m, EstimatorKind e) const {
    for (const auto& r : rows) {
        if (r.model == m && r.estimator == e) return &r;
    }
    return nullptr;
}

const ModelSummary* CoverageReport::find(ModelKind m) const {
    for (const auto& s : models) {
        if (s.model == m) return &s;
    }
    return nullptr;
}

namespace {

constexpr std::size_t kEstimators = 4;

struct ModelDraw {
    bool valid = false;
    double tau_hat = 0.0;
    bool defined[kEstimators] = {};
    double v[kEstimators] = {};
    bool floored = false;
};

struct Replication {
    double n = 0.0;
    std::vector<ModelDraw> models;
};

ModelDraw evaluate(const Sample& s, ModelKind kind) {
    ModelDraw d;
    FitResult f;
    try {
        f = fit(s, kind);
    } catch (const DegenerateSampleError&) {
        return d;
    } catch (const SingularDesignError&) {
        return d;
    }
    if (f.n1 == 0 || f.n0 == 0) return d;
    d.valid = true;
    d.tau_hat = f.tau_hat;
    d.v[0] = v_ols(f);
    d.v[1] = v_ehw(f, s);
    d.v[2] = v_lz(f, s);
    d.defined[0] = d.defined[1] = d.defined[2] = true;
    if (kind == ModelKind::plain) {
        const CcaResult c = v_cca(f, s);
        d.defined[3] = c.applicable;
        d.v[3] = c.value;
        d.floored = c.floored;
    }
    return d;
}

// Mean and its standard error from running sums.
struct Stat {
    Neumaier s1, s2;
    std::size_t n = 0;
    void add(double x) {
        s1.add(x);
        s2.add(x * x);
        ++n;
    }
    double mean() const { return n ? s1.value() / static_cast<double>(n) : 0.0; }
    double sd() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = (s2.value() - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }
    double se() const { return n ? sd() / std::sqrt(static_cast<double>(n)) : 0.0; }
};

void fill_exact(ModelSummary& ms, const Estimands& est, const ExperimentConfig& cfg) {
    try {
        if (ms.model == ModelKind::plain) {
            ms.exact_variance = exact_variance_plain(est, cfg.sampling, cfg.assignment).total;
            const auto l = limit_functionals(est, cfg.sampling, cfg.assignment);
            ms.ehw_limit = l.v_ehw_limit;
            ms.lz_limit = l.v_lz_limit;
            ms.lz_gap = l.lz_minus_true;
        } else {
            ms.exact_variance = exact_variance_fe(est, cfg.sampling, cfg.assignment).total;
            const auto l = limit_functionals_fe(est, cfg.sampling, cfg.assignment);
            ms.ehw_limit = l.v_ehw_limit;
            ms.lz_limit = l.v_lz_limit;
            ms.lz_gap = l.lz_minus_true;
        }
    } catch (const ConfigError&) {
        // sigma2 = 1/4 has no fixed-effects variance; leave the fields empty.
    }
}

}  // namespace

CoverageReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const Population pop = build_population(config.population, config.resolved_population_seed());
    return run_experiment(config, pop);
}

CoverageReport run_experiment(const ExperimentConfig& config, const Population& pop) {
    config.sampling.validate();
    config.assignment.validate();
    if (config.replications < 1) throw ConfigError("replications must be at least 1");

    CoverageReport rep;
    rep.config = config;
    rep.critical = critical_value(config.confidence);
    rep.population_units = pop.unit_count();
    rep.population_clusters = pop.cluster_count();
    rep.expected_sample_size = expected_sample_size(pop, config.sampling);
    if (rep.expected_sample_size < 30.0) {
        rep.warnings.push_back("expected sample size " + std::to_string(rep.expected_sample_size) +
                               " is below 30; large-sample approximations are unreliable");
    }
    const Estimands est = compute_estimands(pop);
    rep.tau = est.tau;

    const std::size_t R = config.replications;
    std::vector<Replication> results(R);
    unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(R)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::size_t r = next++; r < R; r = next++) {
                Engine eng = make_stream(config.seed, r);
                const Sample s = draw_sampled_units(pop, config.sampling, config.assignment, eng);
                Replication& out = results[r];
                out.n = static_cast<double>(s.size());
                for (ModelKind m : config.models) out.models.push_back(evaluate(s, m));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = R;
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    // Ordered reduction, independent of the thread count.
    Stat sample_size;
    for (const auto& r : results) sample_size.add(r.n);
    rep.mean_sample_size = sample_size.mean();

    for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
        const ModelKind model = config.models[mi];
        ModelSummary ms;
        ms.model = model;
        Stat tau;
        std::vector<double> z;
        z.reserve(R);
        for (const auto& r : results) {
            const ModelDraw& d = r.models[mi];
            if (!d.valid) {
                ++ms.degenerate;
                continue;
            }
            tau.add(d.tau_hat);
            z.push_back(std::sqrt(r.n) * (d.tau_hat - est.tau));
        }
        ms.valid = tau.n;
        ms.mean_tau_hat = tau.mean();
        ms.mean_tau_hat_se = tau.se();
        ms.sd_tau_hat = tau.sd();
        if (z.size() >= 2) {
            Neumaier zs;
            for (double x : z) zs.add(x);
            const double zm = zs.value() / static_cast<double>(z.size());
            Neumaier c2, c4;
            for (double x : z) {
                const double dev = (x - zm) * (x - zm);
                c2.add(dev);
                c4.add(dev * dev);
            }
            const double n = static_cast<double>(z.size());
            const double m2 = c2.value() / n;
            const double m4 = c4.value() / n;
            ms.empirical_variance = c2.value() / (n - 1.0);
            ms.empirical_variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
        }
        fill_exact(ms, est, config);
        rep.models.push_back(ms);

        for (EstimatorKind e : config.estimators) {
            CoverageRow row;
            row.model = model;
            row.estimator = e;
            const std::size_t ei = static_cast<std::size_t>(e);
            row.applicable = !(e == EstimatorKind::cca && model != ModelKind::plain);
            if (row.applicable) {
                std::size_t covered = 0;
                Stat se, scaled;
                for (const auto& r : results) {
                    const ModelDraw& d = r.models[mi];
                    if (!d.valid || !d.defined[ei]) continue;
                    const double s = std::sqrt(d.v[ei]);
                    covered += std::fabs(d.tau_hat - est.tau) <= rep.critical * s;
                    se.add(s);
                    scaled.add(r.n * d.v[ei]);
                    if (e == EstimatorKind::cca && d.floored) ++row.floored;
                }
                row.valid = se.n;
                if (row.valid) {
                    const double n = static_cast<double>(row.valid);
                    row.coverage = static_cast<double>(covered) / n;
                    row.coverage_se = std::sqrt(row.coverage * (1.0 - row.coverage) / n);
                }
                row.mean_se = se.mean();
                row.mean_se_se = se.se();
                row.mean_scaled_variance = scaled.mean();
                row.mean_scaled_variance_se = scaled.se();
            }
            rep.rows.push_back(row);
        }
    }
    return rep;
}

std::vector<ValidationRow> variance_validation(const ExperimentConfig& config, const Population& pop,
                                               const std::vector<DesignPoint>& grid) {
    std::vector<ValidationRow> out;
    for (const DesignPoint& pt : grid) {
        ExperimentConfig cfg = config;
        cfg.sampling = pt.sampling;
        cfg.assignment = pt.assignment;
        cfg.estimators = {EstimatorKind::lz, EstimatorKind::cca};
        const CoverageReport rep = run_experiment(cfg, pop);
        for (const ModelSummary& ms : rep.models) {
            if (!ms.exact_variance) continue;
            ValidationRow v;
            v.point = pt;
            v.model = ms.model;
            v.valid = ms.valid;
            v.empirical_variance = ms.empirical_variance;
            v.empirical_variance_se = ms.empirical_variance_se;
            v.exact_variance = *ms.exact_variance;
            v.exact_agrees = std::fabs(v.empirical_variance - v.exact_variance) <=
                             3.0 * v.empirical_variance_se;
            const CoverageRow* lz = rep.find(ms.model, EstimatorKind::lz);
            v.mean_scaled_lz = lz->mean_scaled_variance;
            v.mean_scaled_lz_se = lz->mean_scaled_variance_se;
            v.lz_limit = *ms.lz_limit;
            v.lz_agrees = std::fabs(v.mean_scaled_lz - v.lz_limit) <= 3.0 * v.mean_scaled_lz_se;
            if (ms.model == ModelKind::plain && pt.sampling.p_c >= 1.0) {
                const CoverageRow* cca = rep.find(ms.model, EstimatorKind::cca);
                v.mean_scaled_cca = cca->mean_scaled_variance;
                v.mean_scaled_cca_se = cca->mean_scaled_variance_se;
                v.cca_agrees = std::fabs(*v.mean_scaled_cca - v.exact_variance) <=
                               3.0 * *v.mean_scaled_cca_se;
            }
            out.push_back(v);
        }
    }
    return out;
}

}  // namespace clusteradj
