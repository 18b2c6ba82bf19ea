#include "clusteradj/oracle.hpp"

#include "clusteradj/error.hpp"
#include "clusteradj/variance.hpp"
#include "csv.hpp"
#include "neumaier.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <string>

namespace clusteradj {

namespace {

// Contribution of one cluster under one of its configurations. Every
// statistic the oracle tracks is a sum of per-cluster pieces.
struct ClusterState {
    double prob = 0.0;
    double eta = 0.0, s = 0.0, d = 0.0;
    double eta_fe = 0.0;
    double ehw = 0.0, lz = 0.0;
    double ehw_fe = 0.0, lz_fe = 0.0;
    std::size_t n1 = 0, n0 = 0;
    double sum1 = 0.0, sum0 = 0.0;
    double fe_num = 0.0, fe_den = 0.0;
};

struct Moments {
    Neumaier w, m1, m2;
    void add(double p, double x) {
        w.add(p);
        m1.add(p * x);
        m2.add(p * x * x);
    }
};

std::vector<std::pair<double, double>> finite_support(const AssignmentDesign& a) {
    const auto sup = a.support();
    if (sup.empty()) {
        throw ConfigError("enumeration oracle needs a finite-support assignment family "
                          "(degenerate or two_point), got " + std::string(family_name(a.family)));
    }
    return sup;
}

std::size_t unit_states(const SamplingDesign& s) { return s.p_u < 1.0 ? 3 : 2; }

}  // namespace

double oracle_support_size(const Population& pop, const SamplingDesign& sampling,
                           const AssignmentDesign& assignment) {
    const double nq = static_cast<double>(finite_support(assignment).size());
    const double k = static_cast<double>(unit_states(sampling));
    double total = 1.0;
    for (std::size_t c = 0; c < pop.cluster_count(); ++c) {
        const double in = nq * std::pow(k, static_cast<double>(pop.cluster_size(c)));
        total *= in + (sampling.p_c < 1.0 ? 1.0 : 0.0);
    }
    return total;
}

OracleResult enumeration_oracle(const Population& pop, const SamplingDesign& sampling,
                                const AssignmentDesign& assignment, std::uint64_t budget) {
    sampling.validate();
    assignment.validate();
    const std::size_t M = pop.unit_count();
    if (M > kOracleMaxUnits) {
        throw OracleSizeError("enumeration oracle: population has " + std::to_string(M) +
                              " units, limit is " + std::to_string(kOracleMaxUnits));
    }
    const double support = oracle_support_size(pop, sampling, assignment);
    if (support > static_cast<double>(budget)) {
        throw OracleSizeError("enumeration oracle: " + csv::format_real(support) +
                              " configurations exceed the budget of " + std::to_string(budget));
    }
    const auto qsup = finite_support(assignment);
    const Estimands est = compute_estimands(pop);
    const auto y0 = pop.y0();
    const auto y1 = pop.y1();

    const double pc = sampling.p_c, pu = sampling.p_u;
    const double p = pc * pu;
    const double root = std::sqrt(static_cast<double>(M) * p);
    const bool with_fe = assignment.sigma2 < 0.25;
    const double a = (1.0 - 4.0 * assignment.sigma2) / 4.0;
    const std::size_t k = unit_states(sampling);
    // Unit state codes: 0 = R=1,W=0; 1 = R=1,W=1; 2 = R=0.

    std::vector<std::vector<ClusterState>> states(pop.cluster_count());
    for (std::size_t c = 0; c < pop.cluster_count(); ++c) {
        const std::size_t lo = est.offsets[c], m = est.cluster_size(c);
        auto& list = states[c];
        if (pc < 1.0) {
            ClusterState out;
            out.prob = 1.0 - pc;
            for (std::size_t i = lo; i < lo + m; ++i) out.s -= p * (est.eps1[i] - est.eps0[i]) / root;
            list.push_back(out);
        }
        std::vector<std::size_t> code(m, 0);
        for (const auto& [q, pq] : qsup) {
            std::fill(code.begin(), code.end(), 0);
            for (;;) {
                ClusterState st;
                st.prob = pc * pq;
                double score = 0.0, score_fe = 0.0;
                std::size_t n1 = 0, n = 0;
                for (std::size_t u = 0; u < m; ++u) {
                    const std::size_t i = lo + u;
                    const double e1 = est.eps1[i], e0 = est.eps0[i];
                    if (code[u] == 2) {
                        st.prob *= 1.0 - pu;
                        st.s -= p * (e1 - e0) / root;
                        continue;
                    }
                    const bool w = code[u] == 1;
                    st.prob *= pu * (w ? q : 1.0 - q);
                    const double t = w ? 1.0 : -1.0;
                    const double e = w ? e1 : e0;
                    st.s += (1.0 - p) * (e1 - e0) / root;
                    st.d += t * (e1 + e0) / root;
                    score += t * e;
                    st.ehw += e * e;
                    const double dot_e = e - q * est.eps1_bar_c[c] - (1.0 - q) * est.eps0_bar_c[c];
                    const double x = ((w ? 1.0 : 0.0) - q) * dot_e;
                    score_fe += x;
                    st.ehw_fe += x * x;
                    if (w) {
                        ++st.n1;
                        st.sum1 += y1[i];
                        ++n1;
                    } else {
                        ++st.n0;
                        st.sum0 += y0[i];
                    }
                    ++n;
                }
                st.eta = 2.0 * score / root;
                st.lz = 4.0 * score * score / (root * root);
                st.ehw *= 4.0 / (root * root);
                if (with_fe) {
                    st.eta_fe = score_fe / (a * root);
                    st.lz_fe = score_fe * score_fe / (a * a * root * root);
                    st.ehw_fe /= a * a * root * root;
                }
                if (n > 0) {
                    const double wbar = static_cast<double>(n1) / static_cast<double>(n);
                    for (std::size_t u = 0; u < m; ++u) {
                        if (code[u] == 2) continue;
                        const double wt = (code[u] == 1 ? 1.0 : 0.0) - wbar;
                        st.fe_num += wt * (code[u] == 1 ? y1[lo + u] : y0[lo + u]);
                        st.fe_den += wt * wt;
                    }
                }
                if (st.prob > 0.0) list.push_back(st);

                std::size_t u = 0;
                while (u < m && ++code[u] == k) code[u++] = 0;
                if (u == m) break;
            }
        }
    }

    Moments eta, eta_fe, s, d, tau, tau_fe;
    Neumaier s2, d2, sd, ehw, lz, ehw_fe, lz_fe, deg, deg_fe;
    std::uint64_t leaves = 0;
    const std::size_t C = states.size();

    ClusterState acc;
    std::function<void(std::size_t, const ClusterState&)> walk = [&](std::size_t c,
                                                                      const ClusterState& cur) {
        if (c == C) {
            ++leaves;
            const double pr = cur.prob;
            eta.add(pr, cur.eta);
            s.add(pr, cur.s);
            d.add(pr, cur.d);
            s2.add(pr * cur.s * cur.s);
            d2.add(pr * cur.d * cur.d);
            sd.add(pr * cur.s * cur.d);
            ehw.add(pr * cur.ehw);
            lz.add(pr * cur.lz);
            if (with_fe) {
                eta_fe.add(pr, cur.eta_fe);
                ehw_fe.add(pr * cur.ehw_fe);
                lz_fe.add(pr * cur.lz_fe);
            }
            const double n = static_cast<double>(cur.n1 + cur.n0);
            if (cur.n1 > 0 && cur.n0 > 0) {
                const double th = cur.sum1 / static_cast<double>(cur.n1) -
                                  cur.sum0 / static_cast<double>(cur.n0);
                tau.add(pr, std::sqrt(n) * (th - est.tau));
            } else {
                deg.add(pr);
            }
            if (cur.fe_den > 0.0) {
                tau_fe.add(pr, std::sqrt(n) * (cur.fe_num / cur.fe_den - est.tau));
            } else {
                deg_fe.add(pr);
            }
            return;
        }
        for (const ClusterState& st : states[c]) {
            ClusterState nx = cur;
            nx.prob *= st.prob;
            nx.eta += st.eta;
            nx.s += st.s;
            nx.d += st.d;
            nx.eta_fe += st.eta_fe;
            nx.ehw += st.ehw;
            nx.lz += st.lz;
            nx.ehw_fe += st.ehw_fe;
            nx.lz_fe += st.lz_fe;
            nx.n1 += st.n1;
            nx.n0 += st.n0;
            nx.sum1 += st.sum1;
            nx.sum0 += st.sum0;
            nx.fe_num += st.fe_num;
            nx.fe_den += st.fe_den;
            walk(c + 1, nx);
        }
    };
    acc.prob = 1.0;
    walk(0, acc);

    auto finish = [](const Moments& m, Neumaier degenerate) {
        EstimatorMoments em;
        em.degenerate_probability = degenerate.value();
        const double w = m.w.value();
        if (w > 0.0) {
            em.mean = m.m1.value() / w;
            em.variance = m.m2.value() / w - em.mean * em.mean;
        }
        return em;
    };

    OracleResult r;
    r.configurations = leaves;
    r.eta_mean = eta.m1.value();
    r.eta_variance = eta.m2.value() - r.eta_mean * r.eta_mean;
    r.s_mean = s.m1.value();
    r.d_mean = d.m1.value();
    r.s2 = s2.value();
    r.d2 = d2.value();
    r.sd = sd.value();
    r.ehw_limit = ehw.value();
    r.lz_limit = lz.value();
    r.tau_hat = finish(tau, deg);
    if (with_fe) {
        r.eta_fe_mean = eta_fe.m1.value();
        r.eta_fe_variance = eta_fe.m2.value() - *r.eta_fe_mean * *r.eta_fe_mean;
        r.ehw_fe_limit = ehw_fe.value();
        r.lz_fe_limit = lz_fe.value();
        r.tau_hat_fe = finish(tau_fe, deg_fe);
    }
    return r;
}

MomentTable enumerate_indicator_moments(const SamplingDesign& sampling,
                                        const AssignmentDesign& assignment) {
    sampling.validate();
    assignment.validate();
    const auto qsup = finite_support(assignment);
    const double pc = sampling.p_c, pu = sampling.p_u;

    // Units i, j share cluster A; unit k sits in cluster B. Clusters are
    // enumerated independently and combined.
    struct Cell {
        double prob;
        int ri, rj, wi, wj;
    };
    std::vector<Cell> a_cells, b_cells;
    for (int in = 0; in < 2; ++in) {
        const double pin = in ? pc : 1.0 - pc;
        if (pin == 0.0) continue;
        for (const auto& [q, pq] : qsup) {
            for (int ri = 0; ri < 2; ++ri)
                for (int rj = 0; rj < 2; ++rj)
                    for (int wi = 0; wi < 2; ++wi)
                        for (int wj = 0; wj < 2; ++wj) {
                            auto pr = [&](int r) { return in ? (r ? pu : 1.0 - pu) : (r ? 0.0 : 1.0); };
                            const double pw = (wi ? q : 1.0 - q) * (wj ? q : 1.0 - q);
                            const double prob = pin * pq * pr(ri) * pr(rj) * pw;
                            if (prob > 0.0) a_cells.push_back({prob, ri, rj, wi, wj});
                        }
        }
    }
    b_cells = a_cells;

    // Each indicator: R, W, RW for unit i, j (cluster A) and k (cluster B).
    Neumaier e[3], e2[3], ej[3], ek[3];
    for (const Cell& x : a_cells) {
        const double ui[3] = {double(x.ri), double(x.wi), double(x.ri * x.wi)};
        const double uj[3] = {double(x.rj), double(x.wj), double(x.rj * x.wj)};
        for (int t = 0; t < 3; ++t) {
            e[t].add(x.prob * ui[t]);
            e2[t].add(x.prob * ui[t] * ui[t]);
            ej[t].add(x.prob * ui[t] * uj[t]);
        }
        for (const Cell& y : b_cells) {
            const double uk[3] = {double(y.ri), double(y.wi), double(y.ri * y.wi)};
            for (int t = 0; t < 3; ++t) ek[t].add(x.prob * y.prob * ui[t] * uk[t]);
        }
    }
    MomentRow rows[3];
    for (int t = 0; t < 3; ++t) {
        const double m = e[t].value();
        rows[t].mean = m;
        rows[t].variance = e2[t].value() - m * m;
        rows[t].within_cov = ej[t].value() - m * m;
        rows[t].between_cov = ek[t].value() - m * m;
    }
    return {rows[0], rows[1], rows[2]};
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

std::vector<FixturePopulation> fixture_populations(std::size_t max_units, std::uint64_t seed) {
    std::vector<FixturePopulation> out;
    auto add = [&](std::string id, const std::vector<UnitRow>& rows) {
        if (rows.size() <= max_units) out.push_back({std::move(id), Population::from_table(rows)});
    };
    add("hand4", {{1, 0, 1}, {1, 2, 3}, {2, 1, 0}, {2, 3, 2}});
    add("homogeneous4", {{1, 0.3, 1.3}, {1, -1.1, -0.1}, {2, 2.0, 3.0}, {2, 0.4, 1.4}});
    add("singletons5", {{1, 0.5, 1.0}, {2, -1.0, 0.25}, {3, 2.0, 1.5}, {4, 0.0, -0.75}, {5, 1.25, 3.0}});

    std::mt19937_64 eng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes = {
        {"rand_3_2", {3, 2}},       {"rand_2_2_2", {2, 2, 2}}, {"rand_4_3", {4, 3}},
        {"rand_1_2_3_4", {1, 2, 3, 4}}, {"rand_5_5", {5, 5}},  {"rand_4_3_3", {4, 3, 3}},
        {"rand_3_3_3_3", {3, 3, 3, 3}},
    };
    for (const auto& [id, sizes] : shapes) {
        std::vector<UnitRow> rows;
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            const double tau_c = 2.0 * noise(eng);
            for (std::size_t u = 0; u < sizes[c]; ++u) {
                const double y0 = noise(eng);
                rows.push_back({static_cast<std::int64_t>(c) + 1, y0, y0 + tau_c + 0.5 * noise(eng)});
            }
        }
        add(id, rows);
    }
    return out;
}

double FixtureRow::discrepancy() const { return std::fabs(formula_value - oracle_value); }

bool FixtureRow::agrees(double tol) const {
    return discrepancy() <= tol * std::max(1.0, std::fabs(oracle_value));
}

std::vector<FixtureRow> oracle_fixture_rows(const std::vector<FixturePopulation>& fixtures,
                                            const OracleGrid& grid) {
    std::vector<FixtureRow> rows;
    for (const auto& fx : fixtures) {
        const Estimands est = compute_estimands(fx.population);
        for (double pc : grid.p_c)
            for (double pu : grid.p_u)
                for (double s2 : grid.sigma2) {
                    const SamplingDesign sd{pc, pu};
                    const auto ad = AssignmentDesign::two_point_or_degenerate(s2);
                    const OracleResult o = enumeration_oracle(fx.population, sd, ad);
                    auto row = [&](std::string model, double formula, double oracle) {
                        rows.push_back({fx.id, pc, pu, s2, std::move(model), formula, oracle});
                    };
                    row("plain", exact_variance_plain(est, sd, ad).total, o.eta_variance);
                    row("plain_lz", limit_functionals(est, sd, ad).v_lz_limit, o.lz_limit);
                    if (s2 < 0.25) {
                        row("fe", exact_variance_fe(est, sd, ad).total, *o.eta_fe_variance);
                        row("fe_lz", limit_functionals_fe(est, sd, ad).v_lz_limit, *o.lz_fe_limit);
                    }
                }
    }
    return rows;
}

void write_fixture_csv(const std::filesystem::path& path, const std::vector<FixtureRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "fixture_id,p_c,p_u,sigma2,model,formula_value,oracle_value\n";
    for (const auto& r : rows) {
        out << r.fixture_id << ',' << csv::format_real(r.p_c) << ',' << csv::format_real(r.p_u)
            << ',' << csv::format_real(r.sigma2) << ',' << r.model << ','
            << csv::format_real(r.formula_value) << ',' << csv::format_real(r.oracle_value) << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace clusteradj
