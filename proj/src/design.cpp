#include "clusteradj/design.hpp"

#include "clusteradj/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace clusteradj {

void SamplingDesign::validate() const {
    if (!(p_c > 0.0 && p_c <= 1.0)) throw ConfigError("p_c must lie in (0, 1]");
    if (!(p_u > 0.0 && p_u <= 1.0)) throw ConfigError("p_u must lie in (0, 1]");
}

std::string_view family_name(AssignmentFamily f) {
    switch (f) {
        case AssignmentFamily::degenerate: return "degenerate";
        case AssignmentFamily::two_point: return "two_point";
        case AssignmentFamily::beta: return "beta";
    }
    return "unknown";
}

AssignmentFamily parse_family(std::string_view name) {
    if (name == "degenerate") return AssignmentFamily::degenerate;
    if (name == "two_point" || name == "two-point") return AssignmentFamily::two_point;
    if (name == "beta") return AssignmentFamily::beta;
    throw ConfigError("assignment_family: unknown family '" + std::string(name) + "'");
}

AssignmentDesign::AssignmentDesign(double s2, AssignmentFamily f) : sigma2(s2), family(f) {
    validate();
}

AssignmentDesign AssignmentDesign::two_point_or_degenerate(double s2) {
    return s2 == 0.0 ? AssignmentDesign(0.0, AssignmentFamily::degenerate)
                     : AssignmentDesign(s2, AssignmentFamily::two_point);
}

void AssignmentDesign::validate() const {
    if (!(sigma2 >= 0.0 && sigma2 <= 0.25)) throw ConfigError("sigma2 must lie in [0, 1/4]");
    const bool zero = sigma2 == 0.0;
    if (zero != (family == AssignmentFamily::degenerate)) {
        throw ConfigError("assignment_family must be 'degenerate' exactly when sigma2 = 0");
    }
    if (family == AssignmentFamily::beta && sigma2 >= 0.25) {
        throw ConfigError("beta assignment family needs sigma2 in (0, 1/4)");
    }
}

double AssignmentDesign::beta_shape() const {
    if (family != AssignmentFamily::beta || sigma2 <= 0.0 || sigma2 >= 0.25) {
        throw ConfigError("beta shape is defined only for the beta family with sigma2 in (0, 1/4)");
    }
    return (1.0 - 4.0 * sigma2) / (8.0 * sigma2);
}

double AssignmentDesign::moment(int j, int k) const {
    switch (family) {
        case AssignmentFamily::degenerate: return std::pow(0.5, j + k);
        case AssignmentFamily::two_point: {
            const double s = std::sqrt(sigma2);
            const double hi = 0.5 + s, lo = 0.5 - s;
            return 0.5 * (std::pow(hi, j) * std::pow(lo, k) + std::pow(lo, j) * std::pow(hi, k));
        }
        case AssignmentFamily::beta: {
            // B(a+j, a+k) / B(a, a) as a ratio of rising factorials.
            const double a = beta_shape();
            double num = 1.0, den = 1.0;
            for (int m = 0; m < j; ++m) num *= a + m;
            for (int m = 0; m < k; ++m) num *= a + m;
            for (int m = 0; m < j + k; ++m) den *= 2.0 * a + m;
            return num / den;
        }
    }
    return 0.0;
}

std::vector<std::pair<double, double>> AssignmentDesign::support() const {
    switch (family) {
        case AssignmentFamily::degenerate: return {{0.5, 1.0}};
        case AssignmentFamily::two_point: {
            const double s = std::sqrt(sigma2);
            return {{0.5 - s, 0.5}, {0.5 + s, 0.5}};
        }
        case AssignmentFamily::beta: return {};
    }
    return {};
}

double AssignmentDesign::draw_q(Engine& eng) const {
    switch (family) {
        case AssignmentFamily::degenerate: return 0.5;
        case AssignmentFamily::two_point: {
            const double s = std::sqrt(sigma2);
            return (eng() >> 63) ? 0.5 + s : 0.5 - s;
        }
        case AssignmentFamily::beta: {
            std::gamma_distribution<double> g(beta_shape(), 1.0);
            const double x = g(eng);
            const double y = g(eng);
            return x / (x + y);
        }
    }
    return 0.5;
}

KappaMoments kappa_moments(const AssignmentDesign& assignment) {
    assignment.validate();
    KappaMoments k;
    const double s2 = assignment.sigma2;
    k.eq1q = (1.0 - 4.0 * s2) / 4.0;
    if (assignment.family == AssignmentFamily::beta) {
        k.kappa_31 = assignment.moment(3, 1);
        k.kappa_13 = assignment.moment(1, 3);
        k.kappa_22 = assignment.moment(2, 2);
        k.kappa = k.kappa_22 - k.eq1q * k.eq1q;
    } else {
        // q(1-q) is the constant 1/4 - sigma2 on the support.
        k.kappa = 0.0;
        k.kappa_31 = (0.25 - s2) * (0.25 + s2);
        k.kappa_13 = k.kappa_31;
        k.kappa_22 = k.eq1q * k.eq1q;
    }
    return k;
}

MomentTable analytic_moments(const SamplingDesign& sampling, const AssignmentDesign& assignment) {
    sampling.validate();
    assignment.validate();
    const double pc = sampling.p_c, pu = sampling.p_u, s2 = assignment.sigma2;
    const double p = pc * pu;
    MomentTable t;
    t.r = {p, p * (1.0 - p), pc * (1.0 - pc) * pu * pu, 0.0};
    t.w = {0.5, 0.25, s2, 0.0};
    t.rw = {p / 2.0, p * (2.0 - p) / 4.0, pc * pu * pu * (1.0 - pc) / 4.0 + s2 * pc * pu * pu, 0.0};
    return t;
}

std::size_t SampleDraw::n1() const {
    std::size_t k = 0;
    for (double v : sample.w) k += v != 0.0;
    return k;
}

std::vector<SampleRecord> SampleDraw::records() const {
    std::vector<SampleRecord> out;
    out.reserve(sample.size());
    for (std::size_t g = 0; g < sample.clusters(); ++g) {
        for (std::size_t i = sample.offsets[g]; i < sample.offsets[g + 1]; ++i) {
            out.push_back({unit_index[i], sample.cluster_ids[g], sample.w[i] != 0.0 ? 1 : 0,
                           sample.y[i]});
        }
    }
    return out;
}

SampleDraw draw_sample(const Population& pop, const SamplingDesign& sampling,
                       const AssignmentDesign& assignment, std::uint64_t seed) {
    sampling.validate();
    assignment.validate();
    Engine eng_r = make_stream(seed, 0);
    Engine eng_w = make_stream(seed, 1);

    const std::size_t M = pop.unit_count();
    const std::size_t C = pop.cluster_count();
    SampleDraw d;
    d.r.assign(M, 0);
    d.w.assign(M, 0);
    d.q.resize(C);
    d.cluster_sampled.assign(C, 0);

    const auto y0 = pop.y0();
    const auto y1 = pop.y1();
    const auto off = pop.offsets();
    for (std::size_t c = 0; c < C; ++c) {
        const bool in = sampling.p_c >= 1.0 || uniform01(eng_r) < sampling.p_c;
        d.cluster_sampled[c] = in;
        const double q = assignment.draw_q(eng_w);
        d.q[c] = q;
        for (std::size_t i = off[c]; i < off[c + 1]; ++i) {
            d.w[i] = uniform01(eng_w) < q;
            if (in) d.r[i] = sampling.p_u >= 1.0 || uniform01(eng_r) < sampling.p_u;
            if (d.r[i]) {
                d.sample.push(static_cast<std::int64_t>(c) + 1, d.w[i] ? y1[i] : y0[i], d.w[i]);
                d.unit_index.push_back(i);
            }
        }
    }
    d.sample.finish();
    return d;
}

Sample draw_sampled_units(const Population& pop, const SamplingDesign& sampling,
                          const AssignmentDesign& assignment, Engine& eng) {
    const std::size_t C = pop.cluster_count();
    const auto y0 = pop.y0();
    const auto y1 = pop.y1();
    const auto off = pop.offsets();
    const double pu = sampling.p_u;
    const bool sweep = pu >= 0.1;

    Sample s;
    s.y.reserve(static_cast<std::size_t>(expected_sample_size(pop, sampling) * 1.1) + 16);
    s.w.reserve(s.y.capacity());
    std::geometric_distribution<std::size_t> gap(sweep ? 0.5 : pu);

    auto take = [&](std::size_t c, std::size_t i, double q) {
        const bool treated = uniform01(eng) < q;
        s.push(static_cast<std::int64_t>(c) + 1, treated ? y1[i] : y0[i], treated ? 1.0 : 0.0);
    };

    for (std::size_t c = 0; c < C; ++c) {
        if (sampling.p_c < 1.0 && !(uniform01(eng) < sampling.p_c)) continue;
        const double q = assignment.draw_q(eng);
        if (pu >= 1.0) {
            for (std::size_t i = off[c]; i < off[c + 1]; ++i) take(c, i, q);
        } else if (sweep) {
            for (std::size_t i = off[c]; i < off[c + 1]; ++i) {
                if (uniform01(eng) < pu) take(c, i, q);
            }
        } else {
            for (std::size_t i = off[c] + gap(eng); i < off[c + 1]; i += 1 + gap(eng)) take(c, i, q);
        }
    }
    s.finish();
    return s;
}

double expected_sample_size(const Population& pop, const SamplingDesign& sampling) {
    return static_cast<double>(pop.unit_count()) * sampling.p_c * sampling.p_u;
}

}  // namespace clusteradj
