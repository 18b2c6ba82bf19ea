#include "clusteradj/config.hpp"

#include "clusteradj/error.hpp"
#include "csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace clusteradj {

namespace {

constexpr std::array<std::string_view, 16> kKeys = {
    "population.clusters", "population.units_per_cluster", "population.tau_pattern",
    "population.noise_sd", "population.table",             "population.seed",
    "p_c",                 "p_u",                          "sigma2",
    "assignment_family",   "replications",                 "seed",
    "confidence",          "models",                       "estimators",
    "threads",
};

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
    throw ConfigError("config key '" + std::string(key) + "': " + std::string(why) + " (got '" +
                      std::string(value) + "')");
}

double to_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) bad(key, v, "expected a number");
    return out;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
        bad(key, v, "expected a non-negative integer");
    }
    return out;
}

std::vector<std::string_view> list(std::string_view v) {
    std::vector<std::string_view> out;
    for (auto f : csv::split(v)) {
        if (!f.empty()) out.push_back(f);
    }
    return out;
}

}  // namespace

bool is_known_key(std::string_view key) {
    return std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end();
}

std::pair<std::string, std::string> parse_override(std::string_view kv) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(kv) + "' is not of the form key=value");
    }
    std::string key(csv::trim(kv.substr(0, eq)));
    std::string value(csv::trim(kv.substr(eq + 1)));
    if (!is_known_key(key)) throw ConfigError("unknown config key '" + key + "'");
    return {key, value};
}

Settings parse_settings(std::string_view text, std::string_view source) {
    Settings out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line_no == 1) line = csv::strip_bom(line);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        std::string key(csv::trim(line.substr(0, eq)));
        if (!is_known_key(key)) {
            throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                              ": unknown config key '" + key + "'");
        }
        out.emplace_back(std::move(key), std::string(csv::trim(line.substr(eq + 1))));
    }
    return out;
}

ExperimentConfig build_config(const Settings& settings) {
    ExperimentConfig cfg;
    double sigma2 = 0.0;
    std::string family;
    for (const auto& [key, value] : settings) {
        if (key == "population.clusters") {
            cfg.population.cluster_count = to_unsigned(key, value);
        } else if (key == "population.units_per_cluster") {
            cfg.population.units_per_cluster.clear();
            for (auto f : list(value)) cfg.population.units_per_cluster.push_back(to_unsigned(key, f));
            if (cfg.population.units_per_cluster.empty()) bad(key, value, "expected at least one size");
        } else if (key == "population.tau_pattern") {
            cfg.population.tau_pattern.clear();
            for (auto f : list(value)) cfg.population.tau_pattern.push_back(to_real(key, f));
        } else if (key == "population.noise_sd") {
            cfg.population.noise_sd = to_real(key, value);
        } else if (key == "population.table") {
            cfg.population.kind = value.empty() ? GeneratorKind::generated : GeneratorKind::explicit_table;
            cfg.population.table_path = value;
        } else if (key == "population.seed") {
            cfg.population_seed = to_unsigned(key, value);
        } else if (key == "p_c") {
            cfg.sampling.p_c = to_real(key, value);
        } else if (key == "p_u") {
            cfg.sampling.p_u = to_real(key, value);
        } else if (key == "sigma2") {
            sigma2 = to_real(key, value);
        } else if (key == "assignment_family") {
            family = value;
        } else if (key == "replications") {
            cfg.replications = to_unsigned(key, value);
        } else if (key == "seed") {
            cfg.seed = to_unsigned(key, value);
        } else if (key == "confidence") {
            cfg.confidence = to_real(key, value);
        } else if (key == "models") {
            cfg.models.clear();
            for (auto f : list(value)) {
                if (f == "plain") cfg.models.push_back(ModelKind::plain);
                else if (f == "fe") cfg.models.push_back(ModelKind::fixed_effects);
                else bad(key, f, "expected plain or fe");
            }
        } else if (key == "estimators") {
            cfg.estimators.clear();
            for (auto f : list(value)) {
                try {
                    cfg.estimators.push_back(parse_estimator(f));
                } catch (const ConfigError&) {
                    bad(key, f, "expected ols, ehw, lz or cca");
                }
            }
        } else if (key == "threads") {
            cfg.threads = static_cast<unsigned>(to_unsigned(key, value));
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    try {
        cfg.assignment = family.empty() ? AssignmentDesign::two_point_or_degenerate(sigma2)
                                        : AssignmentDesign(sigma2, parse_family(family));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config keys 'sigma2'/'assignment_family': ") + e.what());
    }
    auto keyed = [](std::string_view key, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            throw ConfigError("config key '" + std::string(key) + "': " + e.what());
        }
    };
    keyed("p_c/p_u", [&] { cfg.sampling.validate(); });
    keyed("population", [&] { cfg.population.validate(); });
    keyed("replications/confidence/models/estimators", [&] { cfg.validate(); });
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Settings& overrides) {
    Settings all;
    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        all = parse_settings(buf.str(), path.string());
    }
    all.insert(all.end(), overrides.begin(), overrides.end());
    return build_config(all);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    auto join_sizes = [](const auto& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv::format_real(double(v[i]));
        return s;
    };
    std::ostringstream out;
    const auto& p = cfg.population;
    out << "population.clusters = " << p.cluster_count << '\n';
    out << "population.units_per_cluster = " << join_sizes(p.units_per_cluster) << '\n';
    out << "population.tau_pattern = " << join_sizes(p.tau_pattern) << '\n';
    out << "population.noise_sd = " << csv::format_real(p.noise_sd) << '\n';
    out << "population.table = "
        << (p.kind == GeneratorKind::explicit_table ? p.table_path.string() : "") << '\n';
    out << "population.seed = " << cfg.resolved_population_seed() << '\n';
    out << "p_c = " << csv::format_real(cfg.sampling.p_c) << '\n';
    out << "p_u = " << csv::format_real(cfg.sampling.p_u) << '\n';
    out << "sigma2 = " << csv::format_real(cfg.assignment.sigma2) << '\n';
    out << "assignment_family = " << family_name(cfg.assignment.family) << '\n';
    out << "replications = " << cfg.replications << '\n';
    out << "seed = " << cfg.seed << '\n';
    out << "confidence = " << csv::format_real(cfg.confidence) << '\n';
    out << "models = ";
    for (std::size_t i = 0; i < cfg.models.size(); ++i) out << (i ? "," : "") << model_name(cfg.models[i]);
    out << "\nestimators = ";
    for (std::size_t i = 0; i < cfg.estimators.size(); ++i) {
        out << (i ? "," : "") << estimator_name(cfg.estimators[i]);
    }
    out << '\n';
    return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_config(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace clusteradj
