#pragma once

// Flat `key = value` experiment configuration files.
//
// Keys:
//   population.clusters            number of clusters C
//   population.units_per_cluster   one size, or a comma list with C entries
//   population.tau_pattern         comma list of per-cluster effects
//   population.noise_sd            standard deviation of the unit noise
//   population.table               `cluster,y0,y1` CSV (overrides the generator)
//   population.seed                population seed (default: derived from seed)
//   p_c, p_u                       sampling probabilities
//   sigma2                         variance of the assignment probability
//   assignment_family              degenerate | two_point | beta (default by sigma2)
//   replications, seed, confidence
//   models                         comma list of plain, fe
//   estimators                     comma list of ols, ehw, lz, cca
// Blank lines and text after '#' are ignored.

#include "clusteradj/montecarlo.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clusteradj {

using Settings = std::vector<std::pair<std::string, std::string>>;

/// Splits text into (key, value) pairs. Throws ConfigError with the line
/// number on a malformed line and on unknown keys.
Settings parse_settings(std::string_view text, std::string_view source = "config");

/// Parses one `key=value` override.
std::pair<std::string, std::string> parse_override(std::string_view kv);

/// Builds a config from settings; later entries win. Throws ConfigError
/// naming the offending key.
ExperimentConfig build_config(const Settings& settings);

/// Reads `path` (empty path = defaults only) and applies `overrides`.
ExperimentConfig load_config(const std::filesystem::path& path, const Settings& overrides = {});

/// Canonical text form with every key, in a fixed order.
std::string serialize_config(const ExperimentConfig& cfg);

/// FNV-1a of serialize_config, for provenance.
std::uint64_t config_hash(const ExperimentConfig& cfg);

bool is_known_key(std::string_view key);

}  // namespace clusteradj
