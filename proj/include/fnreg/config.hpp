#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "fnreg/curves.hpp"
#include "fnreg/datagen.hpp"
#include "fnreg/ratebench.hpp"

namespace fnreg {

using Json = nlohmann::json;

/// Reads a JSON document. Missing files and syntax errors raise ConfigError.
Json load_json_file(const std::string& path);

/// FNV-1a of the canonical (sorted-key, compact) serialization.
std::string config_hash(const Json& resolved);

/// Strict parsers: unknown keys are errors naming their key path. Each writes
/// the fully defaulted form of what it read into `resolved`.
GridPtrD parse_grid(const Json& j, const std::string& path, Json& resolved);
ProcessSpec parse_process(const Json& j, const std::string& path, Json& resolved);
/// `element_grid` is the covariate grid (null for vector covariates).
SemiMetric parse_metric(const Json& j, const std::string& path, const GridPtrD& element_grid, Json& resolved);

struct ResolvedExperiment {
    ExperimentConfig config;
    Json resolved;
    std::string hash;
    // property thresholds echoed into the manifest
    bool check_median_decreasing = false;
    bool check_slope_range = false;
    double slope_lo = 0.0;
    double slope_hi = 0.0;
    bool check_bias_bound = false;
};

/// Ratebench experiment config. `seed` always comes from the caller.
ResolvedExperiment parse_experiment(const Json& j, std::uint64_t seed);
ResolvedExperiment parse_experiment_file(const std::string& path, std::uint64_t seed);

} // namespace fnreg
