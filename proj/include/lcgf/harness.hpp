#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lcgf/errors.hpp"
#include "lcgf/profile.hpp"

namespace lcgf {

// Numeric failure inside a named pipeline stage (CLI exit code 3).
struct StageError : NumericError {
    StageError(std::string stage_name, const std::string& what)
        : NumericError(stage_name + ": " + what), stage(std::move(stage_name)) {}
    std::string stage;
};

struct ExperimentConfig {
    std::string kind;  // covtest | extremes | cluster | tail | localization | threefield | surrogate | compare | perturb
    std::string model = "mibrw";
    VarianceProfile profile = VarianceProfile::two_speed();
    std::vector<int> sides;
    std::int64_t replicas = 1;
    std::uint64_t seed = 0;
    std::vector<double> z_grid, r_grid;
    std::vector<double> gamma_grid{0.6};
    std::vector<double> s_grid{1.0};
    double c = 1.0;
    double delta = 0.1;
    double k_se = 4.0;

    struct ThreeField {
        int k = 1, l = 1;
        std::vector<std::pair<int, int>> ladder{{1, 1}};  // (k', l')
        std::optional<double> alpha;                      // empty: 2 * fitted deviation sup
        std::int64_t surrogate_replicas = 0;              // 0: 4 x replicas
        double gamma = 0.6;
        std::vector<double> beta_z{2.0, 3.0};
    } threefield;

    struct Perturb {
        double s1 = 0.5, s2 = 0.5;
        std::vector<int> r1{4, 8, 16}, r2{4, 8, 16};
        std::vector<double> epsilons;  // tail perturbation; empty skips it
    } perturb;

    struct Compare {
        int instances = 100;
        int n_min = 2, n_max = 8;
        std::int64_t mc_replicas = 20000;
    } compare;

    std::string output = "runs/out";
    nlohmann::json sweep;  // {"grid": {key: [values]}, "cap": int}; null when absent

    nlohmann::json raw;  // canonical form, used for hashing and sweep expansion
};

// Parses and validates; all field problems are collected into one ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    int workers = 1;
    bool keep_trajectories = false;
};

// Runs the pipeline into a staging directory and renames it to the output
// directory on success. Returns the manifest (also written as manifest.json).
nlohmann::json run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

// One run per grid point (cartesian product), seed = base seed XOR grid index,
// outputs under <out>/point_<i>; writes <out>/summary.csv. Throws ConfigError
// for an empty grid or when the grid exceeds its cap.
std::vector<nlohmann::json> sweep_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

nlohmann::json read_manifest(const std::string& path);

// Re-hashes the files listed in a manifest; returns the mismatching paths.
std::vector<std::string> verify_manifest(const std::string& dir);

}  // namespace lcgf
