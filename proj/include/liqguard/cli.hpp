#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liqguard/agent.hpp"
#include "liqguard/replay.hpp"

// Pipeline orchestration behind the command-line tool: a single JSON config,
// staged artifacts with provenance, and deterministic reruns.
namespace liqguard::cli {

struct RunConfig {
    // paths
    std::string transactions_path;
    std::string reserves_path;
    std::string output_dir;

    double horizon_days = 7.0;
    trend::TrendParams trend_params;
    agent::AgentParams agent_params;
    detect::DetectionParams detection_params;

    double block_time_s = 2.0;
    double min_lead_s = 2.0;
    double dust_threshold_usd = 1.0;
    std::string safety_factor = "1.5";  // decimal string, parsed exactly

    replay::SamplingParams sampling;
    surv::FeatureParams feature_params;

    double ridge = 1e-4;
    double epsilon = 1e-12;
    std::size_t min_records_per_task = 10;
    // task name ("index:outcome") -> external score CSV
    std::map<std::string, std::string> external_scores;

    // market bootstrap: per-reserve initial pool sizes (USD)
    double initial_pool_liquidity_usd = 1e7;
    double initial_pool_debt_usd = 4e7;

    int workers = 0;  // 0 = hardware concurrency
    std::uint64_t seed = 42;

    double sensitivity_perturbation = 0.10;
    int sensitivity_trials = 100;

    std::string config_hash;  // FNV-1a of the canonical serialized config
};

// Loads, applies --set overrides (dotted.key=value), validates referenced
// paths, and computes the config hash.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

// exit codes: 0 ok, 1 usage, 2 data error, 3 pipeline error
int run(const std::string& command, const RunConfig& config, bool force);

}  // namespace liqguard::cli
