#pragma once

#include <string>
#include <vector>

#include "repufed/config.hpp"

namespace repufed {

struct RunResult {
    std::vector<RoundReport> rounds;
    Metrics final_eval;
    double total_cost = 0.0;
    double sim_seconds = 0.0;
};

// Execute `slots` federation slots on a freshly built world.
RunResult run_scenario(const ScenarioConfig& cfg);
RunResult run_scenario(const ScenarioConfig& cfg, SlotMode mode,
                       std::uint64_t seed);

std::string rounds_jsonl(const RunResult& result);
std::string summary_json(const RunResult& result);

// Exit codes: 0 success, 1 runtime error, 2 config error. Commands write
// their report files under out_dir.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            long seed_override = -1);
int cmd_ablate(const std::string& config_path,
               const std::vector<std::string>& variants,
               const std::string& out_dir, long seed_override = -1);
int cmd_sweep(const std::string& config_path, const SweepSpec& sweep,
              const std::string& out_dir, long seed_override = -1);
int cmd_drl(const std::string& config_path, const std::string& algo,
            const std::string& out_dir, long seed_override = -1);

// The DRL training world used by cmd_drl and the acceptance suite:
// reputations and rates snapshotted after warmup slots of the scenario.
SelectEnv make_select_env(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace repufed
