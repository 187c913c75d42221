#include "repufed/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repufed/rng.hpp"

namespace repufed {

RunResult run_scenario(const ScenarioConfig& cfg) {
    return run_scenario(cfg, cfg.mode, cfg.seed);
}

RunResult run_scenario(const ScenarioConfig& cfg, SlotMode mode,
                       std::uint64_t seed) {
    ScenarioConfig local = cfg;
    local.seed = seed;
    local.world.seed = seed;
    local.world.synth.seed = seed;

    World world = make_world(local.world);
    RunResult result;
    for (int slot = 0; slot < local.slots; ++slot)
        result.rounds.push_back(run_slot(world, slot, mode, local.fl));
    if (!result.rounds.empty()) {
        result.final_eval = result.rounds.back().eval;
        for (const auto& r : result.rounds) result.total_cost += r.total_cost;
    }
    result.sim_seconds = world.clock_seconds;
    return result;
}

namespace {

nlohmann::json round_json(const RoundReport& r) {
    nlohmann::json j;
    j["slot"] = r.slot;
    j["high_group"] = r.high_group;
    j["low_group"] = r.low_group;
    j["rol_cost"] = r.rol_cost;
    j["time_cost_mean"] = r.time_cost_mean;
    j["total_cost"] = r.total_cost;
    j["global_loss"] = r.global_loss;
    j["ade"] = r.eval.ade;
    j["fde"] = r.eval.fde;
    j["rmse"] = r.eval.rmse;
    j["sim_seconds"] = r.sim_seconds;
    j["por_accept"] = r.por_accept;
    j["global_version"] = r.global_version;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

ScenarioConfig load_config_or_exit(const std::string& path,
                                   long seed_override, int& code) {
    code = 0;
    ScenarioConfig cfg;
    try {
        cfg = parse_scenario(path);
        if (seed_override >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed_override);
            cfg.world.seed = cfg.seed;
            cfg.world.synth.seed = cfg.seed;
        }
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        code = 2;
    }
    return cfg;
}

}  // namespace

std::string rounds_jsonl(const RunResult& result) {
    std::ostringstream out;
    for (const auto& r : result.rounds) out << round_json(r).dump() << "\n";
    return out.str();
}

std::string summary_json(const RunResult& result) {
    nlohmann::json j;
    j["final"]["ade"] = result.final_eval.ade;
    j["final"]["fde"] = result.final_eval.fde;
    j["final"]["rmse"] = result.final_eval.rmse;
    j["total_cost"] = result.total_cost;
    j["sim_seconds"] = result.sim_seconds;
    std::vector<double> durations;
    for (const auto& r : result.rounds) durations.push_back(r.sim_seconds);
    j["slot_durations"] = durations;
    j["slots"] = result.rounds.size();
    return j.dump(2) + "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            long seed_override) {
    int code;
    auto cfg = load_config_or_exit(config_path, seed_override, code);
    if (code) return code;
    try {
        std::filesystem::create_directories(out_dir);
        auto result = run_scenario(cfg);
        write_file(out_dir + "/rounds.jsonl", rounds_jsonl(result));
        write_file(out_dir + "/summary.json", summary_json(result));
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_ablate(const std::string& config_path,
               const std::vector<std::string>& variants,
               const std::string& out_dir, long seed_override) {
    int code;
    auto cfg = load_config_or_exit(config_path, seed_override, code);
    if (code) return code;
    if (variants.size() < 2) {
        std::cerr << "config error: need at least 2 variants\n";
        return 2;
    }
    std::vector<SlotMode> modes;
    for (const auto& v : variants) {
        try {
            modes.push_back(parse_slot_mode(v));
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
    }
    try {
        std::filesystem::create_directories(out_dir);
        std::ostringstream csv;
        csv << "variant,ade,fde,rmse,total_cost\n";
        char buf[256];
        for (std::size_t i = 0; i < variants.size(); ++i) {
            auto result = run_scenario(cfg, modes[i], cfg.seed);
            std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n",
                          variants[i].c_str(), result.final_eval.ade,
                          result.final_eval.fde, result.final_eval.rmse,
                          result.total_cost);
            csv << buf;
        }
        write_file(out_dir + "/ablation.csv", csv.str());
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const SweepSpec& sweep,
              const std::string& out_dir, long seed_override) {
    int code;
    auto cfg = load_config_or_exit(config_path, seed_override, code);
    if (code) return code;
    if (sweep.values.empty() || sweep.repeats < 1) {
        std::cerr << "config error: sweep needs values and repeats >= 1\n";
        return 2;
    }
    // Validate the parameter path up front.
    try {
        ScenarioConfig probe = cfg;
        set_param(probe, sweep.param, sweep.values.front());
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        std::filesystem::create_directories(out_dir);
        std::ostringstream csv;
        csv << "value,repeat,ade,fde,rmse,cost\n";
        char buf[256];
        for (double value : sweep.values) {
            for (int rep = 0; rep < sweep.repeats; ++rep) {
                ScenarioConfig cell = cfg;
                set_param(cell, sweep.param, value);
                std::uint64_t seed = derive_seed(
                    cfg.seed, static_cast<std::uint64_t>(rep), 0x53eebULL);
                auto result = run_scenario(cell, cell.mode, seed);
                std::snprintf(buf, sizeof(buf),
                              "%.6g,%d,%.6f,%.6f,%.6f,%.6f\n", value, rep,
                              result.final_eval.ade, result.final_eval.fde,
                              result.final_eval.rmse, result.total_cost);
                csv << buf;
            }
        }
        write_file(out_dir + "/sweep.csv", csv.str());
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

SelectEnv make_select_env(const ScenarioConfig& cfg, std::uint64_t seed) {
    ScenarioConfig local = cfg;
    local.world.seed = seed;
    local.world.synth.seed = seed;
    World world = make_world(local.world);
    // A few warmup slots so reputations reflect behavior.
    for (int slot = 0; slot < 3; ++slot)
        run_slot(world, slot, SlotMode::Afl, local.fl);

    EnvConfig env_cfg;
    env_cfg.n_vehicles = static_cast<int>(world.nodes.size());
    env_cfg.high_rep_threshold = cfg.fl.high_rep_threshold;
    env_cfg.group_cap = cfg.fl.group_cap > 0
                            ? cfg.fl.group_cap
                            : static_cast<int>((world.nodes.size() + 1) / 2);
    env_cfg.r0 = cfg.env_r0;
    env_cfg.gamma_discount = cfg.ppo.gamma;
    env_cfg.cost_scale = cfg.cost_scale;
    return SelectEnv(env_cfg, select_world_snapshot(world, cfg.fl.beta_m));
}

int cmd_drl(const std::string& config_path, const std::string& algo,
            const std::string& out_dir, long seed_override) {
    int code;
    auto cfg = load_config_or_exit(config_path, seed_override, code);
    if (code) return code;
    if (algo != "ppo" && algo != "dqn") {
        std::cerr << "config error: algo must be ppo or dqn\n";
        return 2;
    }
    try {
        std::filesystem::create_directories(out_dir);
        SelectEnv env = make_select_env(cfg, cfg.seed);
        TrainResult result = (algo == "ppo")
                                 ? ppo_train(env, cfg.ppo, cfg.seed)
                                 : dqn_train(env, cfg.dqn, cfg.seed);
        std::ostringstream csv;
        csv << "episode,reward\n";
        char buf[128];
        for (std::size_t i = 0; i < result.episode_rewards.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i,
                          result.episode_rewards[i]);
            csv << buf;
        }
        write_file(out_dir + "/curve_" + algo + ".csv", csv.str());
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace repufed
