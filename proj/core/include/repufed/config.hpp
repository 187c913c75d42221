#pragma once

#include <map>
#include <string>
#include <vector>

#include "repufed/drl.hpp"
#include "repufed/federation.hpp"

namespace repufed {

// Full experiment scenario: scene source, FL, DP, DRL, and reputation
// parameters plus run controls. Loaded from an INI-style file with
// [scene], [fl], [dp], [drl], [reputation] and [run] sections; any key
// omitted keeps its default.
struct ScenarioConfig {
    WorldConfig world;
    FlConfig fl;
    SlotMode mode = SlotMode::Afl;
    int slots = 30;
    std::uint64_t seed = 0;
    bool seed_set = false;

    PpoHyper ppo;
    DqnHyper dqn;
    double cost_scale = 0.1;
    double env_r0 = 1000.0;
};

ScenarioConfig parse_scenario(const std::string& path);
ScenarioConfig parse_scenario_text(const std::string& text,
                                   const std::string& origin = "<string>");

// Resolve a dotted parameter path like "dp.epsilon" or
// "scene.bad_fraction" and assign the value. Throws ValidationError for
// unknown paths.
void set_param(ScenarioConfig& cfg, const std::string& path, double value);

struct SweepSpec {
    std::string param;           // dotted path
    std::vector<double> values;  // non-empty
    int repeats = 1;
};

}  // namespace repufed
