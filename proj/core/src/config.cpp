#include "repufed/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

namespace repufed {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

using KeyMap = std::map<std::string, std::string>;

// section -> key -> value
std::map<std::string, KeyMap> parse_ini(const std::string& text,
                                        const std::string& origin) {
    std::map<std::string, KeyMap> out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError(origin + ": line " + std::to_string(lineno) +
                                 ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ": line " + std::to_string(lineno) +
                             ": expected key = value");
        out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used;
        double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw ParseError("bad numeric value for " + key + ": " + v);
    }
}

}  // namespace

ScenarioConfig parse_scenario_text(const std::string& text,
                                   const std::string& origin) {
    auto ini = parse_ini(text, origin);
    ScenarioConfig cfg;

    auto section = [&](const std::string& name) -> KeyMap {
        auto it = ini.find(name);
        return it == ini.end() ? KeyMap{} : it->second;
    };
    auto apply = [&](const KeyMap& kv, const std::string& sec,
                     const std::map<std::string,
                                    std::function<void(const std::string&)>>&
                         handlers) {
        for (const auto& [key, value] : kv) {
            auto it = handlers.find(key);
            if (it == handlers.end())
                throw ParseError(origin + ": unknown key " + sec + "." + key);
            it->second(value);
        }
    };
    auto num = [&](double* dst) {
        return [dst](const std::string& v) { *dst = to_double(v, "value"); };
    };
    auto integer = [&](int* dst) {
        return [dst](const std::string& v) {
            *dst = static_cast<int>(to_double(v, "value"));
        };
    };

    apply(section("scene"), "scene",
          {{"n_vehicles", integer(&cfg.world.synth.n_vehicles)},
           {"n_lanes", integer(&cfg.world.synth.n_lanes)},
           {"duration_frames", integer(&cfg.world.synth.duration_frames)},
           {"speed_min", num(&cfg.world.synth.speed_min)},
           {"speed_max", num(&cfg.world.synth.speed_max)},
           {"lane_change_prob", num(&cfg.world.synth.lane_change_prob)},
           {"frame_rate", num(&cfg.world.synth.frame_rate)},
           {"csv_path",
            [&](const std::string& v) { cfg.world.csv_path = v; }},
           {"tau", integer(&cfg.world.tau)},
           {"t_f", integer(&cfg.world.t_f)},
           {"stride", integer(&cfg.world.stride)},
           {"train_fraction", num(&cfg.world.train_fraction)},
           {"bad_fraction", num(&cfg.world.bad_fraction)},
           {"bad_mode",
            [&](const std::string& v) {
                cfg.world.bad_mode = parse_corruption_mode(v);
            }},
           {"bad_magnitude", num(&cfg.world.bad_magnitude)},
           {"eps_lcs", num(&cfg.world.eps_lcs)},
           {"rho1", num(&cfg.world.sim_weights.rho1)},
           {"rho2", num(&cfg.world.sim_weights.rho2)},
           {"rho3", num(&cfg.world.sim_weights.rho3)}});

    apply(section("fl"), "fl",
          {{"epochs_per_slot", integer(&cfg.fl.epochs_per_slot)},
           {"lr", num(&cfg.fl.lr)},
           {"deep_rounds", integer(&cfg.fl.deep_rounds)},
           {"shallow_weight", num(&cfg.fl.shallow_weight)},
           {"mix0", num(&cfg.fl.mix0)},
           {"staleness_decay", num(&cfg.fl.staleness_decay)},
           {"beta_m", num(&cfg.fl.beta_m)},
           {"local_blend", num(&cfg.fl.local_blend)},
           {"committee_k", integer(&cfg.fl.committee_k)},
           {"por_threshold", num(&cfg.fl.por_threshold)},
           {"gossip_fanout", integer(&cfg.fl.gossip_fanout)},
           {"aggregate_every", integer(&cfg.fl.aggregate_every)},
           {"xi_base", num(&cfg.world.xi_base)},
           {"xi_spread", num(&cfg.world.xi_spread)},
           {"tau_rate_base", num(&cfg.world.tau_rate_base)},
           {"s_comm", num(&cfg.world.s_comm)}});

    apply(section("dp"), "dp",
          {{"epsilon", num(&cfg.world.dp.epsilon)},
           {"sensitivity", num(&cfg.world.dp.sensitivity_s)}});

    apply(section("reputation"), "reputation",
          {{"sim_threshold", num(&cfg.fl.sim_threshold)},
           {"gamma", num(&cfg.fl.rep_gamma)},
           {"high_rep_threshold", num(&cfg.fl.high_rep_threshold)},
           {"group_cap", integer(&cfg.fl.group_cap)},
           {"r0", num(&cfg.fl.r0)}});

    apply(section("drl"), "drl",
          {{"episodes",
            [&](const std::string& v) {
                cfg.ppo.total_episodes = static_cast<int>(to_double(v, "episodes"));
                cfg.dqn.total_episodes = cfg.ppo.total_episodes;
            }},
           {"hidden",
            [&](const std::string& v) {
                cfg.ppo.hidden = static_cast<int>(to_double(v, "hidden"));
                cfg.dqn.hidden = cfg.ppo.hidden;
            }},
           {"episodes_per_batch", integer(&cfg.ppo.episodes_per_batch)},
           {"epochs_per_batch", integer(&cfg.ppo.epochs_per_batch)},
           {"clip_eps", num(&cfg.ppo.clip_eps)},
           {"lr_policy", num(&cfg.ppo.lr_policy)},
           {"lr_value", num(&cfg.ppo.lr_value)},
           {"gamma_discount",
            [&](const std::string& v) {
                cfg.ppo.gamma = to_double(v, "gamma_discount");
                cfg.dqn.gamma = cfg.ppo.gamma;
            }},
           {"lambda_gae", num(&cfg.ppo.lambda_gae)},
           {"entropy_coef", num(&cfg.ppo.entropy_coef)},
           {"dqn_lr", num(&cfg.dqn.lr)},
           {"dqn_eps_decay", num(&cfg.dqn.eps_decay)},
           {"cost_scale", num(&cfg.cost_scale)},
           {"r0", num(&cfg.env_r0)}});

    apply(section("run"), "run",
          {{"slots", integer(&cfg.slots)},
           {"seed",
            [&](const std::string& v) {
                cfg.seed = static_cast<std::uint64_t>(to_double(v, "seed"));
                cfg.seed_set = true;
            }},
           {"mode",
            [&](const std::string& v) { cfg.mode = parse_slot_mode(v); }}});

    if (!cfg.seed_set)
        throw ParseError(origin + ": run.seed is mandatory");
    cfg.world.seed = cfg.seed;
    cfg.world.synth.seed = cfg.seed;
    return cfg;
}

ScenarioConfig parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), path);
}

void set_param(ScenarioConfig& cfg, const std::string& path, double value) {
    if (path.find('.') == std::string::npos)
        throw ValidationError("set_param: expected section.key, got " + path);
    static const std::vector<
        std::pair<std::string, std::function<void(ScenarioConfig&, double)>>>
        setters = {
            {"dp.epsilon", [](ScenarioConfig& c, double v) { c.world.dp.epsilon = v; }},
            {"dp.sensitivity", [](ScenarioConfig& c, double v) { c.world.dp.sensitivity_s = v; }},
            {"scene.bad_fraction", [](ScenarioConfig& c, double v) { c.world.bad_fraction = v; }},
            {"scene.bad_magnitude", [](ScenarioConfig& c, double v) { c.world.bad_magnitude = v; }},
            {"scene.n_vehicles", [](ScenarioConfig& c, double v) { c.world.synth.n_vehicles = static_cast<int>(v); }},
            {"scene.duration_frames", [](ScenarioConfig& c, double v) { c.world.synth.duration_frames = static_cast<int>(v); }},
            {"scene.eps_lcs", [](ScenarioConfig& c, double v) { c.world.eps_lcs = v; }},
            {"fl.epochs_per_slot", [](ScenarioConfig& c, double v) { c.fl.epochs_per_slot = static_cast<int>(v); }},
            {"fl.lr", [](ScenarioConfig& c, double v) { c.fl.lr = v; }},
            {"fl.aggregate_every", [](ScenarioConfig& c, double v) { c.fl.aggregate_every = static_cast<int>(v); }},
            {"fl.deep_rounds", [](ScenarioConfig& c, double v) { c.fl.deep_rounds = static_cast<int>(v); }},
            {"fl.shallow_weight", [](ScenarioConfig& c, double v) { c.fl.shallow_weight = v; }},
            {"fl.mix0", [](ScenarioConfig& c, double v) { c.fl.mix0 = v; }},
            {"fl.xi_spread", [](ScenarioConfig& c, double v) { c.world.xi_spread = v; }},
            {"fl.s_comm", [](ScenarioConfig& c, double v) { c.world.s_comm = v; }},
            {"reputation.sim_threshold", [](ScenarioConfig& c, double v) { c.fl.sim_threshold = v; }},
            {"reputation.high_rep_threshold", [](ScenarioConfig& c, double v) { c.fl.high_rep_threshold = v; }},
            {"reputation.gamma", [](ScenarioConfig& c, double v) { c.fl.rep_gamma = v; }},
            {"run.slots", [](ScenarioConfig& c, double v) { c.slots = static_cast<int>(v); }},
            {"drl.episodes", [](ScenarioConfig& c, double v) {
                 c.ppo.total_episodes = static_cast<int>(v);
                 c.dqn.total_episodes = static_cast<int>(v);
             }},
            {"drl.cost_scale", [](ScenarioConfig& c, double v) { c.cost_scale = v; }},
        };
    for (const auto& [p, f] : setters) {
        if (p == path) {
            f(cfg, value);
            return;
        }
    }
    throw ValidationError("set_param: unsupported sweep path " + path);
}

}  // namespace repufed
