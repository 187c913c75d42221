#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "repufed/mlp.hpp"

namespace repufed {

// Snapshot of the per-vehicle quantities the selector sees.
struct SelectWorld {
    std::vector<double> tau_rates;   // uplink rate, param-units/s
    std::vector<double> xi;          // compute, cycles/s
    std::vector<double> rep;         // final reputations in [0,1]
    std::vector<double> positions;   // scalar road position, meters
    std::vector<double> data_sizes;  // |d_i|, samples
    double beta_m = 2.0;             // cycles per sample
    double model_size = 100.0;       // |w_i|, param units
};

struct EnvConfig {
    int n_vehicles = 20;
    double high_rep_threshold = 0.5;
    int group_cap = 10;
    double r0 = 1000.0;  // centroid radius, meters
    double gamma_discount = 0.99;
    double cost_scale = 0.1;
};

struct SelectState {
    std::vector<double> tau_rates, xi, rep;
    std::vector<int> mask;  // 1 = already selected
    int consec_low = 0;
    int high_count = 0;
    double centroid = 0.0;
};

// Sum of (1 - rep_i) over the selection.
double rol_cost(const std::vector<std::size_t>& selected,
                const std::vector<double>& reps);

// (C_a, C_u) = (data * beta_m / xi, model_size / tau_rate).
std::pair<double, double> time_cost(double data_size, double beta_m, double xi,
                                    double model_size, double tau_rate);

// rol_cost plus the mean of (C_a + C_u) over the selection.
double total_cost(const std::vector<std::size_t>& selected,
                  const SelectWorld& world);

struct StepResult {
    double reward = 0.0;
    bool done = false;
};

class SelectEnv {
  public:
    SelectEnv(EnvConfig cfg, SelectWorld world);

    SelectState reset();
    const SelectState& state() const { return state_; }

    // Feasible, not-yet-selected vehicle indices.
    std::vector<int> valid_actions() const;

    StepResult step(int action);

    // Flat observation: [tau_rates, xi, rep, mask], rates scaled to [0,1].
    std::vector<double> observe() const;
    int obs_dim() const { return 4 * cfg_.n_vehicles; }
    int n_actions() const { return cfg_.n_vehicles; }

    const EnvConfig& config() const { return cfg_; }
    const SelectWorld& world() const { return world_; }
    std::vector<std::size_t> selected() const;

  private:
    EnvConfig cfg_;
    SelectWorld world_;
    SelectState state_;
    double rate_scale_ = 1.0, xi_scale_ = 1.0;
};

struct Transition {
    std::vector<double> obs;
    std::vector<int> valid;
    int action = 0;
    double reward = 0.0;
    bool done = false;
    double log_prob = 0.0;
    double value = 0.0;
};

std::vector<double> rewards_to_go(const std::vector<Transition>& episode,
                                  double gamma);

// GAE over one episode; raw (unnormalized) advantages.
std::vector<double> gae_advantages(const std::vector<Transition>& episode,
                                   double gamma, double lambda);

struct PpoHyper {
    int hidden = 64;
    int total_episodes = 500;
    int episodes_per_batch = 10;
    int epochs_per_batch = 10;
    double clip_eps = 0.2;
    double lr_policy = 3e-3;
    double lr_value = 1e-2;
    double gamma = 0.99;
    double lambda_gae = 0.95;
    double entropy_coef = 0.01;
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
};

// Masked-softmax policy over action logits; invalid actions get -inf.
std::vector<double> masked_policy(const Mlp& policy,
                                  const std::vector<double>& obs,
                                  const std::vector<int>& valid, int n_actions);

UpdateStats ppo_update(Mlp& policy, Mlp& value, Adam& opt_p, Adam& opt_v,
                       const std::vector<Transition>& batch,
                       const std::vector<double>& returns,
                       const std::vector<double>& advantages,
                       const PpoHyper& hyper);

struct TrainResult {
    Mlp policy;
    Mlp value;
    std::vector<double> episode_rewards;  // learning curve
};

TrainResult ppo_train(SelectEnv& env, const PpoHyper& hyper,
                      std::uint64_t seed);

struct DqnHyper {
    int hidden = 64;
    int total_episodes = 500;
    double lr = 1e-3;
    double gamma = 0.99;
    std::size_t buffer_cap = 20000;
    int batch_size = 64;
    int target_interval = 200;  // steps between target copies
    double eps_start = 1.0;
    double eps_floor = 0.05;
    double eps_decay = 0.99;  // per episode
};

TrainResult dqn_train(SelectEnv& env, const DqnHyper& hyper,
                      std::uint64_t seed);

// Greedy rollout of the trained policy; selected indices form the high
// group, the rest the low group.
std::pair<std::vector<int>, std::vector<int>> policy_group(const Mlp& policy,
                                                           SelectEnv& env);

// Reference policies used as oracles in tests and acceptance.
double greedy_oracle_episode(SelectEnv& env);
double random_policy_episode(SelectEnv& env, std::uint64_t seed);

}  // namespace repufed
