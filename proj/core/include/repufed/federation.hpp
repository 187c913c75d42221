#pragma once

#include <cstdint>
#include <vector>

#include "repufed/dag.hpp"
#include "repufed/drl.hpp"
#include "repufed/predictor.hpp"
#include "repufed/privacy.hpp"
#include "repufed/reputation.hpp"
#include "repufed/scene.hpp"
#include "repufed/similarity.hpp"

namespace repufed {

struct VehicleNode {
    int id = 0;
    SceneBatch shard;          // local training data
    ModelParams params;        // local model
    double xi = 500.0;         // compute rate, cycles/s
    double tau_rate = 50.0;    // uplink rate, param-units/s
    double s_comm = 0.95;      // packet-success probability
    double reputation = 0.5;
    double position = 0.0;     // scalar road position, meters
    double data_size = 0.0;    // |d_i|, samples
    bool is_bad = false;       // ground truth, never read by the algorithm
};

struct GlobalModel {
    ModelParams params;
    long version = 0;
    int slot = 0;
};

enum class SlotMode { Afl, Sfl, LowRPriority, NoDp, NoDrl };
SlotMode parse_slot_mode(const std::string& name);

struct FlConfig {
    int epochs_per_slot = 10;
    double lr = 0.05;
    int deep_rounds = 3;
    double shallow_weight = 0.25;
    double mix0 = 0.5;
    double staleness_decay = 1.0;
    double beta_m = 2.0;         // cycles per sample
    double local_blend = 0.5;    // local <- blend toward global at slot end
    int committee_k = 3;
    double por_threshold = 50.0;
    int gossip_fanout = 2;
    int aggregate_every = 1;  // global merge on every k-th slot
    double sim_threshold = 0.55;  // alpha/beta event classification
    double rep_gamma = 0.5;
    double high_rep_threshold = 0.5;
    int group_cap = 0;  // 0 -> ceil(n/2)
    double r0 = 1000.0;
};

struct RoundReport {
    int slot = 0;
    std::vector<int> high_group;
    std::vector<int> low_group;
    double rol_cost = 0.0;
    double time_cost_mean = 0.0;  // C_te
    double total_cost = 0.0;      // C_f
    double global_loss = 0.0;
    Metrics eval;
    double sim_seconds = 0.0;
    bool por_accept = true;
    long global_version = 0;
};

struct World {
    std::vector<VehicleNode> nodes;
    std::vector<LocalDag> dags;
    // stats[i][j]: vehicle i's interaction record about vehicle j.
    std::vector<std::vector<InteractionStats>> stats;
    GlobalModel global;
    SceneBatch eval_batch;  // held-out clean windows
    Scene scene;            // training scene (possibly corrupted)
    SimWeights sim_weights;
    double eps_lcs = 2.0;
    DpConfig dp;
    std::uint64_t seed = 1;
    double clock_seconds = 0.0;
    // Pairwise similarity cache for the current slot, refreshed in
    // run_slot; indexed by node position.
    std::vector<std::vector<double>> pair_sim;
};

// Weight-normalized convex combination, coordinate-wise.
ModelParams fedavg(const std::vector<ModelParams>& models,
                   const std::vector<double>& weights);

// global <- (1-a) global + a incoming, a = mix0 / (1 + decay*staleness).
GlobalModel async_update(const GlobalModel& global, const ModelParams& incoming,
                         int staleness, double mix0, double decay);

struct Share {
    int node = 0;
    ModelParams params;
    double reputation = 0.0;
    int staleness = 0;  // arrival rank
};

// High group merged by deep_rounds successive reputation-weighted async
// passes; low group merged once with its mixing weight scaled by
// shallow_weight.
GlobalModel grouped_aggregate(GlobalModel global,
                              const std::vector<Share>& high,
                              const std::vector<Share>& low, int deep_rounds,
                              double shallow_weight, double mix0,
                              double decay);

struct PorResult {
    bool accept = false;
    std::vector<double> member_losses;  // Loss^u per committee member
};

// Each member j evaluates gamma_j * Loss(candidate on d_j) + mean local
// loss, gamma_j = 1 + |d_j| / sum |d_i|; accept iff the median Loss^u is
// at or below the threshold.
PorResult por_validate(const ModelParams& candidate,
                       const std::vector<const VehicleNode*>& committee,
                       double threshold);

// Top-k by reputation, ties by id ascending.
std::vector<const VehicleNode*> select_committee(
    const std::vector<VehicleNode>& nodes, int k);

RoundReport run_slot(World& world, int slot, SlotMode mode,
                     const FlConfig& cfg);

struct WorldConfig {
    SynthConfig synth;
    std::string csv_path;  // when non-empty, overrides synth
    int tau = 6;
    int t_f = 6;
    int stride = 2;
    double train_fraction = 0.7;
    double bad_fraction = 0.0;
    CorruptionMode bad_mode = CorruptionMode::Scale;
    double bad_magnitude = 3.0;
    SimWeights sim_weights;
    double eps_lcs = 2.0;
    DpConfig dp;
    double xi_base = 500.0;
    double xi_spread = 1.0;  // multiplicative spread across vehicles
    double tau_rate_base = 50.0;
    double s_comm = 0.95;
    double init_scale = 0.0;
    std::uint64_t seed = 1;
};

World make_world(const WorldConfig& cfg);

// Selector world snapshot for the DRL module.
SelectWorld select_world_snapshot(const World& world, double beta_m);

}  // namespace repufed
