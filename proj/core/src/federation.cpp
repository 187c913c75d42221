#include "repufed/federation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "repufed/rng.hpp"

namespace repufed {

SlotMode parse_slot_mode(const std::string& name) {
    if (name == "afl" || name == "base") return SlotMode::Afl;
    if (name == "sfl" || name == "no-afl") return SlotMode::Sfl;
    if (name == "low-r" || name == "low_r_priority") return SlotMode::LowRPriority;
    if (name == "no-dp" || name == "no_dp") return SlotMode::NoDp;
    if (name == "no-drl" || name == "no_drl") return SlotMode::NoDrl;
    throw ValidationError("unknown slot mode: " + name);
}

ModelParams fedavg(const std::vector<ModelParams>& models,
                   const std::vector<double>& weights) {
    if (models.empty() || models.size() != weights.size())
        throw ValidationError("fedavg: empty or mismatched inputs");
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (total <= 0.0) throw ValidationError("fedavg: weights must sum > 0");
    ModelParams out = models[0];
    auto acc = std::vector<double>(out.size(), 0.0);
    for (std::size_t m = 0; m < models.size(); ++m) {
        if (models[m].tau != out.tau || models[m].t_f != out.t_f)
            throw ValidationError("fedavg: dim mismatch");
        auto flat = models[m].flat();
        double w = weights[m] / total;
        for (std::size_t i = 0; i < flat.size(); ++i) acc[i] += w * flat[i];
    }
    return ModelParams::from_flat(out.tau, out.t_f, acc);
}

GlobalModel async_update(const GlobalModel& global, const ModelParams& incoming,
                         int staleness, double mix0, double decay) {
    if (staleness < 0)
        throw ValidationError("async_update: negative staleness");
    if (mix0 <= 0.0 || mix0 > 1.0)
        throw ValidationError("async_update: mix0 must be in (0,1]");
    if (decay < 0.0) throw ValidationError("async_update: negative decay");
    if (incoming.tau != global.params.tau || incoming.t_f != global.params.t_f)
        throw ValidationError("async_update: dim mismatch");
    double a = mix0 / (1.0 + decay * static_cast<double>(staleness));
    auto g = global.params.flat();
    auto in = incoming.flat();
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = (1.0 - a) * g[i] + a * in[i];
    GlobalModel out = global;
    out.params = ModelParams::from_flat(global.params.tau, global.params.t_f, g);
    out.version = global.version + 1;
    return out;
}

GlobalModel grouped_aggregate(GlobalModel global,
                              const std::vector<Share>& high,
                              const std::vector<Share>& low, int deep_rounds,
                              double shallow_weight, double mix0,
                              double decay) {
    for (const auto& h : high)
        for (const auto& l : low)
            if (h.node == l.node)
                throw ValidationError("grouped_aggregate: overlapping groups");
    for (int r = 0; r < deep_rounds; ++r) {
        for (const auto& s : high) {
            double a = std::clamp(s.reputation, 0.0, 1.0) * mix0;
            if (a <= 0.0) continue;
            global = async_update(global, s.params, s.staleness, a, decay);
        }
    }
    if (shallow_weight > 0.0) {
        for (const auto& s : low) {
            double a = shallow_weight * std::clamp(s.reputation, 0.0, 1.0) * mix0;
            if (a <= 0.0) continue;
            global = async_update(global, s.params, s.staleness, a, decay);
        }
    }
    return global;
}

PorResult por_validate(const ModelParams& candidate,
                       const std::vector<const VehicleNode*>& committee,
                       double threshold) {
    if (committee.empty())
        throw ValidationError("por_validate: empty committee");
    double total_data = 0.0;
    for (const auto* n : committee) {
        if (n->shard.windows.empty())
            throw ValidationError("por_validate: member has empty data shard");
        total_data += n->data_size;
    }
    // Mean loss of the members' own local models on their own data.
    double mean_local = 0.0;
    for (const auto* n : committee)
        mean_local += loss(forward(n->params, n->shard), n->shard);
    mean_local /= static_cast<double>(committee.size());

    PorResult res;
    for (const auto* n : committee) {
        double gamma_j = 1.0 + n->data_size / total_data;
        double cand_loss = loss(forward(candidate, n->shard), n->shard);
        res.member_losses.push_back(gamma_j * cand_loss + mean_local);
    }
    std::vector<double> sorted = res.member_losses;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0)
        median = 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    res.accept = median <= threshold;
    return res;
}

std::vector<const VehicleNode*> select_committee(
    const std::vector<VehicleNode>& nodes, int k) {
    if (k < 1) throw ValidationError("select_committee: k must be >= 1");
    if (static_cast<std::size_t>(k) > nodes.size())
        throw ValidationError("select_committee: k exceeds node count");
    std::vector<const VehicleNode*> all;
    for (const auto& n : nodes) all.push_back(&n);
    std::sort(all.begin(), all.end(),
              [](const VehicleNode* a, const VehicleNode* b) {
                  if (a->reputation != b->reputation)
                      return a->reputation > b->reputation;
                  return a->id < b->id;
              });
    all.resize(static_cast<std::size_t>(k));
    return all;
}

namespace {

ModelParams blend(const ModelParams& a, const ModelParams& b, double w_b) {
    auto fa = a.flat();
    auto fb = b.flat();
    for (std::size_t i = 0; i < fa.size(); ++i)
        fa[i] = (1.0 - w_b) * fa[i] + w_b * fb[i];
    return ModelParams::from_flat(a.tau, a.t_f, fa);
}

// Mean pairwise segment similarity over the training span, cached per
// slot for reputation updates.
void refresh_pair_sims(World& world) {
    const std::size_t n = world.nodes.size();
    world.pair_sim.assign(n, std::vector<double>(n, 1.0));
    std::vector<TrajectorySegment> segs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Track* tr = world.scene.find_track(world.nodes[i].id);
        if (tr) segs[i] = tr->points;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            if (segs[i].size() >= 2 && segs[j].size() >= 2)
                s = std::clamp(
                    sim(segs[i], segs[j], world.sim_weights, world.eps_lcs),
                    0.0, 1.0);
            world.pair_sim[i][j] = s;
            world.pair_sim[j][i] = s;
        }
}

void update_reputations(World& world, int slot, const FlConfig& cfg) {
    const std::size_t n = world.nodes.size();
    refresh_pair_sims(world);

    for (std::size_t j = 0; j < n; ++j) {
        // Every other vehicle observes j this slot.
        std::vector<Opinion> locals;
        std::vector<double> observer_rep;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == j) continue;
            bool delivered =
                Rng(derive_seed(world.seed, 0xde11ULL, i * n + j,
                                static_cast<std::uint64_t>(slot)))
                    .uniform01() < world.nodes[j].s_comm;
            world.stats[i][j] =
                count_interaction(world.stats[i][j], world.pair_sim[i][j],
                                  cfg.sim_threshold, delivered);
            locals.push_back(local_opinion(world.stats[i][j]));
            observer_rep.push_back(world.nodes[i].reputation);
        }
        if (locals.empty()) continue;

        // The lowest-id observer acts as requester; the rest recommend
        // with their own reputation as delta. A single vantage point must
        // not carry unbounded certainty (a fully-certain requester would
        // override the whole committee), so floor the uncertainties
        // before fusing: the requester keeps at most 30% certainty, the
        // combined recommendation at most 70%. The residual uncertainty
        // also keeps every reputation strictly above zero, so no vehicle
        // is ever written off entirely.
        auto floor_u = [](Opinion op, double u_min) {
            if (op.u >= u_min) return op;
            double scale = op.u < 1.0 ? (1.0 - u_min) / (1.0 - op.u) : 0.0;
            return Opinion{op.r * scale, op.d * scale, u_min};
        };
        Opinion final_op;
        if (locals.size() == 1) {
            final_op = locals[0];
        } else {
            std::vector<Recommendation> recs;
            for (std::size_t k = 1; k < locals.size(); ++k)
                recs.push_back({std::max(observer_rep[k], 1e-6), locals[k]});
            Opinion rec = floor_u(combine_recommendations(recs), 0.3);
            locals[0] = floor_u(locals[0], 0.7);
            try {
                final_op = fuse_final(locals[0], rec);
            } catch (const ValidationError&) {
                // Both fully certain: fall back to equal-weight averaging.
                final_op = combine_recommendations(
                    {{1.0, locals[0]}, {1.0, rec}});
            }
        }
        world.nodes[j].reputation = final_reputation(final_op, cfg.rep_gamma);
    }
}

}  // namespace

RoundReport run_slot(World& world, int slot, SlotMode mode,
                     const FlConfig& cfg) {
    const std::size_t n = world.nodes.size();
    RoundReport report;
    report.slot = slot;

    // 1. Local training on each vehicle's shard.
    for (auto& node : world.nodes) {
        if (node.shard.windows.empty()) continue;
        auto [p, l] = local_train(node.params, node.shard, cfg.epochs_per_slot,
                                  cfg.lr);
        node.params = std::move(p);
        (void)l;
    }

    // 2. Outbound shares; DP clip + noise unless disabled.
    const bool dp_on = mode != SlotMode::NoDp;
    std::vector<ModelParams> shares(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& node = world.nodes[i];
        if (dp_on) {
            DpConfig dp = world.dp;
            dp.seed = derive_seed(world.seed, 0xd9ULL,
                                  static_cast<std::uint64_t>(node.id),
                                  static_cast<std::uint64_t>(slot));
            auto clipped = clip_l1(node.params.flat(), dp.sensitivity_s);
            auto noised = laplace_perturb(clipped, dp);
            shares[i] = ModelParams::from_flat(node.params.tau, node.params.t_f,
                                               noised);
        } else {
            shares[i] = node.params;
        }
    }

    // 3. Ledger: record the share, then gossip.
    std::vector<std::vector<int>> topology(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) topology[i].push_back(static_cast<int>(j));
    for (std::size_t i = 0; i < n; ++i) {
        std::ostringstream payload;
        payload << "model:" << world.nodes[i].id << ":v"
                << world.global.version;
        world.dags[i].append(TxKind::ModelShare, payload.str(),
                             world.nodes[i].id, slot);
    }
    gossip_round(world.dags, topology, cfg.gossip_fanout,
                 derive_seed(world.seed, 0x906ULL,
                             static_cast<std::uint64_t>(slot)));

    // 4. Reputation update from trajectory similarity + delivery.
    update_reputations(world, slot, cfg);
    for (std::size_t i = 0; i < n; ++i) {
        std::ostringstream payload;
        payload << "rep:" << world.nodes[i].id << ":"
                << world.nodes[i].reputation;
        world.dags[i].append(TxKind::ReputationUpdate, payload.str(),
                             world.nodes[i].id, slot);
    }

    // 5. Per-node time costs (also drive grouping order below).
    std::vector<double> reps(n), ca(n), cu(n);
    double cost_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        reps[i] = std::clamp(world.nodes[i].reputation, 0.0, 1.0);
        auto [a, u] = time_cost(world.nodes[i].data_size, cfg.beta_m,
                                world.nodes[i].xi,
                                static_cast<double>(world.nodes[i].params.size()),
                                world.nodes[i].tau_rate);
        ca[i] = a;
        cu[i] = u;
        cost_max = std::max(cost_max, a + u);
    }

    // 6. Grouping.
    std::vector<std::size_t> high, low;
    int cap = cfg.group_cap > 0 ? cfg.group_cap
                                : static_cast<int>((n + 1) / 2);
    if (mode == SlotMode::NoDrl) {
        for (std::size_t i = 0; i < n; ++i) high.push_back(i);
    } else {
        // Greedy selection (the selector's fixed point): only vehicles
        // above the reputation bar are eligible for the deep group, and
        // among those the score trades reputation against normalized
        // round time, matching the selector's reward.
        auto score = [&](std::size_t i) {
            double cost = cost_max > 0.0 ? (ca[i] + cu[i]) / cost_max : 0.0;
            return world.nodes[i].reputation - 0.5 * cost;
        };
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double sa = score(a), sb = score(b);
            if (sa != sb) return sa > sb;
            return world.nodes[a].id < world.nodes[b].id;
        });
        for (std::size_t i : order) {
            if (static_cast<int>(high.size()) < cap &&
                world.nodes[i].reputation >= cfg.high_rep_threshold)
                high.push_back(i);
            else
                low.push_back(i);
        }
        if (high.empty()) {
            // Nobody clears the bar; take the single best so the round
            // still aggregates something.
            high.push_back(order[0]);
            low.erase(std::find(low.begin(), low.end(), order[0]));
        }
    }
    if (mode == SlotMode::LowRPriority) std::swap(high, low);
    for (std::size_t i : high) report.high_group.push_back(world.nodes[i].id);
    for (std::size_t i : low) report.low_group.push_back(world.nodes[i].id);

    std::vector<std::size_t> selected = high;
    selected.insert(selected.end(), low.begin(), low.end());
    report.rol_cost = rol_cost(selected, reps);
    double te = 0.0;
    for (std::size_t i : selected) te += ca[i] + cu[i];
    report.time_cost_mean = te / static_cast<double>(selected.size());
    report.total_cost = report.rol_cost + report.time_cost_mean;

    // 7. Aggregation (skipped on off slots when aggregate_every > 1).
    const bool aggregate_now =
        cfg.aggregate_every <= 1 || slot % cfg.aggregate_every == 0;
    GlobalModel candidate = world.global;
    if (!aggregate_now) {
        // fall through with the unchanged global
    } else if (mode == SlotMode::Sfl) {
        std::vector<ModelParams> models;
        std::vector<double> weights;
        for (std::size_t i : selected) {
            models.push_back(shares[i]);
            weights.push_back(world.nodes[i].data_size);
        }
        candidate.params = fedavg(models, weights);
        candidate.version = world.global.version + 1;
    } else {
        // Arrival order by completion time; staleness = arrival rank.
        auto arrival = [&](const std::vector<std::size_t>& group) {
            std::vector<std::size_t> order = group;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          double ta = ca[a] + cu[a], tb = ca[b] + cu[b];
                          if (ta != tb) return ta < tb;
                          return world.nodes[a].id < world.nodes[b].id;
                      });
            return order;
        };
        std::vector<Share> high_shares, low_shares;
        int rank = 0;
        for (std::size_t i : arrival(high))
            high_shares.push_back({world.nodes[i].id, shares[i], reps[i], rank++});
        rank = 0;
        for (std::size_t i : arrival(low))
            low_shares.push_back({world.nodes[i].id, shares[i], reps[i], rank++});
        candidate = grouped_aggregate(world.global, high_shares, low_shares,
                                      cfg.deep_rounds, cfg.shallow_weight,
                                      cfg.mix0, cfg.staleness_decay);
    }

    // 8. PoR validation by the reputation committee.
    if (aggregate_now) {
        auto committee = select_committee(
            world.nodes, std::min<int>(cfg.committee_k,
                                       static_cast<int>(world.nodes.size())));
        auto por = por_validate(candidate.params, committee, cfg.por_threshold);
        report.por_accept = por.accept;
        if (por.accept) {
            world.global = candidate;
            world.global.slot = slot;
        }
        // 9. Local models pull the (possibly updated) global.
        for (auto& node : world.nodes)
            node.params =
                blend(node.params, world.global.params, cfg.local_blend);
    }
    report.global_version = world.global.version;

    // 10. Evaluation on held-out clean windows.
    auto preds = forward(world.global.params, world.eval_batch);
    report.global_loss = loss(preds, world.eval_batch);
    {
        std::vector<std::vector<Vec2>> flat_pred, flat_truth;
        // Stack windows along the vehicle axis per step.
        int t_f = world.eval_batch.windows.front().t_f;
        flat_pred.assign(static_cast<std::size_t>(t_f), {});
        flat_truth.assign(static_cast<std::size_t>(t_f), {});
        for (std::size_t wi = 0; wi < world.eval_batch.windows.size(); ++wi) {
            const auto& win = world.eval_batch.windows[wi];
            for (int t = 0; t < t_f; ++t)
                for (std::size_t i = 0; i < win.vehicle_ids.size(); ++i) {
                    flat_pred[t].push_back(preds[wi][t][i]);
                    flat_truth[t].push_back(win.future[i][t]);
                }
        }
        report.eval = metrics(flat_pred, flat_truth);
    }

    // 11. Simulated wall clock. SFL is a synchronous barrier: it waits
    // for the slowest selected vehicle. The async modes cut the global
    // once three quarters of the deep group have arrived; the stragglers
    // roll into the next cut with staleness instead of being waited on.
    double duration = 0.0;
    if (mode == SlotMode::Sfl) {
        for (std::size_t i : selected)
            duration = std::max(duration, ca[i] + cu[i]);
    } else {
        const auto& gate = high.empty() ? selected : high;
        std::vector<double> arrivals;
        for (std::size_t i : gate) arrivals.push_back(ca[i] + cu[i]);
        std::sort(arrivals.begin(), arrivals.end());
        std::size_t quorum = (3 * arrivals.size() + 3) / 4;  // ceil(0.75 n)
        duration = arrivals[quorum - 1];
    }
    world.clock_seconds += duration;
    report.sim_seconds = duration;
    return report;
}

World make_world(const WorldConfig& cfg) {
    World world;
    world.seed = cfg.seed;
    world.sim_weights = cfg.sim_weights;
    world.eps_lcs = cfg.eps_lcs;
    world.dp = cfg.dp;

    Scene clean;
    if (!cfg.csv_path.empty()) {
        auto scenes = load_csv(cfg.csv_path);
        if (scenes.empty()) throw ValidationError("make_world: empty dataset");
        clean = scenes.front();
    } else {
        clean = synthesize_traffic(cfg.synth);
    }

    std::set<int> bad_ids;
    world.scene = clean;
    if (cfg.bad_fraction > 0.0) {
        auto [corrupted, bad] = inject_bad_nodes(
            clean, cfg.bad_fraction, cfg.bad_mode, cfg.bad_magnitude,
            derive_seed(cfg.seed, 0xbadbadULL));
        world.scene = std::move(corrupted);
        bad_ids = std::move(bad);
    }

    // Time split: early windows train, late windows evaluate (clean
    // ground truth).
    const int first = clean.first_frame();
    const int last = clean.last_frame();
    const int split = first + static_cast<int>(
                                  (last - first + 1) * cfg.train_fraction);
    auto all_train_windows = window(world.scene, cfg.tau, cfg.t_f, cfg.stride);
    std::vector<ObservationWindow> train_windows;
    for (auto& w : all_train_windows)
        if (w.start_frame + cfg.tau + cfg.t_f <= split)
            train_windows.push_back(std::move(w));

    auto all_eval_windows = window(clean, cfg.tau, cfg.t_f, cfg.stride);
    std::vector<ObservationWindow> eval_windows;
    for (auto& w : all_eval_windows)
        if (w.start_frame >= split) eval_windows.push_back(std::move(w));
    if (eval_windows.empty() || train_windows.empty())
        throw ValidationError("make_world: scene too short for the split");
    world.eval_batch = make_batch(clean, eval_windows, cfg.sim_weights,
                                  cfg.eps_lcs);

    const std::size_t n = world.scene.tracks.size();
    world.dags.assign(n, LocalDag::with_genesis());
    world.stats.assign(n, std::vector<InteractionStats>(n));

    for (std::size_t idx = 0; idx < n; ++idx) {
        const Track& tr = world.scene.tracks[idx];
        VehicleNode node;
        node.id = tr.vehicle_id;
        node.is_bad = bad_ids.count(tr.vehicle_id) > 0;
        node.position = tr.points.front().x;

        // Local shard: windows restricted to this vehicle's own track.
        Scene sub;
        sub.frame_rate = world.scene.frame_rate;
        sub.tracks.push_back(tr);
        std::vector<ObservationWindow> own;
        for (const auto& w : train_windows) {
            auto it = std::find(w.vehicle_ids.begin(), w.vehicle_ids.end(),
                                tr.vehicle_id);
            if (it == w.vehicle_ids.end()) continue;
            std::size_t pos =
                static_cast<std::size_t>(it - w.vehicle_ids.begin());
            ObservationWindow ow;
            ow.start_frame = w.start_frame;
            ow.tau = w.tau;
            ow.t_f = w.t_f;
            ow.vehicle_ids = {tr.vehicle_id};
            ow.history = {w.history[pos]};
            ow.future = {w.future[pos]};
            ow.anchors = {w.anchors[pos]};
            own.push_back(std::move(ow));
        }
        node.shard = make_batch(sub, own, cfg.sim_weights, cfg.eps_lcs);
        node.data_size = static_cast<double>(own.size());

        Rng rng(derive_seed(cfg.seed, 0x0deULL,
                            static_cast<std::uint64_t>(node.id)));
        node.xi = cfg.xi_base *
                  (cfg.xi_spread <= 1.0
                       ? 1.0
                       : std::pow(cfg.xi_spread, rng.uniform01()));
        node.tau_rate = cfg.tau_rate_base;
        node.s_comm = cfg.s_comm;
        node.reputation = 0.5;
        node.params = init_params(cfg.tau, cfg.t_f, cfg.init_scale,
                                  derive_seed(cfg.seed, 0x111ULL,
                                              static_cast<std::uint64_t>(node.id)));
        world.nodes.push_back(std::move(node));
    }

    world.global.params = init_params(cfg.tau, cfg.t_f, 0.0, 0);
    world.global.version = 0;
    return world;
}

SelectWorld select_world_snapshot(const World& world, double beta_m) {
    SelectWorld sw;
    sw.beta_m = beta_m;
    for (const auto& n : world.nodes) {
        sw.tau_rates.push_back(n.tau_rate);
        sw.xi.push_back(n.xi);
        sw.rep.push_back(std::clamp(n.reputation, 0.0, 1.0));
        sw.positions.push_back(n.position);
        sw.data_sizes.push_back(n.data_size);
    }
    if (!world.nodes.empty())
        sw.model_size = static_cast<double>(world.nodes.front().params.size());
    return sw;
}

}  // namespace repufed
