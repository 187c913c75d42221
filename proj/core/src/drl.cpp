#include "repufed/drl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "repufed/rng.hpp"

namespace repufed {

double rol_cost(const std::vector<std::size_t>& selected,
                const std::vector<double>& reps) {
    double c = 0.0;
    for (std::size_t i : selected) {
        if (reps[i] < 0.0 || reps[i] > 1.0)
            throw ValidationError("rol_cost: reputation outside [0,1]");
        c += 1.0 - reps[i];
    }
    return c;
}

std::pair<double, double> time_cost(double data_size, double beta_m, double xi,
                                    double model_size, double tau_rate) {
    if (xi <= 0.0 || tau_rate <= 0.0)
        throw ValidationError("time_cost: xi and tau_rate must be positive");
    return {data_size * beta_m / xi, model_size / tau_rate};
}

double total_cost(const std::vector<std::size_t>& selected,
                  const SelectWorld& world) {
    if (selected.empty()) throw ValidationError("total_cost: empty selection");
    double time_sum = 0.0;
    for (std::size_t i : selected) {
        auto [ca, cu] = time_cost(world.data_sizes[i], world.beta_m,
                                  world.xi[i], world.model_size,
                                  world.tau_rates[i]);
        time_sum += ca + cu;
    }
    return rol_cost(selected, world.rep) +
           time_sum / static_cast<double>(selected.size());
}

SelectEnv::SelectEnv(EnvConfig cfg, SelectWorld world)
    : cfg_(std::move(cfg)), world_(std::move(world)) {
    if (static_cast<int>(world_.rep.size()) < cfg_.n_vehicles)
        throw ValidationError("SelectEnv: world smaller than n_vehicles");
    if (cfg_.group_cap < 1 || cfg_.r0 <= 0.0)
        throw ValidationError("SelectEnv: bad config");
    rate_scale_ = *std::max_element(world_.tau_rates.begin(),
                                    world_.tau_rates.end());
    xi_scale_ = *std::max_element(world_.xi.begin(), world_.xi.end());
    reset();
}

SelectState SelectEnv::reset() {
    state_.tau_rates = world_.tau_rates;
    state_.xi = world_.xi;
    state_.rep = world_.rep;
    state_.mask.assign(static_cast<std::size_t>(cfg_.n_vehicles), 0);
    state_.consec_low = 0;
    state_.high_count = 0;
    double c = 0.0;
    for (int i = 0; i < cfg_.n_vehicles; ++i) c += world_.positions[i];
    state_.centroid = c / cfg_.n_vehicles;
    return state_;
}

std::vector<int> SelectEnv::valid_actions() const {
    std::vector<int> out;
    for (int i = 0; i < cfg_.n_vehicles; ++i) {
        if (state_.mask[i]) continue;
        if (std::fabs(world_.positions[i] - state_.centroid) > cfg_.r0)
            continue;
        out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> SelectEnv::selected() const {
    std::vector<std::size_t> out;
    for (int i = 0; i < cfg_.n_vehicles; ++i)
        if (state_.mask[i]) out.push_back(static_cast<std::size_t>(i));
    return out;
}

StepResult SelectEnv::step(int action) {
    auto valid = valid_actions();
    if (std::find(valid.begin(), valid.end(), action) == valid.end())
        throw ValidationError("SelectEnv::step: invalid action " +
                              std::to_string(action));
    state_.mask[action] = 1;
    auto sel = selected();

    // Per-step cost contribution of the newly added vehicle, averaged
    // over the running selection size.
    auto [ca, cu] = time_cost(world_.data_sizes[action], world_.beta_m,
                              world_.xi[action], world_.model_size,
                              world_.tau_rates[action]);
    double contribution = ca + cu + (1.0 - world_.rep[action]);
    StepResult res;
    res.reward = -cfg_.cost_scale * contribution /
                 static_cast<double>(sel.size());

    // Reputation shaping.
    if (world_.rep[action] >= cfg_.high_rep_threshold) {
        res.reward += 1.0;
        state_.consec_low = 0;
        state_.high_count += 1;
    } else {
        res.reward -= 1.0;
        state_.consec_low += 1;
    }
    if (state_.consec_low >= 5) {
        res.reward -= 10.0;
        res.done = true;
    } else if (state_.high_count >= cfg_.group_cap) {
        res.reward += 20.0;
        res.done = true;
    }

    // Centroid tracks the mean position of the selection.
    double c = 0.0;
    for (std::size_t i : sel) c += world_.positions[i];
    state_.centroid = c / static_cast<double>(sel.size());

    if (!res.done && valid_actions().empty()) res.done = true;
    return res;
}

std::vector<double> SelectEnv::observe() const {
    std::vector<double> obs;
    obs.reserve(static_cast<std::size_t>(obs_dim()));
    for (int i = 0; i < cfg_.n_vehicles; ++i)
        obs.push_back(state_.tau_rates[i] / rate_scale_);
    for (int i = 0; i < cfg_.n_vehicles; ++i)
        obs.push_back(state_.xi[i] / xi_scale_);
    for (int i = 0; i < cfg_.n_vehicles; ++i) obs.push_back(state_.rep[i]);
    for (int i = 0; i < cfg_.n_vehicles; ++i)
        obs.push_back(static_cast<double>(state_.mask[i]));
    return obs;
}

std::vector<double> rewards_to_go(const std::vector<Transition>& episode,
                                  double gamma) {
    std::vector<double> out(episode.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = episode.size(); i > 0; --i) {
        acc = episode[i - 1].reward + gamma * acc;
        out[i - 1] = acc;
    }
    return out;
}

std::vector<double> gae_advantages(const std::vector<Transition>& episode,
                                   double gamma, double lambda) {
    std::vector<double> adv(episode.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = episode.size(); i > 0; --i) {
        const auto& tr = episode[i - 1];
        double next_value =
            (i == episode.size() || episode[i - 1].done) ? 0.0 : episode[i].value;
        // Terminal transitions bootstrap from zero.
        double delta = tr.reward + gamma * next_value - tr.value;
        acc = tr.done ? delta : delta + gamma * lambda * acc;
        adv[i - 1] = acc;
    }
    return adv;
}

std::vector<double> masked_policy(const Mlp& policy,
                                  const std::vector<double>& obs,
                                  const std::vector<int>& valid,
                                  int n_actions) {
    auto logits = policy.forward(obs);
    std::vector<double> masked(static_cast<std::size_t>(n_actions), -1e30);
    for (int a : valid) masked[a] = logits[a];
    return softmax(masked);
}

UpdateStats ppo_update(Mlp& policy, Mlp& value, Adam& opt_p, Adam& opt_v,
                       const std::vector<Transition>& batch,
                       const std::vector<double>& returns,
                       const std::vector<double>& advantages,
                       const PpoHyper& hyper) {
    if (batch.empty()) throw ValidationError("ppo_update: empty batch");
    const double n = static_cast<double>(batch.size());
    UpdateStats stats;

    for (int epoch = 0; epoch < hyper.epochs_per_batch; ++epoch) {
        std::vector<double> pgrad(policy.n_params(), 0.0);
        std::vector<double> vgrad(value.n_params(), 0.0);
        double ploss = 0.0, vloss = 0.0;

        for (std::size_t t = 0; t < batch.size(); ++t) {
            const auto& tr = batch[t];
            auto probs = masked_policy(policy, tr.obs, tr.valid,
                                       policy.out_dim());
            double logp = std::log(std::max(probs[tr.action], 1e-12));
            double ratio = std::exp(logp - tr.log_prob);
            double a = advantages[t];

            double surrogate = std::min(ratio * a,
                                        std::clamp(ratio, 1.0 - hyper.clip_eps,
                                                   1.0 + hyper.clip_eps) * a);
            ploss -= surrogate / n;

            // Gradient active only on the unclipped branch.
            bool active = !((a > 0.0 && ratio > 1.0 + hyper.clip_eps) ||
                            (a < 0.0 && ratio < 1.0 - hyper.clip_eps));
            std::vector<double> dlogits(probs.size(), 0.0);
            if (active) {
                double g = -(a * ratio) / n;  // descent on -surrogate
                for (std::size_t k = 0; k < probs.size(); ++k)
                    dlogits[k] = g * ((static_cast<int>(k) == tr.action ? 1.0 : 0.0) -
                                      probs[k]);
            }
            // Entropy bonus over valid actions.
            if (hyper.entropy_coef > 0.0) {
                double entropy = 0.0;
                for (int k : tr.valid)
                    if (probs[k] > 0.0) entropy -= probs[k] * std::log(probs[k]);
                for (int k : tr.valid) {
                    double dH = -probs[k] * (std::log(std::max(probs[k], 1e-12)) + entropy);
                    dlogits[k] += -hyper.entropy_coef * dH / n;
                }
            }
            policy.backward(tr.obs, dlogits, pgrad);

            double v = value.forward(tr.obs)[0];
            double resid = v - returns[t];
            vloss += resid * resid / n;
            std::vector<double> dv{2.0 * resid / n};
            value.backward(tr.obs, dv, vgrad);
        }
        if (!std::isfinite(ploss) || !std::isfinite(vloss))
            throw TrainingError("ppo_update: non-finite loss");
        opt_p.step(policy.params(), pgrad);
        opt_v.step(value.params(), vgrad);
        stats.policy_loss = ploss;
        stats.value_loss = vloss;
    }
    return stats;
}

TrainResult ppo_train(SelectEnv& env, const PpoHyper& hyper,
                      std::uint64_t seed) {
    Mlp policy(env.obs_dim(), hyper.hidden, env.n_actions(), 1.0,
               derive_seed(seed, 0x9901ULL));
    Mlp value(env.obs_dim(), hyper.hidden, 1, 1.0, derive_seed(seed, 0x9902ULL));
    Adam opt_p(policy.n_params(), hyper.lr_policy);
    Adam opt_v(value.n_params(), hyper.lr_value);
    Rng rng(derive_seed(seed, 0x9903ULL));

    TrainResult result{policy, value, {}};
    int episodes_done = 0;
    while (episodes_done < hyper.total_episodes) {
        std::vector<Transition> batch;
        std::vector<double> returns, advantages;
        int in_batch = std::min(hyper.episodes_per_batch,
                                hyper.total_episodes - episodes_done);
        for (int e = 0; e < in_batch; ++e) {
            env.reset();
            std::vector<Transition> episode;
            double total = 0.0;
            for (;;) {
                Transition tr;
                tr.obs = env.observe();
                tr.valid = env.valid_actions();
                if (tr.valid.empty()) break;
                auto probs = masked_policy(result.policy, tr.obs, tr.valid,
                                           env.n_actions());
                // Sample from the categorical distribution.
                double u = rng.uniform01();
                int action = tr.valid.back();
                double cum = 0.0;
                for (int k : tr.valid) {
                    cum += probs[k];
                    if (u <= cum) {
                        action = k;
                        break;
                    }
                }
                tr.action = action;
                tr.log_prob = std::log(std::max(probs[action], 1e-12));
                tr.value = result.value.forward(tr.obs)[0];
                auto res = env.step(action);
                tr.reward = res.reward;
                tr.done = res.done;
                total += res.reward;
                episode.push_back(std::move(tr));
                if (res.done) break;
            }
            if (!episode.empty()) episode.back().done = true;
            auto rtg = rewards_to_go(episode, hyper.gamma);
            auto adv = gae_advantages(episode, hyper.gamma, hyper.lambda_gae);
            for (std::size_t i = 0; i < episode.size(); ++i) {
                batch.push_back(std::move(episode[i]));
                returns.push_back(rtg[i]);
                advantages.push_back(adv[i]);
            }
            result.episode_rewards.push_back(total);
            ++episodes_done;
        }
        // Normalize advantages per batch.
        if (!advantages.empty()) {
            double mean = 0.0;
            for (double a : advantages) mean += a;
            mean /= static_cast<double>(advantages.size());
            double var = 0.0;
            for (double a : advantages) var += (a - mean) * (a - mean);
            double sd = std::sqrt(var / static_cast<double>(advantages.size()));
            if (sd > 1e-8)
                for (double& a : advantages) a = (a - mean) / sd;
            ppo_update(result.policy, result.value, opt_p, opt_v, batch,
                       returns, advantages, hyper);
        }
    }
    return result;
}

TrainResult dqn_train(SelectEnv& env, const DqnHyper& hyper,
                      std::uint64_t seed) {
    Mlp qnet(env.obs_dim(), hyper.hidden, env.n_actions(), 1.0,
             derive_seed(seed, 0xd001ULL));
    Mlp target = qnet;
    Adam opt(qnet.n_params(), hyper.lr);
    Rng rng(derive_seed(seed, 0xd002ULL));

    struct Sample {
        std::vector<double> obs;
        int action;
        double reward;
        std::vector<double> next_obs;
        std::vector<int> next_valid;
        bool done;
    };
    std::deque<Sample> buffer;

    TrainResult result{qnet, Mlp(env.obs_dim(), hyper.hidden, 1, 1.0, 7), {}};
    double epsilon = hyper.eps_start;
    long steps = 0;

    for (int episode = 0; episode < hyper.total_episodes; ++episode) {
        env.reset();
        double total = 0.0;
        for (;;) {
            auto obs = env.observe();
            auto valid = env.valid_actions();
            if (valid.empty()) break;
            int action;
            if (rng.uniform01() < epsilon) {
                action = valid[rng.below(valid.size())];
            } else {
                auto q = result.policy.forward(obs);
                action = valid[0];
                for (int k : valid)
                    if (q[k] > q[action]) action = k;
            }
            auto res = env.step(action);
            total += res.reward;

            Sample s;
            s.obs = obs;
            s.action = action;
            s.reward = res.reward;
            s.done = res.done;
            if (!res.done) {
                s.next_obs = env.observe();
                s.next_valid = env.valid_actions();
                if (s.next_valid.empty()) s.done = true;
            }
            buffer.push_back(std::move(s));
            if (buffer.size() > hyper.buffer_cap) buffer.pop_front();

            // Minibatch update.
            if (buffer.size() >= static_cast<std::size_t>(hyper.batch_size)) {
                std::vector<double> grad(result.policy.n_params(), 0.0);
                for (int b = 0; b < hyper.batch_size; ++b) {
                    const Sample& sm = buffer[rng.below(buffer.size())];
                    double y = sm.reward;
                    if (!sm.done) {
                        auto qn = target.forward(sm.next_obs);
                        double best = -1e30;
                        for (int k : sm.next_valid) best = std::max(best, qn[k]);
                        y += hyper.gamma * best;
                    }
                    auto q = result.policy.forward(sm.obs);
                    double resid = q[sm.action] - y;
                    std::vector<double> dq(q.size(), 0.0);
                    dq[sm.action] =
                        2.0 * resid / static_cast<double>(hyper.batch_size);
                    result.policy.backward(sm.obs, dq, grad);
                }
                opt.step(result.policy.params(), grad);
            }
            ++steps;
            if (steps % hyper.target_interval == 0) target = result.policy;
            if (res.done) break;
        }
        result.episode_rewards.push_back(total);
        epsilon = std::max(hyper.eps_floor, epsilon * hyper.eps_decay);
    }
    return result;
}

std::pair<std::vector<int>, std::vector<int>> policy_group(const Mlp& policy,
                                                           SelectEnv& env) {
    env.reset();
    for (;;) {
        auto valid = env.valid_actions();
        if (valid.empty()) break;
        auto probs = masked_policy(policy, env.observe(), valid,
                                   env.n_actions());
        int best = valid[0];
        for (int k : valid)
            if (probs[k] > probs[best]) best = k;
        if (env.step(best).done) break;
    }
    std::vector<int> high, low;
    for (int i = 0; i < env.n_actions(); ++i) {
        if (env.state().mask[i]) high.push_back(i);
        else low.push_back(i);
    }
    return {high, low};
}

double greedy_oracle_episode(SelectEnv& env) {
    env.reset();
    double total = 0.0;
    for (;;) {
        auto valid = env.valid_actions();
        if (valid.empty()) break;
        int best = valid[0];
        for (int k : valid)
            if (env.world().rep[k] > env.world().rep[best]) best = k;
        auto res = env.step(best);
        total += res.reward;
        if (res.done) break;
    }
    return total;
}

double random_policy_episode(SelectEnv& env, std::uint64_t seed) {
    env.reset();
    Rng rng(seed);
    double total = 0.0;
    for (;;) {
        auto valid = env.valid_actions();
        if (valid.empty()) break;
        auto res = env.step(valid[rng.below(valid.size())]);
        total += res.reward;
        if (res.done) break;
    }
    return total;
}

}  // namespace repufed
