#include "repufed/predictor.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "repufed/rng.hpp"

namespace repufed {

std::vector<double> ModelParams::flat() const {
    std::vector<double> out;
    out.reserve(size());
    out.insert(out.end(), w_self.begin(), w_self.end());
    out.insert(out.end(), w_nbr.begin(), w_nbr.end());
    out.insert(out.end(), bias.begin(), bias.end());
    return out;
}

ModelParams ModelParams::from_flat(int tau, int t_f,
                                   const std::vector<double>& values) {
    const std::size_t mat = static_cast<std::size_t>(2 * tau) * (2 * t_f);
    const std::size_t bv = static_cast<std::size_t>(2 * t_f);
    if (values.size() != 2 * mat + bv)
        throw ValidationError("from_flat: size mismatch");
    ModelParams p;
    p.tau = tau;
    p.t_f = t_f;
    p.w_self.assign(values.begin(), values.begin() + mat);
    p.w_nbr.assign(values.begin() + mat, values.begin() + 2 * mat);
    p.bias.assign(values.begin() + 2 * mat, values.end());
    return p;
}

SceneBatch make_batch(const Scene& scene,
                      const std::vector<ObservationWindow>& windows,
                      const SimWeights& w, double eps_lcs, AdjacencyKind kind,
                      double distance_threshold) {
    SceneBatch batch;
    batch.windows = windows;
    for (const auto& win : windows) {
        const std::size_t n = win.vehicle_ids.size();
        std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
        if (n > 1) {
            if (kind == AdjacencyKind::Similarity) {
                auto g = build_weighted_graph(scene, win, w, eps_lcs);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        if (i != j) adj[i][j] = g.edges[i][j];
            } else {
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        if (i != j &&
                            distance(win.anchors[i], win.anchors[j]) <=
                                distance_threshold)
                            adj[i][j] = 1.0;
            }
            for (std::size_t i = 0; i < n; ++i) {
                double row = 0.0;
                for (double v : adj[i]) row += v;
                if (row > 0.0)
                    for (double& v : adj[i]) v /= row;
            }
        }
        batch.adjacency.push_back(std::move(adj));
    }
    return batch;
}

ModelParams init_params(int tau, int t_f, double scale, std::uint64_t seed) {
    if (tau < 2 || t_f < 1) throw ValidationError("init_params: bad dims");
    if (scale < 0.0) throw ValidationError("init_params: negative scale");
    ModelParams p;
    p.tau = tau;
    p.t_f = t_f;
    const std::size_t mat = static_cast<std::size_t>(2 * tau) * (2 * t_f);
    p.w_self.resize(mat);
    p.w_nbr.resize(mat);
    p.bias.resize(static_cast<std::size_t>(2 * t_f));
    Rng rng(seed);
    for (double& v : p.w_self) v = rng.uniform(-scale, scale);
    for (double& v : p.w_nbr) v = rng.uniform(-scale, scale);
    for (double& v : p.bias) v = rng.uniform(-scale, scale);
    return p;
}

namespace {

std::vector<double> flatten_history(const std::vector<Vec2>& hist) {
    std::vector<double> h;
    h.reserve(hist.size() * 2);
    for (const auto& p : hist) {
        h.push_back(p.x);
        h.push_back(p.y);
    }
    return h;
}

// Constant-velocity prior from the last history displacement; the final
// history row is (0,0) by construction so the velocity is -hist[tau-2].
Vec2 prior_velocity(const std::vector<Vec2>& hist) {
    return hist[hist.size() - 1] - hist[hist.size() - 2];
}

}  // namespace

std::vector<std::vector<std::vector<Vec2>>> forward(const ModelParams& params,
                                                    const SceneBatch& batch) {
    const int cols = 2 * params.t_f;
    const int rows = 2 * params.tau;
    std::vector<std::vector<std::vector<Vec2>>> out;
    for (std::size_t wi = 0; wi < batch.windows.size(); ++wi) {
        const auto& win = batch.windows[wi];
        if (win.tau != params.tau || win.t_f != params.t_f)
            throw ValidationError("forward: window/model dim mismatch");
        const std::size_t n = win.vehicle_ids.size();
        std::vector<std::vector<double>> hs(n);
        for (std::size_t i = 0; i < n; ++i)
            hs[i] = flatten_history(win.history[i]);

        std::vector<std::vector<Vec2>> preds(
            static_cast<std::size_t>(params.t_f), std::vector<Vec2>(n));
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> g(static_cast<std::size_t>(rows), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                double a = batch.adjacency[wi][i][j];
                if (a == 0.0) continue;
                for (int r = 0; r < rows; ++r) g[r] += a * hs[j][r];
            }
            std::vector<double> raw(static_cast<std::size_t>(cols));
            for (int c = 0; c < cols; ++c) {
                double acc = params.bias[c];
                for (int r = 0; r < rows; ++r)
                    acc += hs[i][r] * params.w_self[r * cols + c] +
                           g[r] * params.w_nbr[r * cols + c];
                raw[c] = acc;
            }
            Vec2 v = prior_velocity(win.history[i]);
            Vec2 cum{0.0, 0.0};
            for (int t = 0; t < params.t_f; ++t) {
                cum.x += raw[2 * t];
                cum.y += raw[2 * t + 1];
                preds[t][i] = v * static_cast<double>(t + 1) + cum;
            }
        }
        out.push_back(std::move(preds));
    }
    return out;
}

double loss(const std::vector<std::vector<std::vector<Vec2>>>& pred,
            const SceneBatch& batch) {
    if (pred.size() != batch.windows.size())
        throw ValidationError("loss: window-count mismatch");
    if (pred.empty()) throw ValidationError("loss: empty batch");
    double total = 0.0;
    for (std::size_t wi = 0; wi < pred.size(); ++wi) {
        const auto& win = batch.windows[wi];
        const std::size_t n = win.vehicle_ids.size();
        if (pred[wi].size() != static_cast<std::size_t>(win.t_f))
            throw ValidationError("loss: step-count mismatch");
        double wloss = 0.0;
        for (int t = 0; t < win.t_f; ++t) {
            double step = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                step += distance(pred[wi][t][i], win.future[i][t]);
            wloss += step / static_cast<double>(n);
        }
        total += wloss / static_cast<double>(win.t_f);
    }
    return total / static_cast<double>(pred.size());
}

Gradients backward(const ModelParams& params, const SceneBatch& batch) {
    const int cols = 2 * params.t_f;
    const int rows = 2 * params.tau;
    Gradients g;
    g.w_self.assign(params.w_self.size(), 0.0);
    g.w_nbr.assign(params.w_nbr.size(), 0.0);
    g.bias.assign(params.bias.size(), 0.0);

    auto preds = forward(params, batch);
    const double wscale = 1.0 / static_cast<double>(batch.windows.size());

    for (std::size_t wi = 0; wi < batch.windows.size(); ++wi) {
        const auto& win = batch.windows[wi];
        const std::size_t n = win.vehicle_ids.size();
        std::vector<std::vector<double>> hs(n);
        for (std::size_t i = 0; i < n; ++i)
            hs[i] = flatten_history(win.history[i]);

        const double scale =
            wscale / (static_cast<double>(win.t_f) * static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            // d loss / d pred, then suffix sums through the cumsum.
            std::vector<double> dpred(static_cast<std::size_t>(cols), 0.0);
            for (int t = 0; t < win.t_f; ++t) {
                Vec2 r = preds[wi][t][i] - win.future[i][t];
                double norm = r.norm();
                if (norm > 0.0) {
                    dpred[2 * t] = scale * r.x / norm;
                    dpred[2 * t + 1] = scale * r.y / norm;
                }
            }
            std::vector<double> draw(static_cast<std::size_t>(cols), 0.0);
            double sx = 0.0, sy = 0.0;
            for (int t = win.t_f - 1; t >= 0; --t) {
                sx += dpred[2 * t];
                sy += dpred[2 * t + 1];
                draw[2 * t] = sx;
                draw[2 * t + 1] = sy;
            }

            std::vector<double> gv(static_cast<std::size_t>(rows), 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                double a = batch.adjacency[wi][i][j];
                if (a == 0.0) continue;
                for (int r = 0; r < rows; ++r) gv[r] += a * hs[j][r];
            }
            for (int c = 0; c < cols; ++c) {
                if (draw[c] == 0.0) continue;
                g.bias[c] += draw[c];
                for (int r = 0; r < rows; ++r) {
                    g.w_self[r * cols + c] += hs[i][r] * draw[c];
                    g.w_nbr[r * cols + c] += gv[r] * draw[c];
                }
            }
        }
    }
    return g;
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads,
                     double lr) {
    if (lr < 0.0) throw ValidationError("sgd_step: negative learning rate");
    ModelParams out = params;
    for (std::size_t i = 0; i < out.w_self.size(); ++i)
        out.w_self[i] -= lr * grads.w_self[i];
    for (std::size_t i = 0; i < out.w_nbr.size(); ++i)
        out.w_nbr[i] -= lr * grads.w_nbr[i];
    for (std::size_t i = 0; i < out.bias.size(); ++i)
        out.bias[i] -= lr * grads.bias[i];
    return out;
}

std::pair<ModelParams, double> local_train(ModelParams params,
                                           const SceneBatch& batch, int epochs,
                                           double lr) {
    if (epochs < 1) throw ValidationError("local_train: epochs must be >= 1");
    for (int e = 0; e < epochs; ++e) {
        auto grads = backward(params, batch);
        params = sgd_step(params, grads, lr);
    }
    double final_loss = loss(forward(params, batch), batch);
    if (!std::isfinite(final_loss))
        throw TrainingError("local_train: loss diverged after " +
                            std::to_string(epochs) + " epochs");
    return {std::move(params), final_loss};
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    nlohmann::json j;
    j["tau"] = params.tau;
    j["t_f"] = params.t_f;
    j["w_self"] = params.w_self;
    j["w_nbr"] = params.w_nbr;
    j["bias"] = params.bias;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump();
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    ModelParams p;
    p.tau = j.at("tau").get<int>();
    p.t_f = j.at("t_f").get<int>();
    p.w_self = j.at("w_self").get<std::vector<double>>();
    p.w_nbr = j.at("w_nbr").get<std::vector<double>>();
    p.bias = j.at("bias").get<std::vector<double>>();
    return p;
}

}  // namespace repufed
