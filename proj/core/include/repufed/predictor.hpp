#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repufed/scene.hpp"
#include "repufed/similarity.hpp"

namespace repufed {

// Flat-parameter graph-linear predictor: a one-hop neighbor-aggregated
// linear head over a constant-velocity prior, with closed-form
// gradients. The prediction target is the residual displacement per
// future step, cumulatively summed onto the prior.
struct ModelParams {
    int tau = 0;
    int t_f = 0;
    std::vector<double> w_self;  // (2 tau) x (2 t_f), row-major
    std::vector<double> w_nbr;   // (2 tau) x (2 t_f), row-major
    std::vector<double> bias;    // 2 t_f

    std::size_t size() const { return w_self.size() + w_nbr.size() + bias.size(); }
    std::vector<double> flat() const;
    static ModelParams from_flat(int tau, int t_f,
                                 const std::vector<double>& values);
};

struct Gradients {
    std::vector<double> w_self;
    std::vector<double> w_nbr;
    std::vector<double> bias;
};

enum class AdjacencyKind { Similarity, DistanceThreshold };

struct SceneBatch {
    std::vector<ObservationWindow> windows;
    // Per window: n x n row-normalized weights, self excluded; an
    // isolated vehicle's row is all zero.
    std::vector<std::vector<std::vector<double>>> adjacency;
};

SceneBatch make_batch(const Scene& scene,
                      const std::vector<ObservationWindow>& windows,
                      const SimWeights& w, double eps_lcs,
                      AdjacencyKind kind = AdjacencyKind::Similarity,
                      double distance_threshold = 25.0);

ModelParams init_params(int tau, int t_f, double scale, std::uint64_t seed);

// Per window: t_f x n x 2 predicted relative positions.
std::vector<std::vector<std::vector<Vec2>>> forward(const ModelParams& params,
                                                    const SceneBatch& batch);

// Mean over future steps of the vehicle-averaged Euclidean error,
// averaged over windows.
double loss(const std::vector<std::vector<std::vector<Vec2>>>& pred,
            const SceneBatch& batch);

Gradients backward(const ModelParams& params, const SceneBatch& batch);

ModelParams sgd_step(const ModelParams& params, const Gradients& grads,
                     double lr);

std::pair<ModelParams, double> local_train(ModelParams params,
                                           const SceneBatch& batch, int epochs,
                                           double lr);

// JSON checkpoint with a dims header; round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace repufed
