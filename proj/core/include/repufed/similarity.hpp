#pragma once

#include <vector>

#include "repufed/scene.hpp"

namespace repufed {

// A trajectory segment is an ordered point list over a time window.
using TrajectorySegment = std::vector<TrajectoryPoint>;

struct SimWeights {
    double rho1 = 1.0 / 3.0;  // velocity
    double rho2 = 1.0 / 3.0;  // position
    double rho3 = 1.0 / 3.0;  // orientation
};

void validate_weights(const SimWeights& w);  // non-negative, sum to 1

// |mean speed difference| / max instantaneous speed over both segments;
// 0 when both segments are stationary.
double velocity_diff(const TrajectorySegment& a, const TrajectorySegment& b);

// (max(e,k) - |LCS|) / max(e,k); points match when their Euclidean
// distance is at most eps_lcs and ordering is preserved.
double position_diff(const TrajectorySegment& a, const TrajectorySegment& b,
                     double eps_lcs);

// Piecewise map of the heading angle phi in [0, pi] to [0, 1]; phi = 0
// maps to 0.
double orientation_diff(double phi);

// Angle between mean displacement vectors, in [0, pi]; degenerate
// zero-displacement segments give 0.
double heading_angle(const TrajectorySegment& a, const TrajectorySegment& b);

double diss(const TrajectorySegment& a, const TrajectorySegment& b,
            const SimWeights& w, double eps_lcs);
double sim(const TrajectorySegment& a, const TrajectorySegment& b,
           const SimWeights& w, double eps_lcs);

struct WeightedTrajectoryGraph {
    std::vector<int> vehicle_ids;       // ascending
    std::vector<double> node_weights;   // in [0,1]
    std::vector<std::vector<double>> edges;  // symmetric sim matrix, diag 1
};

// Node weight of vehicle i = mean sim(i,j) over co-observed j (1.0 with
// no neighbor); edge weight = pairwise sim. Segments are the vehicles'
// absolute-coordinate tracks over the window's history span.
WeightedTrajectoryGraph build_weighted_graph(const Scene& scene,
                                             const ObservationWindow& win,
                                             const SimWeights& w,
                                             double eps_lcs);

using SeqVector = std::vector<double>;

// Top-k representative vertices by node weight (ties by vehicle_id
// ascending): their weights, then the k(k-1)/2 upper-triangular edge
// weights, jointly min-max normalized to [0,1] (all-equal -> all 0.5).
// Graphs with fewer than k vehicles are padded with zeros after
// normalization.
SeqVector serialize_seq(const WeightedTrajectoryGraph& g, int k);

double cosine_similarity(const SeqVector& a, const SeqVector& b);

// Scan in order; reject any vector whose cosine similarity to an
// already-retained vector exceeds the threshold; zero vectors rejected.
std::vector<std::size_t> cosine_redundancy_filter(
    const std::vector<SeqVector>& seqs, double threshold = 0.8);

}  // namespace repufed
