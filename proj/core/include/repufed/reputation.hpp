#pragma once

#include <vector>

#include "repufed/common.hpp"

namespace repufed {

// Subjective-logic triple; components non-negative, summing to one.
struct Opinion {
    double r = 0.0;  // trust
    double d = 0.0;  // distrust
    double u = 1.0;  // uncertainty
};

void validate_opinion(const Opinion& op, double tol = 1e-9);

struct InteractionStats {
    double alpha = 0.0;  // positive events
    double beta = 0.0;   // negative events
    double s = 1.0;      // packet-success probability, running rate
    long total = 0;      // delivery attempts observed
    long delivered = 0;
};

struct Recommendation {
    double delta = 0.0;  // non-negative weight
    Opinion opinion;
};

// u = 1 - s; r = (1-u) * alpha/(alpha+beta); d = (1-u) * beta/(alpha+beta).
Opinion local_opinion(const InteractionStats& stats);

// R = r + gamma * u.
double reputation(const Opinion& op, double gamma);

// delta-weighted component-wise average.
Opinion combine_recommendations(const std::vector<Recommendation>& recs);

// Consensus fusion; throws ValidationError when both uncertainties are
// zero (the denominator vanishes), callers fall back to averaging.
Opinion fuse_final(const Opinion& local, const Opinion& rec);

double final_reputation(const Opinion& final_op, double gamma);

// Positive event when delivered and sim_value >= sim_threshold, negative
// otherwise; s tracks the running delivery-success rate.
InteractionStats count_interaction(InteractionStats prev, double sim_value,
                                   double sim_threshold, bool delivered);

}  // namespace repufed
