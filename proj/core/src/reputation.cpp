#include "repufed/reputation.hpp"

#include <cmath>

namespace repufed {

void validate_opinion(const Opinion& op, double tol) {
    if (op.r < -tol || op.d < -tol || op.u < -tol)
        throw ValidationError("opinion components must be non-negative");
    if (std::fabs(op.r + op.d + op.u - 1.0) > tol)
        throw ValidationError("opinion components must sum to 1");
}

Opinion local_opinion(const InteractionStats& stats) {
    if (stats.alpha + stats.beta < 1.0)
        throw ValidationError("local_opinion: alpha + beta must be >= 1");
    if (stats.s < 0.0 || stats.s > 1.0)
        throw ValidationError("local_opinion: s must be in [0,1]");
    Opinion op;
    op.u = 1.0 - stats.s;
    double total = stats.alpha + stats.beta;
    op.r = (1.0 - op.u) * stats.alpha / total;
    op.d = (1.0 - op.u) * stats.beta / total;
    return op;
}

double reputation(const Opinion& op, double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw ValidationError("reputation: gamma must be in [0,1]");
    validate_opinion(op);
    return op.r + gamma * op.u;
}

Opinion combine_recommendations(const std::vector<Recommendation>& recs) {
    if (recs.empty())
        throw ValidationError("combine_recommendations: empty list");
    double total = 0.0;
    for (const auto& rec : recs) {
        if (rec.delta < 0.0)
            throw ValidationError("combine_recommendations: negative weight");
        total += rec.delta;
    }
    if (total <= 0.0)
        throw ValidationError("combine_recommendations: zero total weight");
    Opinion out{0.0, 0.0, 0.0};
    for (const auto& rec : recs) {
        double w = rec.delta / total;
        out.r += w * rec.opinion.r;
        out.d += w * rec.opinion.d;
        out.u += w * rec.opinion.u;
    }
    return out;
}

Opinion fuse_final(const Opinion& local, const Opinion& rec) {
    validate_opinion(local);
    validate_opinion(rec);
    double denom = local.u + rec.u - rec.u * local.u;
    if (denom <= 0.0)
        throw ValidationError("fuse_final: both opinions fully certain");
    Opinion out;
    out.r = (local.r * rec.u + rec.r * local.u) / denom;
    out.d = (local.d * rec.u + rec.d * local.u) / denom;
    out.u = (rec.u * local.u) / denom;
    return out;
}

double final_reputation(const Opinion& final_op, double gamma) {
    return reputation(final_op, gamma);
}

InteractionStats count_interaction(InteractionStats prev, double sim_value,
                                   double sim_threshold, bool delivered) {
    if (sim_value < 0.0 || sim_value > 1.0)
        throw ValidationError("count_interaction: sim_value outside [0,1]");
    if (delivered && sim_value >= sim_threshold)
        prev.alpha += 1.0;
    else
        prev.beta += 1.0;
    prev.total += 1;
    if (delivered) prev.delivered += 1;
    prev.s = static_cast<double>(prev.delivered) / static_cast<double>(prev.total);
    return prev;
}

}  // namespace repufed
