#include "repufed/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace repufed {

void validate_weights(const SimWeights& w) {
    if (w.rho1 < 0.0 || w.rho2 < 0.0 || w.rho3 < 0.0)
        throw ValidationError("similarity weights must be non-negative");
    if (std::fabs(w.rho1 + w.rho2 + w.rho3 - 1.0) > 1e-12)
        throw ValidationError("similarity weights must sum to 1");
}

namespace {

// Instantaneous speeds from finite differences over frame gaps.
std::vector<double> speeds(const TrajectorySegment& s) {
    std::vector<double> out;
    for (std::size_t i = 1; i < s.size(); ++i) {
        double dt = static_cast<double>(s[i].t - s[i - 1].t);
        out.push_back(distance(s[i].pos(), s[i - 1].pos()) / dt);
    }
    return out;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
}

}  // namespace

double velocity_diff(const TrajectorySegment& a, const TrajectorySegment& b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("velocity_diff: segments need >= 2 points");
    auto sa = speeds(a);
    auto sb = speeds(b);
    double max_inst = std::max(*std::max_element(sa.begin(), sa.end()),
                               *std::max_element(sb.begin(), sb.end()));
    if (max_inst <= 0.0) return 0.0;  // both stationary
    double d = std::fabs(mean(sa) - mean(sb)) / max_inst;
    return std::clamp(d, 0.0, 1.0);
}

double position_diff(const TrajectorySegment& a, const TrajectorySegment& b,
                     double eps_lcs) {
    if (a.empty() || b.empty())
        throw ValidationError("position_diff: empty segment");
    const std::size_t e = a.size(), k = b.size();
    // LCS over tolerance-matched points, classic DP.
    std::vector<std::vector<int>> dp(e + 1, std::vector<int>(k + 1, 0));
    for (std::size_t i = 1; i <= e; ++i) {
        for (std::size_t j = 1; j <= k; ++j) {
            if (distance(a[i - 1].pos(), b[j - 1].pos()) <= eps_lcs)
                dp[i][j] = dp[i - 1][j - 1] + 1;
            else
                dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
        }
    }
    double m = static_cast<double>(std::max(e, k));
    return (m - static_cast<double>(dp[e][k])) / m;
}

double orientation_diff(double phi) {
    if (phi < 0.0 || phi > M_PI + 1e-12)
        throw ValidationError("orientation_diff: phi outside [0, pi]");
    if (phi == 0.0) return 0.0;
    if (phi <= M_PI / 2.0) return std::sin(phi) / 2.0;
    return 0.5 + std::fabs(std::sin(phi + M_PI / 2.0)) / 2.0;
}

double heading_angle(const TrajectorySegment& a, const TrajectorySegment& b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValidationError("heading_angle: segments need >= 2 points");
    Vec2 da = a.back().pos() - a.front().pos();
    Vec2 db = b.back().pos() - b.front().pos();
    if (da.norm() == 0.0 || db.norm() == 0.0) return 0.0;
    // Angle difference via atan2 keeps identical headings at exactly zero,
    // which acos(dot/norms) does not guarantee under rounding.
    double phi = std::fabs(std::atan2(da.y, da.x) - std::atan2(db.y, db.x));
    if (phi > M_PI) phi = 2.0 * M_PI - phi;
    return phi;
}

double diss(const TrajectorySegment& a, const TrajectorySegment& b,
            const SimWeights& w, double eps_lcs) {
    validate_weights(w);
    double v = velocity_diff(a, b);
    double p = position_diff(a, b, eps_lcs);
    double o = orientation_diff(heading_angle(a, b));
    return w.rho1 * v + w.rho2 * p + w.rho3 * o;
}

double sim(const TrajectorySegment& a, const TrajectorySegment& b,
           const SimWeights& w, double eps_lcs) {
    return 1.0 - diss(a, b, w, eps_lcs);
}

WeightedTrajectoryGraph build_weighted_graph(const Scene& scene,
                                             const ObservationWindow& win,
                                             const SimWeights& w,
                                             double eps_lcs) {
    if (win.vehicle_ids.empty())
        throw ValidationError("build_weighted_graph: empty window");

    // Segments over the window's history span, absolute coordinates.
    std::vector<TrajectorySegment> segs;
    for (int vid : win.vehicle_ids) {
        const Track* tr = scene.find_track(vid);
        if (!tr)
            throw ValidationError("build_weighted_graph: vehicle missing");
        TrajectorySegment seg;
        for (const auto& p : tr->points)
            if (p.t >= win.start_frame && p.t < win.start_frame + win.tau)
                seg.push_back(p);
        segs.push_back(std::move(seg));
    }

    const std::size_t n = segs.size();
    WeightedTrajectoryGraph g;
    g.vehicle_ids = win.vehicle_ids;
    g.edges.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = sim(segs[i], segs[j], w, eps_lcs);
            g.edges[i][j] = s;
            g.edges[j][i] = s;
        }
    g.node_weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (n == 1) {
            g.node_weights[i] = 1.0;
            continue;
        }
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) acc += g.edges[i][j];
        g.node_weights[i] = acc / static_cast<double>(n - 1);
    }
    return g;
}

SeqVector serialize_seq(const WeightedTrajectoryGraph& g, int k) {
    if (k < 1) throw ValidationError("serialize_seq: k must be >= 1");
    const std::size_t n = g.vehicle_ids.size();
    const std::size_t kk = static_cast<std::size_t>(k);

    // Top-k by node weight, ties by vehicle_id ascending.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (g.node_weights[a] != g.node_weights[b])
            return g.node_weights[a] > g.node_weights[b];
        return g.vehicle_ids[a] < g.vehicle_ids[b];
    });
    std::size_t m = std::min(kk, n);
    std::vector<std::size_t> rep(order.begin(), order.begin() + m);

    std::vector<double> raw;
    for (std::size_t i = 0; i < m; ++i) raw.push_back(g.node_weights[rep[i]]);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            raw.push_back(g.edges[rep[i]][rep[j]]);

    // Joint min-max normalization over the present entries.
    if (!raw.empty()) {
        double lo = *std::min_element(raw.begin(), raw.end());
        double hi = *std::max_element(raw.begin(), raw.end());
        for (double& v : raw) v = (hi > lo) ? (v - lo) / (hi - lo) : 0.5;
    }

    // Pad to the fixed length k + k(k-1)/2 with zeros.
    SeqVector out(kk + kk * (kk - 1) / 2, 0.0);
    std::size_t present_edges = m * (m - 1) / 2;
    for (std::size_t i = 0; i < m; ++i) out[i] = raw[i];
    for (std::size_t i = 0; i < present_edges; ++i) out[kk + i] = raw[m + i];
    return out;
}

double cosine_similarity(const SeqVector& a, const SeqVector& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine_similarity: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::size_t> cosine_redundancy_filter(
    const std::vector<SeqVector>& seqs, double threshold) {
    std::vector<std::size_t> retained;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        if (!retained.empty() && seqs[i].size() != seqs[retained[0]].size())
            throw ValidationError("cosine_redundancy_filter: length mismatch");
        bool zero = std::all_of(seqs[i].begin(), seqs[i].end(),
                                [](double v) { return v == 0.0; });
        if (zero) continue;
        bool redundant = false;
        for (std::size_t r : retained) {
            if (cosine_similarity(seqs[r], seqs[i]) > threshold) {
                redundant = true;
                break;
            }
        }
        if (!redundant) retained.push_back(i);
    }
    return retained;
}

}  // namespace repufed
