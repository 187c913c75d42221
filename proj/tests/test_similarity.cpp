#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "repufed/rng.hpp"
#include "repufed/similarity.hpp"

using namespace repufed;

namespace {

TrajectorySegment make_segment(const std::vector<Vec2>& pts) {
    TrajectorySegment seg;
    int t = 0;
    for (const auto& p : pts) seg.push_back({t++, p.x, p.y});
    return seg;
}

bool points_match(const TrajectoryPoint& a, const TrajectoryPoint& b,
                  double eps) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy) <= eps;
}

// Exhaustive longest-common-subsequence: recurse over both sequences
// without any DP shortcuts, so it shares no structure with the
// implementation under test.
std::size_t lcs_exhaustive(const TrajectorySegment& a,
                           const TrajectorySegment& b, std::size_t i,
                           std::size_t j, double eps) {
    if (i == a.size() || j == b.size()) return 0;
    std::size_t best = std::max(lcs_exhaustive(a, b, i + 1, j, eps),
                                lcs_exhaustive(a, b, i, j + 1, eps));
    if (points_match(a[i], b[j], eps))
        best = std::max(best, 1 + lcs_exhaustive(a, b, i + 1, j + 1, eps));
    return best;
}

double position_diff_oracle(const TrajectorySegment& a,
                            const TrajectorySegment& b, double eps) {
    std::size_t longer = std::max(a.size(), b.size());
    if (longer == 0) return 0.0;
    std::size_t l = lcs_exhaustive(a, b, 0, 0, eps);
    return (static_cast<double>(longer) - static_cast<double>(l)) /
           static_cast<double>(longer);
}

TrajectorySegment random_segment(Rng& rng, std::size_t n) {
    TrajectorySegment seg;
    double x = rng.uniform(-5, 5), y = rng.uniform(-5, 5);
    for (std::size_t i = 0; i < n; ++i) {
        seg.push_back({static_cast<int>(i), x, y});
        x += rng.uniform(-2, 2);
        y += rng.uniform(-2, 2);
    }
    return seg;
}

double cosine_oracle(const SeqVector& a, const SeqVector& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

TEST_CASE("validate_weights") {
    CHECK_NOTHROW(validate_weights(SimWeights{}));
    CHECK_NOTHROW(validate_weights(SimWeights{0.5, 0.5, 0.0}));
    CHECK_THROWS_AS(validate_weights(SimWeights{0.5, 0.5, 0.5}),
                    ValidationError);
    CHECK_THROWS_AS(validate_weights(SimWeights{-0.2, 0.6, 0.6}),
                    ValidationError);
}

TEST_CASE("velocity_diff hand cases") {
    // Segment A moves 1 unit/frame, B moves 3 units/frame.
    auto a = make_segment({{0, 0}, {1, 0}, {2, 0}});
    auto b = make_segment({{0, 0}, {3, 0}, {6, 0}});
    // Mean speeds 1 and 3; max instantaneous 3.
    CHECK(velocity_diff(a, b) == doctest::Approx((3.0 - 1.0) / 3.0));

    CHECK(velocity_diff(a, a) == doctest::Approx(0.0));

    // Both stationary.
    auto s1 = make_segment({{0, 0}, {0, 0}});
    auto s2 = make_segment({{5, 5}, {5, 5}});
    CHECK(velocity_diff(s1, s2) == 0.0);

    CHECK(velocity_diff(a, b) == doctest::Approx(velocity_diff(b, a)));
}

TEST_CASE("velocity_diff stays in [0,1]") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto a = random_segment(rng, 2 + rng.below(6));
        auto b = random_segment(rng, 2 + rng.below(6));
        double v = velocity_diff(a, b);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("position_diff hand cases") {
    auto a = make_segment({{0, 0}, {1, 0}, {2, 0}});
    CHECK(position_diff(a, a, 0.1) == 0.0);

    // Offset beyond tolerance: empty LCS.
    auto far = make_segment({{100, 100}, {101, 100}, {102, 100}});
    CHECK(position_diff(a, far, 0.5) == doctest::Approx(1.0));

    // Two of three points match within eps.
    auto partial = make_segment({{0, 0}, {1, 0}, {50, 50}});
    CHECK(position_diff(a, partial, 0.1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("position_diff matches exhaustive LCS on 200 random pairs") {
    Rng rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        auto a = random_segment(rng, 1 + rng.below(8));
        auto b = random_segment(rng, 1 + rng.below(8));
        double eps = rng.uniform(0.2, 4.0);
        CAPTURE(trial);
        CHECK(position_diff(a, b, eps) ==
              doctest::Approx(position_diff_oracle(a, b, eps)).epsilon(1e-12));
    }
}

TEST_CASE("orientation_diff piecewise map") {
    const double pi = 3.14159265358979323846;
    CHECK(orientation_diff(0.0) == 0.0);
    CHECK(orientation_diff(pi / 2) == doctest::Approx(0.5));
    CHECK(orientation_diff(pi / 4) == doctest::Approx(std::sin(pi / 4) / 2));
    // Above pi/2: 1/2 + |sin(phi + pi/2)| / 2.
    CHECK(orientation_diff(3 * pi / 4) ==
          doctest::Approx(0.5 + std::abs(std::sin(3 * pi / 4 + pi / 2)) / 2));
    CHECK(orientation_diff(pi) == doctest::Approx(0.5 + 0.5));
    // Monotone non-decreasing over [0, pi].
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        double v = orientation_diff(pi * i / 100.0);
        CHECK(v >= prev - 1e-9);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }
}

TEST_CASE("heading_angle hand cases") {
    const double pi = 3.14159265358979323846;
    auto east = make_segment({{0, 0}, {1, 0}, {2, 0}});
    auto north = make_segment({{0, 0}, {0, 1}, {0, 2}});
    auto west = make_segment({{0, 0}, {-1, 0}, {-2, 0}});
    CHECK(heading_angle(east, east) == doctest::Approx(0.0));
    CHECK(heading_angle(east, north) == doctest::Approx(pi / 2));
    CHECK(heading_angle(east, west) == doctest::Approx(pi));
    // Degenerate stationary segment.
    auto still = make_segment({{3, 3}, {3, 3}});
    CHECK(heading_angle(east, still) == 0.0);
}

TEST_CASE("diss and sim are complementary and bounded") {
    Rng rng(5);
    SimWeights w;
    for (int trial = 0; trial < 100; ++trial) {
        auto a = random_segment(rng, 3 + rng.below(5));
        auto b = random_segment(rng, 3 + rng.below(5));
        double d = diss(a, b, w, 2.0);
        double s = sim(a, b, w, 2.0);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0 + 1e-12);
        CHECK(s == doctest::Approx(1.0 - d));
    }
    auto a = random_segment(rng, 5);
    CHECK(sim(a, a, w, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("diss is the rho-weighted component sum") {
    auto a = make_segment({{0, 0}, {1, 0}, {2, 0}});
    auto b = make_segment({{0, 3}, {2, 3}, {4, 3}});
    SimWeights w{0.2, 0.5, 0.3};
    double expected = 0.2 * velocity_diff(a, b) +
                      0.5 * position_diff(a, b, 1.0) +
                      0.3 * orientation_diff(heading_angle(a, b));
    CHECK(diss(a, b, w, 1.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("build_weighted_graph structure") {
    Scene s;
    s.frame_rate = 1.0;
    for (int v = 0; v < 3; ++v) {
        Track tr;
        tr.vehicle_id = v;
        for (int f = 0; f < 8; ++f)
            tr.points.push_back({f, static_cast<double>(f) * (v + 1),
                                 static_cast<double>(v) * 3.5});
        s.tracks.push_back(tr);
    }
    auto wins = window(s, 4, 2, 1);
    REQUIRE_FALSE(wins.empty());
    SimWeights w;
    auto g = build_weighted_graph(s, wins[0], w, 2.0);
    REQUIRE(g.vehicle_ids == std::vector<int>{0, 1, 2});
    REQUIRE(g.edges.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(g.edges[i][i] == doctest::Approx(1.0));
        CHECK(g.node_weights[i] >= 0.0);
        CHECK(g.node_weights[i] <= 1.0 + 1e-12);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(g.edges[i][j] == doctest::Approx(g.edges[j][i]));
    }
    // Node weight equals the mean of the off-diagonal sims.
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < 3; ++j)
            if (j != i) sum += g.edges[i][j];
        CHECK(g.node_weights[i] == doctest::Approx(sum / 2.0));
    }
}

TEST_CASE("build_weighted_graph single vehicle") {
    Scene s;
    Track tr;
    tr.vehicle_id = 7;
    for (int f = 0; f < 8; ++f)
        tr.points.push_back({f, static_cast<double>(f), 0.0});
    s.tracks.push_back(tr);
    auto wins = window(s, 4, 2, 1);
    auto g = build_weighted_graph(s, wins[0], SimWeights{}, 2.0);
    REQUIRE(g.vehicle_ids.size() == 1);
    CHECK(g.node_weights[0] == 1.0);
}

TEST_CASE("serialize_seq hand case") {
    WeightedTrajectoryGraph g;
    g.vehicle_ids = {0, 1, 2};
    g.node_weights = {0.9, 0.1, 0.5};
    g.edges = {{1.0, 0.3, 0.7}, {0.3, 1.0, 0.5}, {0.7, 0.5, 1.0}};
    // k=2 picks vehicles 0 and 2 (weights 0.9, 0.5); entries before
    // normalization: [0.9, 0.5, edge(0,2)=0.7]. Min-max over those:
    // (x - 0.5) / 0.4.
    auto seq = serialize_seq(g, 2);
    REQUIRE(seq.size() == 3);  // k + k(k-1)/2
    CHECK(seq[0] == doctest::Approx(1.0));
    CHECK(seq[1] == doctest::Approx(0.0));
    CHECK(seq[2] == doctest::Approx(0.5));
}

TEST_CASE("serialize_seq all-equal entries map to 0.5") {
    WeightedTrajectoryGraph g;
    g.vehicle_ids = {0, 1};
    g.node_weights = {0.4, 0.4};
    g.edges = {{1.0, 0.4}, {0.4, 1.0}};
    auto seq = serialize_seq(g, 2);
    for (double v : seq) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("serialize_seq pads small graphs to fixed length") {
    WeightedTrajectoryGraph g;
    g.vehicle_ids = {3};
    g.node_weights = {0.8};
    g.edges = {{1.0}};
    auto seq = serialize_seq(g, 4);
    REQUIRE(seq.size() == 4 + 6);
    CHECK(seq[0] == doctest::Approx(0.5));  // single entry -> all-equal rule
    for (std::size_t i = 1; i < seq.size(); ++i) CHECK(seq[i] == 0.0);
}

TEST_CASE("serialize_seq tie-break by vehicle id") {
    WeightedTrajectoryGraph g;
    g.vehicle_ids = {5, 9, 1};
    g.node_weights = {0.5, 0.5, 0.5};
    g.edges = {{1.0, 0.2, 0.8}, {0.2, 1.0, 0.4}, {0.8, 0.4, 1.0}};
    // All weights tie; k=2 must pick ids 1 and 5 -> edge(1,5)=0.8.
    auto seq = serialize_seq(g, 2);
    REQUIRE(seq.size() == 3);
    // Entries before normalization: [0.5, 0.5, 0.8] -> [0, 0, 1].
    CHECK(seq[0] == doctest::Approx(0.0));
    CHECK(seq[1] == doctest::Approx(0.0));
    CHECK(seq[2] == doctest::Approx(1.0));
}

TEST_CASE("cosine_similarity basics") {
    SeqVector a{1, 0, 0}, b{0, 1, 0}, c{2, 0, 0}, z{0, 0, 0};
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, c) == doctest::Approx(1.0));
    CHECK(cosine_similarity(a, z) == 0.0);
    Rng rng(8);
    for (int t = 0; t < 50; ++t) {
        SeqVector u(6), v(6);
        for (int i = 0; i < 6; ++i) {
            u[i] = rng.uniform(-1, 1);
            v[i] = rng.uniform(-1, 1);
        }
        CHECK(cosine_similarity(u, v) ==
              doctest::Approx(cosine_oracle(u, v)).epsilon(1e-12));
    }
}

TEST_CASE("cosine_redundancy_filter behavior") {
    SeqVector a{1, 0, 0, 0};
    SeqVector near_a{0.99, 0.05, 0, 0};
    SeqVector b{0, 1, 0, 0};
    SeqVector zero{0, 0, 0, 0};

    auto kept = cosine_redundancy_filter({a, near_a, b, zero}, 0.8);
    CHECK(kept == std::vector<std::size_t>{0, 2});

    // Threshold 1.0 keeps everything non-zero.
    kept = cosine_redundancy_filter({a, near_a, b}, 1.0);
    CHECK(kept == std::vector<std::size_t>{0, 1, 2});

    CHECK(cosine_redundancy_filter({}, 0.8).empty());
    CHECK(cosine_redundancy_filter({zero}, 0.8).empty());
}

TEST_CASE("cosine_redundancy_filter matches a brute-force scan") {
    Rng rng(31);
    std::vector<SeqVector> seqs;
    for (int i = 0; i < 40; ++i) {
        SeqVector v(5);
        for (auto& x : v) x = rng.uniform(0, 1);
        seqs.push_back(v);
    }
    double threshold = 0.97;
    // Oracle: independent greedy scan.
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        bool zero = true;
        for (double x : seqs[i])
            if (x != 0.0) zero = false;
        if (zero) continue;
        bool redundant = false;
        for (std::size_t j : expect)
            if (cosine_oracle(seqs[i], seqs[j]) > threshold) redundant = true;
        if (!redundant) expect.push_back(i);
    }
    CHECK(cosine_redundancy_filter(seqs, threshold) == expect);
    CHECK_FALSE(expect.size() == seqs.size());  // threshold actually filters
}
