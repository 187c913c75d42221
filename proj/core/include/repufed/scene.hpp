#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "repufed/common.hpp"

namespace repufed {

struct TrajectoryPoint {
    int t = 0;  // frame index, non-negative
    double x = 0.0;
    double y = 0.0;

    Vec2 pos() const { return {x, y}; }
    bool operator==(const TrajectoryPoint&) const = default;
};

struct Track {
    int vehicle_id = 0;
    std::vector<TrajectoryPoint> points;  // strictly increasing frame indices
    bool is_bad = false;                  // simulation-only ground truth

    bool operator==(const Track&) const = default;
};

struct Scene {
    std::vector<Track> tracks;  // sorted by vehicle_id
    double frame_rate = 10.0;   // Hz

    int first_frame() const;
    int last_frame() const;
    const Track* find_track(int vehicle_id) const;

    bool operator==(const Scene&) const = default;
};

// Throws ValidationError on broken invariants (empty tracks, duplicate or
// non-monotone frames, non-positive frame rate).
void validate_scene(const Scene& scene);

struct ObservationWindow {
    std::vector<int> vehicle_ids;
    // Per vehicle, relative to that vehicle's position at the last
    // history frame: history has tau rows (final row exactly (0,0)),
    // future has t_f rows of ground truth.
    std::vector<std::vector<Vec2>> history;
    std::vector<std::vector<Vec2>> future;
    int start_frame = 0;
    int tau = 0;
    int t_f = 0;
    // Absolute anchor position per vehicle (last history frame).
    std::vector<Vec2> anchors;
};

struct SynthConfig {
    int n_vehicles = 10;
    int n_lanes = 3;
    int duration_frames = 100;
    double speed_min = 8.0;   // m/s
    double speed_max = 16.0;  // m/s
    double lane_change_prob = 0.01;  // per frame
    double frame_rate = 10.0;
    double lane_width = 3.5;
    std::uint64_t seed = 1;
};

enum class CorruptionMode { Scale, Jitter, Swap };

struct Metrics {
    double ade = 0.0;
    double fde = 0.0;
    double rmse = 0.0;
};

std::vector<Scene> load_csv(const std::string& path);
void save_csv(const std::vector<Scene>& scenes, const std::string& path,
              double frame_rate_hint = 10.0);

Scene synthesize_traffic(const SynthConfig& cfg);

std::vector<ObservationWindow> window(const Scene& scene, int tau, int t_f,
                                      int stride);

// Corrupts floor(fraction*n) tracks chosen uniformly by seed; returns the
// corrupted scene and the affected vehicle ids.
std::pair<Scene, std::set<int>> inject_bad_nodes(const Scene& scene,
                                                 double fraction,
                                                 CorruptionMode mode,
                                                 double magnitude,
                                                 std::uint64_t seed);

// pred/truth indexed [step][vehicle]; shapes must match.
Metrics metrics(const std::vector<std::vector<Vec2>>& pred,
                const std::vector<std::vector<Vec2>>& truth);

CorruptionMode parse_corruption_mode(const std::string& name);

}  // namespace repufed
