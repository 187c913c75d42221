#include "repufed/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "repufed/rng.hpp"

namespace repufed {

int Scene::first_frame() const {
    int f = std::numeric_limits<int>::max();
    for (const auto& tr : tracks)
        if (!tr.points.empty()) f = std::min(f, tr.points.front().t);
    return f;
}

int Scene::last_frame() const {
    int f = std::numeric_limits<int>::min();
    for (const auto& tr : tracks)
        if (!tr.points.empty()) f = std::max(f, tr.points.back().t);
    return f;
}

const Track* Scene::find_track(int vehicle_id) const {
    for (const auto& tr : tracks)
        if (tr.vehicle_id == vehicle_id) return &tr;
    return nullptr;
}

void validate_scene(const Scene& scene) {
    if (scene.frame_rate <= 0.0)
        throw ValidationError("scene frame_rate must be positive");
    std::set<int> seen_ids;
    for (const auto& tr : scene.tracks) {
        if (tr.points.size() < 2)
            throw ValidationError("track " + std::to_string(tr.vehicle_id) +
                                  " has fewer than 2 points");
        if (!seen_ids.insert(tr.vehicle_id).second)
            throw ValidationError("duplicate vehicle_id " +
                                  std::to_string(tr.vehicle_id));
        for (std::size_t i = 1; i < tr.points.size(); ++i) {
            if (tr.points[i].t <= tr.points[i - 1].t)
                throw ValidationError(
                    "non-monotone frames in track " +
                    std::to_string(tr.vehicle_id));
        }
        if (tr.points.front().t < 0)
            throw ValidationError("negative frame index in track " +
                                  std::to_string(tr.vehicle_id));
    }
}

namespace {

struct Row {
    int frame;
    int vehicle;
    double x;
    double y;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::vector<Scene> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    auto header = split_csv_line(line);
    int col_frame = -1, col_vehicle = -1, col_x = -1, col_y = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "frame_id") col_frame = static_cast<int>(i);
        else if (header[i] == "vehicle_id") col_vehicle = static_cast<int>(i);
        else if (header[i] == "x") col_x = static_cast<int>(i);
        else if (header[i] == "y") col_y = static_cast<int>(i);
    }
    if (col_frame < 0 || col_vehicle < 0 || col_x < 0 || col_y < 0)
        throw ParseError(path + ": header must name frame_id,vehicle_id,x,y");

    std::vector<Row> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) <=
            std::max({col_frame, col_vehicle, col_x, col_y}))
            throw ParseError(path + ": line " + std::to_string(lineno) +
                             ": too few columns");
        Row r;
        try {
            std::size_t used;
            r.frame = std::stoi(fields[col_frame], &used);
            r.vehicle = std::stoi(fields[col_vehicle]);
            r.x = std::stod(fields[col_x]);
            r.y = std::stod(fields[col_y]);
        } catch (const std::exception&) {
            throw ParseError(path + ": line " + std::to_string(lineno) +
                             ": malformed row");
        }
        rows.push_back(r);
    }

    // Deterministic regardless of row order.
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.vehicle, a.frame) < std::tie(b.vehicle, b.frame);
    });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].vehicle == rows[i - 1].vehicle &&
            rows[i].frame == rows[i - 1].frame)
            throw ValidationError(path + ": duplicate (vehicle,frame) = (" +
                                  std::to_string(rows[i].vehicle) + "," +
                                  std::to_string(rows[i].frame) + ")");
    }

    if (rows.empty()) return {};

    // One Scene per contiguous frame block.
    std::set<int> frames;
    for (const auto& r : rows) frames.insert(r.frame);
    std::map<int, int> block_of_frame;  // frame -> block index
    int block = 0;
    int prev = *frames.begin();
    block_of_frame[prev] = 0;
    for (int f : frames) {
        if (f == prev) continue;
        if (f != prev + 1) ++block;
        block_of_frame[f] = block;
        prev = f;
    }

    std::vector<Scene> scenes(static_cast<std::size_t>(block + 1));
    std::map<std::pair<int, int>, std::vector<TrajectoryPoint>> per_track;
    for (const auto& r : rows)
        per_track[{block_of_frame[r.frame], r.vehicle}].push_back(
            {r.frame, r.x, r.y});
    for (auto& [key, pts] : per_track) {
        Track tr;
        tr.vehicle_id = key.second;
        tr.points = std::move(pts);
        scenes[static_cast<std::size_t>(key.first)].tracks.push_back(
            std::move(tr));
    }
    for (auto& s : scenes) {
        std::sort(s.tracks.begin(), s.tracks.end(),
                  [](const Track& a, const Track& b) {
                      return a.vehicle_id < b.vehicle_id;
                  });
        validate_scene(s);
    }
    return scenes;
}

void save_csv(const std::vector<Scene>& scenes, const std::string& path,
              double /*frame_rate_hint*/) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "frame_id,vehicle_id,x,y\n";
    char buf[64];
    for (const auto& s : scenes) {
        for (const auto& tr : s.tracks) {
            for (const auto& p : tr.points) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f\n", p.t,
                              tr.vehicle_id, p.x, p.y);
                out << buf;
            }
        }
    }
    if (!out) throw IoError("write failure on " + path);
}

Scene synthesize_traffic(const SynthConfig& cfg) {
    if (cfg.n_vehicles < 1)
        throw ValidationError("synthesize_traffic: n_vehicles must be >= 1");
    if (cfg.duration_frames < 2)
        throw ValidationError("synthesize_traffic: duration must be >= 2 frames");
    if (cfg.speed_min <= 0.0 || cfg.speed_max < cfg.speed_min)
        throw ValidationError("synthesize_traffic: bad speed range");
    if (cfg.n_lanes < 1)
        throw ValidationError("synthesize_traffic: n_lanes must be >= 1");

    const double dt = 1.0 / cfg.frame_rate;
    const int change_frames = 20;  // smooth lane-change duration

    Scene scene;
    scene.frame_rate = cfg.frame_rate;
    for (int v = 0; v < cfg.n_vehicles; ++v) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(v)));
        int lane = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_lanes)));
        double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
        double x = rng.uniform(0.0, 100.0);
        double y = lane * cfg.lane_width;

        Track tr;
        tr.vehicle_id = v;
        int changing_until = -1;
        double y_from = y, y_to = y;
        int change_start = 0;
        for (int f = 0; f < cfg.duration_frames; ++f) {
            double yf = y;
            if (f < changing_until) {
                double a = static_cast<double>(f - change_start) /
                           (changing_until - change_start);
                // cosine ease between lane centers
                yf = y_from + (y_to - y_from) * 0.5 * (1.0 - std::cos(a * M_PI));
            } else if (changing_until >= 0 && f == changing_until) {
                y = y_to;
                yf = y;
                changing_until = -1;
            }
            if (changing_until < 0 && cfg.lane_change_prob > 0.0 &&
                rng.uniform01() < cfg.lane_change_prob &&
                f + change_frames < cfg.duration_frames) {
                int dir = (lane == 0) ? 1
                          : (lane == cfg.n_lanes - 1)
                              ? -1
                              : (rng.uniform01() < 0.5 ? -1 : 1);
                lane += dir;
                y_from = y;
                y_to = lane * cfg.lane_width;
                change_start = f;
                changing_until = f + change_frames;
            }
            tr.points.push_back({f, x, yf});
            x += speed * dt;
        }
        scene.tracks.push_back(std::move(tr));
    }
    validate_scene(scene);
    return scene;
}

std::vector<ObservationWindow> window(const Scene& scene, int tau, int t_f,
                                      int stride) {
    if (tau < 2 || t_f < 1 || stride < 1)
        throw ValidationError("window: need tau >= 2, t_f >= 1, stride >= 1");
    const int span = tau + t_f;
    const int first = scene.first_frame();
    const int last = scene.last_frame();
    if (last - first + 1 < span)
        throw ValidationError("window: tau + t_f exceeds scene length");

    std::vector<ObservationWindow> out;
    for (int start = first; start + span - 1 <= last; start += stride) {
        ObservationWindow w;
        w.start_frame = start;
        w.tau = tau;
        w.t_f = t_f;
        for (const auto& tr : scene.tracks) {
            // Vehicle must cover every frame of the span contiguously.
            if (tr.points.front().t > start ||
                tr.points.back().t < start + span - 1)
                continue;
            // Locate the span; tracks may have gaps, so check frame ids.
            std::size_t idx = static_cast<std::size_t>(start - tr.points.front().t);
            // Tracks with gaps: fall back to search.
            if (idx >= tr.points.size() ||
                tr.points[idx].t != start) {
                auto it = std::lower_bound(
                    tr.points.begin(), tr.points.end(), start,
                    [](const TrajectoryPoint& p, int f) { return p.t < f; });
                if (it == tr.points.end() || it->t != start) continue;
                idx = static_cast<std::size_t>(it - tr.points.begin());
            }
            bool contiguous = idx + span <= tr.points.size();
            if (contiguous) {
                for (int k = 0; k < span; ++k)
                    if (tr.points[idx + k].t != start + k) {
                        contiguous = false;
                        break;
                    }
            }
            if (!contiguous) continue;

            Vec2 anchor = tr.points[idx + tau - 1].pos();
            std::vector<Vec2> hist, fut;
            for (int k = 0; k < tau; ++k)
                hist.push_back(tr.points[idx + k].pos() - anchor);
            for (int k = 0; k < t_f; ++k)
                fut.push_back(tr.points[idx + tau + k].pos() - anchor);
            w.vehicle_ids.push_back(tr.vehicle_id);
            w.history.push_back(std::move(hist));
            w.future.push_back(std::move(fut));
            w.anchors.push_back(anchor);
        }
        if (!w.vehicle_ids.empty()) out.push_back(std::move(w));
    }
    return out;
}

std::pair<Scene, std::set<int>> inject_bad_nodes(const Scene& scene,
                                                 double fraction,
                                                 CorruptionMode mode,
                                                 double magnitude,
                                                 std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw ValidationError("inject_bad_nodes: fraction must be in [0,1]");
    Scene out = scene;
    const std::size_t n = out.tracks.size();
    const std::size_t k = static_cast<std::size_t>(fraction * static_cast<double>(n));
    std::set<int> bad;
    if (k == 0) return {out, bad};

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0xbadULL));
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t c = 0; c < k; ++c) {
        Track& tr = out.tracks[order[c]];
        tr.is_bad = true;
        bad.insert(tr.vehicle_id);
        Rng trng(derive_seed(seed, 0xc0ffeeULL,
                             static_cast<std::uint64_t>(tr.vehicle_id)));
        switch (mode) {
            case CorruptionMode::Scale:
                for (auto& p : tr.points) {
                    p.x *= magnitude;
                    p.y *= magnitude;
                }
                break;
            case CorruptionMode::Jitter:
                for (auto& p : tr.points) {
                    p.x += trng.normal(0.0, magnitude);
                    p.y += trng.normal(0.0, magnitude);
                }
                break;
            case CorruptionMode::Swap:
                for (auto& p : tr.points) std::swap(p.x, p.y);
                break;
        }
    }
    return {out, bad};
}

Metrics metrics(const std::vector<std::vector<Vec2>>& pred,
                const std::vector<std::vector<Vec2>>& truth) {
    if (pred.size() != truth.size())
        throw ValidationError("metrics: step-count mismatch");
    if (pred.empty()) throw ValidationError("metrics: empty input");
    std::size_t n = pred[0].size();
    double sum_err = 0.0, sum_sq = 0.0, final_err = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].size() != n || truth[t].size() != n)
            throw ValidationError("metrics: vehicle-count mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            double dx = pred[t][i].x - truth[t][i].x;
            double dy = pred[t][i].y - truth[t][i].y;
            double e = std::hypot(dx, dy);
            sum_err += e;
            sum_sq += dx * dx + dy * dy;
            if (t + 1 == pred.size()) final_err += e;
            ++count;
        }
    }
    if (n == 0) throw ValidationError("metrics: zero vehicles");
    Metrics m;
    m.ade = sum_err / static_cast<double>(count);
    m.fde = final_err / static_cast<double>(n);
    m.rmse = std::sqrt(sum_sq / static_cast<double>(2 * count));
    return m;
}

CorruptionMode parse_corruption_mode(const std::string& name) {
    if (name == "scale") return CorruptionMode::Scale;
    if (name == "jitter") return CorruptionMode::Jitter;
    if (name == "swap") return CorruptionMode::Swap;
    throw ValidationError("unknown corruption mode: " + name);
}

}  // namespace repufed
