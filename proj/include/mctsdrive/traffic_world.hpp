#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mctsdrive/errors.hpp"
#include "mctsdrive/frenet_map.hpp"

namespace mctsdrive {

struct VehicleState {
    double s = 0.0;
    double d = 0.0;
    double speed = 0.0;  // longitudinal, m/s
    double accel = 0.0;
    int lane = 0;
    double length = 4.5;  // extent along s
    double width = 1.8;   // extent along d

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

enum class Lateral : std::uint8_t { keep = 0, left_change = 1, right_change = 2 };

inline constexpr int lateral_count = 3;

inline std::string_view to_string(Lateral l) {
    switch (l) {
    case Lateral::keep: return "keep";
    case Lateral::left_change: return "left_change";
    case Lateral::right_change: return "right_change";
    }
    return "?";
}

inline std::optional<Lateral> lateral_from_string(std::string_view s) {
    if (s == "keep") return Lateral::keep;
    if (s == "left_change") return Lateral::left_change;
    if (s == "right_change") return Lateral::right_change;
    return std::nullopt;
}

// Edge label of the search tree. Canonical order: jerk ascending, then keep < left < right.
struct DriveAction {
    int jerk_index = 0;
    Lateral lateral = Lateral::keep;

    constexpr int ordinal() const noexcept { return jerk_index * lateral_count + static_cast<int>(lateral); }

    friend constexpr bool operator==(const DriveAction&, const DriveAction&) = default;
    friend constexpr auto operator<=>(const DriveAction& a, const DriveAction& b) noexcept {
        return a.ordinal() <=> b.ordinal();
    }
};

struct LaneChange {
    int target_lane = 0;
    double fraction = 0.0;  // [0, 1]

    friend bool operator==(const LaneChange&, const LaneChange&) = default;
};

struct WorldState {
    double t = 0.0;
    VehicleState ego;
    std::vector<VehicleState> others;
    std::optional<LaneChange> lane_change;  // ego's in-flight change

    friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline constexpr std::size_t max_jerk_levels = 16;

struct KinematicLimits {
    double v_max = 20.0;
    double v_min = 0.0;
    double a_max = 3.0;
    double a_min = -5.0;
    std::vector<double> jerk_set{-2.0, -1.0, 0.0, 1.0, 2.0};  // ascending
    double lane_change_duration = 1.0;

    friend bool operator==(const KinematicLimits&, const KinematicLimits&) = default;

    int zero_jerk_index() const {
        const auto it = std::find(jerk_set.begin(), jerk_set.end(), 0.0);
        return static_cast<int>(it - jerk_set.begin());
    }

    void validate() const {
        if (!(v_max > 0.0)) throw ConfigError("limits.v_max", "must be > 0");
        if (v_min != 0.0) throw ConfigError("limits.v_min", "must be 0");
        if (!(a_max > 0.0)) throw ConfigError("limits.a_max", "must be > 0");
        if (!(a_min < 0.0)) throw ConfigError("limits.a_min", "must be < 0");
        if (!(lane_change_duration > 0.0)) throw ConfigError("limits.lane_change_duration", "must be > 0");
        if (jerk_set.empty() || jerk_set.size() > max_jerk_levels) {
            throw ConfigError("limits.jerk_set", "must hold 1.." + std::to_string(max_jerk_levels) + " levels");
        }
        if (!std::is_sorted(jerk_set.begin(), jerk_set.end()) ||
            std::adjacent_find(jerk_set.begin(), jerk_set.end()) != jerk_set.end()) {
            throw ConfigError("limits.jerk_set", "must be strictly ascending");
        }
        if (std::find(jerk_set.begin(), jerk_set.end(), 0.0) == jerk_set.end()) {
            throw ConfigError("limits.jerk_set", "must contain 0");
        }
        for (std::size_t i = 0; i < jerk_set.size(); ++i) {
            if (jerk_set[i] != -jerk_set[jerk_set.size() - 1 - i]) {
                throw ConfigError("limits.jerk_set", "must be symmetric about 0");
            }
        }
    }
};

/*
 * Scripted behaviour of a non-ego vehicle (perfect prediction).
 *
 * constant_speed: keeps its initial speed and lane.
 * piecewise:      from each segment's t_start on, drives at `speed` and heads for `lane`
 *                 (lateral motion at lane_width / lane_change_duration).
 * crossing:       cross traffic; fixed s, d moves at `lateral_speed` (negative = from the left).
 */
enum class ScriptMode { constant_speed, piecewise, crossing };

inline std::string_view to_string(ScriptMode m) {
    switch (m) {
    case ScriptMode::constant_speed: return "constant_speed";
    case ScriptMode::piecewise: return "piecewise";
    case ScriptMode::crossing: return "crossing";
    }
    return "?";
}

inline std::optional<ScriptMode> script_mode_from_string(std::string_view s) {
    if (s == "constant_speed") return ScriptMode::constant_speed;
    if (s == "piecewise") return ScriptMode::piecewise;
    if (s == "crossing") return ScriptMode::crossing;
    return std::nullopt;
}

struct ScriptSegment {
    double t_start = 0.0;
    double speed = 0.0;
    int lane = 0;

    friend bool operator==(const ScriptSegment&, const ScriptSegment&) = default;
};

struct VehicleScript {
    ScriptMode mode = ScriptMode::constant_speed;
    std::vector<ScriptSegment> segments;
    double lateral_speed = 0.0;

    friend bool operator==(const VehicleScript&, const VehicleScript&) = default;
};

// Static part of the world the planner searches over: road, ego limits and the scripts
// of the other vehicles (index-aligned with WorldState::others).
struct Environment {
    RoadMap map;
    KinematicLimits limits;
    std::vector<VehicleScript> scripts;
    int collision_samples = 5;  // interpolated overlap checks per step
};

inline bool is_feasible(const WorldState& w, DriveAction a, const KinematicLimits& limits, const RoadMap& map) {
    if (a.jerk_index < 0 || a.jerk_index >= static_cast<int>(limits.jerk_set.size())) return false;
    const double jerk = limits.jerk_set[static_cast<std::size_t>(a.jerk_index)];
    if (jerk > 0.0 && w.ego.accel >= limits.a_max) return false;
    if (jerk < 0.0 && w.ego.accel <= limits.a_min) return false;
    switch (a.lateral) {
    case Lateral::keep: return true;
    case Lateral::left_change: return !w.lane_change && map.has_lane(w.ego.lane + 1);
    case Lateral::right_change: return !w.lane_change && map.has_lane(w.ego.lane - 1);
    }
    return false;
}

// Canonically ordered; never empty (zero jerk with keep is always feasible).
inline std::vector<DriveAction> feasible_actions(const WorldState& w, const KinematicLimits& limits, const RoadMap& map) {
    std::vector<DriveAction> out;
    out.reserve(limits.jerk_set.size() * lateral_count);
    for (int j = 0; j < static_cast<int>(limits.jerk_set.size()); ++j) {
        for (Lateral l : {Lateral::keep, Lateral::left_change, Lateral::right_change}) {
            const DriveAction a{j, l};
            if (is_feasible(w, a, limits, map)) out.push_back(a);
        }
    }
    return out;
}

// Advances the ego only (and the clock). Trapezoidal integration of a constant jerk.
inline WorldState step_ego(const WorldState& w, DriveAction a, const KinematicLimits& limits, const RoadMap& map,
                           double dt) {
    if (!is_feasible(w, a, limits, map)) {
        throw ContractViolation("infeasible action (jerk_index " + std::to_string(a.jerk_index) + ", " +
                                std::string(to_string(a.lateral)) + ") for ego in lane " + std::to_string(w.ego.lane));
    }
    WorldState next = w;
    VehicleState& e = next.ego;
    const double jerk = limits.jerk_set[static_cast<std::size_t>(a.jerk_index)];
    const double accel = std::clamp(w.ego.accel + jerk * dt, limits.a_min, limits.a_max);
    const double raw_speed = w.ego.speed + 0.5 * (w.ego.accel + accel) * dt;
    const double speed = std::clamp(raw_speed, limits.v_min, limits.v_max);
    e.accel = accel;
    // Saturated speed cannot keep pushing against its bound.
    if ((raw_speed <= limits.v_min && accel < 0.0) || (raw_speed >= limits.v_max && accel > 0.0)) e.accel = 0.0;
    e.speed = speed;
    e.s = w.ego.s + 0.5 * (w.ego.speed + speed) * dt;

    if (a.lateral != Lateral::keep) {
        next.lane_change = LaneChange{w.ego.lane + (a.lateral == Lateral::left_change ? 1 : -1), 0.0};
    }
    if (next.lane_change) {
        LaneChange& lc = *next.lane_change;
        lc.fraction = std::min(1.0, lc.fraction + dt / limits.lane_change_duration);
        if (lc.fraction >= 1.0 - 1e-12) {
            e.lane = lc.target_lane;
            e.d = map.lane_center(lc.target_lane);
            next.lane_change.reset();
        } else {
            const double from = map.lane_center(e.lane);
            const double to = map.lane_center(lc.target_lane);
            e.d = from + lc.fraction * (to - from);
        }
    }
    next.t = w.t + dt;
    return next;
}

namespace detail {

inline const ScriptSegment* active_segment(const VehicleScript& script, double t) {
    const ScriptSegment* active = nullptr;
    for (const auto& seg : script.segments) {
        if (seg.t_start <= t + 1e-9) active = &seg;
    }
    return active;
}

inline void advance_scripted(VehicleState& v, const VehicleScript& script, const RoadMap& map, double lateral_rate,
                             double t0, double dt) {
    switch (script.mode) {
    case ScriptMode::constant_speed:
        v.s += v.speed * dt;
        return;
    case ScriptMode::crossing:
        v.d += script.lateral_speed * dt;
        v.lane = map.nearest_lane(v.d);
        return;
    case ScriptMode::piecewise:
        break;
    }
    const double t1 = t0 + dt;
    double t = t0;
    while (t < t1 - 1e-12) {
        const ScriptSegment* seg = active_segment(script, t);
        double piece_end = t1;
        for (const auto& next : script.segments) {
            if (next.t_start > t + 1e-9 && next.t_start < piece_end) piece_end = next.t_start;
        }
        const double tau = piece_end - t;
        if (seg) {
            v.speed = seg->speed;
            const double target = map.lane_center(seg->lane);
            const double gap = target - v.d;
            const double move = std::min(std::abs(gap), lateral_rate * tau);
            v.d += std::copysign(move, gap);
            if (std::abs(target - v.d) <= 1e-9) {
                v.d = target;
                v.lane = seg->lane;
            }
        }
        v.s += v.speed * tau;
        t = piece_end;
    }
}

} // namespace detail

// Advances every other vehicle along its script over [w.t, w.t + dt]. The clock is left to step_ego.
inline WorldState step_others(const WorldState& w, const Environment& env, double dt) {
    WorldState next = w;
    const double lateral_rate = env.map.lane_width / env.limits.lane_change_duration;
    for (std::size_t i = 0; i < next.others.size(); ++i) {
        const VehicleScript& script = i < env.scripts.size() ? env.scripts[i] : VehicleScript{};
        detail::advance_scripted(next.others[i], script, env.map, lateral_rate, w.t, dt);
    }
    return next;
}

// Euclidean gap between axis-aligned footprints in the (s, d) plane; 0 when they touch.
inline double pairwise_distance(const VehicleState& a, const VehicleState& b) {
    const double gs = std::max(0.0, std::abs(a.s - b.s) - 0.5 * (a.length + b.length));
    const double gd = std::max(0.0, std::abs(a.d - b.d) - 0.5 * (a.width + b.width));
    return std::hypot(gs, gd);
}

inline bool overlaps(const VehicleState& a, const VehicleState& b) {
    return std::abs(a.s - b.s) <= 0.5 * (a.length + b.length) && std::abs(a.d - b.d) <= 0.5 * (a.width + b.width);
}

inline bool check_collision(const WorldState& w) {
    return std::any_of(w.others.begin(), w.others.end(), [&](const VehicleState& o) { return overlaps(w.ego, o); });
}

inline double min_gap(const WorldState& w) {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& o : w.others) g = std::min(g, pairwise_distance(w.ego, o));
    return g;
}

struct Transition {
    WorldState world;  // end of step, or the instant of impact when `collided`
    bool collided = false;
};

namespace detail {

inline VehicleState lerp(const VehicleState& a, const VehicleState& b, double f) {
    VehicleState v = b;
    v.s = a.s + f * (b.s - a.s);
    v.d = a.d + f * (b.d - a.d);
    v.speed = a.speed + f * (b.speed - a.speed);
    return v;
}

} // namespace detail

// One T1 step of the whole world. Overlap is checked at `collision_samples` evenly spaced
// instants (linear interpolation of all footprints) so fast crossings cannot tunnel.
inline Transition step_world(const WorldState& w, DriveAction a, const Environment& env, double dt) {
    WorldState next = step_ego(step_others(w, env, dt), a, env.limits, env.map, dt);
    const int samples = std::max(1, env.collision_samples);
    for (int k = 1; k <= samples; ++k) {
        const double f = static_cast<double>(k) / samples;
        const VehicleState ego = detail::lerp(w.ego, next.ego, f);
        for (std::size_t i = 0; i < next.others.size(); ++i) {
            if (overlaps(ego, detail::lerp(w.others[i], next.others[i], f))) {
                if (k < samples) {
                    WorldState impact = next;
                    impact.t = w.t + f * dt;
                    impact.ego = ego;
                    for (std::size_t j = 0; j < next.others.size(); ++j) {
                        impact.others[j] = detail::lerp(w.others[j], next.others[j], f);
                    }
                    return {std::move(impact), true};
                }
                return {std::move(next), true};
            }
        }
    }
    return {std::move(next), false};
}

inline bool goal_reached(const WorldState& w, const GoalRegion& goal) {
    if (w.ego.s < goal.s_goal) return false;
    if (!goal.required_lane) return true;
    return w.ego.lane == *goal.required_lane && !w.lane_change;
}

} // namespace mctsdrive
