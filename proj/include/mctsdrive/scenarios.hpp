#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mctsdrive/cost_model.hpp"
#include "mctsdrive/errors.hpp"
#include "mctsdrive/frenet_map.hpp"
#include "mctsdrive/mcts_planner.hpp"
#include "mctsdrive/traffic_world.hpp"

namespace mctsdrive {

struct ScriptedVehicle {
    VehicleState state;
    VehicleScript script;

    friend bool operator==(const ScriptedVehicle&, const ScriptedVehicle&) = default;
};

struct ScenarioConfig {
    std::string name;
    RoadMap road;
    VehicleState ego_initial;
    std::vector<ScriptedVehicle> others;
    KinematicLimits limits;
    CostWeights weights;
    CostParams cost_params;
    PlannerConfig planner;
    int max_steps = 40;
    int collision_samples = 5;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

    const GoalRegion& goal() const noexcept { return road.goal; }

    Environment environment() const {
        Environment env{road, limits, {}, collision_samples};
        env.scripts.reserve(others.size());
        for (const auto& o : others) env.scripts.push_back(o.script);
        return env;
    }

    WorldState initial_world() const {
        WorldState w;
        w.ego = ego_initial;
        w.others.reserve(others.size());
        for (const auto& o : others) w.others.push_back(o.state);
        return w;
    }

    // Throws ConfigError naming the first offending field.
    void validate() const {
        if (name.empty()) throw ConfigError("name", "must not be empty");
        road.validate();
        limits.validate();
        weights.validate();
        cost_params.validate();
        planner.validate(limits);
        if (max_steps < 1) throw ConfigError("max_steps", "must be >= 1");
        if (collision_samples < 1) throw ConfigError("collision_samples", "must be >= 1");
        check_vehicle("ego_initial", ego_initial, true);
        if (!(ego_initial.speed >= 0.0 && ego_initial.speed <= limits.v_max)) {
            throw ConfigError("ego_initial.speed", "must lie in [0, v_max]");
        }
        if (!(ego_initial.accel >= limits.a_min && ego_initial.accel <= limits.a_max)) {
            throw ConfigError("ego_initial.accel", "must lie in [a_min, a_max]");
        }
        const double script_end = max_steps * planner.t1;
        for (std::size_t i = 0; i < others.size(); ++i) {
            const std::string path = "others[" + std::to_string(i) + "]";
            const auto& o = others[i];
            check_vehicle(path + ".state", o.state, o.script.mode != ScriptMode::crossing);
            if (o.state.speed < 0.0) throw ConfigError(path + ".state.speed", "must be >= 0");
            const auto& segs = o.script.segments;
            switch (o.script.mode) {
            case ScriptMode::constant_speed:
                if (!segs.empty()) throw ConfigError(path + ".script.segments", "constant_speed takes no segments");
                break;
            case ScriptMode::crossing:
                if (!segs.empty()) throw ConfigError(path + ".script.segments", "crossing takes no segments");
                if (o.script.lateral_speed == 0.0) throw ConfigError(path + ".script.lateral_speed", "must be non-zero");
                break;
            case ScriptMode::piecewise: {
                if (segs.empty()) throw ConfigError(path + ".script.segments", "piecewise needs segments");
                if (segs.front().t_start > 0.0) {
                    throw ConfigError(path + ".script.segments[0].t_start", "script must be defined from t = 0");
                }
                int lane = o.state.lane;
                for (std::size_t k = 0; k < segs.size(); ++k) {
                    const std::string sp = path + ".script.segments[" + std::to_string(k) + "]";
                    if (k > 0 && !(segs[k].t_start > segs[k - 1].t_start)) {
                        throw ConfigError(sp + ".t_start", "segments must be time-ordered");
                    }
                    if (segs[k].t_start > script_end) throw ConfigError(sp + ".t_start", "starts after the run ends");
                    if (!road.has_lane(segs[k].lane)) throw ConfigError(sp + ".lane", "lane does not exist");
                    if (std::abs(segs[k].lane - lane) > 1) {
                        throw ConfigError(sp + ".lane", "lane transitions must be between adjacent lanes");
                    }
                    if (segs[k].speed < 0.0) throw ConfigError(sp + ".speed", "must be >= 0");
                    lane = segs[k].lane;
                }
                break;
            }
            }
        }
        if (check_collision(initial_world())) throw ConfigError("others", "initial state has a collision with the ego");
    }

private:
    void check_vehicle(const std::string& path, const VehicleState& v, bool on_road) const {
        if (!(v.length > 0.0)) throw ConfigError(path + ".length", "must be > 0");
        if (!(v.width > 0.0)) throw ConfigError(path + ".width", "must be > 0");
        if (!on_road) return;
        if (!road.has_lane(v.lane)) throw ConfigError(path + ".lane", "lane does not exist");
        if (std::abs(v.d - road.lane_center(v.lane)) > road.lane_width) {
            throw ConfigError(path + ".d", "further than one lane width from its lane center");
        }
        if (!(v.s >= -200.0 && v.s <= road.reference_line.length())) {
            throw ConfigError(path + ".s", "outside the road");
        }
    }
};

struct ScenarioOverrides {
    std::optional<int> iterations;
    std::optional<int> lookahead_depth;
    std::optional<double> t1;
    std::optional<double> horizon;
    std::optional<int> max_steps;

    void apply(ScenarioConfig& c) const {
        if (iterations) c.planner.iterations = *iterations;
        if (lookahead_depth) c.planner.lookahead_depth = *lookahead_depth;
        if (t1) c.planner.t1 = *t1;
        if (horizon) c.planner.horizon = *horizon;
        if (max_steps) c.max_steps = *max_steps;
    }
};

namespace detail {

class Jitter {
public:
    Jitter(std::uint64_t seed, std::uint64_t tag) : rng_(splitmix64(seed ^ splitmix64(tag))) {}
    double operator()(double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng_); }

private:
    Rng rng_;
};

inline VehicleState on_lane(const RoadMap& road, int lane, double s, double speed) {
    VehicleState v;
    v.lane = lane;
    v.d = road.lane_center(lane);
    v.s = s;
    v.speed = speed;
    return v;
}

inline ScriptedVehicle constant(const RoadMap& road, int lane, double s, double speed) {
    return {on_lane(road, lane, s, speed), VehicleScript{}};
}

// Station drawn before speed, so the sequence of draws is fixed.
inline ScriptedVehicle constant(const RoadMap& road, int lane, Jitter& j, double s_lo, double s_hi, double v_lo,
                                double v_hi) {
    const double s = j(s_lo, s_hi);
    const double v = j(v_lo, v_hi);
    return constant(road, lane, s, v);
}

// Cross traffic at station `s` entering the lateral band around `d_enter` at time `t_enter`.
inline ScriptedVehicle crossing(const RoadMap& road, double s, double d_enter, double t_enter, double lateral_speed) {
    VehicleState v;
    v.length = 1.8;  // footprint is rotated: its width lies along s
    v.width = 4.5;
    v.s = s;
    v.d = d_enter - lateral_speed * t_enter;
    v.lane = road.nearest_lane(v.d);
    v.speed = 0.0;
    return {v, VehicleScript{ScriptMode::crossing, {}, lateral_speed}};
}

inline ReferenceLine left_turn_line(double approach, double radius, double exit, double spacing = 1.0) {
    std::vector<Point2> pts;
    for (double x = 0.0; x < approach; x += spacing) pts.push_back({x, 0.0});
    const int arc_steps = std::max(8, static_cast<int>(std::ceil(radius * std::numbers::pi / 2.0 / spacing)));
    for (int k = 0; k <= arc_steps; ++k) {
        const double a = (std::numbers::pi / 2.0) * k / arc_steps;
        pts.push_back({approach + radius * std::sin(a), radius * (1.0 - std::cos(a))});
    }
    for (double y = spacing; y <= exit + 1e-9; y += spacing) pts.push_back({approach + radius, radius + y});
    return ReferenceLine(std::move(pts));
}

inline ScenarioConfig base(std::string name, RoadMap road) {
    ScenarioConfig c{std::move(name), std::move(road)};
    return c;
}

} // namespace detail

namespace scenario_constants {
// Artifact-chosen geometry; every value can be overridden through a config file.
inline constexpr double lane_width = 3.5;

inline constexpr double sln_length = 400.0;
inline constexpr double sln_goal = 250.0;
inline constexpr double sln_deadline = 40.0;

inline constexpr double he_length = 400.0;
inline constexpr double he_exit = 230.0;
inline constexpr double he_deadline = 25.0;

inline constexpr double ulti_approach = 100.0;
inline constexpr double ulti_radius = 20.0;
inline constexpr double ulti_exit = 60.0;
inline constexpr double ulti_conflict_s = 112.0;  // station where cross traffic traverses the corridor
inline constexpr double ulti_goal = 125.0;
inline constexpr double ulti_deadline = 16.0;
inline constexpr double ulti_cross_speed = -10.0;  // from the left
inline constexpr int ulti_platoon = 4;
inline constexpr double ulti_gap_min = 1.3;  // seconds between crossing vehicles
inline constexpr double ulti_gap_max = 2.0;
} // namespace scenario_constants

// Straight three-lane road, five constant-speed vehicles, progress-line goal.
inline ScenarioConfig make_sln(std::uint64_t seed, const ScenarioOverrides& overrides = {}) {
    namespace k = scenario_constants;
    detail::Jitter j(seed, 0x534c4eULL);
    RoadMap road = RoadMap::make(ReferenceLine::straight(k::sln_length), 3, k::lane_width,
                                 {GoalKind::progress_line, k::sln_goal, std::nullopt, k::sln_deadline});
    ScenarioConfig c = detail::base("sln", road);
    c.ego_initial = detail::on_lane(road, 1, 0.0, j(10.0, 14.0));
    c.others = {
        detail::constant(road, 1, j, 35.0, 50.0, 7.0, 9.0),
        detail::constant(road, 0, j, 15.0, 30.0, 10.0, 13.0),
        detail::constant(road, 2, j, 60.0, 90.0, 9.0, 12.0),
        detail::constant(road, 0, j, -40.0, -25.0, 9.0, 12.0),
        detail::constant(road, 2, j, -45.0, -30.0, 12.0, 15.0),
    };
    c.max_steps = static_cast<int>(k::sln_deadline);
    overrides.apply(c);
    return c;
}

// Three-lane highway; the exit is taken from the rightmost lane. A slow vehicle cuts into
// the ego's lane ahead of the exit.
inline ScenarioConfig make_he(std::uint64_t seed, const ScenarioOverrides& overrides = {}) {
    namespace k = scenario_constants;
    detail::Jitter j(seed, 0x4845ULL);
    RoadMap road = RoadMap::make(ReferenceLine::straight(k::he_length), 3, k::lane_width,
                                 {GoalKind::ramp_exit, k::he_exit, 0, k::he_deadline});
    ScenarioConfig c = detail::base("he", road);
    c.ego_initial = detail::on_lane(road, 0, 0.0, j(14.0, 16.0));
    ScriptedVehicle cut_in = detail::constant(road, 1, j(38.0, 46.0), 6.0);
    const double t_cut = j(2.0, 3.0);
    cut_in.script = {ScriptMode::piecewise, {{0.0, 6.0, 1}, {t_cut, 6.0, 0}}, 0.0};
    c.others = {
        cut_in,
        detail::constant(road, 0, j, 110.0, 130.0, 13.0, 15.0),
        detail::constant(road, 1, j, -50.0, -40.0, 15.0, 17.0),
        detail::constant(road, 2, j, 25.0, 40.0, 16.0, 18.0),
        detail::constant(road, 2, j, 90.0, 110.0, 13.0, 15.0),
    };
    c.max_steps = static_cast<int>(k::he_deadline);
    overrides.apply(c);
    return c;
}

/*
 * Unprotected left turn. The reference line bends left through the intersection; the ego
 * starts in the through lane (0) and must be in the turn lane (1) past the conflict zone.
 * A platoon of crossing vehicles from the left traverses the corridor at the conflict
 * station with short gaps; one vehicle follows in the turn lane.
 */
inline ScenarioConfig make_ulti(std::uint64_t seed, const ScenarioOverrides& overrides = {}) {
    namespace k = scenario_constants;
    detail::Jitter j(seed, 0x554c5449ULL);
    RoadMap road = RoadMap::make(detail::left_turn_line(k::ulti_approach, k::ulti_radius, k::ulti_exit), 2,
                                 k::lane_width, {GoalKind::intersection_crossing, k::ulti_goal, 1, k::ulti_deadline});
    ScenarioConfig c = detail::base("ulti", road);
    c.ego_initial = detail::on_lane(road, 0, 0.0, j(9.0, 11.0));
    const double cross_d = road.lane_center(1) + 3.2;
    c.others = {detail::constant(road, 1, j, -35.0, -20.0, 9.0, 11.0)};
    double t_enter = j(4.0, 6.0);
    for (int i = 0; i < k::ulti_platoon; ++i) {
        c.others.push_back(detail::crossing(road, k::ulti_conflict_s, cross_d, t_enter, k::ulti_cross_speed));
        t_enter += j(k::ulti_gap_min, k::ulti_gap_max);
    }
    c.max_steps = static_cast<int>(k::ulti_deadline);
    overrides.apply(c);
    return c;
}

// Fixed intersection demo: one vehicle approaches the intersection straight from the left.
inline ScenarioConfig make_qualitative_intersection(const ScenarioOverrides& overrides = {}) {
    namespace k = scenario_constants;
    RoadMap road = RoadMap::make(detail::left_turn_line(k::ulti_approach, k::ulti_radius, k::ulti_exit), 2,
                                 k::lane_width, {GoalKind::intersection_crossing, k::ulti_goal, 1, k::ulti_deadline});
    ScenarioConfig c = detail::base("qualitative_intersection", road);
    c.ego_initial = detail::on_lane(road, 0, 0.0, 10.0);
    c.others = {
        detail::crossing(road, k::ulti_conflict_s, road.lane_center(1) + 3.2, 7.0, k::ulti_cross_speed),
    };
    c.max_steps = static_cast<int>(k::ulti_deadline);
    overrides.apply(c);
    return c;
}

namespace scenario_constants {
inline constexpr double ramp_cut_in_time = 3.0;
}

// Fixed ramp demo: a slow vehicle in the middle lane cuts into the exit lane ahead of the ego.
inline ScenarioConfig make_qualitative_ramp(const ScenarioOverrides& overrides = {}) {
    namespace k = scenario_constants;
    RoadMap road = RoadMap::make(ReferenceLine::straight(k::he_length), 3, k::lane_width,
                                 {GoalKind::ramp_exit, k::he_exit, 0, k::he_deadline});
    ScenarioConfig c = detail::base("qualitative_ramp", road);
    c.ego_initial = detail::on_lane(road, 0, 0.0, 15.0);
    ScriptedVehicle cut_in = detail::constant(road, 1, 40.0, 6.0);
    cut_in.script = {ScriptMode::piecewise, {{0.0, 6.0, 1}, {k::ramp_cut_in_time, 6.0, 0}}, 0.0};
    c.others = {
        cut_in,
        detail::constant(road, 0, 120.0, 14.0),
        detail::constant(road, 1, -45.0, 16.0),
        detail::constant(road, 2, 30.0, 17.0),
        detail::constant(road, 2, 100.0, 14.0),
    };
    c.planner.iterations = 3000;
    c.max_steps = static_cast<int>(k::he_deadline);
    overrides.apply(c);
    return c;
}

inline const std::vector<std::string_view>& scenario_names() {
    static const std::vector<std::string_view> names{"sln", "he", "ulti", "qualitative_intersection",
                                                     "qualitative_ramp"};
    return names;
}

// Seeded scenarios use `seed`; the qualitative ones ignore it.
inline ScenarioConfig make_scenario(std::string_view name, std::uint64_t seed, const ScenarioOverrides& overrides = {}) {
    if (name == "sln") return make_sln(seed, overrides);
    if (name == "he") return make_he(seed, overrides);
    if (name == "ulti") return make_ulti(seed, overrides);
    if (name == "qualitative_intersection") return make_qualitative_intersection(overrides);
    if (name == "qualitative_ramp") return make_qualitative_ramp(overrides);
    throw ConfigError("scenario", "unknown scenario '" + std::string(name) + "'");
}

} // namespace mctsdrive
