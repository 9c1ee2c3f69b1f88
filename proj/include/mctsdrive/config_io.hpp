#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mctsdrive/cost_model.hpp"
#include "mctsdrive/errors.hpp"
#include "mctsdrive/frenet_map.hpp"
#include "mctsdrive/mcts_planner.hpp"
#include "mctsdrive/scenarios.hpp"
#include "mctsdrive/traffic_world.hpp"

namespace mctsdrive {

using Json = nlohmann::ordered_json;

namespace detail {

// Cursor over a JSON object that remembers its field path for error messages.
class Fields {
public:
    Fields(const Json& j, std::string path, std::initializer_list<std::string_view> allowed) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
        for (const auto& [key, value] : j_.items()) {
            bool known = false;
            for (auto a : allowed) known = known || a == key;
            if (!known) throw ConfigError(at(key), "unknown field");
        }
    }

    std::string at(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }
    bool has(std::string_view key) const { return j_.contains(key) && !j_.at(std::string(key)).is_null(); }

    const Json& required(std::string_view key) const {
        if (!has(key)) throw ConfigError(at(key), "missing required field");
        return j_.at(std::string(key));
    }

    template <typename T>
    void read(std::string_view key, T& out) const {
        if (has(key)) out = convert<T>(j_.at(std::string(key)), at(key));
    }

    template <typename T>
    T get(std::string_view key) const {
        return convert<T>(required(key), at(key));
    }

    template <typename T>
    static T convert(const Json& v, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(path, "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(path, "expected a string");
        }
        try {
            return v.get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path, e.what());
        }
    }

private:
    const Json& j_;
    std::string path_;
};

inline std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const Json& array_at(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array");
    return v;
}

template <typename T>
std::vector<T> number_list(const Json& v, const std::string& path) {
    std::vector<T> out;
    for (std::size_t i = 0; i < array_at(v, path).size(); ++i) out.push_back(Fields::convert<T>(v[i], index_path(path, i)));
    return out;
}

template <typename Enum, typename Parse>
Enum parse_enum(const Fields& f, std::string_view key, Parse parse) {
    const auto text = f.get<std::string>(key);
    const auto e = parse(text);
    if (!e) throw ConfigError(f.at(key), "unknown value '" + text + "'");
    return *e;
}

inline Json to_json(const VehicleState& v) {
    return {{"s", v.s}, {"d", v.d}, {"speed", v.speed}, {"accel", v.accel},
            {"lane", v.lane}, {"length", v.length}, {"width", v.width}};
}

inline VehicleState vehicle_from_json(const Json& j, const std::string& path) {
    const Fields f(j, path, {"s", "d", "speed", "accel", "lane", "length", "width"});
    VehicleState v;
    v.s = f.get<double>("s");
    v.d = f.get<double>("d");
    v.speed = f.get<double>("speed");
    f.read("accel", v.accel);
    v.lane = f.get<int>("lane");
    f.read("length", v.length);
    f.read("width", v.width);
    return v;
}

inline Json to_json(const VehicleScript& s) {
    Json segs = Json::array();
    for (const auto& g : s.segments) segs.push_back({{"t_start", g.t_start}, {"speed", g.speed}, {"lane", g.lane}});
    return {{"mode", to_string(s.mode)}, {"segments", segs}, {"lateral_speed", s.lateral_speed}};
}

inline VehicleScript script_from_json(const Json& j, const std::string& path) {
    const Fields f(j, path, {"mode", "segments", "lateral_speed"});
    VehicleScript s;
    s.mode = parse_enum<ScriptMode>(f, "mode", script_mode_from_string);
    f.read("lateral_speed", s.lateral_speed);
    if (f.has("segments")) {
        const std::string sp = f.at("segments");
        const Json& arr = array_at(f.required("segments"), sp);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string ip = index_path(sp, i);
            const Fields g(arr[i], ip, {"t_start", "speed", "lane"});
            s.segments.push_back({g.get<double>("t_start"), g.get<double>("speed"), g.get<int>("lane")});
        }
    }
    return s;
}

inline RoadMap road_from_json(const Json& j) {
    const Fields f(j, "road", {"reference_line", "lane_count", "lane_width", "lane_d_centers", "goal"});
    const std::string lp = f.at("reference_line");
    const Json& pts = array_at(f.required("reference_line"), lp);
    std::vector<Point2> points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto xy = number_list<double>(pts[i], index_path(lp, i));
        if (xy.size() != 2) throw ConfigError(index_path(lp, i), "expected [x, y]");
        points.push_back({xy[0], xy[1]});
    }
    std::optional<ReferenceLine> line;
    try {
        line.emplace(std::move(points));
    } catch (const ConfigError& e) {
        throw ConfigError(lp, e.what());
    }

    const Fields g(f.required("goal"), f.at("goal"), {"kind", "s_goal", "required_lane", "deadline"});
    GoalRegion goal;
    goal.kind = parse_enum<GoalKind>(g, "kind", goal_kind_from_string);
    goal.s_goal = g.get<double>("s_goal");
    if (g.has("required_lane")) goal.required_lane = g.get<int>("required_lane");
    goal.deadline = g.get<double>("deadline");

    const int lanes = f.get<int>("lane_count");
    const double width = f.get<double>("lane_width");
    std::vector<double> centers;
    if (f.has("lane_d_centers")) {
        centers = number_list<double>(f.required("lane_d_centers"), f.at("lane_d_centers"));
    } else {
        for (int i = 0; i < lanes; ++i) centers.push_back(width * i);
    }
    RoadMap road{std::move(*line), lanes, width, std::move(centers), goal};
    return road;
}

inline Json to_json(const RoadMap& r) {
    Json pts = Json::array();
    for (const auto& p : r.reference_line.points()) pts.push_back({p.x, p.y});
    Json goal = {{"kind", to_string(r.goal.kind)}, {"s_goal", r.goal.s_goal}, {"deadline", r.goal.deadline}};
    goal["required_lane"] = r.goal.required_lane ? Json(*r.goal.required_lane) : Json(nullptr);
    return {{"reference_line", pts}, {"lane_count", r.lane_count}, {"lane_width", r.lane_width},
            {"lane_d_centers", r.lane_d_centers}, {"goal", goal}};
}

} // namespace detail

inline Json scenario_to_json(const ScenarioConfig& c) {
    using detail::to_json;
    Json others = Json::array();
    for (const auto& o : c.others) others.push_back({{"state", to_json(o.state)}, {"script", to_json(o.script)}});
    const auto& L = c.limits;
    const auto& W = c.weights;
    const auto& P = c.cost_params;
    const auto& Q = c.planner;
    Json planner = {{"iterations", Q.iterations},
                    {"lookahead_depth", Q.lookahead_depth},
                    {"t1", Q.t1},
                    {"horizon", Q.horizon},
                    {"ucb_const", Q.ucb_const},
                    {"rollout_probs", Q.rollout_probs},
                    {"rng_seed", Q.rng_seed},
                    {"final_selection", to_string(Q.final_selection)}};
    planner["time_budget"] = Q.time_budget ? Json(*Q.time_budget) : Json(nullptr);
    return {{"name", c.name},
            {"road", to_json(c.road)},
            {"ego_initial", to_json(c.ego_initial)},
            {"others", others},
            {"limits",
             {{"v_max", L.v_max}, {"v_min", L.v_min}, {"a_max", L.a_max}, {"a_min", L.a_min},
              {"jerk_set", L.jerk_set}, {"lane_change_duration", L.lane_change_duration}}},
            {"weights", {{"safety", W.safety}, {"comfort", W.comfort}, {"passability", W.passability}, {"other", W.other}}},
            {"cost_params",
             {{"d_thresh", P.d_thresh}, {"k_jerk", P.k_jerk}, {"goal_scale", P.goal_scale},
              {"fail_penalty", P.fail_penalty}, {"lane_change_cost", P.lane_change_cost},
              {"collision_cost", P.collision_cost}, {"aggregation", to_string(P.aggregation)}}},
            {"planner", planner},
            {"max_steps", c.max_steps},
            {"collision_samples", c.collision_samples}};
}

/*
 * Parses and validates a scenario. Optional sections fall back to defaults; unknown
 * keys and type mismatches are rejected with the field path.
 */
inline ScenarioConfig scenario_from_json(const Json& j) {
    using detail::Fields;
    const Fields f(j, "", {"name", "road", "ego_initial", "others", "limits", "weights", "cost_params", "planner",
                           "max_steps", "collision_samples"});
    ScenarioConfig c{f.get<std::string>("name"), detail::road_from_json(f.required("road"))};
    c.ego_initial = detail::vehicle_from_json(f.required("ego_initial"), "ego_initial");
    if (f.has("others")) {
        const Json& arr = detail::array_at(f.required("others"), "others");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = detail::index_path("others", i);
            const Fields o(arr[i], p, {"state", "script"});
            ScriptedVehicle v;
            v.state = detail::vehicle_from_json(o.required("state"), p + ".state");
            if (o.has("script")) v.script = detail::script_from_json(o.required("script"), p + ".script");
            c.others.push_back(std::move(v));
        }
    }
    if (f.has("limits")) {
        const Fields l(f.required("limits"), "limits", {"v_max", "v_min", "a_max", "a_min", "jerk_set", "lane_change_duration"});
        l.read("v_max", c.limits.v_max);
        l.read("v_min", c.limits.v_min);
        l.read("a_max", c.limits.a_max);
        l.read("a_min", c.limits.a_min);
        if (l.has("jerk_set")) c.limits.jerk_set = detail::number_list<double>(l.required("jerk_set"), "limits.jerk_set");
        l.read("lane_change_duration", c.limits.lane_change_duration);
    }
    if (f.has("weights")) {
        const Fields w(f.required("weights"), "weights", {"safety", "comfort", "passability", "other"});
        w.read("safety", c.weights.safety);
        w.read("comfort", c.weights.comfort);
        w.read("passability", c.weights.passability);
        w.read("other", c.weights.other);
    }
    if (f.has("cost_params")) {
        const Fields p(f.required("cost_params"), "cost_params",
                       {"d_thresh", "k_jerk", "goal_scale", "fail_penalty", "lane_change_cost", "collision_cost", "aggregation"});
        auto& P = c.cost_params;
        p.read("d_thresh", P.d_thresh);
        p.read("k_jerk", P.k_jerk);
        p.read("goal_scale", P.goal_scale);
        p.read("fail_penalty", P.fail_penalty);
        p.read("lane_change_cost", P.lane_change_cost);
        p.read("collision_cost", P.collision_cost);
        if (p.has("aggregation")) P.aggregation = detail::parse_enum<SafetyAggregation>(p, "aggregation", safety_aggregation_from_string);
    }
    if (f.has("planner")) {
        const Fields q(f.required("planner"), "planner",
                       {"iterations", "lookahead_depth", "t1", "horizon", "ucb_const", "rollout_probs", "rng_seed",
                        "final_selection", "time_budget"});
        auto& Q = c.planner;
        q.read("iterations", Q.iterations);
        q.read("lookahead_depth", Q.lookahead_depth);
        q.read("t1", Q.t1);
        q.read("horizon", Q.horizon);
        q.read("ucb_const", Q.ucb_const);
        if (q.has("rollout_probs")) Q.rollout_probs = detail::number_list<double>(q.required("rollout_probs"), "planner.rollout_probs");
        q.read("rng_seed", Q.rng_seed);
        if (q.has("final_selection")) {
            Q.final_selection = detail::parse_enum<FinalSelection>(q, "final_selection", final_selection_from_string);
        }
        if (q.has("time_budget")) Q.time_budget = q.get<double>("time_budget");
    }
    f.read("max_steps", c.max_steps);
    f.read("collision_samples", c.collision_samples);
    c.validate();
    return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", path.string() + ": " + e.what());
    }
    return scenario_from_json(j);
}

inline void save_scenario(const ScenarioConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scenario file '" + path.string() + "'");
    out << scenario_to_json(c).dump(2) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace mctsdrive
