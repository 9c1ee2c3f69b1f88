#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "mctsdrive/config_io.hpp"
#include "mctsdrive/errors.hpp"
#include "mctsdrive/frenet_map.hpp"
#include "mctsdrive/mcts_planner.hpp"

namespace mctsdrive {

inline constexpr std::string_view trace_schema = "mctsdrive.trace";
inline constexpr int trace_schema_version = 1;

// Run context written into the trace header.
struct TraceMeta {
    std::string scenario;
    std::uint64_t seed = 0;
    double t1 = 1.0;
    RoadMap road;
};

struct LoadedTrace {
    TraceMeta meta;
    Trace trace;
    int version = trace_schema_version;
};

namespace detail {

// World pose for drawing. Stations before the start or past the end of the line are
// extended along the end headings, since traffic may be scripted off the mapped road.
inline Pose2 render_pose(const ReferenceLine& line, double s, double d) {
    const double L = line.length();
    const double sc = std::clamp(s, 0.0, L);
    Pose2 p = line.to_cartesian(sc, d);
    const double over = s - sc;
    p.x += over * std::cos(p.heading);
    p.y += over * std::sin(p.heading);
    return p;
}

inline Json vehicle_record(const VehicleState& v, const ReferenceLine& line) {
    Json j = to_json(v);
    const Pose2 p = render_pose(line, v.s, v.d);
    j["x"] = p.x;
    j["y"] = p.y;
    j["heading"] = p.heading;
    return j;
}

inline Json world_record(const WorldState& w, const ReferenceLine& line) {
    Json others = Json::array();
    for (const auto& o : w.others) others.push_back(vehicle_record(o, line));
    Json j = {{"t", w.t}, {"ego", vehicle_record(w.ego, line)}, {"others", others}};
    j["lane_change"] = w.lane_change ? Json{{"target_lane", w.lane_change->target_lane}, {"fraction", w.lane_change->fraction}}
                                     : Json(nullptr);
    return j;
}

inline VehicleState vehicle_from_record(const Json& j, const std::string& path) {
    Json plain = j;
    if (plain.is_object()) {
        plain.erase("x");
        plain.erase("y");
        plain.erase("heading");
    }
    return vehicle_from_json(plain, path);
}

inline WorldState world_from_record(const Json& j, const std::string& path) {
    const Fields f(j, path, {"t", "ego", "others", "lane_change"});
    WorldState w;
    w.t = f.get<double>("t");
    w.ego = vehicle_from_record(f.required("ego"), f.at("ego"));
    const Json& arr = array_at(f.required("others"), f.at("others"));
    for (std::size_t i = 0; i < arr.size(); ++i) w.others.push_back(vehicle_from_record(arr[i], index_path(f.at("others"), i)));
    if (f.has("lane_change")) {
        const Fields lc(f.required("lane_change"), f.at("lane_change"), {"target_lane", "fraction"});
        w.lane_change = LaneChange{lc.get<int>("target_lane"), lc.get<double>("fraction")};
    }
    return w;
}

inline Json cost_record(const CostBreakdown& c) {
    return {{"safety", c.safety}, {"comfort", c.comfort}, {"passability", c.passability}, {"other", c.other}, {"total", c.total}};
}

inline CostBreakdown cost_from_record(const Json& j, const std::string& path) {
    const Fields f(j, path, {"safety", "comfort", "passability", "other", "total"});
    return {f.get<double>("safety"), f.get<double>("comfort"), f.get<double>("passability"), f.get<double>("other"),
            f.get<double>("total")};
}

inline Json action_record(DriveAction a) { return {{"jerk_index", a.jerk_index}, {"lateral", to_string(a.lateral)}}; }

inline DriveAction action_from_record(const Json& j, const std::string& path) {
    const Fields f(j, path, {"jerk_index", "lateral"});
    return {f.get<int>("jerk_index"), parse_enum<Lateral>(f, "lateral", lateral_from_string)};
}

} // namespace detail

/*
 * NDJSON: one header line, then one line per executed step. Planning time is left out
 * unless `include_timing`, so the same seed always produces the same bytes.
 */
inline void write_trace(std::ostream& os, const Trace& trace, const TraceMeta& meta, bool include_timing = false) {
    const ReferenceLine& line = meta.road.reference_line;
    Json header = {{"type", "header"},
                   {"schema", trace_schema},
                   {"version", trace_schema_version},
                   {"scenario", meta.scenario},
                   {"seed", meta.seed},
                   {"t1", meta.t1},
                   {"outcome", to_string(trace.outcome)},
                   {"steps", trace.records.size()},
                   {"road", detail::to_json(meta.road)},
                   {"initial", detail::world_record(trace.initial, line)}};
    os << header.dump() << '\n';
    for (const auto& r : trace.records) {
        Json stats = Json::array();
        for (const auto& c : r.root_stats) {
            stats.push_back({{"action", detail::action_record(c.action)},
                             {"visits", c.visits},
                             {"mean_cost", c.mean_cost},
                             {"ucb", std::isfinite(c.ucb) ? Json(c.ucb) : Json(nullptr)}});  // null: unvisited
        }
        Json rec = {{"type", "step"},
                    {"step", r.step},
                    {"t", r.t},
                    {"action", detail::action_record(r.action)},
                    {"cost", detail::cost_record(r.cost)},
                    {"iterations_run", r.iterations_run},
                    {"world", detail::world_record(r.world, line)},
                    {"root_stats", stats}};
        if (include_timing) rec["plan_seconds"] = r.plan_seconds;
        os << rec.dump() << '\n';
    }
}

inline void save_trace(const std::filesystem::path& path, const Trace& trace, const TraceMeta& meta,
                       bool include_timing = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write trace '" + path.string() + "'");
    write_trace(out, trace, meta, include_timing);
    out.flush();
    if (!out) throw IoError("write failed for trace '" + path.string() + "'");
}

inline LoadedTrace read_trace(std::istream& is) {
    using detail::Fields;
    std::optional<LoadedTrace> out;
    std::string text;
    int line_no = 0;
    std::size_t expected_steps = 0;
    while (std::getline(is, text)) {
        ++line_no;
        if (text.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        Json j;
        try {
            j = Json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw IoError(where + ": " + e.what());
        }
        try {
            if (!out) {
                const Fields f(j, where, {"type", "schema", "version", "scenario", "seed", "t1", "outcome", "steps", "road",
                                          "initial"});
                if (f.get<std::string>("type") != "header") throw ConfigError(f.at("type"), "first record must be the header");
                if (f.get<std::string>("schema") != trace_schema) throw ConfigError(f.at("schema"), "not a trace file");
                const int version = f.get<int>("version");
                if (version != trace_schema_version) throw ConfigError(f.at("version"), "unsupported version");
                TraceMeta meta{f.get<std::string>("scenario"), f.get<std::uint64_t>("seed"), f.get<double>("t1"),
                               detail::road_from_json(f.required("road"))};
                out.emplace(LoadedTrace{std::move(meta), {}, version});
                out->trace.outcome = detail::parse_enum<Outcome>(f, "outcome", outcome_from_string);
                expected_steps = f.get<std::size_t>("steps");
                out->trace.initial = detail::world_from_record(f.required("initial"), f.at("initial"));
                continue;
            }
            const Fields f(j, where, {"type", "step", "t", "action", "cost", "iterations_run", "world", "root_stats",
                                      "plan_seconds"});
            if (f.get<std::string>("type") != "step") throw ConfigError(f.at("type"), "expected a step record");
            TraceRecord r;
            r.step = f.get<int>("step");
            r.t = f.get<double>("t");
            r.action = detail::action_from_record(f.required("action"), f.at("action"));
            r.cost = detail::cost_from_record(f.required("cost"), f.at("cost"));
            r.iterations_run = f.get<int>("iterations_run");
            r.world = detail::world_from_record(f.required("world"), f.at("world"));
            f.read("plan_seconds", r.plan_seconds);
            const Json& stats = detail::array_at(f.required("root_stats"), f.at("root_stats"));
            for (std::size_t i = 0; i < stats.size(); ++i) {
                const std::string sp = detail::index_path(f.at("root_stats"), i);
                const Fields s(stats[i], sp, {"action", "visits", "mean_cost", "ucb"});
                double ucb = std::numeric_limits<double>::infinity();
                s.read("ucb", ucb);
                r.root_stats.push_back({detail::action_from_record(s.required("action"), s.at("action")),
                                        s.get<std::int64_t>("visits"), s.get<double>("mean_cost"), ucb});
            }
            out->trace.records.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw IoError(std::string("malformed trace: ") + e.what());
        }
    }
    if (!out) throw IoError("trace has no header record");
    if (out->trace.records.size() != expected_steps) {
        throw IoError("trace header promises " + std::to_string(expected_steps) + " steps but " +
                      std::to_string(out->trace.records.size()) + " were read");
    }
    return std::move(*out);
}

inline LoadedTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace '" + path.string() + "'");
    return read_trace(in);
}

} // namespace mctsdrive
