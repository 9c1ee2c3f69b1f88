#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mctsdrive/errors.hpp"

namespace mctsdrive {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
};

struct FrenetPoint {
    double s = 0.0;
    double d = 0.0;
};

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;

    friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

/**
 * Piecewise-linear road centerline.
 *
 * Lateral offsets are swept along mitred vertex normals, linearly blended over each
 * segment. The blended normal always has unit component along the segment normal, so d
 * is the exact perpendicular distance to the segment, and the map (s, d) -> (x, y) is
 * continuous across vertices and has a closed-form inverse per segment.
 */
class ReferenceLine {
public:
    explicit ReferenceLine(std::vector<Point2> points) {
        if (points.size() < 2) {
            throw ConfigError("reference_line", "needs at least 2 waypoints");
        }
        const std::size_t n = points.size();
        arc_length_.assign(n, 0.0);
        seg_dir_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double dx = points[i + 1].x - points[i].x;
            const double dy = points[i + 1].y - points[i].y;
            const double len = std::hypot(dx, dy);
            if (!(len > 0.0)) {
                throw ConfigError("reference_line", "duplicate consecutive waypoints at index " + std::to_string(i + 1));
            }
            arc_length_[i + 1] = arc_length_[i] + len;
            seg_dir_[i] = {dx / len, dy / len};
        }
        waypoints_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Point2 t;
            if (i == 0) {
                t = seg_dir_.front();
            } else if (i + 1 == n) {
                t = seg_dir_.back();
            } else {
                const Point2 a = seg_dir_[i - 1];
                const Point2 b = seg_dir_[i];
                if (a.x * b.x + a.y * b.y <= 0.0) {
                    throw ConfigError("reference_line", "heading jump of pi/2 or more at waypoint " + std::to_string(i));
                }
                const double tx = a.x + b.x;
                const double ty = a.y + b.y;
                const double tl = std::hypot(tx, ty);
                t = {tx / tl, ty / tl};
            }
            waypoints_[i] = {points[i].x, points[i].y, std::atan2(t.y, t.x)};
        }
        // Unwrap so interpolated headings never jump by 2*pi.
        for (std::size_t i = 1; i < n; ++i) {
            double h = waypoints_[i].heading;
            const double prev = waypoints_[i - 1].heading;
            while (h - prev > std::numbers::pi) h -= 2.0 * std::numbers::pi;
            while (h - prev < -std::numbers::pi) h += 2.0 * std::numbers::pi;
            waypoints_[i].heading = h;
        }
    }

    static ReferenceLine straight(double length, double spacing = 10.0) {
        const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(length / spacing)));
        std::vector<Point2> pts;
        pts.reserve(count + 1);
        for (std::size_t i = 0; i <= count; ++i) {
            pts.push_back({length * static_cast<double>(i) / static_cast<double>(count), 0.0});
        }
        return ReferenceLine(std::move(pts));
    }

    double length() const noexcept { return arc_length_.back(); }
    std::span<const Waypoint> waypoints() const noexcept { return waypoints_; }
    std::span<const double> arc_length_table() const noexcept { return arc_length_; }

    friend bool operator==(const ReferenceLine& a, const ReferenceLine& b) {
        return a.waypoints_ == b.waypoints_ && a.arc_length_ == b.arc_length_;
    }

    std::vector<Point2> points() const {
        std::vector<Point2> out;
        out.reserve(waypoints_.size());
        for (const auto& w : waypoints_) out.push_back({w.x, w.y});
        return out;
    }

    Pose2 to_cartesian(double s, double d) const {
        constexpr double end_slack = 1e-6;
        if (!(s >= -end_slack && s <= length() + end_slack)) {
            throw OutOfBoundsError("arc length " + std::to_string(s) + " outside [0, " + std::to_string(length()) + "]");
        }
        s = std::clamp(s, 0.0, length());
        const std::size_t i = segment_at(s);
        const double u = (s - arc_length_[i]) / (arc_length_[i + 1] - arc_length_[i]);
        const Segment g = segment(i);
        const double h = waypoints_[i].heading + u * (waypoints_[i + 1].heading - waypoints_[i].heading);
        return {g.a.x + u * g.e.x + d * (g.m0.x + u * g.dm.x),
                g.a.y + u * g.e.y + d * (g.m0.y + u * g.dm.y), h};
    }

    FrenetPoint to_frenet(double x, double y) const {
        constexpr double u_slack = 1e-9;
        constexpr double tie_tol = 1e-9;
        std::vector<FrenetPoint> candidates;
        for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
            const Segment g = segment(i);
            const Point2 r{x - g.a.x, y - g.a.y};
            // cross(r - u e, m0 + u dm) = 0, quadratic in u.
            const double qa = -cross(g.e, g.dm);
            const double qb = cross(r, g.dm) - cross(g.e, g.m0);
            const double qc = cross(r, g.m0);
            double roots[2];
            int nroots = 0;
            if (std::abs(qa) <= 1e-14 * std::abs(qb)) {
                if (qb != 0.0) roots[nroots++] = -qc / qb;
            } else {
                const double disc = qb * qb - 4.0 * qa * qc;
                if (disc >= 0.0) {
                    const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
                    if (q != 0.0) roots[nroots++] = qc / q;
                    roots[nroots++] = q / qa;
                }
            }
            const double len = arc_length_[i + 1] - arc_length_[i];
            for (int k = 0; k < nroots; ++k) {
                if (!(roots[k] >= -u_slack && roots[k] <= 1.0 + u_slack)) continue;
                const double u = std::clamp(roots[k], 0.0, 1.0);
                const double d = (r.x - u * g.e.x) * g.n.x + (r.y - u * g.e.y) * g.n.y;
                candidates.push_back({arc_length_[i] + u * len, d});
            }
        }
        if (candidates.empty()) {
            throw OutOfBoundsError("point (" + std::to_string(x) + ", " + std::to_string(y) +
                                   ") has no projection onto the reference line");
        }
        const auto best = std::min_element(candidates.begin(), candidates.end(),
                                           [](const auto& a, const auto& b) { return std::abs(a.d) < std::abs(b.d); });
        for (const auto& c : candidates) {
            if (std::abs(std::abs(c.d) - std::abs(best->d)) <= tie_tol && std::abs(c.s - best->s) > 1e-6) {
                throw AmbiguityError("point (" + std::to_string(x) + ", " + std::to_string(y) +
                                     ") projects onto stations " + std::to_string(best->s) + " and " +
                                     std::to_string(c.s));
            }
        }
        return {best->s, best->d};
    }

private:
    struct Segment {
        Point2 a;
        Point2 e;   // a -> b
        Point2 n;   // unit left normal
        Point2 m0;  // mitred offset direction at a, with dot(m0, n) == 1
        Point2 dm;  // m1 - m0
    };

    static double cross(Point2 p, Point2 q) { return p.x * q.y - p.y * q.x; }

    std::size_t segment_at(double s) const {
        const auto it = std::upper_bound(arc_length_.begin(), arc_length_.end(), s);
        const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - arc_length_.begin()));
        return std::min(idx, arc_length_.size() - 1) - 1;
    }

    Segment segment(std::size_t i) const {
        const Waypoint& a = waypoints_[i];
        const Waypoint& b = waypoints_[i + 1];
        const Point2 dir = seg_dir_[i];
        const Point2 n{-dir.y, dir.x};
        auto mitre = [&](double heading) {
            const Point2 vn{-std::sin(heading), std::cos(heading)};
            const double c = vn.x * n.x + vn.y * n.y;
            return Point2{vn.x / c, vn.y / c};
        };
        const Point2 m0 = mitre(a.heading);
        const Point2 m1 = mitre(b.heading);
        return {{a.x, a.y}, {b.x - a.x, b.y - a.y}, n, m0, {m1.x - m0.x, m1.y - m0.y}};
    }

    std::vector<Waypoint> waypoints_;
    std::vector<double> arc_length_;
    std::vector<Point2> seg_dir_;
};

inline Pose2 frenet_to_cartesian(double s, double d, const ReferenceLine& line) {
    return line.to_cartesian(s, d);
}

inline FrenetPoint cartesian_to_frenet(double x, double y, const ReferenceLine& line) {
    return line.to_frenet(x, y);
}

enum class GoalKind { intersection_crossing, ramp_exit, progress_line };

inline std::string_view to_string(GoalKind k) {
    switch (k) {
    case GoalKind::intersection_crossing: return "intersection_crossing";
    case GoalKind::ramp_exit: return "ramp_exit";
    case GoalKind::progress_line: return "progress_line";
    }
    return "?";
}

inline std::optional<GoalKind> goal_kind_from_string(std::string_view s) {
    if (s == "intersection_crossing") return GoalKind::intersection_crossing;
    if (s == "ramp_exit") return GoalKind::ramp_exit;
    if (s == "progress_line") return GoalKind::progress_line;
    return std::nullopt;
}

struct GoalRegion {
    GoalKind kind = GoalKind::progress_line;
    double s_goal = 0.0;
    std::optional<int> required_lane;
    double deadline = 1.0;  // seconds

    friend bool operator==(const GoalRegion&, const GoalRegion&) = default;
};

inline double distance_to_goal(double s_ego, const GoalRegion& goal) {
    return std::max(0.0, goal.s_goal - s_ego);
}

struct RoadMap {
    ReferenceLine reference_line;
    int lane_count = 1;
    double lane_width = 3.5;
    std::vector<double> lane_d_centers;  // index 0 is the rightmost lane
    GoalRegion goal;

    friend bool operator==(const RoadMap&, const RoadMap&) = default;

    // Lanes spaced by lane_width starting from `rightmost_d`.
    static RoadMap make(ReferenceLine line, int lanes, double width, GoalRegion goal, double rightmost_d = 0.0) {
        std::vector<double> centers;
        for (int i = 0; i < lanes; ++i) centers.push_back(rightmost_d + width * i);
        RoadMap m{std::move(line), lanes, width, std::move(centers), goal};
        m.validate();
        return m;
    }

    double lane_center(int lane) const { return lane_d_centers.at(static_cast<std::size_t>(lane)); }
    bool has_lane(int lane) const { return lane >= 0 && lane < lane_count; }

    // Lane whose center is nearest to d, clamped to the road.
    int nearest_lane(double d) const {
        const double rel = (d - lane_d_centers.front()) / lane_width;
        return std::clamp(static_cast<int>(std::lround(rel)), 0, lane_count - 1);
    }

    void validate() const {
        if (lane_count < 1) throw ConfigError("road.lane_count", "must be >= 1");
        if (!(lane_width > 0.0)) throw ConfigError("road.lane_width", "must be > 0");
        if (lane_d_centers.size() != static_cast<std::size_t>(lane_count)) {
            throw ConfigError("road.lane_d_centers", "must have exactly lane_count entries");
        }
        for (std::size_t i = 1; i < lane_d_centers.size(); ++i) {
            if (std::abs(lane_d_centers[i] - lane_d_centers[i - 1] - lane_width) > 1e-9) {
                throw ConfigError("road.lane_d_centers[" + std::to_string(i) + "]",
                                  "lane centers must be spaced by lane_width");
            }
        }
        if (!(goal.s_goal >= 0.0 && goal.s_goal <= reference_line.length())) {
            throw ConfigError("road.goal.s_goal", "must lie within the reference line");
        }
        if (!(goal.deadline > 0.0)) throw ConfigError("road.goal.deadline", "must be > 0");
        if (goal.required_lane && !has_lane(*goal.required_lane)) {
            throw ConfigError("road.goal.required_lane", "lane does not exist");
        }
    }
};

} // namespace mctsdrive
