#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "mctsdrive.hpp"

namespace mctsdrive::testing {

inline RoadMap straight_road(int lanes = 3, double length = 300.0, double s_goal = 200.0, double deadline = 30.0) {
    return RoadMap::make(ReferenceLine::straight(length), lanes, 3.5, {GoalKind::progress_line, s_goal, std::nullopt, deadline});
}

inline VehicleState car(const RoadMap& road, int lane, double s, double speed) {
    VehicleState v;
    v.lane = lane;
    v.d = road.lane_center(lane);
    v.s = s;
    v.speed = speed;
    return v;
}

// Constant-speed scripts for every other vehicle.
inline Environment env_for(const RoadMap& road, std::size_t others) {
    return Environment{road, KinematicLimits{}, std::vector<VehicleScript>(others), 5};
}

inline ReferenceLine quarter_circle(double radius, int segments) {
    std::vector<Point2> pts;
    for (int k = 0; k <= segments; ++k) {
        const double a = (std::numbers::pi / 2.0) * k / segments;
        pts.push_back({radius * std::sin(a), radius * (1.0 - std::cos(a))});
    }
    return ReferenceLine(std::move(pts));
}

} // namespace mctsdrive::testing
