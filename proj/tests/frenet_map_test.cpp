#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace mctsdrive;
using mctsdrive::testing::quarter_circle;

TEST(ReferenceLine, StraightLineIsIdentity) {
    const auto line = ReferenceLine::straight(100.0);
    const Pose2 p = line.to_cartesian(10.0, 2.0);
    EXPECT_DOUBLE_EQ(p.x, 10.0);
    EXPECT_DOUBLE_EQ(p.y, 2.0);
    EXPECT_DOUBLE_EQ(p.heading, 0.0);
    const FrenetPoint f = line.to_frenet(37.5, -1.25);
    EXPECT_NEAR(f.s, 37.5, 1e-12);
    EXPECT_NEAR(f.d, -1.25, 1e-12);
}

TEST(ReferenceLine, QuarterCircleEnd) {
    // Dense polyline of a radius-50 quarter circle. End headings follow the end chords, which
    // lean half a step (delta / 2) away from the circle tangent.
    const int n = 2000;
    const auto line = quarter_circle(50.0, n);
    const double half = 0.25 * std::numbers::pi / n;
    EXPECT_NEAR(line.length(), 25.0 * std::numbers::pi, 1e-3);
    const Pose2 end = line.to_cartesian(line.length(), 2.0);
    EXPECT_NEAR(end.x, 50.0 - 2.0 * std::cos(half), 1e-9);
    EXPECT_NEAR(end.y, 50.0 + 2.0 * std::sin(half), 1e-9);
    EXPECT_NEAR(end.heading, std::numbers::pi / 2.0 - half, 1e-12);
    EXPECT_NEAR(std::hypot(end.x - 48.0, end.y - 50.0), 0.0, 1e-3);
    const Pose2 start = line.to_cartesian(0.0, 2.0);
    EXPECT_NEAR(start.x, -2.0 * std::sin(half), 1e-12);
    EXPECT_NEAR(start.y, 2.0 * std::cos(half), 1e-12);
    // Mid-arc, away from the end chords, the offset point lies on the radius-48 circle.
    const Pose2 mid = line.to_cartesian(0.5 * line.length(), 2.0);
    EXPECT_NEAR(std::hypot(mid.x, mid.y - 50.0), 48.0, 1e-6);
}

TEST(ReferenceLine, ContinuousAcrossVertex) {
    const ReferenceLine line({{0, 0}, {10, 0}, {20, 5}});
    const double sv = line.arc_length_table()[1];
    for (double d : {-3.0, 0.0, 3.0}) {
        const Pose2 a = line.to_cartesian(sv - 1e-9, d);
        const Pose2 b = line.to_cartesian(sv + 1e-9, d);
        EXPECT_NEAR(a.x, b.x, 1e-6);
        EXPECT_NEAR(a.y, b.y, 1e-6);
    }
}

TEST(ReferenceLine, OutOfBounds) {
    const auto line = ReferenceLine::straight(100.0);
    EXPECT_THROW(line.to_cartesian(-0.5, 0.0), OutOfBoundsError);
    EXPECT_THROW(line.to_cartesian(100.5, 0.0), OutOfBoundsError);
    EXPECT_NO_THROW(line.to_cartesian(100.0, 0.0));
    EXPECT_THROW(line.to_frenet(-10.0, 0.0), OutOfBoundsError);
    EXPECT_THROW(line.to_frenet(130.0, 1.0), OutOfBoundsError);
}

TEST(ReferenceLine, AmbiguousProjection) {
    // The center of a regular polygonal arc is equidistant from every chord.
    std::vector<Point2> pts;
    for (int k = 0; k <= 12; ++k) {
        const double a = std::numbers::pi * k / 12.0;
        pts.push_back({10.0 * std::cos(a), 10.0 * std::sin(a)});
    }
    const ReferenceLine arc(std::move(pts));
    EXPECT_THROW(arc.to_frenet(0.0, 0.0), AmbiguityError);
    EXPECT_NO_THROW(arc.to_frenet(0.0, 9.0));
}

TEST(ReferenceLine, RejectsBadPolylines) {
    EXPECT_THROW(ReferenceLine({{0, 0}}), ConfigError);
    EXPECT_THROW(ReferenceLine({{0, 0}, {1, 0}, {1, 0}}), ConfigError);
    EXPECT_THROW(ReferenceLine({{0, 0}, {10, 0}, {0, 1}}), ConfigError);
}

TEST(ReferenceLine, FreeFunctionsMatchMembers) {
    const auto line = quarter_circle(30.0, 40);
    const Pose2 a = frenet_to_cartesian(12.0, 1.0, line);
    const Pose2 b = line.to_cartesian(12.0, 1.0);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    const FrenetPoint f = cartesian_to_frenet(a.x, a.y, line);
    EXPECT_NEAR(f.s, 12.0, 1e-9);
    EXPECT_NEAR(f.d, 1.0, 1e-9);
}

TEST(RoadMap, LanesAndGoal) {
    const RoadMap road = mctsdrive::testing::straight_road();
    EXPECT_EQ(road.lane_d_centers, (std::vector<double>{0.0, 3.5, 7.0}));
    EXPECT_EQ(road.nearest_lane(3.0), 1);
    EXPECT_EQ(road.nearest_lane(-9.0), 0);
    EXPECT_EQ(road.nearest_lane(40.0), 2);
    EXPECT_DOUBLE_EQ(distance_to_goal(150.0, road.goal), 50.0);
    EXPECT_DOUBLE_EQ(distance_to_goal(250.0, road.goal), 0.0);
}

TEST(RoadMap, ValidationNamesField) {
    const auto line = ReferenceLine::straight(100.0);
    auto field_of = [](auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            return e.path();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(field_of([&] { RoadMap::make(line, 0, 3.5, {}); }), "road.lane_count");
    EXPECT_EQ(field_of([&] { RoadMap::make(line, 2, 0.0, {}); }), "road.lane_width");
    EXPECT_EQ(field_of([&] { RoadMap::make(line, 2, 3.5, {GoalKind::ramp_exit, 150.0, 0, 10.0}); }), "road.goal.s_goal");
    EXPECT_EQ(field_of([&] { RoadMap::make(line, 2, 3.5, {GoalKind::ramp_exit, 50.0, 2, 10.0}); }),
              "road.goal.required_lane");
    EXPECT_EQ(field_of([&] { RoadMap::make(line, 2, 3.5, {GoalKind::ramp_exit, 50.0, 0, 0.0}); }), "road.goal.deadline");
    RoadMap m = RoadMap::make(line, 2, 3.5, {GoalKind::progress_line, 50.0, std::nullopt, 10.0});
    m.lane_d_centers[1] = 4.0;
    EXPECT_EQ(field_of([&] { m.validate(); }), "road.lane_d_centers[1]");
}
