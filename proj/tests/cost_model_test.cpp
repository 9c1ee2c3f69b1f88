#include <gtest/gtest.h>

#include <vector>

#include "test_support.hpp"

using namespace mctsdrive;
using mctsdrive::testing::car;
using mctsdrive::testing::straight_road;

TEST(Safety, FrozenValues) {
    const CostParams p;
    EXPECT_DOUBLE_EQ(safety_from_gap(2.0, p), 0.5);
    EXPECT_DOUBLE_EQ(safety_from_gap(10.0, p), 0.1);
    EXPECT_DOUBLE_EQ(safety_from_gap(10.0 + 1e-9, p), 0.0);
    EXPECT_DOUBLE_EQ(safety_from_gap(0.0, p), p.collision_cost);
    EXPECT_DOUBLE_EQ(safety_from_gap(1e-9, p), p.collision_cost);
}

TEST(Safety, Aggregation) {
    const RoadMap road = straight_road();
    WorldState w;
    w.ego = car(road, 1, 0.0, 10.0);
    // Bumper gaps of 2 m ahead and 4 m behind.
    w.others = {car(road, 1, 6.5, 10.0), car(road, 1, -8.5, 10.0), car(road, 1, 60.0, 10.0)};
    CostParams p;
    EXPECT_DOUBLE_EQ(safety_cost(w, p), 0.5);
    p.aggregation = SafetyAggregation::sum_over_neighbors;
    EXPECT_DOUBLE_EQ(safety_cost(w, p), 0.75);
}

TEST(Comfort, Values) {
    CostParams p;
    EXPECT_DOUBLE_EQ(comfort_cost(0.0, p), 0.0);
    EXPECT_DOUBLE_EQ(comfort_cost(2.0, p), 4.0);
    p.k_jerk = 0.5;
    EXPECT_DOUBLE_EQ(comfort_cost(-2.0, p), 2.0);
}

TEST(Passability, ProgressAndPenalty) {
    const RoadMap road = straight_road(3, 300.0, 200.0);
    const CostParams p;
    WorldState w;
    w.ego = car(road, 1, 150.0, 10.0);
    EXPECT_DOUBLE_EQ(passability_cost(w, road.goal, p, false), 5.0);
    EXPECT_DOUBLE_EQ(passability_cost(w, road.goal, p, true), 505.0);
    w.ego.s = 210.0;
    EXPECT_DOUBLE_EQ(passability_cost(w, road.goal, p, true), 0.0);
}

TEST(StepCost, Breakdown) {
    const RoadMap road = straight_road(3, 300.0, 200.0);
    const CostParams p;
    const CostWeights wts;
    WorldState w;
    w.ego = car(road, 1, 150.0, 10.0);
    w.others = {car(road, 1, 156.5, 10.0)};
    // jerk index 4 is +2: comfort 4; progress 5; lane change 2; gap 2 -> safety 0.5.
    const CostBreakdown c = step_cost(w, {4, Lateral::left_change}, KinematicLimits{}, road.goal, wts, p);
    EXPECT_DOUBLE_EQ(c.safety, 0.5);
    EXPECT_DOUBLE_EQ(c.comfort, 4.0);
    EXPECT_DOUBLE_EQ(c.passability, 5.0);
    EXPECT_DOUBLE_EQ(c.other, 2.0);
    EXPECT_DOUBLE_EQ(c.total, 7.9);

    w.others = {car(road, 1, 152.0, 10.0)};
    EXPECT_DOUBLE_EQ(step_cost(w, {2, Lateral::keep}, KinematicLimits{}, road.goal, wts, p).safety, p.collision_cost);
}

TEST(Trajectory, CollisionEndsAccumulation) {
    const RoadMap road = straight_road(3, 300.0, 200.0);
    const CostParams p;
    const CostWeights wts;
    const KinematicLimits lim;
    WorldState clear, hit;
    clear.ego = car(road, 1, 150.0, 10.0);
    hit = clear;
    hit.others = {car(road, 1, 151.0, 10.0)};
    const std::vector<TrajectoryStep> steps{{clear, {2, Lateral::keep}}, {hit, {2, Lateral::keep}}, {clear, {4, Lateral::keep}}};
    const CostBreakdown c = accumulate_trajectory_cost(steps, lim, road.goal, wts, p);
    EXPECT_DOUBLE_EQ(c.safety, p.collision_cost);
    EXPECT_DOUBLE_EQ(c.comfort, 0.0);
    EXPECT_DOUBLE_EQ(c.passability, 10.0);  // no terminal penalty after a collision
    EXPECT_DOUBLE_EQ(c.total, weighted_total(c, wts));
}

TEST(Trajectory, TerminalPenaltyOnlyOnLastState) {
    const RoadMap road = straight_road(3, 300.0, 200.0);
    const CostParams p;
    const CostWeights wts;
    WorldState a, b;
    a.ego = car(road, 1, 150.0, 10.0);
    b.ego = car(road, 1, 201.0, 10.0);
    const std::vector<TrajectoryStep> reach{{a, {2, Lateral::keep}}, {b, {2, Lateral::keep}}};
    EXPECT_DOUBLE_EQ(accumulate_trajectory_cost(reach, KinematicLimits{}, road.goal, wts, p).passability, 5.0);
    const std::vector<TrajectoryStep> miss{{b, {2, Lateral::keep}}, {a, {2, Lateral::keep}}};
    EXPECT_DOUBLE_EQ(accumulate_trajectory_cost(miss, KinematicLimits{}, road.goal, wts, p).passability, 505.0);
    EXPECT_DOUBLE_EQ(accumulate_trajectory_cost(miss, KinematicLimits{}, road.goal, wts, p, false).passability, 5.0);
    EXPECT_DOUBLE_EQ(accumulate_trajectory_cost({}, KinematicLimits{}, road.goal, wts, p).total, 0.0);
}

TEST(CostConfig, Validation) {
    CostWeights w;
    w.comfort = -1.0;
    EXPECT_THROW(w.validate(), ConfigError);
    w = CostWeights{0.0, 0.0, 0.0, 0.0};
    EXPECT_THROW(w.validate(), ConfigError);
    CostParams p;
    EXPECT_NO_THROW(p.validate());
    p.collision_cost = 1e5;
    try {
        p.validate();
        FAIL() << "small collision cost accepted";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "cost_params.collision_cost");
    }
    p = CostParams{};
    p.d_thresh = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}
