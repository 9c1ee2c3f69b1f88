// Property suites over randomized worlds. Also linked into the acceptance binary.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "test_support.hpp"

using namespace mctsdrive;
using mctsdrive::testing::car;
using mctsdrive::testing::env_for;
using mctsdrive::testing::quarter_circle;
using mctsdrive::testing::straight_road;

namespace {

struct RandomWorld {
    RoadMap road;
    WorldState world;
    Environment env;
};

// Three lanes, ego in the middle, a few constant-speed vehicles kept clear of the ego.
RandomWorld random_world(std::uint64_t seed, int min_others = 1, int max_others = 5) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    RoadMap road = straight_road(3, 400.0, 200.0, 30.0);
    WorldState w;
    w.ego = car(road, 1, 0.0, uni(6.0, 14.0));
    w.ego.accel = uni(-1.0, 1.0);
    const int n = std::uniform_int_distribution<int>(min_others, max_others)(rng);
    while (static_cast<int>(w.others.size()) < n) {
        VehicleState o = car(road, std::uniform_int_distribution<int>(0, 2)(rng), uni(-40.0, 60.0), uni(4.0, 16.0));
        if (pairwise_distance(w.ego, o) > 2.0) w.others.push_back(o);
    }
    Environment env = env_for(road, w.others.size());
    return {road, w, env};
}

// Instrumented copy of the iteration loop: fails if any node revisits a child while a sibling is unvisited.
bool unvisited_first_holds(const MctsPlanner& planner, const WorldState& w, int iterations, std::uint64_t seed) {
    SearchTree tree(w);
    Rng rng(seed);
    for (int i = 0; i < iterations; ++i) {
        planner.run_iteration(tree, rng);
        for (std::size_t id = 0; id < tree.size(); ++id) {
            const auto kids = tree.children(static_cast<NodeId>(id));
            const bool any_unvisited = std::any_of(kids.begin(), kids.end(), [](const TreeNode& c) { return c.visits == 0; });
            const bool any_repeat = std::any_of(kids.begin(), kids.end(), [](const TreeNode& c) { return c.visits > 1; });
            if (any_unvisited && any_repeat) return false;
        }
    }
    return true;
}

} // namespace

TEST(Invariants, UcbUnvisitedFirst) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RandomWorld r = random_world(seed);
        PlannerConfig c;
        c.iterations = 1;
        c.lookahead_depth = 2;
        const MctsPlanner planner(r.env, {}, {}, c);
        EXPECT_TRUE(unvisited_first_holds(planner, r.world, 300, seed)) << "seed " << seed;
    }
}

TEST(Invariants, UcbFormula) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> cost(0.0, 1000.0);
    std::uniform_int_distribution<int> visits(1, 500);
    for (int i = 0; i < 500; ++i) {
        TreeNode child;
        child.visits = visits(rng);
        child.total_cost = cost(rng) * child.visits;
        const std::int64_t parent = child.visits + visits(rng);
        const double scale = 1.0 + cost(rng);
        const double c = 1.4;
        const double n = static_cast<double>(child.visits);
        const double expected = -(child.total_cost / scale) / n + c * std::sqrt(2.0 * std::log(static_cast<double>(parent)) / n);
        ASSERT_NEAR(ucb_value(child, parent, c, scale), expected, 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST(Invariants, UcbArgmaxInvariantUnderCostScaling) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> cost(0.0, 50.0);
    std::uniform_int_distribution<int> visits(1, 40);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TreeNode> kids(6);
        std::int64_t parent = 0;
        for (auto& k : kids) {
            k.visits = visits(rng);
            k.total_cost = cost(rng) * k.visits;
            parent += k.visits;
        }
        const double scale = 50.0;
        for (double lambda : {0.001, 3.0, 1e6}) {
            for (std::size_t i = 0; i < kids.size(); ++i) {
                TreeNode scaled = kids[i];
                scaled.total_cost *= lambda;
                ASSERT_NEAR(ucb_value(scaled, parent, 1.4, scale * lambda), ucb_value(kids[i], parent, 1.4, scale), 1e-9);
            }
        }
    }
}

TEST(Invariants, VisitConservation) {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const RandomWorld r = random_world(seed);
        PlannerConfig c;
        c.iterations = 700;
        c.rng_seed = seed;
        const MctsPlanner planner(r.env, {}, {}, c);
        Rng rng(seed);
        int run = 0;
        const SearchTree tree = planner.search(r.world, rng, &run);
        ASSERT_EQ(tree.root().visits, run);
        ASSERT_EQ(run, 700);
        for (std::size_t id = 0; id < tree.size(); ++id) {
            const TreeNode& n = tree.node(static_cast<NodeId>(id));
            std::int64_t below = 0;
            for (const auto& k : tree.children(static_cast<NodeId>(id))) below += k.visits;
            // An expanded node was rolled out from exactly once: on the iteration that expanded it.
            if (n.expanded) ASSERT_EQ(n.visits, below + 1) << "node " << id;
            else ASSERT_EQ(below, 0);
            if (n.depth > c.lookahead_depth) FAIL() << "node below lookahead depth";
        }
    }
}

TEST(Invariants, BackpropAdditivity) {
    const RandomWorld r = random_world(3);
    PlannerConfig c;
    c.lookahead_depth = 2;
    const MctsPlanner planner(r.env, {}, {}, c);
    SearchTree tree(r.world);
    planner.expand(tree, SearchTree::root_id);
    const NodeId mid = tree.root().first_child + 1;
    planner.expand(tree, mid);
    const NodeId leaf = tree.node(mid).first_child;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> cost(0.0, 100.0);
    double sum = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double x = cost(rng);
        sum += x;
        planner.backpropagate(tree, leaf, x);
    }
    for (NodeId id : {leaf, mid, SearchTree::root_id}) {
        EXPECT_EQ(tree.node(id).visits, 50);
        EXPECT_NEAR(tree.node(id).total_cost, sum, 1e-9);
    }
    EXPECT_EQ(tree.node(tree.root().first_child).visits, 0);
    EXPECT_EQ(tree.node(leaf + 1).visits, 0);
}

TEST(Invariants, SafetyShape) {
    const CostParams p;
    double prev = p.collision_cost;
    for (double gap = 0.01; gap <= p.d_thresh; gap += 0.01) {
        const double s = safety_from_gap(gap, p);
        ASSERT_NEAR(s, 1.0 / gap, 1e-12);
        ASSERT_LE(s, prev);
        prev = s;
    }
    EXPECT_DOUBLE_EQ(safety_from_gap(p.d_thresh, p), 1.0 / p.d_thresh);
    EXPECT_DOUBLE_EQ(safety_from_gap(std::nextafter(p.d_thresh, 1e9), p), 0.0);
    for (double gap : {10.5, 50.0, 1e9}) EXPECT_EQ(safety_from_gap(gap, p), 0.0);
    for (double gap : {0.0, -1.0}) EXPECT_EQ(safety_from_gap(gap, p), p.collision_cost);
}

TEST(Invariants, ComfortEvenAndZeroAtZero) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> j(-10.0, 10.0);
    const CostParams p;
    EXPECT_EQ(comfort_cost(0.0, p), 0.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = j(rng);
        ASSERT_EQ(comfort_cost(x, p), comfort_cost(-x, p));
        ASSERT_GT(comfort_cost(x, p), 0.0);
    }
}

TEST(Invariants, WeightedSumExactAndScaleInvariant) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        const CostWeights w{u(rng), u(rng), u(rng), u(rng)};
        std::vector<CostBreakdown> options(8);
        for (auto& c : options) {
            c = {u(rng), u(rng), u(rng), u(rng), 0.0};
            ASSERT_EQ(weighted_total(c, w), w.safety * c.safety + w.comfort * c.comfort + w.passability * c.passability +
                                                w.other * c.other);
        }
        auto argmin = [&](const CostWeights& wt) {
            return std::min_element(options.begin(), options.end(), [&](const auto& a, const auto& b) {
                       return weighted_total(a, wt) < weighted_total(b, wt);
                   }) -
                   options.begin();
        };
        for (double lambda : {0.5, 2.0, 1000.0}) {
            const CostWeights scaled{w.safety * lambda, w.comfort * lambda, w.passability * lambda, w.other * lambda};
            ASSERT_EQ(argmin(scaled), argmin(w));
        }
    }
}

TEST(Invariants, FrenetRoundTrip) {
    const ReferenceLine curve = quarter_circle(50.0, 60);
    const ReferenceLine kinked({{0, 0}, {20, 0}, {40, 8}, {60, 4}, {80, 12}});
    std::mt19937_64 rng(9);
    for (const ReferenceLine* line : {&curve, &kinked}) {
        std::uniform_real_distribution<double> s(0.0, line->length());
        std::uniform_real_distribution<double> d(-5.0, 5.0);
        for (int i = 0; i < 1000; ++i) {
            const double s0 = s(rng), d0 = d(rng);
            const Pose2 p = line->to_cartesian(s0, d0);
            const FrenetPoint f = line->to_frenet(p.x, p.y);
            const Pose2 q = line->to_cartesian(f.s, f.d);
            ASSERT_LT(std::hypot(p.x - q.x, p.y - q.y), 1e-6);
            ASSERT_NEAR(f.s, s0, 1e-6);
            ASSERT_NEAR(f.d, d0, 1e-6);
        }
    }
}

TEST(Invariants, StepEgoStaysWithinLimits) {
    std::mt19937_64 rng(6);
    const KinematicLimits lim;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RandomWorld r = random_world(seed, 0, 0);
        WorldState w = r.world;
        for (int k = 0; k < 30; ++k) {
            const auto acts = feasible_actions(w, lim, r.road);
            const DriveAction a = acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)];
            const WorldState n = step_ego(w, a, lim, r.road, 1.0);
            ASSERT_GE(n.ego.speed, lim.v_min);
            ASSERT_LE(n.ego.speed, lim.v_max);
            ASSERT_GE(n.ego.accel, lim.a_min);
            ASSERT_LE(n.ego.accel, lim.a_max);
            ASSERT_GE(n.ego.s, w.ego.s);
            ASSERT_TRUE(r.road.has_lane(n.ego.lane));
            w = n;
        }
    }
}

TEST(Invariants, DeterministicPlansAndTraces) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const RandomWorld r = random_world(seed);
        PlannerConfig c;
        c.iterations = 400;
        c.rng_seed = seed;
        const MctsPlanner planner(r.env, {}, {}, c);
        EXPECT_EQ(planner.plan(r.world), planner.plan(r.world));
    }
    const ScenarioConfig he = make_he(11, {300});
    EXPECT_EQ(run_one(he, 11).trace, run_one(he, 11).trace);
}

TEST(Invariants, TrajectoryCostSegmentAdditive) {
    std::mt19937_64 rng(12);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const RandomWorld r = random_world(seed, 0, 3);
        const CostParams p;
        const CostWeights w;
        std::vector<TrajectoryStep> steps;
        WorldState cur = r.world;
        for (int k = 0; k < 8; ++k) {
            const auto acts = feasible_actions(cur, r.env.limits, r.road);
            const DriveAction a = acts[std::uniform_int_distribution<std::size_t>(0, acts.size() - 1)(rng)];
            Transition tr = step_world(cur, a, r.env, 1.0);
            if (tr.collided) break;  // accumulation stops at a collision; keep only clean prefixes
            cur = std::move(tr.world);
            steps.push_back({cur, a});
        }
        if (steps.size() < 2) continue;
        const std::span<const TrajectoryStep> all(steps);
        const std::size_t cut = 1 + seed % (steps.size() - 1);
        const CostBreakdown whole = accumulate_trajectory_cost(all, r.env.limits, r.road.goal, w, p);
        const CostBreakdown head = accumulate_trajectory_cost(all.first(cut), r.env.limits, r.road.goal, w, p, false);
        const CostBreakdown tail = accumulate_trajectory_cost(all.subspan(cut), r.env.limits, r.road.goal, w, p);
        ASSERT_NEAR(whole.safety, head.safety + tail.safety, 1e-9);
        ASSERT_NEAR(whole.comfort, head.comfort + tail.comfort, 1e-9);
        ASSERT_NEAR(whole.passability, head.passability + tail.passability, 1e-9);
        ASSERT_NEAR(whole.other, head.other + tail.other, 1e-9);
        ASSERT_NEAR(whole.total, head.total + tail.total, 1e-9);
    }
}
