#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "mctsdrive/errors.hpp"
#include "mctsdrive/frenet_map.hpp"
#include "mctsdrive/traffic_world.hpp"

namespace mctsdrive {

struct CostWeights {
    double safety = 1.0;
    double comfort = 0.1;
    double passability = 1.0;
    double other = 1.0;

    friend bool operator==(const CostWeights&, const CostWeights&) = default;

    void validate() const {
        if (safety < 0.0 || comfort < 0.0 || passability < 0.0 || other < 0.0) {
            throw ConfigError("weights", "all weights must be >= 0");
        }
        if (safety + comfort + passability + other <= 0.0) {
            throw ConfigError("weights", "at least one weight must be > 0");
        }
    }
};

// How the safety term combines several neighbours.
enum class SafetyAggregation { min_gap, sum_over_neighbors };

inline std::string_view to_string(SafetyAggregation a) {
    return a == SafetyAggregation::min_gap ? "min_gap" : "sum_over_neighbors";
}

inline std::optional<SafetyAggregation> safety_aggregation_from_string(std::string_view s) {
    if (s == "min_gap") return SafetyAggregation::min_gap;
    if (s == "sum_over_neighbors") return SafetyAggregation::sum_over_neighbors;
    return std::nullopt;
}

struct CostParams {
    double d_thresh = 10.0;
    double k_jerk = 1.0;
    double goal_scale = 0.1;
    double fail_penalty = 500.0;
    double lane_change_cost = 2.0;
    double collision_cost = 1e6;  // stands in for the unbounded cost of contact
    SafetyAggregation aggregation = SafetyAggregation::min_gap;

    friend bool operator==(const CostParams&, const CostParams&) = default;

    void validate() const {
        if (!(d_thresh > 0.0)) throw ConfigError("cost_params.d_thresh", "must be > 0");
        if (k_jerk < 0.0) throw ConfigError("cost_params.k_jerk", "must be >= 0");
        if (goal_scale < 0.0) throw ConfigError("cost_params.goal_scale", "must be >= 0");
        if (fail_penalty < 0.0) throw ConfigError("cost_params.fail_penalty", "must be >= 0");
        if (lane_change_cost < 0.0) throw ConfigError("cost_params.lane_change_cost", "must be >= 0");
        if (!(collision_cost >= 1e3 * std::max({fail_penalty, lane_change_cost, 1.0}))) {
            throw ConfigError("cost_params.collision_cost", "must be >= 1000x the fail and lane-change penalties");
        }
    }
};

struct CostBreakdown {
    double safety = 0.0;
    double comfort = 0.0;
    double passability = 0.0;
    double other = 0.0;
    double total = 0.0;

    friend bool operator==(const CostBreakdown&, const CostBreakdown&) = default;
};

// Weighted sum in a fixed left-to-right order.
inline double weighted_total(const CostBreakdown& c, const CostWeights& w) {
    return w.safety * c.safety + w.comfort * c.comfort + w.passability * c.passability + w.other * c.other;
}

// Piecewise proximity penalty: 0 beyond d_thresh, 1/gap inside it, collision_cost at contact.
inline double safety_from_gap(double gap, const CostParams& p) {
    if (gap > p.d_thresh) return 0.0;
    if (gap <= 0.0) return p.collision_cost;
    return std::min(1.0 / gap, p.collision_cost);
}

inline double safety_cost(const WorldState& w, const CostParams& p) {
    if (p.aggregation == SafetyAggregation::min_gap) return safety_from_gap(min_gap(w), p);
    double sum = 0.0;
    for (const auto& o : w.others) sum += safety_from_gap(pairwise_distance(w.ego, o), p);
    return std::min(sum, p.collision_cost);
}

inline double comfort_cost(double jerk, const CostParams& p) { return p.k_jerk * jerk * jerk; }

// Progress term g(d_goal) = goal_scale * d_goal, plus the pass/fail penalty when `terminal`.
inline double passability_cost(const WorldState& w, const GoalRegion& goal, const CostParams& p, bool terminal) {
    const double progress = p.goal_scale * distance_to_goal(w.ego.s, goal);
    const double fail = terminal && !goal_reached(w, goal) ? p.fail_penalty : 0.0;
    return progress + fail;
}

inline double other_cost(DriveAction a, const CostParams& p) {
    return a.lateral == Lateral::keep ? 0.0 : p.lane_change_cost;
}

// Cost of arriving in `w` by taking `a`. A colliding world scores collision_cost as safety.
inline CostBreakdown step_cost(const WorldState& w, DriveAction a, const KinematicLimits& limits,
                               const GoalRegion& goal, const CostWeights& weights, const CostParams& p) {
    CostBreakdown c;
    c.safety = check_collision(w) ? p.collision_cost : safety_cost(w, p);
    c.comfort = comfort_cost(limits.jerk_set.at(static_cast<std::size_t>(a.jerk_index)), p);
    c.passability = passability_cost(w, goal, p, false);
    c.other = other_cost(a, p);
    c.total = weighted_total(c, weights);
    return c;
}

inline double terminal_cost(const WorldState& w, const GoalRegion& goal, const CostWeights& weights,
                            const CostParams& p) {
    return goal_reached(w, goal) ? 0.0 : weights.passability * p.fail_penalty;
}

struct TrajectoryStep {
    WorldState world;  // state reached by `action`
    DriveAction action;
};

/*
 * Sums the per-step costs of a time-ordered trajectory. With `terminal` the pass/fail
 * penalty is assessed on the final state. A colliding step is scored (safety includes
 * collision_cost) and ends the accumulation; later steps and the terminal check are skipped.
 */
inline CostBreakdown accumulate_trajectory_cost(std::span<const TrajectoryStep> steps, const KinematicLimits& limits,
                                                const GoalRegion& goal, const CostWeights& weights,
                                                const CostParams& p, bool terminal = true) {
    CostBreakdown sum;
    bool collided = false;
    for (const auto& st : steps) {
        const CostBreakdown c = step_cost(st.world, st.action, limits, goal, weights, p);
        sum.safety += c.safety;
        sum.comfort += c.comfort;
        sum.passability += c.passability;
        sum.other += c.other;
        if (check_collision(st.world)) {
            collided = true;
            break;
        }
    }
    if (terminal && !collided && !steps.empty() && !goal_reached(steps.back().world, goal)) {
        sum.passability += p.fail_penalty;
    }
    sum.total = weighted_total(sum, weights);
    return sum;
}

} // namespace mctsdrive
