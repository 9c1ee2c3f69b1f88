#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mctsdrive/cost_model.hpp"
#include "mctsdrive/errors.hpp"
#include "mctsdrive/traffic_world.hpp"

namespace mctsdrive {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform draw in [0, 1) from the top 53 bits; identical on every standard library.
inline double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

enum class FinalSelection { lowest_mean, most_visited };

inline std::string_view to_string(FinalSelection f) {
    return f == FinalSelection::lowest_mean ? "lowest_mean" : "most_visited";
}

inline std::optional<FinalSelection> final_selection_from_string(std::string_view s) {
    if (s == "lowest_mean") return FinalSelection::lowest_mean;
    if (s == "most_visited") return FinalSelection::most_visited;
    return std::nullopt;
}

struct PlannerConfig {
    int iterations = 1000;
    int lookahead_depth = 3;
    double t1 = 1.0;       // seconds per tree edge
    double horizon = 8.0;  // seconds, terminal time of every simulated trajectory
    double ucb_const = 1.4;
    std::vector<double> rollout_probs;  // per jerk level; empty means uniform
    std::uint64_t rng_seed = 0;
    FinalSelection final_selection = FinalSelection::lowest_mean;
    std::optional<double> time_budget;  // seconds; stops early when exceeded

    friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;

    int horizon_steps() const { return static_cast<int>(std::lround(horizon / t1)); }

    void validate(const KinematicLimits& limits) const {
        if (iterations < 1) throw ConfigError("planner.iterations", "must be >= 1");
        if (lookahead_depth < 1) throw ConfigError("planner.lookahead_depth", "must be >= 1");
        if (!(t1 > 0.0)) throw ConfigError("planner.t1", "must be > 0");
        if (std::abs(horizon / t1 - horizon_steps()) > 1e-9) {
            throw ConfigError("planner.horizon", "must be a whole number of t1 steps");
        }
        if (lookahead_depth > horizon_steps()) {
            throw ConfigError("planner.lookahead_depth", "lookahead_depth * t1 must not exceed horizon");
        }
        if (ucb_const < 0.0) throw ConfigError("planner.ucb_const", "must be >= 0");
        if (!rollout_probs.empty()) {
            if (rollout_probs.size() != limits.jerk_set.size()) {
                throw ConfigError("planner.rollout_probs", "needs one probability per jerk level");
            }
            double sum = 0.0;
            for (double p : rollout_probs) {
                if (p < 0.0) throw ConfigError("planner.rollout_probs", "probabilities must be >= 0");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("planner.rollout_probs", "must sum to 1");
        }
        if (time_budget && !(*time_budget > 0.0)) throw ConfigError("planner.time_budget", "must be > 0");
    }
};

struct ChildStats {
    DriveAction action;
    std::int64_t visits = 0;
    double mean_cost = 0.0;
    double ucb = 0.0;

    friend bool operator==(const ChildStats&, const ChildStats&) = default;
};

struct PlanResult {
    DriveAction best_action;
    std::vector<ChildStats> root_stats;
    int iterations_run = 0;
    double elapsed = 0.0;  // seconds; wall clock, excluded from equality

    friend bool operator==(const PlanResult& a, const PlanResult& b) {
        return a.best_action == b.best_action && a.root_stats == b.root_stats && a.iterations_run == b.iterations_run;
    }
};

using NodeId = std::int32_t;
inline constexpr NodeId no_node = -1;

struct TreeNode {
    WorldState world;
    std::optional<DriveAction> incoming_action;
    int depth = 0;
    double total_cost = 0.0;  // C(v)
    std::int64_t visits = 0;  // n(v)
    double path_cost = 0.0;   // weighted edge costs root -> this node
    bool collided = false;    // the incoming edge hit another vehicle; terminal
    bool expanded = false;
    NodeId parent = no_node;
    NodeId first_child = no_node;
    std::int32_t child_count = 0;
};

// Arena-backed tree; the children of a node are contiguous and canonically ordered.
class SearchTree {
public:
    explicit SearchTree(WorldState root) {
        nodes_.reserve(1024);
        nodes_.push_back(TreeNode{std::move(root)});
    }

    static constexpr NodeId root_id = 0;

    const TreeNode& root() const { return nodes_.front(); }
    const TreeNode& node(NodeId id) const { return nodes_[static_cast<std::size_t>(id)]; }
    TreeNode& node(NodeId id) { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t size() const noexcept { return nodes_.size(); }

    std::span<const TreeNode> children(NodeId id) const {
        const TreeNode& n = node(id);
        if (n.child_count == 0) return {};
        return {nodes_.data() + n.first_child, static_cast<std::size_t>(n.child_count)};
    }

    std::optional<NodeId> child(NodeId id, DriveAction a) const {
        const TreeNode& n = node(id);
        for (std::int32_t k = 0; k < n.child_count; ++k) {
            if (node(n.first_child + k).incoming_action == a) return n.first_child + k;
        }
        return std::nullopt;
    }

    NodeId add_child(NodeId parent, TreeNode child) {
        child.parent = parent;
        const auto id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(std::move(child));
        return id;
    }

    // Normaliser for the exploitation term: largest collision-free trajectory cost seen so far.
    double cost_scale() const noexcept { return cost_scale_; }
    void observe_cost(double cost, double collision_cost) {
        if (cost < collision_cost) cost_scale_ = std::max(cost_scale_, cost);
    }

private:
    std::vector<TreeNode> nodes_;
    double cost_scale_ = 1.0;
};

/**
 * Upper confidence bound of a child seen from a parent with `parent_visits` visits:
 * -(C / cost_scale) / n + c * sqrt(2 ln N / n). Unvisited children score +inf so every
 * sibling is tried once before any is revisited.
 */
inline double ucb_value(const TreeNode& child, std::int64_t parent_visits, double c, double cost_scale) {
    if (child.visits == 0) return std::numeric_limits<double>::infinity();
    const auto n = static_cast<double>(child.visits);
    const double exploit = -(child.total_cost / cost_scale) / n;
    const double explore = c * std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::int64_t>(1, parent_visits))) / n);
    return exploit + explore;
}

class MctsPlanner {
public:
    MctsPlanner(const Environment& env, CostWeights weights, CostParams params, PlannerConfig config)
        : env_(env), weights_(weights), params_(params), config_(std::move(config)) {
        config_.validate(env_.limits);
    }

    const PlannerConfig& config() const noexcept { return config_; }
    const Environment& environment() const noexcept { return env_; }

    // Descends by argmax UCB (ties to the lowest ordinal) until an unexpanded node, a
    // collision leaf, or a node at lookahead depth.
    NodeId select(const SearchTree& tree) const {
        NodeId id = SearchTree::root_id;
        for (;;) {
            const TreeNode& n = tree.node(id);
            if (n.collided || n.depth >= config_.lookahead_depth || !n.expanded || n.child_count == 0) return id;
            NodeId best = n.first_child;
            double best_ucb = -std::numeric_limits<double>::infinity();
            for (std::int32_t k = 0; k < n.child_count; ++k) {
                const double u = ucb_value(tree.node(n.first_child + k), n.visits, config_.ucb_const, tree.cost_scale());
                if (u > best_ucb) {
                    best_ucb = u;
                    best = n.first_child + k;
                }
            }
            id = best;
        }
    }

    // Adds one child per feasible action, stepping ego and scripted traffic by t1.
    void expand(SearchTree& tree, NodeId id) const {
        {
            const TreeNode& n = tree.node(id);
            if (n.depth >= config_.lookahead_depth) {
                throw ContractViolation("expand at depth " + std::to_string(n.depth) + " >= lookahead depth " +
                                        std::to_string(config_.lookahead_depth));
            }
            if (n.expanded) throw ContractViolation("node already expanded");
            if (n.collided) throw ContractViolation("cannot expand a collision leaf");
        }
        const WorldState world = tree.node(id).world;
        const double base_cost = tree.node(id).path_cost;
        const int depth = tree.node(id).depth + 1;
        const auto actions = feasible_actions(world, env_.limits, env_.map);
        NodeId first = no_node;
        for (const DriveAction a : actions) {
            Transition tr = step_world(world, a, env_, config_.t1);
            const double edge = step_cost(tr.world, a, env_.limits, env_.map.goal, weights_, params_).total;
            TreeNode child{std::move(tr.world), a, depth};
            child.path_cost = base_cost + edge;
            child.collided = tr.collided;
            const NodeId cid = tree.add_child(id, std::move(child));
            if (first == no_node) first = cid;
        }
        TreeNode& n = tree.node(id);
        n.expanded = true;
        n.first_child = first;
        n.child_count = static_cast<std::int32_t>(actions.size());
    }

    /*
     * Lane-keeping random continuation from `id` to the horizon. Returns the cost of the
     * whole trajectory: root-to-node edges, rollout steps, and the terminal pass/fail check.
     */
    double rollout(const SearchTree& tree, NodeId id, Rng& rng) const {
        const TreeNode& n = tree.node(id);
        double cost = n.path_cost;
        if (n.collided) return cost;
        WorldState w = n.world;
        const auto& jerks = env_.limits.jerk_set;
        for (int step = n.depth; step < config_.horizon_steps(); ++step) {
            double mass = 0.0;
            std::array<double, max_jerk_levels> weights{};
            const std::size_t levels = std::min(jerks.size(), max_jerk_levels);
            for (std::size_t j = 0; j < levels; ++j) {
                const double p = config_.rollout_probs.empty() ? 1.0 : config_.rollout_probs[j];
                weights[j] = is_feasible(w, {static_cast<int>(j), Lateral::keep}, env_.limits, env_.map) ? p : 0.0;
                mass += weights[j];
            }
            int pick = env_.limits.zero_jerk_index();
            if (mass > 0.0) {
                double r = unit_uniform(rng) * mass;
                for (std::size_t j = 0; j < levels; ++j) {
                    if (weights[j] <= 0.0) continue;
                    pick = static_cast<int>(j);
                    r -= weights[j];
                    if (r < 0.0) break;
                }
            }
            const DriveAction a{pick, Lateral::keep};
            Transition tr = step_world(w, a, env_, config_.t1);
            cost += step_cost(tr.world, a, env_.limits, env_.map.goal, weights_, params_).total;
            if (tr.collided) return cost;
            w = std::move(tr.world);
        }
        return cost + terminal_cost(w, env_.map.goal, weights_, params_);
    }

    void backpropagate(SearchTree& tree, NodeId leaf, double cost) const {
        for (NodeId id = leaf; id != no_node; id = tree.node(id).parent) {
            TreeNode& n = tree.node(id);
            n.total_cost += cost;
            n.visits += 1;
        }
    }

    void run_iteration(SearchTree& tree, Rng& rng) const {
        const NodeId v = select(tree);
        const TreeNode& n = tree.node(v);
        double cost;
        if (n.collided) {
            cost = n.path_cost;
        } else {
            if (n.depth < config_.lookahead_depth && n.visits == 0) expand(tree, v);
            cost = rollout(tree, v, rng);
        }
        tree.observe_cost(cost, params_.collision_cost);
        backpropagate(tree, v, cost);
    }

    SearchTree search(const WorldState& world, Rng& rng, int* iterations_run = nullptr) const {
        if (check_collision(world)) throw ContractViolation("refusing to plan from a colliding world");
        SearchTree tree(world);
        const auto start = std::chrono::steady_clock::now();
        int done = 0;
        for (; done < config_.iterations; ++done) {
            if (config_.time_budget && (done & 15) == 0 && done > 0) {
                const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - start;
                if (spent.count() >= *config_.time_budget) break;
            }
            run_iteration(tree, rng);
        }
        if (iterations_run) *iterations_run = done;
        return tree;
    }

    PlanResult plan(const WorldState& world) const {
        const auto start = std::chrono::steady_clock::now();
        Rng rng(config_.rng_seed);
        PlanResult result;
        const SearchTree tree = search(world, rng, &result.iterations_run);
        result.best_action = best_action(tree);
        result.root_stats = root_stats(tree);
        result.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
    }

    DriveAction best_action(const SearchTree& tree) const {
        const auto kids = tree.children(SearchTree::root_id);
        if (kids.empty()) throw ContractViolation("root was never expanded");
        const TreeNode* best = nullptr;
        // A child that collides on its own edge is never preferred over one that might not.
        const bool any_open =
            std::any_of(kids.begin(), kids.end(), [](const TreeNode& c) { return c.visits > 0 && !c.collided; });
        for (const auto& c : kids) {
            if (c.visits == 0) continue;
            if (any_open && c.collided) continue;
            if (!best) {
                best = &c;
                continue;
            }
            if (config_.final_selection == FinalSelection::lowest_mean) {
                if (c.total_cost / c.visits < best->total_cost / best->visits) best = &c;
            } else if (c.visits > best->visits) {
                best = &c;
            }
        }
        return best ? *best->incoming_action : *kids.front().incoming_action;
    }

    std::vector<ChildStats> root_stats(const SearchTree& tree) const {
        std::vector<ChildStats> out;
        const std::int64_t parent_visits = tree.root().visits;
        for (const auto& c : tree.children(SearchTree::root_id)) {
            const double mean = c.visits ? c.total_cost / static_cast<double>(c.visits) : 0.0;
            out.push_back({*c.incoming_action, c.visits, mean,
                           ucb_value(c, parent_visits, config_.ucb_const, tree.cost_scale())});
        }
        return out;
    }

private:
    const Environment& env_;
    CostWeights weights_;
    CostParams params_;
    PlannerConfig config_;
};

enum class Outcome { success, collision, timeout };

inline std::string_view to_string(Outcome o) {
    switch (o) {
    case Outcome::success: return "success";
    case Outcome::collision: return "collision";
    case Outcome::timeout: return "timeout";
    }
    return "?";
}

inline std::optional<Outcome> outcome_from_string(std::string_view s) {
    if (s == "success") return Outcome::success;
    if (s == "collision") return Outcome::collision;
    if (s == "timeout") return Outcome::timeout;
    return std::nullopt;
}

// One executed step. `world` is the state after the action (the impact instant on a collision);
// `t` is the decision time step * t1.
struct TraceRecord {
    int step = 0;
    double t = 0.0;
    WorldState world;
    DriveAction action;
    CostBreakdown cost;
    int iterations_run = 0;
    std::vector<ChildStats> root_stats;
    double plan_seconds = 0.0;  // wall clock, excluded from equality

    friend bool operator==(const TraceRecord& a, const TraceRecord& b) {
        return a.step == b.step && a.t == b.t && a.world == b.world && a.action == b.action && a.cost == b.cost &&
               a.iterations_run == b.iterations_run && a.root_stats == b.root_stats;
    }
};

struct Trace {
    WorldState initial;
    std::vector<TraceRecord> records;
    Outcome outcome = Outcome::timeout;

    friend bool operator==(const Trace&, const Trace&) = default;

    double total_cost() const {
        double sum = 0.0;
        for (const auto& r : records) sum += r.cost.total;
        return sum;
    }
};

/*
 * Receding-horizon loop: plan from scratch, execute the chosen action for one t1 step,
 * repeat. Stops on goal, collision, passing the goal deadline, or after max_steps.
 * Each replanning step reseeds the search from (config.rng_seed, step).
 */
inline Trace receding_horizon_run(const WorldState& initial, const Environment& env, const CostWeights& weights,
                                  const CostParams& params, const PlannerConfig& config, int max_steps) {
    if (max_steps < 1) throw ContractViolation("max_steps must be >= 1");
    Trace trace;
    trace.initial = initial;
    const GoalRegion& goal = env.map.goal;
    if (check_collision(initial)) {
        trace.outcome = Outcome::collision;
        return trace;
    }
    if (goal_reached(initial, goal)) {
        trace.outcome = Outcome::success;
        return trace;
    }
    WorldState w = initial;
    for (int step = 0; step < max_steps; ++step) {
        if (w.t >= goal.deadline - 1e-9) break;
        PlannerConfig step_config = config;
        step_config.rng_seed = splitmix64(config.rng_seed ^ splitmix64(static_cast<std::uint64_t>(step)));
        const MctsPlanner planner(env, weights, params, step_config);
        const PlanResult plan = planner.plan(w);

        Transition tr = step_world(w, plan.best_action, env, config.t1);
        TraceRecord rec;
        rec.step = step;
        rec.t = step * config.t1;
        rec.action = plan.best_action;
        rec.cost = step_cost(tr.world, plan.best_action, env.limits, goal, weights, params);
        rec.iterations_run = plan.iterations_run;
        rec.root_stats = plan.root_stats;
        rec.plan_seconds = plan.elapsed;
        rec.world = tr.world;
        trace.records.push_back(std::move(rec));

        if (tr.collided) {
            trace.outcome = Outcome::collision;
            return trace;
        }
        w = std::move(tr.world);
        if (goal_reached(w, goal)) {
            trace.outcome = Outcome::success;
            return trace;
        }
    }
    trace.outcome = Outcome::timeout;
    return trace;
}

} // namespace mctsdrive
