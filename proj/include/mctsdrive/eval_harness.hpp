#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mctsdrive/errors.hpp"
#include "mctsdrive/mcts_planner.hpp"
#include "mctsdrive/scenarios.hpp"

namespace mctsdrive {

struct RunResult {
    std::uint64_t seed = 0;
    Trace trace;
    Outcome outcome = Outcome::timeout;
};

// Planner RNG seed used for a run seed; the scenario instance uses the run seed directly.
inline std::uint64_t planner_seed_for(std::uint64_t run_seed) { return splitmix64(run_seed ^ 0x706c616eULL); }

inline RunResult run_one(const ScenarioConfig& config, std::uint64_t seed) {
    config.validate();
    PlannerConfig planner = config.planner;
    planner.rng_seed = planner_seed_for(seed);
    const Environment env = config.environment();
    RunResult r;
    r.seed = seed;
    r.trace = receding_horizon_run(config.initial_world(), env, config.weights, config.cost_params, planner,
                                   config.max_steps);
    r.outcome = r.trace.outcome;
    return r;
}

// Seed of run `index` within a batch.
inline std::uint64_t run_seed(std::uint64_t base_seed, int index) { return base_seed + static_cast<std::uint64_t>(index); }

using ReferenceCosts = std::map<std::uint64_t, double>;  // run seed -> reference trace cost

/*
 * Near-optimal: the run succeeded and its executed cost is within (1 + epsilon) of the
 * reference run on the same seeded instance. No reference is an error, never a pass.
 */
inline bool classify_near_optimal(const Trace& trace, std::optional<double> reference_cost, double epsilon = 0.1) {
    if (!reference_cost) throw std::invalid_argument("near-optimal classification needs a reference cost");
    if (trace.outcome != Outcome::success) return false;
    return trace.total_cost() <= (1.0 + epsilon) * *reference_cost;
}

struct RunSummary {
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::timeout;
    double total_cost = 0.0;
    int steps = 0;
    std::optional<bool> near_optimal;
};

struct LatencyStats {
    double mean = 0.0;
    double p50 = 0.0;
    double p90 = 0.0;
    double p99 = 0.0;
    double max = 0.0;
    std::size_t samples = 0;
};

inline LatencyStats latency_stats(std::vector<double> seconds) {
    LatencyStats s;
    s.samples = seconds.size();
    if (seconds.empty()) return s;
    std::sort(seconds.begin(), seconds.end());
    double sum = 0.0;
    for (double v : seconds) sum += v;
    s.mean = sum / static_cast<double>(seconds.size());
    auto pct = [&](double q) {
        const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(seconds.size()))) ;
        return seconds[std::min(seconds.size() - 1, idx == 0 ? 0 : idx - 1)];
    };
    s.p50 = pct(0.50);
    s.p90 = pct(0.90);
    s.p99 = pct(0.99);
    s.max = seconds.back();
    return s;
}

struct BatchReport {
    std::string scenario;
    int iterations = 0;
    int runs = 0;
    int successes = 0;
    int collisions = 0;
    int timeouts = 0;
    std::optional<int> near_optimal;  // present when reference costs were supplied
    LatencyStats latency;
    std::vector<RunSummary> per_run;

    double rate(int count) const { return runs ? static_cast<double>(count) / runs : 0.0; }
    double success_rate() const { return rate(successes); }
    double collision_rate() const { return rate(collisions); }
    double timeout_rate() const { return rate(timeouts); }
    std::optional<double> near_optimal_rate() const {
        return near_optimal ? std::optional<double>(rate(*near_optimal)) : std::nullopt;
    }
};

// Tallies outcomes from per-run summaries; the only place rates are derived.
inline void recount(BatchReport& r) {
    r.runs = static_cast<int>(r.per_run.size());
    r.successes = r.collisions = r.timeouts = 0;
    int near = 0;
    bool have_near = !r.per_run.empty();
    for (const auto& p : r.per_run) {
        switch (p.outcome) {
        case Outcome::success: ++r.successes; break;
        case Outcome::collision: ++r.collisions; break;
        case Outcome::timeout: ++r.timeouts; break;
        }
        if (p.near_optimal) near += *p.near_optimal ? 1 : 0;
        else have_near = false;
    }
    r.near_optimal = have_near ? std::optional<int>(near) : std::nullopt;
}

struct BatchOptions {
    std::string scenario = "sln";
    std::vector<int> iterations{1000, 2000, 2500, 3000};
    int runs = 300;
    std::uint64_t base_seed = 1;
    int parallel = 1;
    ScenarioOverrides overrides;
    std::optional<ReferenceCosts> references;
    double epsilon = 0.1;
};

// Runs fn(i) for i in [0, count) on up to `workers` threads.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    workers = std::clamp(workers, 1, std::max(1, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/*
 * One report per iteration budget. Every cell replays the same seeded instances
 * (seed = base_seed + i), so budgets are compared on identical worlds.
 */
inline std::vector<BatchReport> run_batch(const BatchOptions& opt, std::vector<RunResult>* keep_runs = nullptr) {
    if (opt.runs < 1) throw std::invalid_argument("runs per cell must be >= 1");
    const int cells = static_cast<int>(opt.iterations.size());
    std::vector<BatchReport> reports(static_cast<std::size_t>(cells));
    std::vector<std::vector<double>> latencies(reports.size());
    std::vector<RunResult> results(static_cast<std::size_t>(cells * opt.runs));
    parallel_for(cells * opt.runs, opt.parallel, [&](int job) {
        const int cell = job / opt.runs;
        const int idx = job % opt.runs;
        ScenarioOverrides ov = opt.overrides;
        ov.iterations = opt.iterations[static_cast<std::size_t>(cell)];
        const std::uint64_t seed = run_seed(opt.base_seed, idx);
        results[static_cast<std::size_t>(job)] = run_one(make_scenario(opt.scenario, seed, ov), seed);
    });
    for (int cell = 0; cell < cells; ++cell) {
        BatchReport& rep = reports[static_cast<std::size_t>(cell)];
        rep.scenario = opt.scenario;
        rep.iterations = opt.iterations[static_cast<std::size_t>(cell)];
        for (int idx = 0; idx < opt.runs; ++idx) {
            const RunResult& r = results[static_cast<std::size_t>(cell * opt.runs + idx)];
            RunSummary s{r.seed, r.outcome, r.trace.total_cost(), static_cast<int>(r.trace.records.size()), {}};
            if (opt.references) {
                const auto it = opt.references->find(r.seed);
                if (it == opt.references->end()) {
                    throw std::invalid_argument("no reference cost for seed " + std::to_string(r.seed));
                }
                s.near_optimal = classify_near_optimal(r.trace, it->second, opt.epsilon);
            }
            rep.per_run.push_back(s);
            for (const auto& rec : r.trace.records) latencies[static_cast<std::size_t>(cell)].push_back(rec.plan_seconds);
        }
        recount(rep);
        rep.latency = latency_stats(std::move(latencies[static_cast<std::size_t>(cell)]));
    }
    if (keep_runs) *keep_runs = std::move(results);
    return reports;
}

// High-budget runs of each seeded instance; their executed costs anchor the near-optimal metric.
inline ReferenceCosts compute_references(const std::string& scenario, int runs, std::uint64_t base_seed,
                                         int iterations, int parallel, const ScenarioOverrides& overrides = {}) {
    std::vector<double> costs(static_cast<std::size_t>(runs));
    parallel_for(runs, parallel, [&](int i) {
        ScenarioOverrides ov = overrides;
        ov.iterations = iterations;
        const std::uint64_t seed = run_seed(base_seed, i);
        costs[static_cast<std::size_t>(i)] = run_one(make_scenario(scenario, seed, ov), seed).trace.total_cost();
    });
    ReferenceCosts out;
    for (int i = 0; i < runs; ++i) out[run_seed(base_seed, i)] = costs[static_cast<std::size_t>(i)];
    return out;
}

// Plain-text table laid out like the iteration sweep: scenario, budget, rates.
inline std::string format_table(const std::vector<BatchReport>& reports) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "Scenario" << std::right << std::setw(12) << "Iterations" << std::setw(8)
       << "Runs" << std::setw(12) << "Success" << std::setw(15) << "Near-optimal" << std::setw(12) << "Collision"
       << std::setw(10) << "Timeout" << std::setw(14) << "p50 plan ms" << '\n';
    os << std::string(93, '-') << '\n';
    auto pct = [](double r) {
        std::ostringstream p;
        p << std::fixed << std::setprecision(2) << 100.0 * r << '%';
        return p.str();
    };
    for (const auto& r : reports) {
        const auto near = r.near_optimal_rate();
        os << std::left << std::setw(10) << r.scenario << std::right << std::setw(12) << r.iterations << std::setw(8)
           << r.runs << std::setw(12) << pct(r.success_rate()) << std::setw(15) << (near ? pct(*near) : "n/a")
           << std::setw(12) << pct(r.collision_rate()) << std::setw(10) << pct(r.timeout_rate()) << std::setw(14)
           << std::fixed << std::setprecision(2) << 1000.0 * r.latency.p50 << '\n';
    }
    return os.str();
}

} // namespace mctsdrive
