// mctsdrive: run, sweep and check receding-horizon MCTS driving scenarios.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 runtime failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mctsdrive.hpp"

namespace fs = std::filesystem;
using namespace mctsdrive;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_runtime = 2;

struct RunArgs {
    std::string scenario = "sln";
    std::string config;
    std::uint64_t seed = 1;
    std::optional<int> iterations;
    std::optional<int> lookahead;
    std::optional<double> t1;
    std::optional<double> horizon;
    std::string out;
    bool timing = false;
};

struct BatchArgs {
    std::string scenario = "sln";
    std::vector<int> iterations{1000, 2000, 2500, 3000};
    int runs = 300;
    std::uint64_t base_seed = 1;
    std::string out_dir;
    int parallel = 1;
    std::string reference;
    double epsilon = 0.1;
    bool traces = false;
};

struct ReferenceArgs {
    std::string scenario = "sln";
    int runs = 300;
    std::uint64_t base_seed = 1;
    int iterations = 50000;
    int parallel = 1;
    std::string out;
};

struct ExportArgs {
    std::string scenario = "sln";
    std::uint64_t seed = 1;
    std::string out;
};

Json latency_json(const LatencyStats& l) {
    return {{"samples", l.samples}, {"mean_s", l.mean}, {"p50_s", l.p50}, {"p90_s", l.p90}, {"p99_s", l.p99},
            {"max_s", l.max}};
}

Json report_json(const BatchReport& r) {
    Json runs = Json::array();
    for (const auto& p : r.per_run) {
        Json j = {{"seed", p.seed}, {"outcome", to_string(p.outcome)}, {"total_cost", p.total_cost}, {"steps", p.steps}};
        j["near_optimal"] = p.near_optimal ? Json(*p.near_optimal) : Json(nullptr);
        runs.push_back(std::move(j));
    }
    const auto near = r.near_optimal_rate();
    Json j = {{"scenario", r.scenario},       {"iterations", r.iterations},         {"runs", r.runs},
              {"successes", r.successes},     {"collisions", r.collisions},         {"timeouts", r.timeouts},
              {"success_rate", r.success_rate()}, {"collision_rate", r.collision_rate()}, {"timeout_rate", r.timeout_rate()}};
    j["near_optimal_rate"] = near ? Json(*near) : Json(nullptr);
    j["plan_latency"] = latency_json(r.latency);
    j["per_run"] = std::move(runs);
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ReferenceCosts load_references(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reference file '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("costs") || !j["costs"].is_object()) {
        throw ConfigError("costs", path.string() + ": expected an object of seed -> cost");
    }
    ReferenceCosts out;
    for (const auto& [key, value] : j["costs"].items()) {
        if (!value.is_number()) throw ConfigError("costs." + key, "must be a number");
        try {
            out[std::stoull(key)] = value.get<double>();
        } catch (const std::logic_error&) {
            throw ConfigError("costs." + key, "key must be an unsigned seed");
        }
    }
    return out;
}

int cmd_run(const RunArgs& a) {
    ScenarioConfig config = a.config.empty() ? make_scenario(a.scenario, a.seed) : load_scenario(a.config);
    ScenarioOverrides ov;
    ov.iterations = a.iterations;
    ov.lookahead_depth = a.lookahead;
    ov.t1 = a.t1;
    ov.horizon = a.horizon;
    ov.apply(config);
    const RunResult r = run_one(config, a.seed);

    std::vector<double> plan_times;
    for (const auto& rec : r.trace.records) plan_times.push_back(rec.plan_seconds);
    Json summary = {{"scenario", config.name},
                    {"seed", a.seed},
                    {"iterations", config.planner.iterations},
                    {"outcome", to_string(r.outcome)},
                    {"steps", r.trace.records.size()},
                    {"total_cost", r.trace.total_cost()},
                    {"plan_latency", latency_json(latency_stats(plan_times))}};
    if (!a.out.empty()) {
        save_trace(a.out, r.trace, {config.name, a.seed, config.planner.t1, config.road}, a.timing);
        summary["trace"] = a.out;
    }
    std::cout << summary.dump(2) << '\n';
    return exit_ok;
}

int cmd_batch(const BatchArgs& a) {
    BatchOptions opt;
    opt.scenario = a.scenario;
    opt.iterations = a.iterations;
    opt.runs = a.runs;
    opt.base_seed = a.base_seed;
    opt.parallel = a.parallel;
    opt.epsilon = a.epsilon;
    if (!a.reference.empty()) opt.references = load_references(a.reference);
    make_scenario(a.scenario, a.base_seed).validate();

    const auto start = std::chrono::steady_clock::now();
    std::vector<RunResult> runs;
    const auto reports = run_batch(opt, a.traces ? &runs : nullptr);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string table = format_table(reports);
    std::cout << table;
    Json cells = Json::array();
    for (const auto& r : reports) cells.push_back(report_json(r));
    Json report = {{"scenario", a.scenario}, {"base_seed", a.base_seed}, {"runs", a.runs},
                   {"wall_seconds", wall},   {"cells", cells}};

    if (!a.out_dir.empty()) {
        const fs::path dir(a.out_dir);
        fs::create_directories(dir);
        write_text(dir / "report.json", report.dump(2) + "\n");
        write_text(dir / "table.txt", table);
        if (a.traces) {
            const fs::path tdir = dir / "traces";
            fs::create_directories(tdir);
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const int budget = a.iterations[i / static_cast<std::size_t>(a.runs)];
                const ScenarioConfig c = make_scenario(a.scenario, runs[i].seed, {budget});
                const fs::path p = tdir / (a.scenario + "_" + std::to_string(budget) + "_" + std::to_string(runs[i].seed) + ".ndjson");
                save_trace(p, runs[i].trace, {c.name, runs[i].seed, c.planner.t1, c.road});
            }
        }
        std::cerr << "wrote " << (dir / "report.json").string() << '\n';
    }
    return exit_ok;
}

int cmd_reference(const ReferenceArgs& a) {
    if (a.iterations < 1 || a.runs < 1) throw ConfigError("", "iterations and runs must be >= 1");
    make_scenario(a.scenario, a.base_seed).validate();
    const ReferenceCosts costs = compute_references(a.scenario, a.runs, a.base_seed, a.iterations, a.parallel);
    Json c = Json::object();
    for (const auto& [seed, cost] : costs) c[std::to_string(seed)] = cost;
    const Json j = {{"scenario", a.scenario}, {"iterations", a.iterations}, {"base_seed", a.base_seed},
                    {"runs", a.runs},         {"costs", c}};
    if (a.out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        write_text(a.out, j.dump(2) + "\n");
        std::cerr << "wrote " << a.out << '\n';
    }
    return exit_ok;
}

int cmd_validate(const std::vector<std::string>& files) {
    int bad = 0;
    for (const auto& f : files) {
        try {
            const ScenarioConfig c = load_scenario(f);
            std::cout << f << ": ok (" << c.name << ", " << c.others.size() << " vehicles)\n";
        } catch (const ConfigError& e) {
            std::cout << f << ": " << e.what() << '\n';
            ++bad;
        } catch (const IoError& e) {
            std::cout << f << ": " << e.what() << '\n';
            ++bad;
        }
    }
    return bad ? exit_usage : exit_ok;
}

int cmd_export(const ExportArgs& a) {
    const ScenarioConfig c = make_scenario(a.scenario, a.seed);
    if (a.out.empty()) {
        std::cout << scenario_to_json(c).dump(2) << '\n';
    } else {
        save_scenario(c, a.out);
    }
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Receding-horizon MCTS planner for scripted traffic scenarios"};
    app.require_subcommand(1);

    std::vector<std::string> names;
    for (auto n : scenario_names()) names.emplace_back(n);
    const auto known = CLI::IsMember(names);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one seeded scenario and optionally write its trace");
    run_cmd->add_option("--scenario", run.scenario, "Built-in scenario")->check(known);
    run_cmd->add_option("--config", run.config, "Scenario config file (overrides --scenario)")->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "Run seed");
    run_cmd->add_option("--iterations", run.iterations, "MCTS iterations per plan");
    run_cmd->add_option("--lookahead", run.lookahead, "Tree depth");
    run_cmd->add_option("--t1", run.t1, "Seconds per tree edge");
    run_cmd->add_option("--horizon", run.horizon, "Rollout horizon in seconds");
    run_cmd->add_option("--out", run.out, "Trace output file (NDJSON)");
    run_cmd->add_flag("--timing", run.timing, "Include plan wall time in the trace");

    BatchArgs batch;
    auto* batch_cmd = app.add_subcommand("batch", "Seeded runs over a list of iteration budgets");
    batch_cmd->add_option("--scenario", batch.scenario, "Built-in scenario")->check(known);
    batch_cmd->add_option("--iterations", batch.iterations, "Budgets, comma separated")->delimiter(',');
    batch_cmd->add_option("--runs", batch.runs, "Runs per budget")->check(CLI::PositiveNumber);
    batch_cmd->add_option("--base-seed", batch.base_seed, "Seed of the first run");
    batch_cmd->add_option("--out-dir", batch.out_dir, "Directory for report.json and table.txt");
    batch_cmd->add_option("--parallel", batch.parallel, "Worker threads")->check(CLI::PositiveNumber);
    batch_cmd->add_option("--reference", batch.reference, "Reference cost file from `reference`")->check(CLI::ExistingFile);
    batch_cmd->add_option("--epsilon", batch.epsilon, "Near-optimal tolerance");
    batch_cmd->add_flag("--traces", batch.traces, "Also write every trace under <out-dir>/traces");

    ReferenceArgs ref;
    auto* ref_cmd = app.add_subcommand("reference", "High-budget runs whose costs anchor the near-optimal metric");
    ref_cmd->add_option("--scenario", ref.scenario, "Built-in scenario")->check(known);
    ref_cmd->add_option("--runs", ref.runs, "Number of seeds")->check(CLI::PositiveNumber);
    ref_cmd->add_option("--base-seed", ref.base_seed, "Seed of the first run");
    ref_cmd->add_option("--iterations", ref.iterations, "Reference budget")->check(CLI::Range(50000, 100000000));
    ref_cmd->add_option("--parallel", ref.parallel, "Worker threads")->check(CLI::PositiveNumber);
    ref_cmd->add_option("--out", ref.out, "Output file (stdout when omitted)");

    std::vector<std::string> validate_files;
    auto* validate_cmd = app.add_subcommand("validate", "Check scenario config files");
    validate_cmd->add_option("files", validate_files, "Config files")->required();

    ExportArgs exp;
    auto* export_cmd = app.add_subcommand("export", "Write a built-in scenario as a config file");
    export_cmd->add_option("--scenario", exp.scenario, "Built-in scenario")->check(known);
    export_cmd->add_option("--seed", exp.seed, "Scenario seed");
    export_cmd->add_option("--out", exp.out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*batch_cmd) return cmd_batch(batch);
        if (*ref_cmd) return cmd_reference(ref);
        if (*validate_cmd) return cmd_validate(validate_files);
        if (*export_cmd) return cmd_export(exp);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_usage;
}
