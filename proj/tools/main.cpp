#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "flipsim/csv.hpp"
#include "flipsim/harness.hpp"
#include "flipsim/svg_plot.hpp"
#include "flipsim/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace flipsim;

namespace {

enum Exit : int { ok = 0, usage = 1, failure = 2, verification = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Sidecar stamped next to every single-file output.
void stamp(const fs::path& out, const std::string& command, json flags) {
    json m;
    m["command"] = command;
    m["flags"] = std::move(flags);
    m["code_version"] = code_version();
    write_file(fs::path(out.string() + ".manifest.json"), m.dump(2) + "\n");
}

struct GenMapArgs {
    std::uint64_t seed = 1;
    std::string out;
    MapGenSpec spec;
};

int gen_map(const GenMapArgs& a) {
    a.spec.validate();
    const GridWorld world = generate_map(a.seed, a.spec);
    save_map(world, a.out);
    stamp(a.out, "gen-map",
          {{"seed", a.seed},
           {"obstacle_density", a.spec.obstacle_density},
           {"goal_distance_min", a.spec.goal_distance_min},
           {"goal_distance_max", a.spec.goal_distance_max},
           {"width", a.spec.width},
           {"height", a.spec.height}});
    for (const auto& g : world.goals()) {
        std::cout << "goal " << csv::format_double(g.reward) << " at (" << g.cell.x << ","
                  << g.cell.y << ") distance " << *shortest_path_length(world, world.start(), g.cell)
                  << "\n";
    }
    return ok;
}

struct RunArgs {
    std::string map;
    std::string strategy = "epsilon-greedy";
    std::optional<double> epsilon, tau;
    std::optional<int> horizon;
    double p = 0.0;
    int attack_start = 0;
    int episodes = 3000;
    std::uint64_t seed = 1;
    double slip = 0.1;
    std::string out;
    std::string attack_log;
    std::size_t window = 100;
};

ExplorationStrategy strategy_from(const RunArgs& a) {
    const auto kind = parse_strategy_kind(a.strategy);
    if (!kind) throw UsageError("unknown strategy '" + a.strategy + "'");
    auto reject = [&](bool present, const char* flag) {
        if (present) throw UsageError(std::string(flag) + " does not apply to " + a.strategy);
    };
    switch (*kind) {
        case StrategyKind::epsilon_greedy:
            reject(a.tau.has_value(), "--tau");
            reject(a.horizon.has_value(), "--horizon");
            return EpsilonGreedy{a.epsilon.value_or(0.1)};
        case StrategyKind::softmax:
            reject(a.epsilon.has_value(), "--epsilon");
            reject(a.horizon.has_value(), "--horizon");
            return Softmax{a.tau.value_or(0.01)};
        case StrategyKind::dynamic_epsilon:
            reject(a.epsilon.has_value(), "--epsilon");
            reject(a.tau.has_value(), "--tau");
            return DynamicEpsilon{a.horizon.value_or(a.episodes)};
    }
    throw UsageError("unknown strategy");
}

int run(const RunArgs& a) {
    LearnerConfig learner;
    learner.strategy = strategy_from(a);
    try {
        learner.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const GridWorld world = load_map(a.map, a.slip);
    std::vector<AttackLogEntry> log;
    const auto cell = run_cell(world, CellSeeds::derive(a.seed, 0, 0), learner, a.episodes,
                               AdversaryConfig{a.p, a.attack_start, 0},
                               a.attack_log.empty() ? nullptr : &log);

    std::ostringstream csv_text;
    write_records_csv(csv_text, cell.records);
    write_file(a.out, csv_text.str());
    if (!a.attack_log.empty()) {
        std::ostringstream log_text;
        write_attack_log_csv(log_text, log);
        write_file(a.attack_log, log_text.str());
    }
    stamp(a.out, "run",
          {{"map", a.map},
           {"strategy", describe(learner.strategy)},
           {"p", a.p},
           {"attack_start", a.attack_start},
           {"episodes", a.episodes},
           {"seed", a.seed},
           {"slip", a.slip}});

    const auto smoothed = sliding_window_smooth(true_returns(cell.records), a.window);
    std::cout << "final_smoothed_return=" << csv::format_double(smoothed.back())
              << " total_attacks=" << cell.adversary.attacks_performed
              << " goal_events=" << cell.adversary.goal_events_seen << "\n";
    return ok;
}

int sweep(const std::string& config_path, std::optional<int> workers, const std::string& out_dir) {
    ExperimentConfig config = load_config(config_path);
    apply_env_overrides(config);
    const int w = workers ? *workers : workers_from_env(0);
    const auto result = run_sweep(config, w);
    const auto dir = write_sweep(result, out_dir);
    std::cout << dir.string() << "\n";
    for (const auto& c : result.cells) {
        if (!c.ok()) std::cerr << "failed: " << c.error << "\n";
    }
    return result.failures() == 0 ? ok : failure;
}

int curves(const std::string& sweep_dir) {
    const auto result = load_sweep(sweep_dir);
    for (const auto& c : result.cells) {
        if (!c.ok()) std::cerr << c.error << "\n";
    }
    write_curves(result, sweep_dir);
    std::cout << (fs::path(sweep_dir) / "curves").string() << "\n";
    return result.failures() == 0 ? ok : failure;
}

int plot(const std::string& curves_dir, const std::string& out) {
    for (const auto& f : render_figures(curves_dir, out)) std::cout << f.string() << "\n";
    return ok;
}

int verify(std::uint64_t seed) {
    bool all = true;
    for (const auto& c : run_invariant_suite(seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty()) std::cout << ": " << c.detail;
        std::cout << "\n";
        all = all && c.passed;
    }
    return all ? ok : verification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reward sign-flip attacks on a SARSA gridworld learner", "flipsim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", code_version());

    GenMapArgs gm;
    auto* gen = app.add_subcommand("gen-map", "Generate a random map");
    gen->add_option("--seed", gm.seed, "Generator seed")->capture_default_str();
    gen->add_option("--out", gm.out, "Output map file")->required();
    gen->add_option("--obstacle-density", gm.spec.obstacle_density)->capture_default_str();
    gen->add_option("--goal-distance-min", gm.spec.goal_distance_min)->capture_default_str();
    gen->add_option("--goal-distance-max", gm.spec.goal_distance_max)->capture_default_str();
    gen->add_option("--width", gm.spec.width)->capture_default_str();
    gen->add_option("--height", gm.spec.height)->capture_default_str();
    gen->add_option("--max-attempts", gm.spec.max_attempts)->capture_default_str();

    RunArgs ra;
    auto* runc = app.add_subcommand("run", "Train one learner on one map");
    runc->add_option("--map", ra.map, "Map file")->required()->check(CLI::ExistingFile);
    runc->add_option("--strategy", ra.strategy, "epsilon-greedy | softmax | dynamic-epsilon")
        ->capture_default_str();
    runc->add_option("--epsilon", ra.epsilon);
    runc->add_option("--tau", ra.tau);
    runc->add_option("--horizon", ra.horizon, "Decay horizon of dynamic-epsilon");
    runc->add_option("--p", ra.p, "Attack probability")->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    runc->add_option("--attack-start", ra.attack_start)->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    runc->add_option("--episodes", ra.episodes)->check(CLI::PositiveNumber)->capture_default_str();
    runc->add_option("--seed", ra.seed)->capture_default_str();
    runc->add_option("--slip", ra.slip)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    runc->add_option("--window", ra.window, "Smoothing window of the summary")
        ->check(CLI::PositiveNumber)->capture_default_str();
    runc->add_option("--out", ra.out, "Per-episode CSV")->required();
    runc->add_option("--attack-log", ra.attack_log, "Goal-event CSV");

    std::string config_path, out_dir = "results";
    std::optional<int> workers;
    auto* sw = app.add_subcommand("sweep", "Run every cell of a config");
    sw->add_option("--config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sw->add_option("--workers", workers, "Worker threads (0 = all cores)");
    sw->add_option("--out-dir", out_dir)->capture_default_str();

    std::string sweep_dir;
    auto* cu = app.add_subcommand("curves", "Rebuild the curve files of a sweep");
    cu->add_option("--sweep-dir", sweep_dir)->required()->check(CLI::ExistingDirectory);

    std::string curves_dir, plot_out;
    auto* pl = app.add_subcommand("plot", "Render SVG figures from a curves directory");
    pl->add_option("--curves", curves_dir)->required()->check(CLI::ExistingDirectory);
    pl->add_option("--out", plot_out)->required();

    std::uint64_t verify_seed = 2020;
    auto* ve = app.add_subcommand("verify", "Run the invariant self-check");
    ve->add_option("--seed", verify_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*gen) return gen_map(gm);
        if (*runc) return run(ra);
        if (*sw) return sweep(config_path, workers, out_dir);
        if (*cu) return curves(sweep_dir);
        if (*pl) return plot(curves_dir, plot_out);
        if (*ve) return verify(verify_seed);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return usage;
}
