#include "flipsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "flipsim/csv.hpp"

namespace flipsim {

using nlohmann::json;

const char* to_string(ExperimentSet s) noexcept {
    return s == ExperimentSet::fixed ? "fixed" : "dynamic";
}

const char* to_string(StrategyKind k) noexcept {
    switch (k) {
        case StrategyKind::epsilon_greedy: return "epsilon-greedy";
        case StrategyKind::softmax: return "softmax";
        case StrategyKind::dynamic_epsilon: return "dynamic-epsilon";
    }
    return "?";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view text) {
    if (text == "epsilon-greedy") return StrategyKind::epsilon_greedy;
    if (text == "softmax") return StrategyKind::softmax;
    if (text == "dynamic-epsilon" || text == "dynamic") return StrategyKind::dynamic_epsilon;
    return std::nullopt;
}

namespace {

std::vector<double> tenths(int from) {
    std::vector<double> v;
    for (int i = from; i <= 10; ++i) v.push_back(static_cast<double>(i) / 10.0);
    return v;
}

}  // namespace

ExperimentConfig ExperimentConfig::fixed_defaults(StrategyKind kind) {
    ExperimentConfig c;
    c.experiment_set = ExperimentSet::fixed;
    c.strategy = kind;
    if (kind == StrategyKind::softmax) {
        c.exploration_values = tenths(1);
        c.exploration_values.insert(c.exploration_values.begin(), 0.01);
    } else {
        c.strategy = StrategyKind::epsilon_greedy;
        c.exploration_values = tenths(0);
    }
    c.attack_probabilities = {0.3};
    c.attack_start_episode = 1000;
    c.episodes = 3000;
    return c;
}

ExperimentConfig ExperimentConfig::dynamic_defaults() {
    ExperimentConfig c;
    c.experiment_set = ExperimentSet::dynamic;
    c.strategy = StrategyKind::dynamic_epsilon;
    c.exploration_values = {5000};
    c.attack_probabilities = tenths(0);
    c.attack_start_episode = 0;
    c.episodes = 5000;
    return c;
}

void ExperimentConfig::validate() const {
    const bool dynamic_kind = strategy == StrategyKind::dynamic_epsilon;
    if ((experiment_set == ExperimentSet::dynamic) != dynamic_kind) {
        throw ConfigError("the dynamic experiment set goes with the dynamic-epsilon strategy only");
    }
    if (exploration_values.empty()) throw ConfigError("exploration_values is empty");
    if (attack_probabilities.empty()) throw ConfigError("attack_probabilities is empty");
    if (episodes < 1) throw ConfigError("episodes must be positive");
    if (maps < 1 || seeds < 1) throw ConfigError("maps and seeds must be positive");
    if (attack_start_episode < 0) throw ConfigError("attack_start_episode must be nonnegative");
    if (smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
    if (!(breakage_threshold > 0.0 && breakage_threshold < 1.0)) {
        throw ConfigError("breakage_threshold must lie in (0, 1)");
    }
    if (!(cost_grid_step > 0.0)) throw ConfigError("cost_grid_step must be positive");
    for (double p : attack_probabilities) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("attack probabilities must lie in [0, 1]");
    }
    for (double v : exploration_values) {
        if (dynamic_kind && (v != std::floor(v) || v < static_cast<double>(episodes))) {
            throw ConfigError("dynamic horizons must be integers >= episodes");
        }
        try {
            learner_config(v).validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    try {
        map.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::size_t ExperimentConfig::cell_count() const noexcept {
    return exploration_values.size() * attack_probabilities.size() *
           static_cast<std::size_t>(maps) * static_cast<std::size_t>(seeds);
}

ExplorationStrategy ExperimentConfig::strategy_for(double value) const {
    switch (strategy) {
        case StrategyKind::epsilon_greedy: return EpsilonGreedy{value};
        case StrategyKind::softmax: return Softmax{value};
        case StrategyKind::dynamic_epsilon: return DynamicEpsilon{static_cast<int>(value)};
    }
    return EpsilonGreedy{value};
}

LearnerConfig ExperimentConfig::learner_config(double value) const {
    return LearnerConfig{alpha, gamma, strategy_for(value), max_steps_per_episode};
}

namespace {

json to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["experiment_set"] = to_string(c.experiment_set);
    j["strategy"] = to_string(c.strategy);
    j["exploration_values"] = c.exploration_values;
    j["attack_probabilities"] = c.attack_probabilities;
    j["attack_start_episode"] = c.attack_start_episode;
    j["episodes"] = c.episodes;
    j["maps"] = c.maps;
    j["seeds"] = c.seeds;
    j["learner"] = {{"alpha", c.alpha},
                    {"gamma", c.gamma},
                    {"max_steps_per_episode", c.max_steps_per_episode}};
    j["map"] = {{"width", c.map.width},
                {"height", c.map.height},
                {"obstacle_density", c.map.obstacle_density},
                {"goal_distance_min", c.map.goal_distance_min},
                {"goal_distance_max", c.map.goal_distance_max},
                {"slip_probability", c.map.slip_probability},
                {"max_attempts", c.map.max_attempts}};
    j["metrics"] = {{"smoothing_window", c.smoothing_window},
                    {"breakage_threshold", c.breakage_threshold},
                    {"cost_grid_step", c.cost_grid_step}};
    j["master_seed"] = c.master_seed;
    return j;
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
            throw ConfigError("unknown config key '" + where + key + "'");
        }
    }
}

template <class T>
void read_into(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j,
                   {"name", "experiment_set", "strategy", "exploration_values",
                    "attack_probabilities", "attack_start_episode", "episodes", "maps", "seeds",
                    "learner", "map", "metrics", "master_seed"},
                   "");

    const std::string set = j.value("experiment_set", std::string("fixed"));
    ExperimentConfig c;
    if (set == "dynamic") {
        c = ExperimentConfig::dynamic_defaults();
    } else if (set == "fixed") {
        StrategyKind kind = StrategyKind::epsilon_greedy;
        if (j.contains("strategy")) {
            const auto parsed = parse_strategy_kind(j.at("strategy").get<std::string>());
            if (!parsed) throw ConfigError("unknown strategy '" + j.at("strategy").dump() + "'");
            kind = *parsed;
        }
        c = ExperimentConfig::fixed_defaults(kind);
        c.strategy = kind;
    } else {
        throw ConfigError("experiment_set must be 'fixed' or 'dynamic'");
    }
    if (j.contains("strategy")) {
        const auto parsed = parse_strategy_kind(j.at("strategy").get<std::string>());
        if (!parsed) throw ConfigError("unknown strategy '" + j.at("strategy").dump() + "'");
        c.strategy = *parsed;
    }

    read_into(j, "name", c.name);
    read_into(j, "exploration_values", c.exploration_values);
    read_into(j, "attack_probabilities", c.attack_probabilities);
    read_into(j, "attack_start_episode", c.attack_start_episode);
    read_into(j, "episodes", c.episodes);
    read_into(j, "maps", c.maps);
    read_into(j, "seeds", c.seeds);
    read_into(j, "master_seed", c.master_seed);
    if (j.contains("learner")) {
        const json& l = j.at("learner");
        reject_unknown(l, {"alpha", "gamma", "max_steps_per_episode"}, "learner.");
        read_into(l, "alpha", c.alpha);
        read_into(l, "gamma", c.gamma);
        read_into(l, "max_steps_per_episode", c.max_steps_per_episode);
    }
    if (j.contains("map")) {
        const json& m = j.at("map");
        reject_unknown(m,
                       {"width", "height", "obstacle_density", "goal_distance_min",
                        "goal_distance_max", "slip_probability", "max_attempts"},
                       "map.");
        read_into(m, "width", c.map.width);
        read_into(m, "height", c.map.height);
        read_into(m, "obstacle_density", c.map.obstacle_density);
        read_into(m, "goal_distance_min", c.map.goal_distance_min);
        read_into(m, "goal_distance_max", c.map.goal_distance_max);
        read_into(m, "slip_probability", c.map.slip_probability);
        read_into(m, "max_attempts", c.map.max_attempts);
    }
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        reject_unknown(m, {"smoothing_window", "breakage_threshold", "cost_grid_step"},
                       "metrics.");
        read_into(m, "smoothing_window", c.smoothing_window);
        read_into(m, "breakage_threshold", c.breakage_threshold);
        read_into(m, "cost_grid_step", c.cost_grid_step);
    }
    c.validate();
    return c;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config has a wrongly typed value: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_config_json(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
    const std::string text = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return hex64(h);
}

void apply_env_overrides(ExperimentConfig& config) {
    if (const char* s = std::getenv(kMasterSeedEnv); s && *s) {
        try {
            config.master_seed = static_cast<std::uint64_t>(std::stoull(s));
        } catch (const std::exception&) {
            throw ConfigError(std::string(kMasterSeedEnv) + " is not an unsigned integer: " + s);
        }
    }
}

int workers_from_env(int fallback) {
    if (const char* s = std::getenv(kWorkersEnv); s && *s) {
        try {
            return std::stoi(s);
        } catch (const std::exception&) {
            throw ConfigError(std::string(kWorkersEnv) + " is not an integer: " + s);
        }
    }
    return fallback;
}

std::string value_tag(StrategyKind kind, double value) {
    switch (kind) {
        case StrategyKind::epsilon_greedy: return "eps" + csv::format_double(value);
        case StrategyKind::softmax: return "tau" + csv::format_double(value);
        case StrategyKind::dynamic_epsilon: return "L" + csv::format_double(value);
    }
    return csv::format_double(value);
}

std::string p_tag(double p) { return "p" + csv::format_double(p); }

std::string cell_id(const ExperimentConfig& config, const CellKey& key) {
    return value_tag(config.strategy, config.exploration_values.at(key.value_index)) + "_" +
           p_tag(config.attack_probabilities.at(key.p_index)) + "_m" +
           std::to_string(key.map_index) + "_r" + std::to_string(key.run_index);
}

std::vector<CellKey> plan(const ExperimentConfig& config) {
    std::vector<CellKey> keys;
    keys.reserve(config.cell_count());
    for (std::size_t v = 0; v < config.exploration_values.size(); ++v)
        for (std::size_t p = 0; p < config.attack_probabilities.size(); ++p)
            for (std::size_t m = 0; m < static_cast<std::size_t>(config.maps); ++m)
                for (std::size_t r = 0; r < static_cast<std::size_t>(config.seeds); ++r)
                    keys.push_back({v, p, m, r});
    return keys;
}

CellSeeds CellSeeds::derive(std::uint64_t master, std::uint64_t map_index,
                            std::uint64_t run_index) noexcept {
    return {derive_seed(master, map_index, run_index, StreamTag::env),
            derive_seed(master, map_index, run_index, StreamTag::learner),
            derive_seed(master, map_index, run_index, StreamTag::adversary)};
}

std::uint64_t map_seed(std::uint64_t master, std::uint64_t map_index) noexcept {
    return derive_seed(master, map_index, 0, StreamTag::map);
}

CellRun run_cell(const GridWorld& world, const CellSeeds& seeds, const LearnerConfig& learner,
                 int episodes, const std::optional<AdversaryConfig>& adversary,
                 std::vector<AttackLogEntry>* attack_log) {
    learner.validate();
    Rng env_rng(seeds.env);
    Rng learner_rng(seeds.learner);
    QTable q(world.num_states());

    IdentityChannel identity;
    std::optional<Adversary> adv;
    std::unique_ptr<RewardChannel> attacked;
    RewardChannel* channel = &identity;
    if (adversary) {
        AdversaryConfig ac = *adversary;
        ac.seed = seeds.adversary;
        adv.emplace(ac);
        attacked = attach(identity, *adv, attack_log);
        channel = attacked.get();
    }

    CellRun run;
    run.records.reserve(static_cast<std::size_t>(episodes));
    for (int e = 0; e < episodes; ++e) {
        run.records.push_back(
            run_episode(world, q, learner, e, *channel, EpisodeRngs{env_rng, learner_rng}));
    }
    if (adv) run.adversary = adv->state();
    return run;
}

namespace {

AdversaryConfig adversary_for(const ExperimentConfig& config, std::size_t p_index) {
    return AdversaryConfig{config.attack_probabilities.at(p_index), config.attack_start_episode, 0};
}

GridWorld cell_map(const ExperimentConfig& config, std::size_t map_index) {
    return generate_map(map_seed(config.master_seed, map_index), config.map);
}

}  // namespace

CellRun run_cell(const ExperimentConfig& config, const CellKey& key) {
    config.validate();
    std::optional<GridWorld> world;
    try {
        world.emplace(cell_map(config, key.map_index));
    } catch (const MapGenerationError& e) {
        throw CellError("cell " + cell_id(config, key) + ": " + e.what());
    }
    return run_cell(*world, CellSeeds::derive(config.master_seed, key.map_index, key.run_index),
                    config.learner_config(config.exploration_values.at(key.value_index)),
                    config.episodes, adversary_for(config, key.p_index));
}

const CellResult& SweepResult::cell(const CellKey& key) const {
    const auto it = std::find_if(cells.begin(), cells.end(),
                                 [&](const CellResult& c) { return c.key == key; });
    if (it == cells.end()) throw std::out_of_range("cell not part of this sweep");
    return *it;
}

std::size_t SweepResult::failures() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok(); }));
}

std::vector<std::vector<EpisodeRecord>> SweepResult::replicates(std::size_t value_index,
                                                                std::size_t p_index) const {
    std::vector<std::vector<EpisodeRecord>> out;
    for (const auto& c : cells) {
        if (c.ok() && c.key.value_index == value_index && c.key.p_index == p_index) {
            out.push_back(c.records);
        }
    }
    return out;
}

Curve SweepResult::learning_curve(std::size_t value_index, std::size_t p_index) const {
    return aggregate(replicates(value_index, p_index), config.smoothing_window);
}

Curve SweepResult::cost_curve(std::size_t value_index, std::size_t p_index) const {
    std::vector<Curve> per_replicate;
    for (const auto& rep : replicates(value_index, p_index)) {
        per_replicate.push_back(
            performance_vs_cost(rep, config.smoothing_window, config.attack_start_episode));
    }
    return aggregate_cost_curves(per_replicate, config.cost_grid_step);
}

namespace {

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    std::size_t n_threads = workers > 0 ? static_cast<std::size_t>(workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, std::max<std::size_t>(count, 1));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config, int workers) {
    config.validate();
    SweepResult result;
    result.config = config;

    const auto n_maps = static_cast<std::size_t>(config.maps);
    std::vector<std::optional<GridWorld>> worlds(n_maps);
    std::vector<std::string> map_errors(n_maps);
    parallel_for(n_maps, workers, [&](std::size_t m) {
        try {
            worlds[m].emplace(cell_map(config, m));
        } catch (const MapGenerationError& e) {
            map_errors[m] = e.what();
        }
    });

    const auto keys = plan(config);
    result.cells.resize(keys.size());
    parallel_for(keys.size(), workers, [&](std::size_t i) {
        const CellKey& key = keys[i];
        CellResult& slot = result.cells[i];
        slot.key = key;
        if (!worlds[key.map_index]) {
            slot.error = "cell " + cell_id(config, key) + ": " + map_errors[key.map_index];
            return;
        }
        try {
            CellRun run = run_cell(
                *worlds[key.map_index],
                CellSeeds::derive(config.master_seed, key.map_index, key.run_index),
                config.learner_config(config.exploration_values[key.value_index]),
                config.episodes, adversary_for(config, key.p_index));
            slot.records = std::move(run.records);
            slot.adversary = run.adversary;
        } catch (const std::exception& e) {
            slot.error = "cell " + cell_id(config, key) + ": " + e.what();
        }
    });
    return result;
}

double pre_onset_plateau(std::span<const double> smoothed, int onset, std::size_t plateau_window) {
    if (onset <= 0 || static_cast<std::size_t>(onset) > smoothed.size()) {
        throw std::invalid_argument("plateau needs at least one episode before the onset");
    }
    const std::size_t end = static_cast<std::size_t>(onset);
    const std::size_t begin = end > plateau_window ? end - plateau_window : 0;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += smoothed[i];
    return sum / static_cast<double>(end - begin);
}

std::optional<std::uint64_t> attacks_to_breakage(std::span<const EpisodeRecord> records,
                                                 const BreakageCriteria& criteria) {
    if (criteria.onset <= 0 || static_cast<std::size_t>(criteria.onset) >= records.size()) {
        throw std::invalid_argument("attacks_to_breakage needs episodes on both sides of the onset");
    }
    const auto smoothed = sliding_window_smooth(true_returns(records), criteria.window);
    const double level =
        criteria.threshold * pre_onset_plateau(smoothed, criteria.onset, criteria.plateau_window);
    std::size_t run = 0;
    for (std::size_t e = static_cast<std::size_t>(criteria.onset); e < smoothed.size(); ++e) {
        run = smoothed[e] < level ? run + 1 : 0;
        if (run == criteria.persistence) {
            return records[e + 1 - criteria.persistence].cumulative_attacks;
        }
    }
    return std::nullopt;
}

std::optional<double> median_breakage(std::vector<std::optional<std::uint64_t>> values) {
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
        if (!a) return false;
        if (!b) return true;
        return *a < *b;
    });
    const std::size_t n = values.size();
    const auto& hi = values[n / 2];
    if (n % 2 == 1) {
        if (!hi) return std::nullopt;
        return static_cast<double>(*hi);
    }
    const auto& lo = values[n / 2 - 1];
    if (!lo || !hi) return std::nullopt;
    return 0.5 * (static_cast<double>(*lo) + static_cast<double>(*hi));
}

BreakageCriteria breakage_criteria(const ExperimentConfig& config) {
    BreakageCriteria c;
    c.onset = config.attack_start_episode;
    c.threshold = config.breakage_threshold;
    c.window = config.smoothing_window;
    c.plateau_window = config.smoothing_window;
    c.persistence = config.smoothing_window;
    return c;
}

std::string code_version() {
#ifdef FLIPSIM_VERSION
    return FLIPSIM_VERSION;
#else
    return "unknown";
#endif
}

std::string sweep_id(const ExperimentConfig& config) {
    const std::string hash = config_hash(config).substr(0, 12);
    return config.name.empty() ? "sweep-" + hash : config.name + "-" + hash;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

template <class Fn>
void write_stream(const std::filesystem::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fn(out);
}

}  // namespace

std::filesystem::path write_sweep(const SweepResult& result, const std::filesystem::path& root) {
    const auto& config = result.config;
    const auto dir = root / sweep_id(config);
    std::filesystem::create_directories(dir / "cells");

    json failed = json::array();
    for (const auto& cell : result.cells) {
        if (!cell.ok()) {
            failed.push_back({{"cell", cell_id(config, cell.key)}, {"error", cell.error}});
            continue;
        }
        write_stream(dir / "cells" / (cell_id(config, cell.key) + ".csv"),
                     [&](std::ostream& out) { write_records_csv(out, cell.records); });
    }

    json manifest;
    manifest["sweep_id"] = sweep_id(config);
    manifest["config"] = to_json(config);
    manifest["config_hash"] = config_hash(config);
    manifest["code_version"] = code_version();
    manifest["cell_count"] = config.cell_count();
    manifest["failed_cells"] = failed;
    const auto bc = breakage_criteria(config);
    manifest["breakage"] = {{"threshold", bc.threshold},
                            {"plateau_episodes",
                             {std::max(0, bc.onset - static_cast<int>(bc.plateau_window)),
                              bc.onset - 1}},
                            {"persistence", bc.persistence},
                            {"smoothing_window", bc.window}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    write_curves(result, dir);
    return dir;
}

void write_curves(const SweepResult& result, const std::filesystem::path& sweep_dir) {
    const auto& config = result.config;
    const auto curves_dir = sweep_dir / "curves";
    std::filesystem::create_directories(curves_dir);
    json index;
    index["experiment_set"] = to_string(config.experiment_set);
    index["strategy"] = to_string(config.strategy);
    index["attack_start_episode"] = config.attack_start_episode;
    index["curves"] = json::array();

    const bool has_onset = config.attack_start_episode > 0 &&
                           config.attack_start_episode < config.episodes;
    std::ostringstream breakage;
    breakage << "value,p,map,run,plateau,attacks_to_breakage\n";

    for (std::size_t v = 0; v < config.exploration_values.size(); ++v) {
        for (std::size_t p = 0; p < config.attack_probabilities.size(); ++p) {
            const double value = config.exploration_values[v];
            const double prob = config.attack_probabilities[p];
            const std::string tag = value_tag(config.strategy, value) + "_" + p_tag(prob);
            const auto reps = result.replicates(v, p);
            if (reps.empty()) continue;

            auto add = [&](const char* kind, const std::string& file, const Curve& curve) {
                write_stream(curves_dir / file,
                             [&](std::ostream& out) { write_curve_csv(out, curve); });
                index["curves"].push_back(
                    {{"kind", kind}, {"value", value}, {"p", prob}, {"file", file}});
            };
            add("learning", "learning_" + tag + ".csv", aggregate(reps, config.smoothing_window));
            add("cost", "cost_" + tag + ".csv", result.cost_curve(v, p));
            add("cost_mean_x", "cost_mean_x_" + tag + ".csv",
                performance_vs_mean_cost(reps, config.smoothing_window,
                                         config.attack_start_episode));

            if (has_onset) {
                const auto bc = breakage_criteria(config);
                for (const auto& cell : result.cells) {
                    if (!cell.ok() || cell.key.value_index != v || cell.key.p_index != p) continue;
                    const auto smoothed =
                        sliding_window_smooth(true_returns(cell.records), bc.window);
                    const auto broken = attacks_to_breakage(cell.records, bc);
                    breakage << csv::format_double(value) << ',' << csv::format_double(prob)
                             << ',' << cell.key.map_index << ',' << cell.key.run_index << ','
                             << csv::format_double(
                                    pre_onset_plateau(smoothed, bc.onset, bc.plateau_window))
                             << ',' << (broken ? std::to_string(*broken) : "not_broken") << '\n';
                }
            }
        }
    }
    if (has_onset) write_text(curves_dir / "breakage.csv", breakage.str());
    write_text(curves_dir / "index.json", index.dump(2) + "\n");
}

SweepResult load_sweep(const std::filesystem::path& sweep_dir) {
    std::ifstream in(sweep_dir / "manifest.json");
    if (!in) throw std::runtime_error("no manifest.json in " + sweep_dir.string());
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("manifest.json is not valid JSON: ") + e.what());
    }
    SweepResult result;
    result.config = parse_config(manifest.at("config").dump());
    for (const auto& key : plan(result.config)) {
        CellResult cell;
        cell.key = key;
        const auto id = cell_id(result.config, key);
        std::ifstream cin(sweep_dir / "cells" / (id + ".csv"), std::ios::binary);
        if (!cin) {
            cell.error = "missing cell " + id;
        } else {
            try {
                cell.records = read_records_csv(cin);
                if (cell.records.size() != static_cast<std::size_t>(result.config.episodes)) {
                    cell.error = "cell " + id + " has " + std::to_string(cell.records.size()) +
                                 " episodes, expected " + std::to_string(result.config.episodes);
                } else {
                    cell.adversary.attacks_performed = cell.records.back().cumulative_attacks;
                }
            } catch (const std::exception& e) {
                cell.error = "cell " + id + ": " + e.what();
            }
        }
        result.cells.push_back(std::move(cell));
    }
    return result;
}

}  // namespace flipsim
