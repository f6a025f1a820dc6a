#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flipsim/adversary.hpp"
#include "flipsim/gridworld.hpp"
#include "flipsim/metrics.hpp"
#include "flipsim/sarsa.hpp"

namespace flipsim {

enum class ExperimentSet { fixed, dynamic };
enum class StrategyKind { epsilon_greedy, softmax, dynamic_epsilon };

const char* to_string(ExperimentSet s) noexcept;
const char* to_string(StrategyKind k) noexcept;
std::optional<StrategyKind> parse_strategy_kind(std::string_view text);

/// Environment variables read by apply_env_overrides / workers_from_env.
inline constexpr const char* kMasterSeedEnv = "FLIPSIM_MASTER_SEED";
inline constexpr const char* kWorkersEnv = "FLIPSIM_WORKERS";

/// Full description of a sweep. A cell is one (exploration value, attack
/// probability, map, run) combination. For the dynamic set the exploration
/// values are decay horizons L.
struct ExperimentConfig {
    std::string name;
    ExperimentSet experiment_set = ExperimentSet::fixed;
    StrategyKind strategy = StrategyKind::epsilon_greedy;
    std::vector<double> exploration_values;
    std::vector<double> attack_probabilities;
    int attack_start_episode = 1000;
    int episodes = 3000;
    int maps = 50;
    int seeds = 10;

    double alpha = 0.125;
    double gamma = 0.95;
    int max_steps_per_episode = 500;

    MapGenSpec map;

    std::size_t smoothing_window = 100;
    double breakage_threshold = 0.2;
    double cost_grid_step = 10.0;

    std::uint64_t master_seed = 1;

    /// 11 epsilon values 0.0..1.0 (or tau 0.01, 0.1..1.0), p = 0.3 from
    /// episode 1000, 3000 episodes, 50 maps x 10 seeds.
    static ExperimentConfig fixed_defaults(StrategyKind kind = StrategyKind::epsilon_greedy);
    /// L = 5000, p = 0.0..1.0, attacks from episode 0, 5000 episodes.
    static ExperimentConfig dynamic_defaults();

    void validate() const;
    std::size_t cell_count() const noexcept;
    ExplorationStrategy strategy_for(double value) const;
    LearnerConfig learner_config(double value) const;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JSON config. Absent keys take the defaults of the chosen experiment set
/// and strategy; unknown keys are rejected.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_config_json(const ExperimentConfig& config);
/// Hex FNV-1a hash of the canonical JSON form.
std::string config_hash(const ExperimentConfig& config);

void apply_env_overrides(ExperimentConfig& config);
int workers_from_env(int fallback);

struct CellKey {
    std::size_t value_index = 0;
    std::size_t p_index = 0;
    std::size_t map_index = 0;
    std::size_t run_index = 0;

    friend bool operator==(const CellKey&, const CellKey&) = default;
};

std::string value_tag(StrategyKind kind, double value);
std::string p_tag(double p);
std::string cell_id(const ExperimentConfig& config, const CellKey& key);

/// Cells in the canonical (value, p, map, run) order.
std::vector<CellKey> plan(const ExperimentConfig& config);

struct CellSeeds {
    std::uint64_t env = 0;
    std::uint64_t learner = 0;
    std::uint64_t adversary = 0;

    static CellSeeds derive(std::uint64_t master, std::uint64_t map_index,
                            std::uint64_t run_index) noexcept;
};

std::uint64_t map_seed(std::uint64_t master, std::uint64_t map_index) noexcept;

struct CellRun {
    std::vector<EpisodeRecord> records;
    AdversaryState adversary;
};

/// Trains a fresh learner on `world` for `episodes` episodes. With no
/// adversary config the learner sees the identity channel.
CellRun run_cell(const GridWorld& world, const CellSeeds& seeds, const LearnerConfig& learner,
                 int episodes, const std::optional<AdversaryConfig>& adversary,
                 std::vector<AttackLogEntry>* attack_log = nullptr);

class CellError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Builds the cell's map from the derived map seed and runs it. Map
/// generation failures are rethrown as CellError naming the cell.
CellRun run_cell(const ExperimentConfig& config, const CellKey& key);

struct CellResult {
    CellKey key;
    std::vector<EpisodeRecord> records;
    AdversaryState adversary;
    std::string error;  // empty when the cell completed

    bool ok() const noexcept { return error.empty(); }
};

struct SweepResult {
    ExperimentConfig config;
    std::vector<CellResult> cells;  // plan() order

    const CellResult& cell(const CellKey& key) const;
    std::size_t failures() const noexcept;

    /// Completed cells' records for one (value, p) configuration.
    std::vector<std::vector<EpisodeRecord>> replicates(std::size_t value_index,
                                                       std::size_t p_index) const;
    Curve learning_curve(std::size_t value_index, std::size_t p_index) const;
    Curve cost_curve(std::size_t value_index, std::size_t p_index) const;
};

/// Runs every planned cell on `workers` threads (<= 0 means hardware
/// concurrency). The result does not depend on the worker count.
SweepResult run_sweep(const ExperimentConfig& config, int workers = 1);

struct BreakageCriteria {
    int onset = 1000;
    double threshold = 0.2;            // fraction of the pre-onset plateau
    std::size_t window = 100;          // smoothing window
    std::size_t plateau_window = 100;  // episodes [onset - plateau_window, onset)
    std::size_t persistence = 100;     // consecutive episodes below threshold
};

/// Mean smoothed value over the plateau window just before the onset.
double pre_onset_plateau(std::span<const double> smoothed, int onset, std::size_t plateau_window);

/// Cumulative attacks at the first post-onset episode whose smoothed true
/// return drops below threshold * plateau and stays there for `persistence`
/// episodes. std::nullopt means the policy was never broken.
std::optional<std::uint64_t> attacks_to_breakage(std::span<const EpisodeRecord> records,
                                                 const BreakageCriteria& criteria);

/// Median where "not broken" ranks above every finite count. std::nullopt
/// when the median itself is "not broken" or the input is empty.
std::optional<double> median_breakage(std::vector<std::optional<std::uint64_t>> values);

BreakageCriteria breakage_criteria(const ExperimentConfig& config);

/// results layout under `root`:
///   <sweep-id>/manifest.json, <sweep-id>/cells/<cell-id>.csv, <sweep-id>/curves/*.csv
/// Returns the sweep directory.
std::filesystem::path write_sweep(const SweepResult& result, const std::filesystem::path& root);
std::string sweep_id(const ExperimentConfig& config);

/// Learning curves, cost curves, the breakage table and curves/index.json.
void write_curves(const SweepResult& result, const std::filesystem::path& sweep_dir);

/// Reloads a sweep written by write_sweep. Cells whose CSV is missing come
/// back with an error naming the cell id.
SweepResult load_sweep(const std::filesystem::path& sweep_dir);

std::string code_version();

}  // namespace flipsim
