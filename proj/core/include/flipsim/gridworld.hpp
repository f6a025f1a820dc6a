#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flipsim/rng.hpp"

namespace flipsim {

struct Cell {
    int x = 0;  // column
    int y = 0;  // row, 0 is the first row of the map file

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Action set. The numeric order is also the column order of the Q-table
/// dump and of every per-action array in the library.
enum class Direction : std::uint8_t { up = 0, down = 1, left = 2, right = 3 };

inline constexpr std::size_t kNumActions = 4;
inline constexpr std::array<Direction, kNumActions> kDirections{
    Direction::up, Direction::down, Direction::left, Direction::right};

constexpr std::size_t index_of(Direction d) noexcept { return static_cast<std::size_t>(d); }
constexpr Direction direction_from_index(std::size_t i) noexcept {
    return static_cast<Direction>(i);
}
Cell offset(Cell c, Direction d) noexcept;
const char* to_string(Direction d) noexcept;

enum class CellKind : std::uint8_t { free, obstacle, start, goal };

/// Reward values a goal may carry, in map-file digit order '1', '2', '3'.
inline constexpr std::array<double, 3> kGoalRewards{0.25, 0.5, 1.0};

struct Goal {
    Cell cell;
    double reward = 0.0;

    friend bool operator==(const Goal&, const Goal&) = default;
};

using StateIndex = std::size_t;

/// Immutable gridworld with goal-only rewards and a slip transition model.
///
/// The constructor enforces the structural invariants (a single start,
/// goal cells consistent with the goal list, distinct goal rewards drawn
/// from kGoalRewards). The distance band enforced by the generator is
/// checked separately by check_generated_map so that hand-built fixtures
/// can break it.
class GridWorld {
public:
    GridWorld(int width, int height, std::vector<CellKind> cells, std::vector<Goal> goals,
              double slip_probability);

    /// Builds a world from a row-major character layout ('.', '#', 'S', '1'..'3').
    static GridWorld from_rows(const std::vector<std::string>& rows, double slip_probability);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t num_states() const noexcept { return cells_.size(); }
    Cell start() const noexcept { return start_; }
    const std::vector<Goal>& goals() const noexcept { return goals_; }
    double slip_probability() const noexcept { return slip_; }

    bool in_bounds(Cell c) const noexcept;
    CellKind kind(Cell c) const;
    bool is_obstacle(Cell c) const { return kind(c) == CellKind::obstacle; }
    bool is_goal(Cell c) const { return kind(c) == CellKind::goal; }
    std::optional<double> goal_reward(Cell c) const;

    StateIndex state_index(Cell c) const noexcept {
        return static_cast<StateIndex>(c.y) * static_cast<StateIndex>(width_) +
               static_cast<StateIndex>(c.x);
    }
    Cell cell_at(StateIndex s) const noexcept {
        return Cell{static_cast<int>(s % static_cast<StateIndex>(width_)),
                    static_cast<int>(s / static_cast<StateIndex>(width_))};
    }

    /// Cell reached by moving in d; the agent stays put when the target is
    /// off-grid or an obstacle.
    Cell move(Cell from, Direction d) const noexcept;

    friend bool operator==(const GridWorld&, const GridWorld&) = default;

private:
    int width_;
    int height_;
    std::vector<CellKind> cells_;
    std::vector<Goal> goals_;
    Cell start_;
    double slip_;
};

struct StepOutcome {
    Cell next_state;
    double reward = 0.0;
    bool terminal = false;
};

/// One environment transition. With probability 1 - slip the intended
/// direction is used, otherwise one of the three other directions chosen
/// uniformly; blocking is applied after the direction is resolved.
StepOutcome step(const GridWorld& world, Cell state, Direction action, Rng& rng);

/// Exact 4-neighbour shortest path that only avoids obstacles.
/// Returns std::nullopt when `to` is unreachable.
std::optional<int> shortest_path_length(const GridWorld& world, Cell from, Cell to);

/// BFS distances from `from` to every cell (-1 when unreachable).
/// Cells listed in `extra_blocked` are treated as walls (except `from`).
std::vector<int> distance_field(const GridWorld& world, Cell from,
                                const std::vector<Cell>& extra_blocked = {});

struct MapGenSpec {
    int width = 20;
    int height = 20;
    double obstacle_density = 0.2;  // fraction of cells other than start and goals
    int goal_distance_min = 20;
    int goal_distance_max = 25;
    double slip_probability = 0.1;
    int max_attempts = 1000;

    void validate() const;
};

class MapGenerationError : public std::runtime_error {
public:
    MapGenerationError(std::uint64_t seed, const MapGenSpec& spec, const std::string& why);
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/// Random map with three goals (one per reward value) whose shortest-path
/// distance from the start lies in [goal_distance_min, goal_distance_max],
/// also when the other goals are treated as walls. Deterministic in seed.
GridWorld generate_map(std::uint64_t seed, const MapGenSpec& spec = {});

/// Empty string when the world satisfies the generator contract for spec,
/// otherwise a description of the first violation.
std::string check_generated_map(const GridWorld& world, const MapGenSpec& spec);

class MapParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text format: "width height\n" followed by `height` rows of `width`
/// characters, each row terminated by '\n'.
std::string to_map_text(const GridWorld& world);
GridWorld parse_map(std::string_view text, double slip_probability = 0.1);

GridWorld load_map(const std::filesystem::path& path, double slip_probability = 0.1);
void save_map(const GridWorld& world, const std::filesystem::path& path);

}  // namespace flipsim
