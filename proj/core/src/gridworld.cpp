#include "flipsim/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace flipsim {

Cell offset(Cell c, Direction d) noexcept {
    switch (d) {
        case Direction::up: return {c.x, c.y - 1};
        case Direction::down: return {c.x, c.y + 1};
        case Direction::left: return {c.x - 1, c.y};
        case Direction::right: return {c.x + 1, c.y};
    }
    return c;
}

const char* to_string(Direction d) noexcept {
    switch (d) {
        case Direction::up: return "up";
        case Direction::down: return "down";
        case Direction::left: return "left";
        case Direction::right: return "right";
    }
    return "?";
}

namespace {

std::optional<std::size_t> reward_slot(double reward) {
    for (std::size_t i = 0; i < kGoalRewards.size(); ++i) {
        if (reward == kGoalRewards[i]) return i;
    }
    return std::nullopt;
}

char cell_char(CellKind kind) {
    switch (kind) {
        case CellKind::free: return '.';
        case CellKind::obstacle: return '#';
        case CellKind::start: return 'S';
        case CellKind::goal: return 'G';
    }
    return '?';
}

}  // namespace

GridWorld::GridWorld(int width, int height, std::vector<CellKind> cells, std::vector<Goal> goals,
                     double slip_probability)
    : width_(width), height_(height), cells_(std::move(cells)), goals_(std::move(goals)),
      slip_(slip_probability) {
    if (width_ <= 0 || height_ <= 0) {
        throw std::invalid_argument("grid dimensions must be positive");
    }
    if (cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
        throw std::invalid_argument("cell count does not match width*height");
    }
    if (!(slip_ >= 0.0 && slip_ <= 1.0)) {
        throw std::invalid_argument("slip probability must lie in [0, 1]");
    }
    const auto starts = std::count(cells_.begin(), cells_.end(), CellKind::start);
    if (starts != 1) {
        throw std::invalid_argument("grid must contain exactly one start cell, found " +
                                    std::to_string(starts));
    }
    start_ = cell_at(static_cast<StateIndex>(
        std::find(cells_.begin(), cells_.end(), CellKind::start) - cells_.begin()));

    const auto goal_cells = std::count(cells_.begin(), cells_.end(), CellKind::goal);
    if (static_cast<std::size_t>(goal_cells) != goals_.size()) {
        throw std::invalid_argument("goal list does not match goal cells");
    }
    std::array<bool, kGoalRewards.size()> used{};
    for (const Goal& g : goals_) {
        if (!in_bounds(g.cell) || cells_[state_index(g.cell)] != CellKind::goal) {
            throw std::invalid_argument("goal listed on a non-goal cell");
        }
        const auto slot = reward_slot(g.reward);
        if (!slot) {
            throw std::invalid_argument("goal reward must be one of 0.25, 0.5, 1.0");
        }
        if (used[*slot]) {
            throw std::invalid_argument("goal rewards must be pairwise distinct");
        }
        used[*slot] = true;
    }
    std::sort(goals_.begin(), goals_.end(), [this](const Goal& a, const Goal& b) {
        return state_index(a.cell) < state_index(b.cell);
    });
}

GridWorld GridWorld::from_rows(const std::vector<std::string>& rows, double slip_probability) {
    if (rows.empty()) throw MapParseError("map has no rows");
    const int height = static_cast<int>(rows.size());
    const int width = static_cast<int>(rows.front().size());
    std::vector<CellKind> cells;
    cells.reserve(static_cast<std::size_t>(width) * rows.size());
    std::vector<Goal> goals;
    for (int y = 0; y < height; ++y) {
        const std::string& row = rows[static_cast<std::size_t>(y)];
        if (static_cast<int>(row.size()) != width) {
            throw MapParseError("row " + std::to_string(y) + " has length " +
                                std::to_string(row.size()) + ", expected " +
                                std::to_string(width));
        }
        for (int x = 0; x < width; ++x) {
            const char ch = row[static_cast<std::size_t>(x)];
            switch (ch) {
                case '.': cells.push_back(CellKind::free); break;
                case '#': cells.push_back(CellKind::obstacle); break;
                case 'S': cells.push_back(CellKind::start); break;
                case '1':
                case '2':
                case '3':
                    cells.push_back(CellKind::goal);
                    goals.push_back({{x, y}, kGoalRewards[static_cast<std::size_t>(ch - '1')]});
                    break;
                default:
                    throw MapParseError("unexpected character '" + std::string(1, ch) +
                                        "' at row " + std::to_string(y) + ", column " +
                                        std::to_string(x));
            }
        }
    }
    try {
        return GridWorld(width, height, std::move(cells), std::move(goals), slip_probability);
    } catch (const std::invalid_argument& e) {
        throw MapParseError(e.what());
    }
}

bool GridWorld::in_bounds(Cell c) const noexcept {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
}

CellKind GridWorld::kind(Cell c) const {
    if (!in_bounds(c)) throw std::out_of_range("cell outside the grid");
    return cells_[state_index(c)];
}

std::optional<double> GridWorld::goal_reward(Cell c) const {
    for (const Goal& g : goals_) {
        if (g.cell == c) return g.reward;
    }
    return std::nullopt;
}

Cell GridWorld::move(Cell from, Direction d) const noexcept {
    const Cell to = offset(from, d);
    if (!in_bounds(to) || cells_[state_index(to)] == CellKind::obstacle) return from;
    return to;
}

StepOutcome step(const GridWorld& world, Cell state, Direction action, Rng& rng) {
    Direction actual = action;
    if (uniform01(rng) < world.slip_probability()) {
        // One of the three remaining directions, uniformly.
        std::size_t k = uniform_index(rng, kNumActions - 1);
        if (k >= index_of(action)) ++k;
        actual = direction_from_index(k);
    }
    StepOutcome out;
    out.next_state = world.move(state, actual);
    if (world.is_goal(out.next_state)) {
        out.reward = *world.goal_reward(out.next_state);
        out.terminal = true;
    }
    return out;
}

std::vector<int> distance_field(const GridWorld& world, Cell from,
                                const std::vector<Cell>& extra_blocked) {
    std::vector<int> dist(world.num_states(), -1);
    if (!world.in_bounds(from) || world.is_obstacle(from)) return dist;
    std::vector<bool> blocked(world.num_states(), false);
    for (const Cell& c : extra_blocked) {
        if (world.in_bounds(c)) blocked[world.state_index(c)] = true;
    }
    std::deque<Cell> frontier{from};
    dist[world.state_index(from)] = 0;
    while (!frontier.empty()) {
        const Cell c = frontier.front();
        frontier.pop_front();
        const int d = dist[world.state_index(c)];
        for (Direction dir : kDirections) {
            const Cell n = offset(c, dir);
            if (!world.in_bounds(n) || world.is_obstacle(n)) continue;
            const StateIndex ni = world.state_index(n);
            if (dist[ni] >= 0) continue;
            dist[ni] = d + 1;
            // A blocked cell gets its distance but is not expanded.
            if (!blocked[ni]) frontier.push_back(n);
        }
    }
    return dist;
}

std::optional<int> shortest_path_length(const GridWorld& world, Cell from, Cell to) {
    if (!world.in_bounds(from) || !world.in_bounds(to)) {
        throw std::out_of_range("shortest_path_length: cell outside the grid");
    }
    const auto dist = distance_field(world, from);
    const int d = dist[world.state_index(to)];
    if (d < 0) return std::nullopt;
    return d;
}

void MapGenSpec::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("map dimensions must be positive");
    if (!(obstacle_density >= 0.0 && obstacle_density < 1.0)) {
        throw std::invalid_argument("obstacle density must lie in [0, 1)");
    }
    if (goal_distance_min < 1 || goal_distance_max < goal_distance_min) {
        throw std::invalid_argument("goal distance band must satisfy 1 <= min <= max");
    }
    if (!(slip_probability >= 0.0 && slip_probability <= 1.0)) {
        throw std::invalid_argument("slip probability must lie in [0, 1]");
    }
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
    if (width * height < 4) throw std::invalid_argument("map too small for a start and 3 goals");
}

namespace {

std::string describe(std::uint64_t seed, const MapGenSpec& spec, const std::string& why) {
    std::ostringstream os;
    os << "map generation failed (seed=" << seed << ", " << spec.width << "x" << spec.height
       << ", obstacle_density=" << spec.obstacle_density << ", goal_distance=["
       << spec.goal_distance_min << "," << spec.goal_distance_max
       << "], attempts=" << spec.max_attempts << "): " << why;
    return os.str();
}

template <class T>
void partial_shuffle(std::vector<T>& v, std::size_t k, Rng& rng) {
    for (std::size_t i = 0; i < k && i + 1 < v.size(); ++i) {
        const std::size_t j = i + uniform_index(rng, v.size() - i);
        std::swap(v[i], v[j]);
    }
}

}  // namespace

MapGenerationError::MapGenerationError(std::uint64_t seed, const MapGenSpec& spec,
                                       const std::string& why)
    : std::runtime_error(describe(seed, spec, why)), seed_(seed) {}

GridWorld generate_map(std::uint64_t seed, const MapGenSpec& spec) {
    spec.validate();
    Rng rng(seed);
    const std::size_t n = static_cast<std::size_t>(spec.width) * static_cast<std::size_t>(spec.height);
    const std::size_t n_obstacles = static_cast<std::size_t>(
        std::llround(spec.obstacle_density * static_cast<double>(n - 1 - kGoalRewards.size())));
    constexpr int kTriplesPerLayout = 16;

    for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
        std::vector<CellKind> cells(n, CellKind::free);
        const std::size_t start = uniform_index(rng, n);
        cells[start] = CellKind::start;

        std::vector<std::size_t> others;
        others.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i != start) others.push_back(i);
        }
        partial_shuffle(others, n_obstacles, rng);
        for (std::size_t i = 0; i < n_obstacles; ++i) cells[others[i]] = CellKind::obstacle;

        // Distances are computed on the layout without goals; goal cells are
        // walkable, so the band check below re-runs with the other goals walled.
        const GridWorld layout(spec.width, spec.height, cells, {}, spec.slip_probability);
        const auto dist = distance_field(layout, layout.start());
        std::vector<StateIndex> band;
        for (StateIndex s = 0; s < n; ++s) {
            if (cells[s] == CellKind::free && dist[s] >= spec.goal_distance_min &&
                dist[s] <= spec.goal_distance_max) {
                band.push_back(s);
            }
        }
        if (band.size() < kGoalRewards.size()) continue;

        for (int t = 0; t < kTriplesPerLayout; ++t) {
            partial_shuffle(band, kGoalRewards.size(), rng);
            std::array<std::size_t, 3> order{0, 1, 2};
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                const std::size_t j = i + uniform_index(rng, order.size() - i);
                std::swap(order[i], order[j]);
            }
            auto goal_cells = cells;
            std::vector<Goal> goals;
            for (std::size_t g = 0; g < kGoalRewards.size(); ++g) {
                goal_cells[band[g]] = CellKind::goal;
                goals.push_back({layout.cell_at(band[g]), kGoalRewards[order[g]]});
            }
            GridWorld world(spec.width, spec.height, std::move(goal_cells), std::move(goals),
                            spec.slip_probability);
            if (check_generated_map(world, spec).empty()) return world;
        }
    }
    throw MapGenerationError(seed, spec, "no layout satisfied the goal distance band");
}

std::string check_generated_map(const GridWorld& world, const MapGenSpec& spec) {
    if (world.width() != spec.width || world.height() != spec.height) {
        return "dimensions differ from the generation spec";
    }
    if (world.goals().size() != kGoalRewards.size()) {
        return "expected exactly 3 goals, found " + std::to_string(world.goals().size());
    }
    std::vector<Cell> goal_cells;
    for (const Goal& g : world.goals()) goal_cells.push_back(g.cell);
    for (const Goal& g : world.goals()) {
        const auto d = shortest_path_length(world, world.start(), g.cell);
        if (!d || *d < spec.goal_distance_min || *d > spec.goal_distance_max) {
            return "goal at (" + std::to_string(g.cell.x) + "," + std::to_string(g.cell.y) +
                   ") has distance " + (d ? std::to_string(*d) : std::string("unreachable"));
        }
        std::vector<Cell> walls;
        for (const Cell& c : goal_cells) {
            if (c != g.cell) walls.push_back(c);
        }
        const int dw = distance_field(world, world.start(), walls)[world.state_index(g.cell)];
        if (dw < spec.goal_distance_min || dw > spec.goal_distance_max) {
            return "goal at (" + std::to_string(g.cell.x) + "," + std::to_string(g.cell.y) +
                   ") leaves the band once the other goals are terminal";
        }
    }
    return {};
}

std::string to_map_text(const GridWorld& world) {
    std::string out = std::to_string(world.width()) + " " + std::to_string(world.height()) + "\n";
    for (int y = 0; y < world.height(); ++y) {
        for (int x = 0; x < world.width(); ++x) {
            const Cell c{x, y};
            const CellKind k = world.kind(c);
            if (k == CellKind::goal) {
                const double r = *world.goal_reward(c);
                out.push_back(static_cast<char>('1' + *reward_slot(r)));
            } else {
                out.push_back(cell_char(k));
            }
        }
        out.push_back('\n');
    }
    return out;
}

GridWorld parse_map(std::string_view text, double slip_probability) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            throw MapParseError("map text must end every line with a newline");
        }
        lines.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    if (lines.empty()) throw MapParseError("empty map text");

    std::istringstream header(lines.front());
    int width = 0;
    int height = 0;
    std::string rest;
    if (!(header >> width >> height) || (header >> rest) || width <= 0 || height <= 0) {
        throw MapParseError("bad header line '" + lines.front() + "', expected 'width height'");
    }
    if (lines.front() != std::to_string(width) + " " + std::to_string(height)) {
        throw MapParseError("header must be exactly '<width> <height>'");
    }
    if (lines.size() - 1 != static_cast<std::size_t>(height)) {
        throw MapParseError("expected " + std::to_string(height) + " rows, found " +
                            std::to_string(lines.size() - 1));
    }
    std::vector<std::string> rows(lines.begin() + 1, lines.end());
    for (std::size_t y = 0; y < rows.size(); ++y) {
        if (rows[y].size() != static_cast<std::size_t>(width)) {
            throw MapParseError("row " + std::to_string(y) + " has length " +
                                std::to_string(rows[y].size()) + ", expected " +
                                std::to_string(width));
        }
    }
    GridWorld world = GridWorld::from_rows(rows, slip_probability);
    if (world.goals().size() != kGoalRewards.size()) {
        throw MapParseError("map must contain each of the goals '1', '2' and '3' once");
    }
    return world;
}

GridWorld load_map(const std::filesystem::path& path, double slip_probability) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MapParseError("cannot open map file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_map(buf.str(), slip_probability);
}

void save_map(const GridWorld& world, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write map file " + path.string());
    out << to_map_text(world);
}

}  // namespace flipsim
