#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

#include "flipsim/gridworld.hpp"
#include "oracles.hpp"

using namespace flipsim;

namespace {

std::vector<std::string> open_rows(int width, int height) {
    return std::vector<std::string>(static_cast<std::size_t>(height),
                                    std::string(static_cast<std::size_t>(width), '.'));
}

// 20x20 open grid, start at (0,0), goals far away in the other corners.
GridWorld open_world(double slip = 0.0) {
    auto rows = open_rows(20, 20);
    rows[0][0] = 'S';
    rows[19][19] = '3';
    rows[0][19] = '2';
    rows[19][0] = '1';
    return GridWorld::from_rows(rows, slip);
}

}  // namespace

TEST(GridWorldTest, ParsesLayoutAndGoalRewards) {
    const auto w = open_world();
    EXPECT_EQ(w.width(), 20);
    EXPECT_EQ(w.height(), 20);
    EXPECT_EQ(w.start(), (Cell{0, 0}));
    ASSERT_EQ(w.goals().size(), 3u);
    EXPECT_EQ(*w.goal_reward({19, 19}), 1.0);
    EXPECT_EQ(*w.goal_reward({19, 0}), 0.5);
    EXPECT_EQ(*w.goal_reward({0, 19}), 0.25);
    EXPECT_FALSE(w.goal_reward({5, 5}).has_value());
}

TEST(GridWorldTest, RejectsStructuralViolations) {
    auto rows = open_rows(4, 4);
    EXPECT_THROW(GridWorld::from_rows(rows, 0.1), MapParseError);  // no start
    rows[0][0] = 'S';
    rows[1][1] = 'S';
    EXPECT_THROW(GridWorld::from_rows(rows, 0.1), MapParseError);  // two starts
    rows[1][1] = '2';
    rows[2][2] = '2';
    EXPECT_THROW(GridWorld::from_rows(rows, 0.1), MapParseError);  // duplicate reward
    rows[2][2] = '.';
    EXPECT_THROW(GridWorld::from_rows(rows, 1.5), MapParseError);  // slip out of range
    EXPECT_NO_THROW(GridWorld::from_rows(rows, 1.0));
}

TEST(StepTest, DeterministicMoveWithoutSlip) {
    const auto w = open_world(0.0);
    Rng rng(1);
    const auto out = step(w, {5, 5}, Direction::right, rng);
    EXPECT_EQ(out.next_state, (Cell{6, 5}));
    EXPECT_EQ(out.reward, 0.0);
    EXPECT_FALSE(out.terminal);
    EXPECT_EQ(step(w, {5, 5}, Direction::up, rng).next_state, (Cell{5, 4}));
    EXPECT_EQ(step(w, {5, 5}, Direction::down, rng).next_state, (Cell{5, 6}));
    EXPECT_EQ(step(w, {5, 5}, Direction::left, rng).next_state, (Cell{4, 5}));
}

TEST(StepTest, EnteringTheBestGoalPaysOneAndTerminates) {
    const auto w = open_world(0.0);
    Rng rng(1);
    const auto out = step(w, {18, 19}, Direction::right, rng);
    EXPECT_EQ(out.next_state, (Cell{19, 19}));
    EXPECT_EQ(out.reward, 1.0);
    EXPECT_TRUE(out.terminal);
}

TEST(StepTest, BlockedMovesStayInPlace) {
    auto rows = open_rows(5, 5);
    rows[2][2] = 'S';
    rows[2][3] = '#';
    rows[4][4] = '3';
    const auto w = GridWorld::from_rows(rows, 0.0);
    Rng rng(3);
    EXPECT_EQ(step(w, {2, 2}, Direction::right, rng).next_state, (Cell{2, 2}));
    EXPECT_EQ(step(w, {0, 0}, Direction::up, rng).next_state, (Cell{0, 0}));
    EXPECT_EQ(step(w, {0, 0}, Direction::left, rng).next_state, (Cell{0, 0}));
}

TEST(StepTest, SlipFrequenciesMatchModel) {
    // Monte-Carlo frequency oracle: intended 0.9, each other direction 0.1/3,
    // accepted within 0.004 (about 4 binomial sigma at n = 1e6).
    const auto w = open_world(0.1);
    Rng rng(2024);
    const Cell from{10, 10};
    std::map<std::pair<int, int>, int> counts;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const Cell c = step(w, from, Direction::up, rng).next_state;
        ++counts[{c.x - from.x, c.y - from.y}];
    }
    const double intended = counts[{0, -1}] / static_cast<double>(n);
    EXPECT_NEAR(intended, 0.9, 0.004);
    for (auto d : {std::pair{0, 1}, std::pair{-1, 0}, std::pair{1, 0}}) {
        EXPECT_NEAR(counts[d] / static_cast<double>(n), 0.1 / 3.0, 0.004);
    }
    EXPECT_EQ(counts.size(), 4u);
}

TEST(StepTest, NeverLeavesTheFreeCells) {
    const auto w = generate_map(11);
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        const Cell from = w.cell_at(uniform_index(rng, w.num_states()));
        if (w.is_obstacle(from) || w.is_goal(from)) continue;
        const auto out = step(w, from, direction_from_index(uniform_index(rng, 4)), rng);
        ASSERT_TRUE(w.in_bounds(out.next_state));
        ASSERT_FALSE(w.is_obstacle(out.next_state));
        ASSERT_EQ(out.terminal, out.reward != 0.0);
        ASSERT_EQ(out.terminal, w.is_goal(out.next_state));
    }
}

TEST(ShortestPathTest, TrivialCases) {
    auto rows = open_rows(20, 20);
    rows[0][0] = 'S';
    const auto w = GridWorld::from_rows(rows, 0.1);
    EXPECT_EQ(shortest_path_length(w, {3, 4}, {3, 4}), 0);
    EXPECT_EQ(shortest_path_length(w, {0, 0}, {0, 5}), 5);
    EXPECT_EQ(shortest_path_length(w, {0, 0}, {19, 19}), 38);
}

TEST(ShortestPathTest, ReportsUnreachable) {
    auto rows = open_rows(5, 5);
    rows[0][0] = 'S';
    rows[3] = "#####";
    const auto w = GridWorld::from_rows(rows, 0.1);
    EXPECT_FALSE(shortest_path_length(w, {0, 0}, {2, 4}).has_value());
    EXPECT_THROW(shortest_path_length(w, {0, 0}, {7, 7}), std::out_of_range);
}

TEST(ShortestPathTest, MatchesDijkstraOnRandomMaps) {
    Rng rng(99);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        MapGenSpec spec;
        spec.obstacle_density = 0.3;
        const auto w = generate_map(seed, spec);
        const auto grid = oracle::grid_from_text(to_map_text(w));
        for (int k = 0; k < 40; ++k) {
            const Cell a = w.cell_at(uniform_index(rng, w.num_states()));
            const Cell b = w.cell_at(uniform_index(rng, w.num_states()));
            if (w.is_obstacle(a) || w.is_obstacle(b)) continue;
            const auto got = shortest_path_length(w, a, b);
            const int want = oracle::dijkstra(grid, {a.x, a.y}, {b.x, b.y});
            ASSERT_EQ(got.value_or(-1), want) << "seed " << seed;
        }
    }
}

TEST(GenerateMapTest, DeterministicForSeed) {
    EXPECT_EQ(generate_map(7), generate_map(7));
    EXPECT_NE(to_map_text(generate_map(7)), to_map_text(generate_map(8)));
}

TEST(GenerateMapTest, GoalsInDistanceBandUnderIndependentBfs) {
    const MapGenSpec spec;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto w = generate_map(seed, spec);
        const auto text = to_map_text(w);
        const auto grid = oracle::grid_from_text(text);
        const auto start = oracle::find_char(grid, 'S');
        std::vector<std::pair<int, int>> goals;
        for (char g : {'1', '2', '3'}) goals.push_back(oracle::find_char(grid, g));
        for (const auto& g : goals) {
            ASSERT_NE(g.first, -1) << "seed " << seed;
            const int d = oracle::bfs(grid, start, g);
            EXPECT_GE(d, 20) << "seed " << seed;
            EXPECT_LE(d, 25) << "seed " << seed;
            std::vector<std::pair<int, int>> walls;
            for (const auto& o : goals)
                if (o != g) walls.push_back(o);
            const int dw = oracle::bfs(grid, start, g, walls);
            EXPECT_GE(dw, 20);
            EXPECT_LE(dw, 25);
        }
        EXPECT_EQ(check_generated_map(w, spec), "");
    }
}

TEST(GenerateMapTest, ObstacleCountFollowsDensity) {
    MapGenSpec spec;
    const auto w = generate_map(3, spec);
    int obstacles = 0;
    for (StateIndex s = 0; s < w.num_states(); ++s) obstacles += w.is_obstacle(w.cell_at(s));
    EXPECT_EQ(obstacles, static_cast<int>(std::llround(0.2 * (400 - 4))));
}

TEST(GenerateMapTest, ImpossibleSpecReportsSeed) {
    MapGenSpec spec;
    spec.width = 6;
    spec.height = 6;
    spec.max_attempts = 20;
    try {
        generate_map(1234, spec);
        FAIL() << "expected MapGenerationError";
    } catch (const MapGenerationError& e) {
        EXPECT_EQ(e.seed(), 1234u);
        EXPECT_NE(std::string(e.what()).find("seed=1234"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("6x6"), std::string::npos);
    }
}

TEST(MapFormatTest, RoundTripIsByteExact) {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto w = generate_map(seed);
        const auto text = to_map_text(w);
        const auto back = parse_map(text, w.slip_probability());
        EXPECT_EQ(back, w);
        EXPECT_EQ(to_map_text(back), text);
    }
}

TEST(MapFormatTest, HeaderAndRowShape) {
    const auto text = to_map_text(open_world());
    EXPECT_EQ(text.substr(0, 6), "20 20\n");
    EXPECT_EQ(text.size(), 6u + 20u * 21u);
}

TEST(MapFormatTest, RejectsMalformedText) {
    EXPECT_THROW(parse_map(""), MapParseError);
    EXPECT_THROW(parse_map("2 2\nS.\n..\n.."), MapParseError);   // missing final newline
    EXPECT_THROW(parse_map("2 2\nS.\n"), MapParseError);         // too few rows
    EXPECT_THROW(parse_map("2 2\nS..\n..\n"), MapParseError);    // wide row
    EXPECT_THROW(parse_map("2 2\nSx\n..\n"), MapParseError);     // bad char
    EXPECT_THROW(parse_map("2  2\nS.\n..\n"), MapParseError);    // non-canonical header
    EXPECT_THROW(parse_map("2 2\nS.\n.3\n"), MapParseError);  // goals 1 and 2 missing
    EXPECT_NO_THROW(parse_map("2 2\nS1\n23\n"));
}

TEST(MapFormatTest, ReplayingBfsPathWithoutSlipTakesBfsLength) {
    const auto base = generate_map(21);
    const auto w = parse_map(to_map_text(base), 0.0);
    Rng rng(0);
    for (const Goal& g : w.goals()) {
        std::vector<Cell> others;
        for (const Goal& o : w.goals())
            if (o.cell != g.cell) others.push_back(o.cell);
        // Walk down the distance gradient from the goal back to the start.
        const auto from_goal = distance_field(w, g.cell, others);
        const int len = from_goal[w.state_index(w.start())];
        ASSERT_GT(len, 0);
        Cell s = w.start();
        int steps = 0;
        while (!w.is_goal(s)) {
            const int here = from_goal[w.state_index(s)];
            Direction pick = Direction::up;
            for (Direction d : kDirections) {
                const Cell n = w.move(s, d);
                if (n != s && from_goal[w.state_index(n)] == here - 1 &&
                    (!w.is_goal(n) || n == g.cell)) {
                    pick = d;
                    break;
                }
            }
            const auto out = step(w, s, pick, rng);
            s = out.next_state;
            ++steps;
            ASSERT_LE(steps, len);
        }
        EXPECT_EQ(s, g.cell);
        EXPECT_EQ(steps, len);
        const auto grid = oracle::grid_from_text(to_map_text(w));
        std::vector<std::pair<int, int>> walls;
        for (const Cell& o : others) walls.push_back({o.x, o.y});
        EXPECT_EQ(steps, oracle::bfs(grid, {w.start().x, w.start().y}, {g.cell.x, g.cell.y}, walls));
    }
}
