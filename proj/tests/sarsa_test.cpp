#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "flipsim/adversary.hpp"
#include "flipsim/sarsa.hpp"
#include "oracles.hpp"

using namespace flipsim;

namespace {

std::span<const double, 4> row_of(const std::array<double, 4>& a) {
    return std::span<const double, 4>(a);
}

QTable single_state(const std::array<double, 4>& values) {
    QTable q(1);
    for (std::size_t i = 0; i < 4; ++i) q.set(0, direction_from_index(i), values[i]);
    return q;
}

std::array<int, 4> histogram(const QTable& q, const ExplorationStrategy& s, int episode, int n,
                             std::uint64_t seed) {
    Rng rng(seed);
    std::array<int, 4> h{};
    for (int i = 0; i < n; ++i) ++h[index_of(select_action(q, 0, s, episode, rng))];
    return h;
}

// Start at (0,1), the reward-1.0 goal 20 moves to the right.
GridWorld corridor_world() {
    std::vector<std::string> rows(3, std::string(25, '.'));
    rows[1][0] = 'S';
    rows[1][20] = '3';
    rows[0][24] = '1';
    rows[2][24] = '2';
    return GridWorld::from_rows(rows, 0.0);
}

}  // namespace

TEST(SelectActionTest, GreedyWithZeroEpsilonAlwaysTakesArgmax) {
    const auto q = single_state({0.5, 0.1, 0.0, 0.0});
    const auto h = histogram(q, EpsilonGreedy{0.0}, 0, 5000, 1);
    EXPECT_EQ(h[0], 5000);
}

TEST(SelectActionTest, GreedyTiesAreBrokenUniformly) {
    const auto q = single_state({0.3, 0.3, 0.0, 0.3});
    const int n = 90000;
    const auto h = histogram(q, EpsilonGreedy{0.0}, 0, n, 2);
    EXPECT_EQ(h[2], 0);
    for (int i : {0, 1, 3}) EXPECT_TRUE(oracle::within_4sigma(h[static_cast<std::size_t>(i)], n, 1.0 / 3));
}

TEST(SelectActionTest, EpsilonGreedyFrequenciesMatchClosedForm) {
    const auto q = single_state({0.0, 0.2, 0.7, 0.1});
    const int n = 100000;
    for (double eps : {0.1, 0.3, 0.7}) {
        const auto h = histogram(q, EpsilonGreedy{eps}, 0, n, 3);
        for (std::size_t a = 0; a < 4; ++a) {
            const double p = a == 2 ? 1 - eps + eps / 4 : eps / 4;
            EXPECT_TRUE(oracle::within_4sigma(h[a], n, p)) << "eps=" << eps << " a=" << a;
        }
    }
}

TEST(SelectActionTest, DynamicEpsilonAtStartIsUniform) {
    const auto q = single_state({1.0, 0.0, 0.0, 0.0});
    const int n = 100000;
    const auto h = histogram(q, DynamicEpsilon{5000}, 0, n, 4);
    for (int c : h) EXPECT_TRUE(oracle::within_4sigma(c, n, 0.25));
    const auto end = histogram(q, DynamicEpsilon{5000}, 5000, 1000, 5);
    EXPECT_EQ(end[0], 1000);
}

TEST(SoftmaxTest, EqualValuesGiveQuarterEach) {
    const auto p = softmax_probabilities(row_of({0.3, 0.3, 0.3, 0.3}), 0.5);
    for (double v : p) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(SoftmaxTest, HandEvaluatedProbabilities) {
    const auto p = softmax_probabilities(row_of({1, 0, 0, 0}), 1.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(p[0], e / (e + 3), 1e-15);
    EXPECT_NEAR(p[0], 0.4754, 1e-4);
    for (int i = 1; i < 4; ++i) EXPECT_NEAR(p[static_cast<std::size_t>(i)], 0.1749, 1e-4);
}

TEST(SoftmaxTest, NormalisedAndInteriorForRandomRows) {
    Rng rng(6);
    for (int i = 0; i < 10000; ++i) {
        const std::array<double, 4> q{uniform01(rng) * 2 - 1, uniform01(rng) * 2 - 1,
                                      uniform01(rng) * 2 - 1, uniform01(rng) * 2 - 1};
        const double tau = std::pow(10.0, -1 + 2 * uniform01(rng));
        const auto p = softmax_probabilities(row_of(q), tau);
        EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-9);
        for (double v : p) {
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
    }
}

TEST(SoftmaxTest, TinyTemperatureDoesNotOverflowAndIsGreedy) {
    const auto p = softmax_probabilities(row_of({1.0, 0.9, -1.0, 0.0}), 1e-6);
    EXPECT_TRUE(std::isfinite(p[0]));
    EXPECT_DOUBLE_EQ(p[0], 1.0);
    const auto q = single_state({0.31, 0.3, 0.0, 0.1});
    const int n = 100000;
    const auto h = histogram(q, Softmax{1e-4}, 0, n, 7);
    EXPECT_GT(h[0] / static_cast<double>(n), 0.999);
}

TEST(SoftmaxTest, RejectsNonPositiveTemperature) {
    EXPECT_THROW(softmax_probabilities(row_of({0, 0, 0, 0}), 0.0), std::invalid_argument);
    EXPECT_THROW(validate(Softmax{0.0}), std::invalid_argument);
}

TEST(ActionProbabilitiesTest, AgreesWithSampling) {
    const auto q = single_state({0.2, 0.2, 0.0, -0.1});
    const auto p = action_probabilities(q.row(0), EpsilonGreedy{0.2}, 0);
    EXPECT_DOUBLE_EQ(p[0], 0.05 + 0.4);
    EXPECT_DOUBLE_EQ(p[2], 0.05);
    const auto d = action_probabilities(q.row(0), DynamicEpsilon{10}, 5);
    EXPECT_DOUBLE_EQ(d[3], 0.5 / 4);
}

TEST(DynamicEpsilonTest, LinearSchedule) {
    EXPECT_DOUBLE_EQ(dynamic_epsilon(0, 5000), 1.0);
    EXPECT_DOUBLE_EQ(dynamic_epsilon(5000, 5000), 0.0);
    EXPECT_DOUBLE_EQ(dynamic_epsilon(2500, 5000), 0.5);
    EXPECT_DOUBLE_EQ(dynamic_epsilon(-3, 5000), 1.0);
    EXPECT_DOUBLE_EQ(dynamic_epsilon(6000, 5000), 0.0);
    EXPECT_THROW(dynamic_epsilon(0, 0), std::invalid_argument);
}

TEST(SarsaUpdateTest, ZeroIsAFixedPoint) {
    QTable q(4);
    sarsa_update(q, {0, Direction::up, 0.0, 1, Direction::left, false}, 0.125, 0.95);
    for (double v : q.values()) EXPECT_EQ(v, 0.0);
}

TEST(SarsaUpdateTest, TerminalRewardOfOne) {
    QTable q(2);
    const double v = sarsa_update(q, {0, Direction::right, 1.0, 1, Direction::up, true}, 0.125, 0.95);
    EXPECT_DOUBLE_EQ(v, 0.125);
    EXPECT_DOUBLE_EQ(q.at(0, Direction::right), 0.125);
}

TEST(SarsaUpdateTest, BootstrapsFromTheChosenSuccessor) {
    QTable q(2);
    q.set(0, Direction::down, 0.4);
    q.set(1, Direction::left, 0.8);
    q.set(1, Direction::up, 5.0);  // not the chosen action; must not matter
    const double v = sarsa_update(q, {0, Direction::down, 0.0, 1, Direction::left, false}, 0.125, 0.95);
    EXPECT_NEAR(v, 0.445, 1e-15);
}

TEST(SarsaUpdateTest, TerminalSuccessorIgnoresItsTableEntry) {
    QTable q(2);
    q.set(1, Direction::up, 3.0);
    sarsa_update(q, {0, Direction::up, 0.5, 1, Direction::up, true}, 0.5, 0.9);
    EXPECT_DOUBLE_EQ(q.at(0, Direction::up), 0.25);
}

TEST(SarsaUpdateTest, MatchesDirectFormulaOnRandomTuples) {
    Rng rng(8);
    QTable q(16);
    for (int i = 0; i < 10000; ++i) {
        const StateIndex s = uniform_index(rng, 16), s2 = uniform_index(rng, 16);
        const Direction a = direction_from_index(uniform_index(rng, 4));
        const Direction a2 = direction_from_index(uniform_index(rng, 4));
        q.set(s, a, uniform01(rng) * 4 - 2);
        q.set(s2, a2, uniform01(rng) * 4 - 2);
        const double r = uniform01(rng) * 2 - 1;
        const double alpha = 0.001 + 0.999 * uniform01(rng);
        const double gamma = 0.999 * uniform01(rng);
        const double q_sa = q.at(s, a), q_next = q.at(s2, a2);
        const auto before = std::vector<double>(q.values().begin(), q.values().end());
        sarsa_update(q, {s, a, r, s2, a2, false}, alpha, gamma);
        ASSERT_NEAR(q.at(s, a), oracle::sarsa_target(q_sa, r, q_next, alpha, gamma), 1e-12);
        for (std::size_t k = 0; k < before.size(); ++k) {
            if (k != s * 4 + index_of(a)) {
                ASSERT_EQ(q.values()[k], before[k]);
            }
        }
    }
}

TEST(SarsaUpdateTest, ValuesStayBoundedUnderCorruptedRewards) {
    const double gamma = 0.95, bound = 1.0 / (1.0 - gamma);
    Rng rng(9);
    QTable q(8);
    for (int i = 0; i < 200000; ++i) {
        const double r = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform01(rng);
        sarsa_update(q,
                     {uniform_index(rng, 8), direction_from_index(uniform_index(rng, 4)), r,
                      uniform_index(rng, 8), direction_from_index(uniform_index(rng, 4)),
                      uniform01(rng) < 0.1},
                     0.125, gamma);
    }
    for (double v : q.values()) {
        EXPECT_LE(std::abs(v), bound);
    }
}

TEST(QTableTest, RejectsNonFiniteValues) {
    QTable q(1);
    EXPECT_THROW(q.set(0, Direction::up, std::nan("")), std::domain_error);
    EXPECT_THROW(q.set(0, Direction::up, INFINITY), std::domain_error);
}

TEST(QTableTest, DumpFormat) {
    const auto w = GridWorld::from_rows({"S.", ".3"}, 0.0);
    QTable q(w.num_states());
    q.set(1, Direction::right, 0.1);
    q.set(2, Direction::up, -0.5);
    EXPECT_EQ(to_dump_text(q, w), "0 0 0 0 0 0\n1 0 0 0 0 0.1\n0 1 -0.5 0 0 0\n1 1 0 0 0 0\n");
}

TEST(RunEpisodeTest, UnreachableGoalsTruncateWithZeroReturn) {
    std::vector<std::string> rows(5, std::string(5, '.'));
    rows[0][0] = 'S';
    rows[3] = "#####";
    rows[4][2] = '3';
    const auto w = GridWorld::from_rows(rows, 0.1);
    QTable q(w.num_states());
    Rng env(1), learner(2);
    IdentityChannel channel;
    const auto rec = run_episode(w, q, LearnerConfig{}, 0, channel, {env, learner});
    EXPECT_EQ(rec.steps_taken, 500);
    EXPECT_EQ(rec.true_return, 0.0);
    EXPECT_FALSE(rec.goal_reached);
}

TEST(RunEpisodeTest, PreSeededPathDiscountsByPathLength) {
    const auto w = corridor_world();
    QTable q(w.num_states());
    for (int x = 0; x < 20; ++x) q.set(w.state_index({x, 1}), Direction::right, 1.0);
    Rng env(1), learner(2);
    IdentityChannel channel;
    LearnerConfig config;
    config.strategy = EpsilonGreedy{0.0};
    std::vector<TraceStep> trace;
    const auto rec = run_episode(w, q, config, 0, channel, {env, learner}, &trace);
    EXPECT_TRUE(rec.goal_reached);
    EXPECT_EQ(rec.steps_taken, 20);
    // Twenty moves put the reward at t = 19.
    EXPECT_NEAR(rec.true_return, std::pow(0.95, 19), 1e-15);
    EXPECT_NEAR(rec.true_return, 0.377354, 1e-6);
    EXPECT_EQ(rec.observed_return, rec.true_return);
    ASSERT_EQ(trace.size(), 20u);
    EXPECT_EQ(trace.back().true_reward, 1.0);
}

TEST(RunEpisodeTest, DeterministicForFixedSeeds) {
    const auto w = generate_map(4);
    auto once = [&] {
        QTable q(w.num_states());
        Rng env(10), learner(11);
        IdentityChannel channel;
        std::vector<EpisodeRecord> recs;
        for (int e = 0; e < 50; ++e) {
            recs.push_back(run_episode(w, q, LearnerConfig{}, e, channel, {env, learner}));
        }
        return std::pair{recs, q};
    };
    EXPECT_EQ(once(), once());
}

TEST(RunEpisodeTest, LearnsFromObservedButScoresTrueRewards) {
    const auto w = corridor_world();
    QTable q(w.num_states());
    for (int x = 0; x < 20; ++x) q.set(w.state_index({x, 1}), Direction::right, 1.0);
    Rng env(1), learner(2);
    IdentityChannel identity;
    Adversary adv(AdversaryConfig{1.0, 0, 3});
    AttackedChannel channel(identity, adv);
    LearnerConfig config;
    config.strategy = EpsilonGreedy{0.0};
    const auto rec = run_episode(w, q, config, 0, channel, {env, learner});
    EXPECT_NEAR(rec.true_return, std::pow(0.95, 19), 1e-15);
    EXPECT_NEAR(rec.observed_return, -std::pow(0.95, 19), 1e-15);
    EXPECT_EQ(rec.cumulative_attacks, 1u);
    // Last step's value moved towards the corrupted -1.
    EXPECT_DOUBLE_EQ(q.at(w.state_index({19, 1}), Direction::right), 0.875 - 0.125);
}

TEST(RunEpisodeTest, GoalOnlyTraces) {
    const auto w = generate_map(12);
    QTable q(w.num_states());
    Rng env(1), learner(2);
    IdentityChannel channel;
    LearnerConfig config;
    config.strategy = EpsilonGreedy{0.2};
    for (int e = 0; e < 200; ++e) {
        std::vector<TraceStep> trace;
        const auto rec = run_episode(w, q, config, e, channel, {env, learner}, &trace);
        ASSERT_EQ(static_cast<int>(trace.size()), rec.steps_taken);
        int nonzero = 0;
        for (std::size_t t = 0; t < trace.size(); ++t) {
            if (trace[t].true_reward != 0.0) {
                ++nonzero;
                EXPECT_EQ(t + 1, trace.size());
                EXPECT_TRUE(trace[t].terminal);
            }
        }
        EXPECT_LE(nonzero, 1);
        if (!rec.goal_reached) {
            EXPECT_EQ(rec.true_return, 0.0);
        }
    }
}
