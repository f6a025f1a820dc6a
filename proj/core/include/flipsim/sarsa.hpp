#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flipsim/gridworld.hpp"
#include "flipsim/metrics.hpp"
#include "flipsim/reward_channel.hpp"
#include "flipsim/rng.hpp"

namespace flipsim {

/// Dense |S| x 4 action-value table. Every stored value is finite.
class QTable {
public:
    explicit QTable(std::size_t num_states) : values_(num_states * kNumActions, 0.0) {}

    std::size_t num_states() const noexcept { return values_.size() / kNumActions; }

    double at(StateIndex s, Direction a) const { return values_.at(s * kNumActions + index_of(a)); }
    void set(StateIndex s, Direction a, double value);

    std::span<const double, kNumActions> row(StateIndex s) const {
        return std::span<const double, kNumActions>(values_.data() + s * kNumActions, kNumActions);
    }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    std::vector<double> values_;
};

/// One line per state: "x y q_up q_down q_left q_right", shortest
/// round-trip decimal representation.
std::string to_dump_text(const QTable& q, const GridWorld& world);

struct EpsilonGreedy {
    double epsilon = 0.1;
};
struct Softmax {
    double tau = 0.01;  // greedy stand-in for a zero temperature
};
/// epsilon decays linearly from 1 at episode 0 to 0 at episode `horizon`.
struct DynamicEpsilon {
    int horizon = 5000;
};
using ExplorationStrategy = std::variant<EpsilonGreedy, Softmax, DynamicEpsilon>;

void validate(const ExplorationStrategy& strategy);
std::string describe(const ExplorationStrategy& strategy);

struct LearnerConfig {
    double alpha = 0.125;
    double gamma = 0.95;
    ExplorationStrategy strategy = EpsilonGreedy{};
    int max_steps_per_episode = 500;

    void validate() const;
};

/// 1 - episode_index / horizon, clamped to [0, 1] (with a warning) when the
/// episode lies outside [0, horizon].
double dynamic_epsilon(int episode_index, int horizon);

/// Boltzmann probabilities exp(q/tau) / sum exp(q/tau), max-shifted so that
/// tiny temperatures cannot overflow.
std::array<double, kNumActions> softmax_probabilities(std::span<const double, kNumActions> q,
                                                      double tau);

/// Action probabilities of the behaviour policy, ties counted uniformly.
std::array<double, kNumActions> action_probabilities(std::span<const double, kNumActions> q,
                                                     const ExplorationStrategy& strategy,
                                                     int episode_index);

/// Argmax over the row; ties are broken uniformly at random.
Direction greedy_action(std::span<const double, kNumActions> q, Rng& rng);

Direction select_action(const QTable& q, StateIndex state, const ExplorationStrategy& strategy,
                        int episode_index, Rng& rng);

struct SarsaTransition {
    StateIndex state = 0;
    Direction action = Direction::up;
    double reward = 0.0;
    StateIndex next_state = 0;
    Direction next_action = Direction::up;
    bool terminal = false;  // a terminal successor bootstraps from 0
};

/// Q(s,a) <- (1 - alpha) Q(s,a) + alpha [r + gamma Q(s',a')]. Returns the
/// new value; no other entry changes.
double sarsa_update(QTable& q, const SarsaTransition& t, double alpha, double gamma);

struct EpisodeRngs {
    Rng& env;
    Rng& learner;
};

struct TraceStep {
    Cell state;
    Direction action;
    Cell next_state;
    double true_reward;
    double observed_reward;
    bool terminal;
};

/// Runs one on-policy SARSA episode from the world's start cell. Learning
/// uses the rewards coming out of `channel`; the record's true return uses
/// the environment's rewards. When `trace` is non-null the transitions are
/// appended to it.
EpisodeRecord run_episode(const GridWorld& world, QTable& q, const LearnerConfig& config,
                          int episode_index, RewardChannel& channel, EpisodeRngs rngs,
                          std::vector<TraceStep>* trace = nullptr);

}  // namespace flipsim
