#include "flipsim/sarsa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "flipsim/csv.hpp"

namespace flipsim {

void QTable::set(StateIndex s, Direction a, double value) {
    if (!std::isfinite(value)) {
        throw std::domain_error("QTable: refusing to store a non-finite value");
    }
    values_.at(s * kNumActions + index_of(a)) = value;
}

std::string to_dump_text(const QTable& q, const GridWorld& world) {
    if (q.num_states() != world.num_states()) {
        throw std::invalid_argument("Q-table and world disagree on the number of states");
    }
    std::string out;
    for (StateIndex s = 0; s < q.num_states(); ++s) {
        const Cell c = world.cell_at(s);
        out += std::to_string(c.x);
        out += ' ';
        out += std::to_string(c.y);
        for (double v : q.row(s)) {
            out += ' ';
            out += csv::format_double(v);
        }
        out += '\n';
    }
    return out;
}

void validate(const ExplorationStrategy& strategy) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, EpsilonGreedy>) {
                if (!(s.epsilon >= 0.0 && s.epsilon <= 1.0)) {
                    throw std::invalid_argument("epsilon must lie in [0, 1]");
                }
            } else if constexpr (std::is_same_v<T, Softmax>) {
                if (!(s.tau > 0.0) || !std::isfinite(s.tau)) {
                    throw std::invalid_argument("softmax temperature must be strictly positive");
                }
            } else {
                if (s.horizon < 1) throw std::invalid_argument("dynamic horizon must be >= 1");
            }
        },
        strategy);
}

std::string describe(const ExplorationStrategy& strategy) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, EpsilonGreedy>) {
                return "epsilon-greedy(epsilon=" + csv::format_double(s.epsilon) + ")";
            } else if constexpr (std::is_same_v<T, Softmax>) {
                return "softmax(tau=" + csv::format_double(s.tau) + ")";
            } else {
                return "dynamic-epsilon(L=" + std::to_string(s.horizon) + ")";
            }
        },
        strategy);
}

void LearnerConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
    if (max_steps_per_episode < 1) throw std::invalid_argument("max steps must be positive");
    flipsim::validate(strategy);
}

double dynamic_epsilon(int episode_index, int horizon) {
    if (horizon < 1) throw std::invalid_argument("dynamic horizon must be >= 1");
    if (episode_index < 0 || episode_index > horizon) {
        spdlog::warn("dynamic_epsilon: episode {} outside [0, {}], clamping", episode_index,
                     horizon);
        return episode_index < 0 ? 1.0 : 0.0;
    }
    return 1.0 - static_cast<double>(episode_index) / static_cast<double>(horizon);
}

std::array<double, kNumActions> softmax_probabilities(std::span<const double, kNumActions> q,
                                                      double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
    const double qmax = *std::max_element(q.begin(), q.end());
    std::array<double, kNumActions> p{};
    double total = 0.0;
    for (std::size_t i = 0; i < kNumActions; ++i) {
        p[i] = std::exp((q[i] - qmax) / tau);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

namespace {

double epsilon_for(const ExplorationStrategy& strategy, int episode_index) {
    if (const auto* e = std::get_if<EpsilonGreedy>(&strategy)) return e->epsilon;
    return dynamic_epsilon(episode_index, std::get<DynamicEpsilon>(strategy).horizon);
}

}  // namespace

std::array<double, kNumActions> action_probabilities(std::span<const double, kNumActions> q,
                                                     const ExplorationStrategy& strategy,
                                                     int episode_index) {
    if (const auto* s = std::get_if<Softmax>(&strategy)) return softmax_probabilities(q, s->tau);
    const double eps = epsilon_for(strategy, episode_index);
    const double qmax = *std::max_element(q.begin(), q.end());
    const auto ties = static_cast<double>(std::count(q.begin(), q.end(), qmax));
    std::array<double, kNumActions> p{};
    for (std::size_t i = 0; i < kNumActions; ++i) {
        p[i] = eps / static_cast<double>(kNumActions) + (q[i] == qmax ? (1.0 - eps) / ties : 0.0);
    }
    return p;
}

Direction greedy_action(std::span<const double, kNumActions> q, Rng& rng) {
    std::array<std::size_t, kNumActions> best{};
    std::size_t count = 0;
    double qmax = q[0];
    for (std::size_t i = 0; i < kNumActions; ++i) {
        if (q[i] > qmax) {
            qmax = q[i];
            count = 0;
        }
        if (q[i] == qmax) best[count++] = i;
    }
    if (count == 1) return direction_from_index(best[0]);
    return direction_from_index(best[uniform_index(rng, count)]);
}

Direction select_action(const QTable& q, StateIndex state, const ExplorationStrategy& strategy,
                        int episode_index, Rng& rng) {
    const auto row = q.row(state);
    if (const auto* s = std::get_if<Softmax>(&strategy)) {
        const auto p = softmax_probabilities(row, s->tau);
        const double u = uniform01(rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < kNumActions; ++i) {
            acc += p[i];
            if (u < acc) return direction_from_index(i);
        }
        // Rounding left u above the accumulated mass; take the last
        // action that has any probability.
        for (std::size_t i = kNumActions; i-- > 0;) {
            if (p[i] > 0.0) return direction_from_index(i);
        }
        return Direction::up;
    }
    const double eps = epsilon_for(strategy, episode_index);
    if (uniform01(rng) < eps) return direction_from_index(uniform_index(rng, kNumActions));
    return greedy_action(row, rng);
}

double sarsa_update(QTable& q, const SarsaTransition& t, double alpha, double gamma) {
    const double successor = t.terminal ? 0.0 : q.at(t.next_state, t.next_action);
    const double updated =
        (1.0 - alpha) * q.at(t.state, t.action) + alpha * (t.reward + gamma * successor);
    q.set(t.state, t.action, updated);
    return updated;
}

EpisodeRecord run_episode(const GridWorld& world, QTable& q, const LearnerConfig& config,
                          int episode_index, RewardChannel& channel, EpisodeRngs rngs,
                          std::vector<TraceStep>* trace) {
    if (q.num_states() != world.num_states()) {
        throw std::invalid_argument("Q-table does not match the world's state count");
    }
    EpisodeRecord rec;
    rec.episode_index = episode_index;

    Cell s = world.start();
    Direction a = select_action(q, world.state_index(s), config.strategy, episode_index, rngs.learner);
    double discount = 1.0;
    for (int t = 0; t < config.max_steps_per_episode; ++t) {
        const StepOutcome out = step(world, s, a, rngs.env);
        const double observed = channel.transmit(out.reward, episode_index, t);
        rec.steps_taken = t + 1;
        rec.true_return += discount * out.reward;
        rec.observed_return += discount * observed;
        discount *= config.gamma;

        SarsaTransition tr{world.state_index(s), a, observed, world.state_index(out.next_state),
                           Direction::up, out.terminal};
        if (!out.terminal) {
            tr.next_action =
                select_action(q, tr.next_state, config.strategy, episode_index, rngs.learner);
        }
        sarsa_update(q, tr, config.alpha, config.gamma);
        if (trace) {
            trace->push_back({s, a, out.next_state, out.reward, observed, out.terminal});
        }
        if (out.terminal) {
            rec.goal_reached = true;
            break;
        }
        s = out.next_state;
        a = tr.next_action;
    }
    rec.cumulative_attacks = channel.attacks_performed();
    return rec;
}

}  // namespace flipsim
