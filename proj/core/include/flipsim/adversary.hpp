#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "flipsim/reward_channel.hpp"
#include "flipsim/rng.hpp"

namespace flipsim {

struct AdversaryConfig {
    double attack_probability = 0.0;
    int attack_start_episode = 0;  // 0 attacks from the first episode
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdversaryState {
    std::uint64_t attacks_performed = 0;  // injected sign flips
    std::uint64_t goal_events_seen = 0;   // nonzero rewards sniffed after onset
};

/// Sign-flip interception of one reward. Before the attack onset the reward
/// passes untouched and is not counted; a zero reward is never touched.
/// Otherwise phi ~ U(0,1] is drawn and the sign is flipped when phi <= p.
double intercept(double reward, int episode_index, const AdversaryConfig& config,
                 AdversaryState& state, Rng& rng);

/// Owns the adversary's configuration, counters and private RNG stream.
class Adversary {
public:
    explicit Adversary(AdversaryConfig config);

    double intercept(double reward, int episode_index);

    const AdversaryConfig& config() const noexcept { return config_; }
    const AdversaryState& state() const noexcept { return state_; }

private:
    AdversaryConfig config_;
    AdversaryState state_;
    Rng rng_;
};

struct AttackLogEntry {
    int episode_index = 0;
    int step_index = 0;
    double true_reward = 0.0;
    double observed_reward = 0.0;
    bool attacked = false;
};

/// Channel decorator placing the adversary between `inner` and the learner.
/// Goal events (nonzero rewards) are appended to `log` when one is given.
class AttackedChannel final : public RewardChannel {
public:
    AttackedChannel(RewardChannel& inner, Adversary& adversary,
                    std::vector<AttackLogEntry>* log = nullptr)
        : inner_(inner), adversary_(adversary), log_(log) {}

    double transmit(double reward, int episode_index, int step_index) override;
    std::uint64_t attacks_performed() const noexcept override {
        return inner_.attacks_performed() + adversary_.state().attacks_performed;
    }

private:
    RewardChannel& inner_;
    Adversary& adversary_;
    std::vector<AttackLogEntry>* log_;
};

std::unique_ptr<RewardChannel> attach(RewardChannel& inner, Adversary& adversary,
                                      std::vector<AttackLogEntry>* log = nullptr);

/// CSV: episode_index,step_index,true_reward,observed_reward,attacked
void write_attack_log_csv(std::ostream& out, const std::vector<AttackLogEntry>& log);

}  // namespace flipsim
