#pragma once

#include <cstdint>

namespace flipsim {

/// Link carrying the environment's reward to the learner. Decorators
/// (see adversary.hpp) sit on this link and may alter what the learner
/// observes.
class RewardChannel {
public:
    virtual ~RewardChannel() = default;

    /// Reward the learner observes for a transition that produced `reward`.
    virtual double transmit(double reward, int episode_index, int step_index) = 0;

    /// Corrupted rewards injected so far on this channel.
    virtual std::uint64_t attacks_performed() const noexcept { return 0; }
};

class IdentityChannel final : public RewardChannel {
public:
    double transmit(double reward, int, int) override { return reward; }
};

}  // namespace flipsim
