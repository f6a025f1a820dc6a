#include "flipsim/adversary.hpp"

#include <ostream>
#include <stdexcept>

#include "flipsim/csv.hpp"

namespace flipsim {

void AdversaryConfig::validate() const {
    if (!(attack_probability >= 0.0 && attack_probability <= 1.0)) {
        throw std::invalid_argument("attack probability must lie in [0, 1]");
    }
    if (attack_start_episode < 0) {
        throw std::invalid_argument("attack start episode must be nonnegative");
    }
}

double intercept(double reward, int episode_index, const AdversaryConfig& config,
                 AdversaryState& state, Rng& rng) {
    if (episode_index < config.attack_start_episode || reward == 0.0) return reward;
    ++state.goal_events_seen;
    const double phi = uniform01_open_low(rng);
    if (phi <= config.attack_probability) {
        ++state.attacks_performed;
        return -reward;
    }
    return reward;
}

Adversary::Adversary(AdversaryConfig config) : config_(config), rng_(config.seed) {
    config_.validate();
}

double Adversary::intercept(double reward, int episode_index) {
    return flipsim::intercept(reward, episode_index, config_, state_, rng_);
}

double AttackedChannel::transmit(double reward, int episode_index, int step_index) {
    const double in = inner_.transmit(reward, episode_index, step_index);
    const std::uint64_t before = adversary_.state().attacks_performed;
    const double out = adversary_.intercept(in, episode_index);
    if (log_ && in != 0.0) {
        log_->push_back({episode_index, step_index, reward, out,
                         adversary_.state().attacks_performed != before});
    }
    return out;
}

std::unique_ptr<RewardChannel> attach(RewardChannel& inner, Adversary& adversary,
                                      std::vector<AttackLogEntry>* log) {
    return std::make_unique<AttackedChannel>(inner, adversary, log);
}

void write_attack_log_csv(std::ostream& out, const std::vector<AttackLogEntry>& log) {
    out << "episode_index,step_index,true_reward,observed_reward,attacked\n";
    for (const auto& e : log) {
        out << e.episode_index << ',' << e.step_index << ',' << csv::format_double(e.true_reward)
            << ',' << csv::format_double(e.observed_reward) << ',' << (e.attacked ? 1 : 0)
            << '\n';
    }
}

}  // namespace flipsim
