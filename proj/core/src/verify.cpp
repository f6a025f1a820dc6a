#include "flipsim/verify.hpp"

#include <cmath>
#include <sstream>

#include "flipsim/adversary.hpp"
#include "flipsim/gridworld.hpp"
#include "flipsim/harness.hpp"
#include "flipsim/sarsa.hpp"

namespace flipsim {

namespace {

CheckResult check_maps(std::uint64_t seed) {
    const MapGenSpec spec;
    for (std::uint64_t k = 0; k < 25; ++k) {
        const auto world = generate_map(seed + k, spec);
        if (auto why = check_generated_map(world, spec); !why.empty()) {
            return {"map constraints", false, "seed " + std::to_string(seed + k) + ": " + why};
        }
        const auto text = to_map_text(world);
        const auto back = parse_map(text, world.slip_probability());
        if (!(back == world) || to_map_text(back) != text) {
            return {"map constraints", false, "round trip differs for seed " + std::to_string(seed + k)};
        }
    }
    return {"map constraints", true, "25 maps in band, byte-exact round trip"};
}

CheckResult check_sarsa(std::uint64_t seed) {
    Rng rng(seed);
    QTable q(2);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double qsa = uniform01(rng) * 2 - 1, qnext = uniform01(rng) * 2 - 1;
        const double r = uniform01(rng) * 2 - 1, alpha = 0.01 + 0.99 * uniform01(rng);
        const double gamma = 0.99 * uniform01(rng);
        q.set(0, Direction::left, qsa);
        q.set(1, Direction::down, qnext);
        const double got =
            sarsa_update(q, {0, Direction::left, r, 1, Direction::down, false}, alpha, gamma);
        const double want = qsa + alpha * (r + gamma * qnext - qsa);
        worst = std::max(worst, std::abs(got - want));
    }
    std::ostringstream os;
    os << "max deviation " << worst;
    return {"sarsa update", worst <= 1e-12, os.str()};
}

CheckResult check_softmax(std::uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < 1000; ++i) {
        const std::array<double, 4> q{uniform01(rng) * 4 - 2, uniform01(rng) * 4 - 2,
                                      uniform01(rng) * 4 - 2, uniform01(rng) * 4 - 2};
        const double tau = std::pow(10.0, -4 + 5 * uniform01(rng));
        const auto p = softmax_probabilities(std::span<const double, 4>(q), tau);
        const double sum = p[0] + p[1] + p[2] + p[3];
        if (std::abs(sum - 1.0) > 1e-9) return {"softmax", false, "probabilities do not sum to 1"};
    }
    QTable q(1);
    q.set(0, Direction::right, 0.3);
    q.set(0, Direction::up, 0.2);
    int hits = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        hits += select_action(q, 0, Softmax{1e-4}, 0, rng) == Direction::right;
    }
    const double freq = static_cast<double>(hits) / draws;
    return {"softmax", freq > 0.999, "greedy-limit argmax frequency " + std::to_string(freq)};
}

CheckResult check_attack_counts(std::uint64_t seed) {
    for (double p : {0.1, 0.3, 0.7}) {
        Adversary adv(AdversaryConfig{p, 0, seed});
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            const double r = kGoalRewards[static_cast<std::size_t>(i % 3)];
            const double out = adv.intercept(r, 0);
            if (std::abs(out) != std::abs(r)) return {"attack accounting", false, "magnitude changed"};
        }
        const double mean = n * p, bound = 4 * std::sqrt(n * p * (1 - p));
        const auto got = static_cast<double>(adv.state().attacks_performed);
        if (std::abs(got - mean) > bound) {
            return {"attack accounting", false,
                    "p=" + std::to_string(p) + " gave " + std::to_string(got) + " attacks"};
        }
    }
    return {"attack accounting", true, "counts within 4 sigma for p in {0.1, 0.3, 0.7}"};
}

CheckResult check_goal_only(std::uint64_t seed) {
    const auto world = generate_map(seed);
    QTable q(world.num_states());
    Rng env(seed + 1), learner(seed + 2);
    Adversary adv(AdversaryConfig{0.5, 0, seed + 3});
    IdentityChannel identity;
    AttackedChannel channel(identity, adv);
    const LearnerConfig config{0.125, 0.95, EpsilonGreedy{0.2}, 500};
    for (int e = 0; e < 300; ++e) {
        std::vector<TraceStep> trace;
        const auto rec = run_episode(world, q, config, e, channel, {env, learner}, &trace);
        for (std::size_t t = 0; t < trace.size(); ++t) {
            const bool last = t + 1 == trace.size();
            if ((trace[t].true_reward != 0.0) != (last && rec.goal_reached)) {
                return {"goal-only rewards", false, "nonzero reward away from the terminal step"};
            }
        }
        if (!rec.goal_reached && rec.true_return != 0.0) {
            return {"goal-only rewards", false, "unfinished episode with nonzero return"};
        }
    }
    return {"goal-only rewards", true, "300 episode traces checked"};
}

CheckResult check_determinism(std::uint64_t seed) {
    ExperimentConfig c = ExperimentConfig::fixed_defaults();
    c.exploration_values = {0.1};
    c.attack_probabilities = {0.0};
    c.attack_start_episode = 50;
    c.episodes = 200;
    c.maps = 1;
    c.seeds = 1;
    c.master_seed = seed;
    const CellKey key{};
    const auto a = run_cell(c, key);
    const auto b = run_cell(c, key);
    const auto world = generate_map(map_seed(seed, 0), c.map);
    const auto detached = run_cell(world, CellSeeds::derive(seed, 0, 0), c.learner_config(0.1),
                                   c.episodes, std::nullopt);
    if (a.records != b.records) return {"determinism", false, "replay differs"};
    if (a.records != detached.records) {
        return {"determinism", false, "p=0 cell differs from the adversary-free cell"};
    }
    return {"determinism", true, "replay and p=0 equivalence hold"};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
    std::vector<CheckResult> out;
    auto guarded = [&](const char* name, auto&& fn) {
        try {
            out.push_back(fn(seed));
        } catch (const std::exception& e) {
            out.push_back({name, false, std::string("threw: ") + e.what()});
        }
    };
    guarded("map constraints", check_maps);
    guarded("sarsa update", check_sarsa);
    guarded("softmax", check_softmax);
    guarded("attack accounting", check_attack_counts);
    guarded("goal-only rewards", check_goal_only);
    guarded("determinism", check_determinism);
    return out;
}

}  // namespace flipsim
