#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flipsim {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fast self-check of the library invariants: map generation and map-file
/// round trip, the SARSA update against a direct evaluation, softmax
/// normalisation and greedy limit, epsilon-greedy frequencies, binomial
/// attack accounting, goal-only episode traces and cell replay determinism.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed = 2020);

}  // namespace flipsim
