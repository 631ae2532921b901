// Randomized validation harnesses behind the greedy-validate and
// equivalence-check commands.
#pragma once

#include <cstdint>
#include <string>

#include "dpfl/graph.hpp"

namespace dpfl {

// GGC versus brute force on random cut instances with k pinned into the set.
struct GreedyValidateReport {
    int n = 0;
    int trials = 0;
    int budget = kUnbounded;
    double mean_ratio = 0.0;       // mean of R(X)/R(OPT)
    double min_ratio = 0.0;
    double no_worse_pass_rate = 1.0;  // fraction with R(X) >= R({k}) - 1e-12
};

GreedyValidateReport run_greedy_validate(int n, int trials, int budget, std::uint64_t seed);

// GGC versus BGGC on random model cohorts with a shared seed.
struct EquivalenceReport {
    int trials = 0;
    int identical_sets = 0;
    double accumulator_max_rel_err = 0.0;
    int cross_seed_differing_pairs = 0;
    int budget_violations = 0;       // batched runs exceeding their budget
    double worst_no_worse_margin = 0.0;  // min of reward_final - reward_initial
    std::string first_mismatch;  // serialized offending tuple, empty when none
};

EquivalenceReport run_equivalence_check(int trials, std::uint64_t seed);

}  // namespace dpfl
