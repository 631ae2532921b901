// Collaboration graph construction: the randomized constrained double
// greedy in its direct (GGC) and batched (BGGC) forms, a brute-force subset
// oracle, and the random-graph baseline.
//
// Both greedy forms run the same accumulator-based core over the same
// seeded shuffle and coin stream, so with a shared seed they make identical
// decisions; the batched form differs only in how models are fetched and
// never holds more than the budget in foreign models at once.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpfl/reward.hpp"

namespace dpfl {

inline constexpr int kUnbounded = -1;

struct CollabGraph {
    int n = 0;
    int budget = kUnbounded;
    std::vector<std::vector<int>> omega;      // static candidate sets, sorted, self excluded
    std::vector<std::vector<int>> selected;   // per-round selections, selected[k] subset of omega[k]
};

enum class CoinMode {
    lockstep,    // one uniform draw per candidate, consumed even when p is 0 or 1
    mixed_only,  // draw only when both marginal gains are positive
};

struct GreedyStep {
    int candidate = -1;
    double gain_add = 0.0;     // a
    double gain_remove = 0.0;  // b
    double p = 0.0;
    double coin = 0.0;
    bool drew_coin = false;
    bool added = false;
};

struct GreedyTrace {
    std::vector<GreedyStep> steps;
    std::vector<int> result;   // final collaborator set, sorted, self excluded
    long oracle_calls = 0;
    double reward_initial = 0.0;  // R({k}), NaN when no evaluation ran
    double reward_final = 0.0;    // R(X) at exit, NaN when no evaluation ran
};

// Communication bookkeeping for the batched form.
struct BatchStats {
    int batches = 0;
    int peak_foreign_models = 0;
    long models_received = 0;
};

// Set-function form. reward takes the candidate subset (self excluded) and
// is responsible for any implicit self term.
using SetReward = std::function<double(const std::vector<int>&)>;

GreedyTrace ggc_set(int client, const std::vector<int>& candidates, int budget,
                    const SetReward& reward, std::uint64_t seed,
                    CoinMode mode = CoinMode::lockstep);

// Direct model-averaging form; all candidate models are held at once, which
// is within budget during training rounds where candidates come from omega.
GreedyTrace ggc(int client, const std::vector<int>& candidates, int budget,
                const ModelAccess& models, const std::vector<double>& weights,
                const LabeledBatch& validation, std::uint64_t seed,
                CoinMode mode = CoinMode::lockstep, BatchStats* stats = nullptr);

// Batched form for preprocessing: two streaming passes (weighted-sum pass,
// decision pass) over batches of at most `budget` models.
GreedyTrace bggc(int client, const std::vector<int>& candidates, int budget,
                 const ModelAccess& models, const std::vector<double>& weights,
                 const LabeledBatch& validation, std::uint64_t seed,
                 CoinMode mode = CoinMode::lockstep, BatchStats* stats = nullptr);

// Exhaustive argmax of reward over subsets of size <= budget; candidate
// lists above 12 are refused. Ties break to the lexicographically smallest
// sorted member list.
std::vector<int> brute_force_best(int client, const std::vector<int>& candidates, int budget,
                                  const SetReward& reward);

// Every client draws min(budget, n-1) distinct collaborators uniformly.
CollabGraph random_graph(int n, int budget, std::uint64_t seed);

// One JSON object per decision step, then a summary line.
std::string trace_json_lines(const GreedyTrace& trace);

}  // namespace dpfl
