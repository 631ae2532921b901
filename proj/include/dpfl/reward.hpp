// Set-reward oracle: R(S) is the negated validation loss of the weighted
// average model over S together with the owning client (maximized by graph
// construction). Includes a synthetic cut-function instance for validating
// the greedy against a known non-monotone objective.
#pragma once

#include <functional>
#include <vector>

#include "dpfl/aggregate.hpp"
#include "dpfl/model.hpp"
#include "dpfl/rng.hpp"

namespace dpfl {

// Model lookup by client id; null means the model was never delivered.
using ModelAccess = std::function<const ModelParams*(int)>;

ModelAccess access_from_vector(const std::vector<ModelParams>& models);

class RewardOracle {
public:
    RewardOracle(int client, ModelAccess models, std::vector<double> weights,
                 const LabeledBatch* validation);

    // R(S) = -(mean cross-entropy of weighted_average(S u {k}) on the
    // client's validation split). S may or may not contain k.
    double reward_of_set(const std::vector<int>& members);

    // Same reward evaluated from a running weighted sum.
    double reward_of_accumulator(const WeightedSum& acc);

    // Reward of an already-averaged parameter vector.
    double reward_of_mean(const ModelParams& mean);

    int client() const { return client_; }
    double weight_of(int id) const { return weights_[static_cast<std::size_t>(id)]; }
    const ModelParams& model_of(int id);
    const LabeledBatch& validation() const { return *validation_; }

    long calls() const { return calls_; }
    long models_touched() const { return models_touched_; }

private:
    int client_;
    ModelAccess models_;
    std::vector<double> weights_;
    const LabeledBatch* validation_;
    long calls_ = 0;
    long models_touched_ = 0;
};

// Symmetric nonnegative edge weights, zero diagonal.
struct SyntheticCutInstance {
    int n = 0;
    std::vector<double> edge_weights;  // n x n row-major

    double weight(int u, int v) const {
        return edge_weights[static_cast<std::size_t>(u) * static_cast<std::size_t>(n) +
                            static_cast<std::size_t>(v)];
    }
    void validate() const;

    static SyntheticCutInstance random(int n, RngStream& rng);
};

// Total edge weight across the (S, complement) cut.
double cut_reward(const SyntheticCutInstance& instance, const std::vector<int>& members);

}  // namespace dpfl
