#include "dpfl/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpfl {

ModelAccess access_from_vector(const std::vector<ModelParams>& models) {
    return [&models](int id) -> const ModelParams* {
        if (id < 0 || id >= static_cast<int>(models.size())) return nullptr;
        return &models[static_cast<std::size_t>(id)];
    };
}

RewardOracle::RewardOracle(int client, ModelAccess models, std::vector<double> weights,
                           const LabeledBatch* validation)
    : client_(client), models_(std::move(models)), weights_(std::move(weights)),
      validation_(validation) {
    if (validation_ == nullptr || validation_->empty())
        throw std::invalid_argument("reward oracle needs a nonempty validation split");
}

const ModelParams& RewardOracle::model_of(int id) {
    const ModelParams* m = models_(id);
    if (m == nullptr)
        throw std::runtime_error("model not received within budget (client " +
                                 std::to_string(id) + ")");
    ++models_touched_;
    return *m;
}

double RewardOracle::reward_of_set(const std::vector<int>& members) {
    std::vector<int> full(members);
    full.push_back(client_);
    std::sort(full.begin(), full.end());
    full.erase(std::unique(full.begin(), full.end()), full.end());

    WeightedSum acc;
    bool first = true;
    for (int id : full) {
        const ModelParams& m = model_of(id);
        if (first) {
            acc = make_weighted_sum(id, m, weight_of(id));
            first = false;
        } else {
            accumulator_add(acc, id, m, weight_of(id));
        }
    }
    return reward_of_mean(mean_model(acc));
}

double RewardOracle::reward_of_accumulator(const WeightedSum& acc) {
    return reward_of_mean(mean_model(acc));
}

double RewardOracle::reward_of_mean(const ModelParams& mean) {
    ++calls_;
    return -loss(mean, *validation_);
}

void SyntheticCutInstance::validate() const {
    if (n <= 0) throw std::invalid_argument("cut instance needs n > 0");
    if (edge_weights.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw std::invalid_argument("edge weight matrix has wrong size");
    for (int u = 0; u < n; ++u) {
        if (weight(u, u) != 0.0) throw std::invalid_argument("cut instance diagonal must be zero");
        for (int v = 0; v < n; ++v) {
            if (weight(u, v) < 0.0) throw std::invalid_argument("edge weights must be nonnegative");
            if (weight(u, v) != weight(v, u))
                throw std::invalid_argument("edge weights must be symmetric");
        }
    }
}

SyntheticCutInstance SyntheticCutInstance::random(int n, RngStream& rng) {
    SyntheticCutInstance inst;
    inst.n = n;
    inst.edge_weights.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            double w = rng.uniform();
            inst.edge_weights[static_cast<std::size_t>(u) * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(v)] = w;
            inst.edge_weights[static_cast<std::size_t>(v) * static_cast<std::size_t>(n) +
                              static_cast<std::size_t>(u)] = w;
        }
    return inst;
}

double cut_reward(const SyntheticCutInstance& instance, const std::vector<int>& members) {
    std::vector<bool> in_set(static_cast<std::size_t>(instance.n), false);
    for (int id : members) {
        if (id < 0 || id >= instance.n) throw std::invalid_argument("cut member outside [0, n)");
        in_set[static_cast<std::size_t>(id)] = true;
    }
    double total = 0.0;
    for (int u = 0; u < instance.n; ++u) {
        if (!in_set[static_cast<std::size_t>(u)]) continue;
        for (int v = 0; v < instance.n; ++v)
            if (!in_set[static_cast<std::size_t>(v)]) total += instance.weight(u, v);
    }
    return total;
}

}  // namespace dpfl
