#include "dpfl/aggregate.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dpfl {

WeightedSum make_weighted_sum(int client, const ModelParams& model, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("aggregation weight must be positive");
    WeightedSum acc;
    acc.sum.resize(model.values.size());
    for (std::size_t j = 0; j < model.values.size(); ++j) acc.sum[j] = p * model.values[j];
    acc.total_weight = p;
    acc.members.insert(client);
    return acc;
}

void accumulator_add(WeightedSum& acc, int client, const ModelParams& model, double p) {
    if (acc.contains(client))
        throw std::invalid_argument("client " + std::to_string(client) + " already in accumulator");
    if (!(p > 0.0)) throw std::invalid_argument("aggregation weight must be positive");
    if (model.values.size() != acc.sum.size())
        throw std::invalid_argument("model dimension does not match accumulator");
    for (std::size_t j = 0; j < acc.sum.size(); ++j) acc.sum[j] += p * model.values[j];
    acc.total_weight += p;
    acc.members.insert(client);
}

void accumulator_remove(WeightedSum& acc, int client, const ModelParams& model, double p) {
    if (!acc.contains(client))
        throw std::invalid_argument("client " + std::to_string(client) + " not in accumulator");
    if (acc.members.size() == 1)
        throw std::invalid_argument("cannot remove the last accumulator member");
    if (model.values.size() != acc.sum.size())
        throw std::invalid_argument("model dimension does not match accumulator");
    for (std::size_t j = 0; j < acc.sum.size(); ++j) acc.sum[j] -= p * model.values[j];
    acc.total_weight -= p;
    acc.members.erase(client);
}

ModelParams mean_model(const WeightedSum& acc) {
    if (acc.members.empty()) throw std::invalid_argument("empty accumulator");
    if (!(acc.total_weight > 0.0)) throw std::invalid_argument("accumulator weight is not positive");
    ModelParams mean;
    mean.values.resize(acc.sum.size());
    for (std::size_t j = 0; j < acc.sum.size(); ++j) mean.values[j] = acc.sum[j] / acc.total_weight;
    return mean;
}

ModelParams weighted_average(const std::vector<ModelParams>& models,
                             const std::vector<double>& weights,
                             const std::vector<int>& members) {
    if (members.empty()) throw std::invalid_argument("weighted_average over an empty member set");
    std::vector<int> order(members);
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());

    // A singleton average is the model itself, exactly.
    if (order.size() == 1) {
        if (!(weights[static_cast<std::size_t>(order.front())] > 0.0))
            throw std::invalid_argument("aggregation weight must be positive");
        return models[static_cast<std::size_t>(order.front())];
    }

    double total = 0.0;
    ModelParams out;
    out.values.assign(models[static_cast<std::size_t>(order.front())].values.size(), 0.0);
    for (int id : order) {
        const auto& m = models[static_cast<std::size_t>(id)];
        const double p = weights[static_cast<std::size_t>(id)];
        if (!(p > 0.0)) throw std::invalid_argument("aggregation weight must be positive");
        if (m.values.size() != out.values.size())
            throw std::invalid_argument("model dimension mismatch in weighted_average");
        for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] += p * m.values[j];
        total += p;
    }
    if (!(total > 0.0)) throw std::invalid_argument("total aggregation weight is zero");
    for (auto& v : out.values) v /= total;
    return out;
}

}  // namespace dpfl
