// Weighted model averaging and the incremental weighted-sum accumulator
// that batched graph construction relies on.
#pragma once

#include <set>
#include <vector>

#include "dpfl/model.hpp"

namespace dpfl {

// sum = sum_{i in members} p_i * w_i; total_weight = sum p_i.
struct WeightedSum {
    std::vector<double> sum;
    double total_weight = 0.0;
    std::set<int> members;

    bool contains(int client) const { return members.count(client) != 0; }
    std::size_t size() const { return members.size(); }
};

WeightedSum make_weighted_sum(int client, const ModelParams& model, double p);

// Precondition: client not yet a member.
void accumulator_add(WeightedSum& acc, int client, const ModelParams& model, double p);

// Precondition: client is a member and at least one member remains.
void accumulator_remove(WeightedSum& acc, int client, const ModelParams& model, double p);

// sum / total_weight.
ModelParams mean_model(const WeightedSum& acc);

// (sum_{i in members} p_i w_i) / (sum p_i), summed in ascending member order.
// models is indexed by client id; weights likewise.
ModelParams weighted_average(const std::vector<ModelParams>& models,
                             const std::vector<double>& weights,
                             const std::vector<int>& members);

}  // namespace dpfl
