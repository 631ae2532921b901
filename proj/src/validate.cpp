#include "dpfl/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace dpfl {

GreedyValidateReport run_greedy_validate(int n, int trials, int budget, std::uint64_t seed) {
    if (n < 2 || n > 12) throw std::invalid_argument("greedy-validate needs 2 <= n <= 12");
    GreedyValidateReport report;
    report.n = n;
    report.trials = trials;
    report.budget = budget;
    if (trials <= 0) return report;

    std::vector<int> candidates;
    for (int i = 1; i < n; ++i) candidates.push_back(i);

    double ratio_sum = 0.0;
    double ratio_min = std::numeric_limits<double>::infinity();
    int no_worse = 0;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream inst_rng = RngStream::derived(seed, "cut_instance", static_cast<std::uint64_t>(trial));
        SyntheticCutInstance inst = SyntheticCutInstance::random(n, inst_rng);
        auto reward = [&inst](const std::vector<int>& members) {
            std::vector<int> with_self(members);
            with_self.push_back(0);
            return cut_reward(inst, with_self);
        };

        GreedyTrace trace = ggc_set(0, candidates, budget, reward,
                                    derive_seed(seed, "cut_run", static_cast<std::uint64_t>(trial)));
        std::vector<int> best = brute_force_best(0, candidates, budget, reward);

        const double got = reward(trace.result);
        const double self = reward({});
        const double opt = reward(best);
        const double ratio = opt > 0.0 ? got / opt : 1.0;
        ratio_sum += ratio;
        ratio_min = std::min(ratio_min, ratio);
        if (got >= self - 1e-12) ++no_worse;
    }
    report.mean_ratio = ratio_sum / static_cast<double>(trials);
    report.min_ratio = ratio_min;
    report.no_worse_pass_rate = static_cast<double>(no_worse) / static_cast<double>(trials);
    return report;
}

namespace {

struct EquivalenceInstance {
    int n = 0;
    int client = 0;
    int budget = kUnbounded;
    std::vector<ModelParams> models;
    std::vector<double> weights;
    LabeledBatch validation;
    std::vector<int> candidates;
};

EquivalenceInstance make_instance(std::uint64_t seed, int trial) {
    RngStream rng = RngStream::derived(seed, "equiv_instance", static_cast<std::uint64_t>(trial));
    EquivalenceInstance inst;
    inst.n = 5 + static_cast<int>(rng.uniform_int(36));  // up to 40
    const int budgets[4] = {2, 5, 10, kUnbounded};
    inst.budget = budgets[trial % 4];
    const int F = 3 + static_cast<int>(rng.uniform_int(6));
    const int C = 2 + static_cast<int>(rng.uniform_int(4));

    inst.models.reserve(static_cast<std::size_t>(inst.n));
    inst.weights.reserve(static_cast<std::size_t>(inst.n));
    for (int k = 0; k < inst.n; ++k) {
        inst.models.push_back(random_init(F, C, 1.0, rng));
        inst.weights.push_back(rng.uniform(0.5, 2.0));
    }
    inst.validation.num_features = F;
    const int n_val = 8;
    std::vector<double> x(static_cast<std::size_t>(F));
    for (int i = 0; i < n_val; ++i) {
        for (auto& v : x) v = rng.gaussian();
        inst.validation.push_row(x.data(), static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C))));
    }
    inst.client = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(inst.n)));
    for (int j = 0; j < inst.n; ++j)
        if (j != inst.client) inst.candidates.push_back(j);
    return inst;
}

double max_rel_err(const ModelParams& got, const ModelParams& want) {
    double scale = 1e-30;
    for (double v : want.values) scale = std::max(scale, std::fabs(v));
    double worst = 0.0;
    for (std::size_t j = 0; j < want.values.size(); ++j)
        worst = std::max(worst, std::fabs(got.values[j] - want.values[j]) / scale);
    return worst;
}

}  // namespace

EquivalenceReport run_equivalence_check(int trials, std::uint64_t seed) {
    EquivalenceReport report;
    report.trials = trials;
    report.worst_no_worse_margin = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < trials; ++trial) {
        EquivalenceInstance inst = make_instance(seed, trial);
        ModelAccess access = access_from_vector(inst.models);
        const std::uint64_t run_seed = derive_seed(seed, "equiv_run", static_cast<std::uint64_t>(trial));

        GreedyTrace direct = ggc(inst.client, inst.candidates, inst.budget, access, inst.weights,
                                 inst.validation, run_seed);
        BatchStats stats;
        GreedyTrace batched = bggc(inst.client, inst.candidates, inst.budget, access, inst.weights,
                                   inst.validation, run_seed, CoinMode::lockstep, &stats);

        if (inst.budget >= 0) {
            if (stats.peak_foreign_models > inst.budget ||
                static_cast<int>(batched.result.size()) > inst.budget)
                ++report.budget_violations;
        }
        for (const GreedyTrace* trace : {&direct, &batched})
            if (!std::isnan(trace->reward_final))
                report.worst_no_worse_margin = std::min(
                    report.worst_no_worse_margin, trace->reward_final - trace->reward_initial);

        if (direct.result == batched.result) {
            ++report.identical_sets;
        } else if (report.first_mismatch.empty()) {
            nlohmann::json j = {
                {"trial", trial},          {"client", inst.client}, {"n", inst.n},
                {"budget", inst.budget},   {"seed", run_seed},      {"ggc", direct.result},
                {"bggc", batched.result},
            };
            report.first_mismatch = j.dump();
        }

        // Incremental weighted sum against the direct average over the
        // same final member set.
        WeightedSum acc = make_weighted_sum(inst.client,
                                            inst.models[static_cast<std::size_t>(inst.client)],
                                            inst.weights[static_cast<std::size_t>(inst.client)]);
        for (int j : direct.result)
            accumulator_add(acc, j, inst.models[static_cast<std::size_t>(j)],
                            inst.weights[static_cast<std::size_t>(j)]);
        std::vector<int> members = direct.result;
        members.push_back(inst.client);
        if (members.size() > 1) {
            ModelParams direct_mean = weighted_average(inst.models, inst.weights, members);
            report.accumulator_max_rel_err =
                std::max(report.accumulator_max_rel_err, max_rel_err(mean_model(acc), direct_mean));
        }

        // Different seeds are allowed to disagree; count how often they do.
        GreedyTrace other = ggc(inst.client, inst.candidates, inst.budget, access, inst.weights,
                                inst.validation,
                                derive_seed(seed, "equiv_alt", static_cast<std::uint64_t>(trial)));
        if (other.result != direct.result) ++report.cross_seed_differing_pairs;
    }
    return report;
}

}  // namespace dpfl
