#include "dpfl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace dpfl {

namespace {

std::vector<int> canonical_candidates(int client, const std::vector<int>& candidates) {
    std::vector<int> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (int id : sorted)
        if (id == client) throw std::invalid_argument("candidate set must exclude the client");
    return sorted;
}

GreedyTrace empty_trace() {
    GreedyTrace trace;
    trace.reward_initial = std::numeric_limits<double>::quiet_NaN();
    trace.reward_final = std::numeric_limits<double>::quiet_NaN();
    return trace;
}

struct Decision {
    double p = 0.0;
    double coin = 0.0;
    bool drew = false;
    bool add = false;
};

// Four cases on the clipped gains a = max(gain_add, 0), b = max(gain_remove, 0):
// a>0,b=0 -> certain add; a=0,b>0 -> certain remove; a>0,b>0 -> biased coin
// with p = a/(a+b). When both clip to zero, a tied add-gain (exactly zero,
// e.g. identical models) adds with certainty, while a strictly negative one
// removes; this keeps every performed addition at nonnegative gain, so the
// returned set is never worth less than the client alone. On submodular
// rewards both gains cannot be strictly negative at once, so there this
// rule coincides with always adding.
Decision decide(double gain_add, double gain_remove, RngStream& coins, CoinMode mode) {
    const double a = std::max(gain_add, 0.0);
    const double b = std::max(gain_remove, 0.0);
    Decision d;
    if (a > 0.0 && b > 0.0) {
        d.p = a / (a + b);
    } else if (a > 0.0) {
        d.p = 1.0;
    } else if (b > 0.0) {
        d.p = 0.0;
    } else {
        d.p = gain_add == 0.0 ? 1.0 : 0.0;
    }
    if (mode == CoinMode::lockstep) {
        d.coin = coins.uniform();
        d.drew = true;
        d.add = d.coin < d.p;
    } else {
        if (a > 0.0 && b > 0.0) {
            d.coin = coins.uniform();
            d.drew = true;
            d.add = d.coin < d.p;
        } else {
            d.add = d.p == 1.0;
        }
    }
    return d;
}

}  // namespace

GreedyTrace ggc_set(int client, const std::vector<int>& candidates, int budget,
                    const SetReward& reward, std::uint64_t seed, CoinMode mode) {
    std::vector<int> sorted = canonical_candidates(client, candidates);
    GreedyTrace trace = empty_trace();
    if (budget == 0 || sorted.empty()) return trace;

    std::vector<int> order(sorted);
    RngStream shuffle_rng = RngStream::derived(seed, "ggc_shuffle", static_cast<std::uint64_t>(client));
    shuffle_rng.shuffle(order);
    RngStream coins = RngStream::derived(seed, "ggc_coin", static_cast<std::uint64_t>(client));

    long calls = 0;
    auto evaluate = [&](const std::vector<int>& members) {
        ++calls;
        return reward(members);
    };

    std::vector<int> x;       // selected collaborators, self excluded
    std::vector<int> y(sorted);
    double r_x = evaluate(x);
    double r_y = evaluate(y);
    trace.reward_initial = r_x;

    for (int j : order) {
        std::vector<int> x_plus(x);
        x_plus.insert(std::lower_bound(x_plus.begin(), x_plus.end(), j), j);
        double r_x_plus = evaluate(x_plus);

        std::vector<int> y_minus(y);
        y_minus.erase(std::find(y_minus.begin(), y_minus.end(), j));
        double r_y_minus = evaluate(y_minus);

        const double a = std::max(r_x_plus - r_x, 0.0);
        const double b = std::max(r_y_minus - r_y, 0.0);
        Decision d = decide(a, b, coins, mode);
        trace.steps.push_back({j, a, b, d.p, d.coin, d.drew, d.add});
        if (d.add) {
            x = std::move(x_plus);
            r_x = r_x_plus;
        } else {
            y = std::move(y_minus);
            r_y = r_y_minus;
        }
        if (budget > 0 && static_cast<int>(x.size()) == budget) break;
    }
    trace.result = std::move(x);
    trace.reward_final = r_x;
    trace.oracle_calls = calls;
    return trace;
}

namespace {

// Shared core of GGC and BGGC. Models arrive in batches of at most
// batch_limit; each batch is copied into a local holding buffer, used, and
// dropped, so the peak number of simultaneously held foreign models equals
// the largest batch. The arithmetic (shuffle, weighted-sum updates, reward
// evaluations, coin draws) is independent of the batch size.
GreedyTrace model_double_greedy(int client, const std::vector<int>& candidates, int budget,
                                const ModelAccess& models, const std::vector<double>& weights,
                                const LabeledBatch& validation, std::uint64_t seed, CoinMode mode,
                                BatchStats* stats, std::size_t batch_limit) {
    std::vector<int> sorted = canonical_candidates(client, candidates);
    GreedyTrace trace = empty_trace();
    if (budget == 0 || sorted.empty()) return trace;

    std::vector<int> order(sorted);
    RngStream shuffle_rng = RngStream::derived(seed, "ggc_shuffle", static_cast<std::uint64_t>(client));
    shuffle_rng.shuffle(order);
    RngStream coins = RngStream::derived(seed, "ggc_coin", static_cast<std::uint64_t>(client));

    RewardOracle oracle(client, models, weights, &validation);
    const ModelParams* own = models(client);
    if (own == nullptr) throw std::runtime_error("incomplete model stream");

    auto fetch_batch = [&](std::size_t start) {
        const std::size_t stop = std::min(start + batch_limit, order.size());
        std::vector<ModelParams> held;
        held.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) {
            const ModelParams* m = models(order[i]);
            if (m == nullptr) throw std::runtime_error("incomplete model stream");
            held.push_back(*m);
        }
        if (stats != nullptr) {
            stats->batches += 1;
            stats->peak_foreign_models =
                std::max(stats->peak_foreign_models, static_cast<int>(held.size()));
            stats->models_received += static_cast<long>(held.size());
        }
        return held;
    };

    const double own_weight = weights[static_cast<std::size_t>(client)];

    // Sum pass: accumulate w^Y over the shuffled order.
    WeightedSum w_y = make_weighted_sum(client, *own, own_weight);
    for (std::size_t start = 0; start < order.size(); start += batch_limit) {
        std::vector<ModelParams> held = fetch_batch(start);
        for (std::size_t i = 0; i < held.size(); ++i) {
            const int j = order[start + i];
            accumulator_add(w_y, j, held[i], weights[static_cast<std::size_t>(j)]);
        }
    }

    WeightedSum w_x = make_weighted_sum(client, *own, own_weight);
    double r_x = oracle.reward_of_accumulator(w_x);
    double r_y = oracle.reward_of_accumulator(w_y);
    trace.reward_initial = r_x;

    // Decision pass: re-stream in the same order, keeping w^X and w^Y
    // consistent with the accepted decisions.
    bool budget_hit = false;
    for (std::size_t start = 0; start < order.size() && !budget_hit; start += batch_limit) {
        std::vector<ModelParams> held = fetch_batch(start);
        for (std::size_t i = 0; i < held.size(); ++i) {
            const int j = order[start + i];
            const double p_j = weights[static_cast<std::size_t>(j)];

            WeightedSum trial_add = w_x;
            accumulator_add(trial_add, j, held[i], p_j);
            double r_x_plus = oracle.reward_of_accumulator(trial_add);

            WeightedSum trial_remove = w_y;
            accumulator_remove(trial_remove, j, held[i], p_j);
            double r_y_minus = oracle.reward_of_accumulator(trial_remove);

            const double a = std::max(r_x_plus - r_x, 0.0);
            const double b = std::max(r_y_minus - r_y, 0.0);
            Decision d = decide(a, b, coins, mode);
            trace.steps.push_back({j, a, b, d.p, d.coin, d.drew, d.add});
            if (d.add) {
                w_x = std::move(trial_add);
                r_x = r_x_plus;
            } else {
                w_y = std::move(trial_remove);
                r_y = r_y_minus;
            }
            if (budget > 0 && static_cast<int>(w_x.members.size()) - 1 == budget) {
                budget_hit = true;
                break;
            }
        }
    }

    trace.result.reserve(w_x.members.size() - 1);
    for (int id : w_x.members)
        if (id != client) trace.result.push_back(id);
    trace.reward_final = r_x;
    trace.oracle_calls = oracle.calls();
    return trace;
}

}  // namespace

GreedyTrace ggc(int client, const std::vector<int>& candidates, int budget,
                const ModelAccess& models, const std::vector<double>& weights,
                const LabeledBatch& validation, std::uint64_t seed, CoinMode mode,
                BatchStats* stats) {
    return model_double_greedy(client, candidates, budget, models, weights, validation, seed,
                               mode, stats, std::max<std::size_t>(candidates.size(), 1));
}

GreedyTrace bggc(int client, const std::vector<int>& candidates, int budget,
                 const ModelAccess& models, const std::vector<double>& weights,
                 const LabeledBatch& validation, std::uint64_t seed, CoinMode mode,
                 BatchStats* stats) {
    const std::size_t batch_limit =
        budget > 0 ? static_cast<std::size_t>(budget) : std::max<std::size_t>(candidates.size(), 1);
    return model_double_greedy(client, candidates, budget, models, weights, validation, seed,
                               mode, stats, batch_limit);
}

std::vector<int> brute_force_best(int client, const std::vector<int>& candidates, int budget,
                                  const SetReward& reward) {
    std::vector<int> sorted = canonical_candidates(client, candidates);
    if (sorted.size() > 12)
        throw std::invalid_argument("brute force refuses candidate sets larger than 12");

    const std::size_t m = sorted.size();
    std::vector<int> best;
    double best_value = reward(best);
    std::vector<int> subset;
    for (std::uint64_t mask = 1; mask < (1ULL << m); ++mask) {
        const int count = __builtin_popcountll(mask);
        if (budget >= 0 && count > budget) continue;
        subset.clear();
        for (std::size_t i = 0; i < m; ++i)
            if (mask & (1ULL << i)) subset.push_back(sorted[i]);
        const double value = reward(subset);
        if (value > best_value ||
            (value == best_value &&
             std::lexicographical_compare(subset.begin(), subset.end(), best.begin(), best.end()))) {
            best_value = value;
            best = subset;
        }
    }
    return best;
}

CollabGraph random_graph(int n, int budget, std::uint64_t seed) {
    CollabGraph graph;
    graph.n = n;
    graph.budget = budget;
    graph.omega.resize(static_cast<std::size_t>(n));
    const int degree = budget < 0 ? n - 1 : std::min(budget, n - 1);
    for (int k = 0; k < n; ++k) {
        RngStream rng = RngStream::derived(seed, "random_graph", static_cast<std::uint64_t>(k));
        std::vector<int> picks = rng.sample_without_replacement(n - 1, degree);
        for (int& v : picks)
            if (v >= k) ++v;  // skip self
        std::sort(picks.begin(), picks.end());
        graph.omega[static_cast<std::size_t>(k)] = std::move(picks);
    }
    graph.selected = graph.omega;
    return graph;
}

std::string trace_json_lines(const GreedyTrace& trace) {
    std::string out;
    for (const auto& step : trace.steps) {
        nlohmann::json line = {
            {"candidate", step.candidate}, {"a", step.gain_add},  {"b", step.gain_remove},
            {"p", step.p},                 {"decision", step.added ? "add" : "remove"},
        };
        if (step.drew_coin)
            line["coin"] = step.coin;
        else
            line["coin"] = nullptr;
        out += line.dump();
        out += '\n';
    }
    nlohmann::json summary = {{"result", trace.result}, {"oracle_calls", trace.oracle_calls}};
    summary["reward_initial"] = std::isnan(trace.reward_initial)
                                    ? nlohmann::json(nullptr)
                                    : nlohmann::json(trace.reward_initial);
    summary["reward_final"] = std::isnan(trace.reward_final) ? nlohmann::json(nullptr)
                                                             : nlohmann::json(trace.reward_final);
    out += summary.dump();
    out += '\n';
    return out;
}

}  // namespace dpfl
