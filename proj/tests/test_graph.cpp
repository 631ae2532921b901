#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dpfl/graph.hpp"
#include "dpfl/validate.hpp"

using namespace dpfl;

namespace {

SetReward modular(const std::map<int, double>& coeffs) {
    return [coeffs](const std::vector<int>& members) {
        double total = 0.0;
        for (int id : members) total += coeffs.at(id);
        return total;
    };
}

std::vector<int> library_shuffle_order(int client, std::vector<int> candidates,
                                       std::uint64_t seed) {
    std::sort(candidates.begin(), candidates.end());
    RngStream rng = RngStream::derived(seed, "ggc_shuffle", static_cast<std::uint64_t>(client));
    rng.shuffle(candidates);
    return candidates;
}

SetReward cut_with_self(const SyntheticCutInstance& inst, int self) {
    return [&inst, self](const std::vector<int>& members) {
        std::vector<int> with_self(members);
        with_self.push_back(self);
        return cut_reward(inst, with_self);
    };
}

// Second, independently coded enumerator for brute_force_best: recursive
// instead of bitmask, tracking the best reward and lexicographic tie-break.
void enumerate(const std::vector<int>& sorted, std::size_t i, int budget, std::vector<int>& cur,
               const SetReward& reward, std::vector<int>& best, double& best_value) {
    if (i == sorted.size()) {
        const double value = reward(cur);
        if (value > best_value ||
            (value == best_value &&
             std::lexicographical_compare(cur.begin(), cur.end(), best.begin(), best.end()))) {
            best_value = value;
            best = cur;
        }
        return;
    }
    enumerate(sorted, i + 1, budget, cur, reward, best, best_value);
    if (budget < 0 || static_cast<int>(cur.size()) < budget) {
        cur.push_back(sorted[i]);
        enumerate(sorted, i + 1, budget, cur, reward, best, best_value);
        cur.pop_back();
    }
}

std::vector<int> brute_force_reference(const std::vector<int>& candidates, int budget,
                                       const SetReward& reward) {
    std::vector<int> sorted(candidates);
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> cur, best;
    double best_value = reward({});
    enumerate(sorted, 0, budget, cur, reward, best, best_value);
    return best;
}

struct ModelFixture {
    std::vector<ModelParams> models;
    std::vector<double> weights;
    LabeledBatch val;

    ModelFixture(int n, int F, int C, std::uint64_t seed) {
        RngStream rng(seed);
        for (int k = 0; k < n; ++k) {
            models.push_back(random_init(F, C, 0.8, rng));
            weights.push_back(rng.uniform(0.4, 1.6));
        }
        val.num_features = F;
        std::vector<double> x(static_cast<std::size_t>(F));
        for (int i = 0; i < 10; ++i) {
            for (auto& v : x) v = rng.gaussian();
            val.push_row(x.data(), static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(C))));
        }
    }
};

}  // namespace

TEST_CASE("modular rewards: all-positive takes the first shuffled candidates") {
    std::map<int, double> coeffs{{1, 0.5}, {2, 1.5}, {3, 0.25}, {4, 2.0}, {5, 0.75}};
    std::vector<int> candidates{1, 2, 3, 4, 5};
    const std::uint64_t seed = 31;
    GreedyTrace trace = ggc_set(0, candidates, 2, modular(coeffs), seed);

    std::vector<int> order = library_shuffle_order(0, candidates, seed);
    std::vector<int> expected{order[0], order[1]};
    std::sort(expected.begin(), expected.end());
    CHECK(trace.result == expected);
    CHECK(trace.steps.size() == 2);  // early break right after the second addition
    for (const auto& step : trace.steps) {
        CHECK(step.gain_add > 0.0);
        CHECK(step.gain_remove == 0.0);
        CHECK(step.p == 1.0);
        CHECK(step.added);
    }
}

TEST_CASE("modular rewards: all-negative selects nobody") {
    std::map<int, double> coeffs{{1, -0.5}, {2, -1.5}, {3, -0.25}};
    GreedyTrace trace = ggc_set(0, {1, 2, 3}, 2, modular(coeffs), 7);
    CHECK(trace.result.empty());
    for (const auto& step : trace.steps) {
        CHECK(step.gain_add == 0.0);
        CHECK(step.gain_remove > 0.0);
        CHECK(step.p == 0.0);
        CHECK_FALSE(step.added);
    }
}

TEST_CASE("the four decision cases") {
    // Hand-built values: R({}) = 0, R({1}) = 1, R({2}) = 5, R({1,2}) = 3.
    SetReward reward = [](const std::vector<int>& members) {
        if (members.empty()) return 0.0;
        if (members == std::vector<int>{1}) return 1.0;
        if (members == std::vector<int>{2}) return 5.0;
        return 3.0;  // {1,2}
    };
    // Pick a seed whose shuffle keeps candidate 1 first.
    std::uint64_t seed = 0;
    while (library_shuffle_order(0, {1, 2}, seed) != std::vector<int>{1, 2}) ++seed;

    GreedyTrace trace = ggc_set(0, {1, 2}, kUnbounded, reward, seed);
    REQUIRE(trace.steps.size() == 2);

    // Candidate 1: a = 1, b = R({2}) - R({1,2}) = 2; the genuinely random case.
    const GreedyStep& first = trace.steps[0];
    CHECK(first.candidate == 1);
    CHECK(first.gain_add == doctest::Approx(1.0));
    CHECK(first.gain_remove == doctest::Approx(2.0));
    CHECK(first.p == doctest::Approx(1.0 / 3.0));
    CHECK(first.drew_coin);
    CHECK(first.added == (first.coin < first.p));

    // Candidate 2: positive add gain, zero removal gain, certain addition.
    const GreedyStep& second = trace.steps[1];
    CHECK(second.candidate == 2);
    CHECK(second.gain_add > 0.0);
    CHECK(second.gain_remove == 0.0);
    CHECK(second.p == 1.0);
    CHECK(second.added);

    SUBCASE("a constant reward adds with certainty (both gains zero)") {
        SetReward constant = [](const std::vector<int>&) { return 4.0; };
        GreedyTrace t = ggc_set(0, {1, 2, 3}, kUnbounded, constant, 5);
        CHECK(t.result == std::vector<int>{1, 2, 3});
        for (const auto& step : t.steps) {
            CHECK(step.gain_add == 0.0);
            CHECK(step.gain_remove == 0.0);
            CHECK(step.p == 1.0);
            CHECK(step.added);
        }
    }
}

TEST_CASE("coin modes draw at the documented times and agree on decisions") {
    std::map<int, double> coeffs{{1, 0.5}, {2, -1.0}, {3, 2.0}};
    GreedyTrace lockstep = ggc_set(0, {1, 2, 3}, kUnbounded, modular(coeffs), 9, CoinMode::lockstep);
    GreedyTrace sparing = ggc_set(0, {1, 2, 3}, kUnbounded, modular(coeffs), 9, CoinMode::mixed_only);
    REQUIRE(lockstep.steps.size() == sparing.steps.size());
    for (std::size_t i = 0; i < lockstep.steps.size(); ++i) {
        CHECK(lockstep.steps[i].drew_coin);
        CHECK_FALSE(sparing.steps[i].drew_coin);  // modular gains are never both positive
        CHECK(lockstep.steps[i].added == sparing.steps[i].added);
    }
    CHECK(lockstep.result == sparing.result);
}

TEST_CASE("budget semantics") {
    RngStream rng(10);
    SyntheticCutInstance inst = SyntheticCutInstance::random(9, rng);
    std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8};
    SetReward reward = cut_with_self(inst, 0);

    SUBCASE("budget zero returns immediately with no oracle calls") {
        GreedyTrace trace = ggc_set(0, candidates, 0, reward, 3);
        CHECK(trace.result.empty());
        CHECK(trace.steps.empty());
        CHECK(trace.oracle_calls == 0);
    }
    SUBCASE("the budget is never exceeded") {
        for (int budget : {1, 2, 3, 5}) {
            for (std::uint64_t seed = 0; seed < 30; ++seed) {
                GreedyTrace trace = ggc_set(0, candidates, budget, reward, seed);
                CHECK(static_cast<int>(trace.result.size()) <= budget);
            }
        }
    }
    SUBCASE("empty candidate sets select nobody") {
        GreedyTrace trace = ggc_set(0, {}, 4, reward, 3);
        CHECK(trace.result.empty());
        CHECK(trace.oracle_calls == 0);
    }
}

TEST_CASE("seeded determinism reproduces the full trace") {
    RngStream rng(11);
    SyntheticCutInstance inst = SyntheticCutInstance::random(8, rng);
    std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7};
    GreedyTrace a = ggc_set(0, candidates, 3, cut_with_self(inst, 0), 123);
    GreedyTrace b = ggc_set(0, candidates, 3, cut_with_self(inst, 0), 123);
    REQUIRE(a.steps.size() == b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        CHECK(a.steps[i].candidate == b.steps[i].candidate);
        CHECK(a.steps[i].gain_add == b.steps[i].gain_add);
        CHECK(a.steps[i].gain_remove == b.steps[i].gain_remove);
        CHECK(a.steps[i].p == b.steps[i].p);
        CHECK(a.steps[i].coin == b.steps[i].coin);
        CHECK(a.steps[i].added == b.steps[i].added);
    }
    CHECK(a.result == b.result);
    CHECK(a.reward_final == b.reward_final);
}

TEST_CASE("oracle call counts stay within four per candidate") {
    RngStream rng(12);
    SyntheticCutInstance inst = SyntheticCutInstance::random(10, rng);
    std::vector<int> candidates;
    for (int i = 1; i < 10; ++i) candidates.push_back(i);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GreedyTrace trace = ggc_set(0, candidates, kUnbounded, cut_with_self(inst, 0), seed);
        CHECK(trace.oracle_calls == 2 + 2 * static_cast<long>(trace.steps.size()));
        CHECK(trace.oracle_calls <= 4 * static_cast<long>(candidates.size()));
    }
}

TEST_CASE("positive scaling leaves the trace unchanged") {
    RngStream rng(13);
    SyntheticCutInstance inst = SyntheticCutInstance::random(9, rng);
    std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7, 8};
    SetReward base = cut_with_self(inst, 0);
    SetReward scaled = [&base](const std::vector<int>& members) { return 4.0 * base(members); };
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        GreedyTrace a = ggc_set(0, candidates, 3, base, seed);
        GreedyTrace b = ggc_set(0, candidates, 3, scaled, seed);
        CHECK(a.result == b.result);
        REQUIRE(a.steps.size() == b.steps.size());
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
            CHECK(a.steps[i].p == b.steps[i].p);
            CHECK(a.steps[i].added == b.steps[i].added);
        }
    }
}

TEST_CASE("the returned set is never worse than self") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RngStream rng = RngStream::derived(seed, "instance");
        SyntheticCutInstance inst = SyntheticCutInstance::random(8, rng);
        std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7};
        SetReward reward = cut_with_self(inst, 0);
        const int budget = static_cast<int>(seed % 4) == 3 ? kUnbounded : 1 + static_cast<int>(seed % 4);
        GreedyTrace trace = ggc_set(0, candidates, budget, reward, seed);
        CHECK(reward(trace.result) >= reward({}) - 1e-12);
    }
}

TEST_CASE("greedy validation harness reaches the expected approximation ratio") {
    GreedyValidateReport report = run_greedy_validate(10, 200, kUnbounded, 2024);
    CHECK(report.mean_ratio >= 0.45);
    CHECK(report.min_ratio >= 0.0);
    CHECK(report.no_worse_pass_rate == 1.0);

    GreedyValidateReport empty = run_greedy_validate(10, 0, kUnbounded, 2024);
    CHECK(empty.trials == 0);
}

TEST_CASE("ggc and bggc produce identical sets under a shared seed") {
    EquivalenceReport report = run_equivalence_check(60, 77);
    CHECK(report.identical_sets == report.trials);
    CHECK(report.accumulator_max_rel_err < 1e-9);
    CHECK(report.cross_seed_differing_pairs >= 1);
    CHECK(report.first_mismatch.empty());
}

TEST_CASE("bggc batching stays within the budget") {
    ModelFixture fx(17, 5, 3, 21);
    ModelAccess access = access_from_vector(fx.models);
    std::vector<int> candidates;
    for (int i = 1; i < 17; ++i) candidates.push_back(i);

    for (int budget : {2, 5, 16}) {
        BatchStats stats;
        GreedyTrace trace = bggc(0, candidates, budget, access, fx.weights, fx.val, 5,
                                 CoinMode::lockstep, &stats);
        CHECK(stats.peak_foreign_models <= budget);
        CHECK(static_cast<int>(trace.result.size()) <= budget);
        CHECK(stats.models_received <= 2L * static_cast<long>(candidates.size()));
    }

    SUBCASE("a single batch suffices when the budget covers everyone") {
        BatchStats stats;
        GreedyTrace batched = bggc(0, candidates, 16, access, fx.weights, fx.val, 9,
                                   CoinMode::lockstep, &stats);
        CHECK(stats.batches == 2);  // one sum pass, one decision pass
        GreedyTrace direct = ggc(0, candidates, 16, access, fx.weights, fx.val, 9);
        CHECK(batched.result == direct.result);
    }
}

TEST_CASE("an interrupted model stream is an error") {
    ModelFixture fx(6, 4, 3, 22);
    ModelAccess broken = [&fx](int id) -> const ModelParams* {
        if (id == 4) return nullptr;
        return &fx.models[static_cast<std::size_t>(id)];
    };
    std::vector<int> candidates{1, 2, 3, 4, 5};
    CHECK_THROWS_WITH_AS(bggc(0, candidates, 2, broken, fx.weights, fx.val, 3),
                         "incomplete model stream", std::runtime_error);
}

TEST_CASE("candidate sets containing the client are rejected") {
    ModelFixture fx(4, 4, 3, 23);
    CHECK_THROWS_AS(
        ggc(1, {0, 1, 2}, 2, access_from_vector(fx.models), fx.weights, fx.val, 1),
        std::invalid_argument);
}

TEST_CASE("brute force subset oracle") {
    SUBCASE("modular positive rewards pick the top coefficients") {
        std::map<int, double> coeffs{{1, 0.5}, {2, 1.5}, {3, 0.25}, {4, 2.0}};
        CHECK(brute_force_best(0, {1, 2, 3, 4}, 2, modular(coeffs)) == std::vector<int>{2, 4});
        CHECK(brute_force_best(0, {1, 2, 3, 4}, 0, modular(coeffs)).empty());
    }
    SUBCASE("matches an independently coded enumerator on random instances") {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            RngStream rng = RngStream::derived(seed, "bf");
            SyntheticCutInstance inst = SyntheticCutInstance::random(8, rng);
            std::vector<int> candidates{1, 2, 3, 4, 5, 6, 7};
            SetReward reward = cut_with_self(inst, 0);
            const int budget = static_cast<int>(seed % 5) == 4 ? kUnbounded : static_cast<int>(seed % 5);
            CHECK(brute_force_best(0, candidates, budget, reward) ==
                  brute_force_reference(candidates, budget, reward));
        }
    }
    SUBCASE("oversized candidate lists are refused") {
        std::vector<int> too_many;
        for (int i = 1; i <= 13; ++i) too_many.push_back(i);
        CHECK_THROWS_AS(brute_force_best(0, too_many, 2, modular({})), std::invalid_argument);
    }
}

TEST_CASE("random graphs have exact degree and no self-loops") {
    for (int budget : {3, 7, kUnbounded}) {
        CollabGraph g = random_graph(12, budget, 5);
        const int expected = budget == kUnbounded ? 11 : budget;
        for (int k = 0; k < g.n; ++k) {
            const auto& row = g.omega[static_cast<std::size_t>(k)];
            CHECK(static_cast<int>(row.size()) == expected);
            std::set<int> unique(row.begin(), row.end());
            CHECK(unique.size() == row.size());
            CHECK(unique.count(k) == 0);
        }
    }
    CollabGraph a = random_graph(10, 4, 99);
    CollabGraph b = random_graph(10, 4, 99);
    CHECK(a.omega == b.omega);
    CollabGraph c = random_graph(10, 4, 100);
    CHECK(a.omega != c.omega);
}

TEST_CASE("traces serialize as JSON lines") {
    std::map<int, double> coeffs{{1, 1.0}, {2, -1.0}};
    GreedyTrace trace = ggc_set(0, {1, 2}, kUnbounded, modular(coeffs), 3);
    std::string text = trace_json_lines(trace);
    std::istringstream in(text);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        nlohmann::json j = nlohmann::json::parse(line);  // throws on malformed output
        ++lines;
        if (j.contains("result")) {
            CHECK(j["result"].get<std::vector<int>>() == trace.result);
            CHECK(j["oracle_calls"].get<long>() == trace.oracle_calls);
        } else {
            CHECK(j.contains("candidate"));
            CHECK(j.contains("p"));
        }
    }
    CHECK(lines == static_cast<int>(trace.steps.size()) + 1);
}
