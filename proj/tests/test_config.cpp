#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "dpfl/config.hpp"

using namespace dpfl;

namespace {

const char* kMinimal =
    "seed = 42\n"
    "mode = dpfl\n"
    "num_clients = 8\n"
    "rounds = 10\n";

}  // namespace

TEST_CASE("a minimal config parses with documented defaults") {
    RunConfig cfg = parse_run_config_text(kMinimal);
    CHECK(cfg.seed == 42);
    CHECK(cfg.mode == RunMode::dpfl);
    CHECK(cfg.num_clients == 8);
    CHECK(cfg.rounds == 10);
    CHECK(cfg.budget == kUnbounded);
    CHECK(cfg.refresh_period == 1);
    CHECK(cfg.sgd.momentum == 0.9);
    CHECK(cfg.partition.scheme == PartitionScheme::dirichlet);
    CHECK_FALSE(cfg.malicious.has_value());
}

TEST_CASE("comments, spacing and full keys parse") {
    std::string text =
        "# experiment\n"
        "seed = 7   # master seed\n"
        "mode = random_graph\n"
        "num_clients = 30\n"
        "rounds = 50\n"
        "budget = 6\n"
        "tau_init = 10\n"
        "tau_train = 5\n"
        "refresh_period = 5\n"
        "coin_mode = mixed_only\n"
        "sgd.learning_rate = 0.01\n"
        "sgd.batch_size = 32\n"
        "dataset.num_classes = 10\n"
        "partition.scheme = pathological\n"
        "partition.classes_per_client = 3\n"
        "malicious.fraction = 0.4\n"
        "malicious.runs_ggc = false\n"
        "malicious.permutation_seed = 77\n";
    RunConfig cfg = parse_run_config_text(text);
    CHECK(cfg.mode == RunMode::random_graph);
    CHECK(cfg.budget == 6);
    CHECK(cfg.tau_init == 10);
    CHECK(cfg.refresh_period == 5);
    CHECK(cfg.coin_mode == CoinMode::mixed_only);
    CHECK(cfg.sgd.batch_size == 32);
    CHECK(cfg.partition.scheme == PartitionScheme::pathological);
    REQUIRE(cfg.malicious.has_value());
    CHECK(cfg.malicious->fraction == 0.4);
    CHECK_FALSE(cfg.malicious->runs_ggc);
    CHECK(cfg.malicious->permutation_seed == 77);
}

TEST_CASE("missing keys are reported by name") {
    try {
        parse_run_config_text("seed = 1\nmode = dpfl\nrounds = 5\n");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("num_clients") != std::string::npos);
    }
}

TEST_CASE("unknown keys fail with their line number") {
    std::string text = std::string(kMinimal) + "buget = 5\n";
    try {
        parse_run_config_text(text, "run.cfg");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("run.cfg:5") != std::string::npos);
        CHECK(what.find("buget") != std::string::npos);
    }
}

TEST_CASE("malformed values carry line numbers") {
    std::string text =
        "seed = 42\n"
        "mode = dpfl\n"
        "num_clients = eight\n"
        "rounds = 10\n";
    try {
        parse_run_config_text(text, "run.cfg");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("run.cfg:3") != std::string::npos);
    }
}

TEST_CASE("duplicate keys are rejected") {
    std::string text = std::string(kMinimal) + "rounds = 11\n";
    CHECK_THROWS_AS(parse_run_config_text(text), ConfigError);
}

TEST_CASE("budget accepts 'unbounded'") {
    std::string text = std::string(kMinimal) + "budget = unbounded\n";
    CHECK(parse_run_config_text(text).budget == kUnbounded);
    std::string bad = std::string(kMinimal) + "budget = -3\n";
    CHECK_THROWS_AS(parse_run_config_text(bad), ConfigError);
}

TEST_CASE("semantic validation still applies after parsing") {
    std::string text =
        "seed = 1\n"
        "mode = dpfl\n"
        "num_clients = 0\n"
        "rounds = 5\n";
    CHECK_THROWS_AS(parse_run_config_text(text), std::invalid_argument);
}

TEST_CASE("rendered configs parse back to the same settings") {
    std::string text =
        "seed = 5\n"
        "mode = dpfl\n"
        "num_clients = 12\n"
        "rounds = 20\n"
        "budget = 4\n"
        "malicious.fraction = 0.25\n";
    RunConfig cfg = parse_run_config_text(text);
    RunConfig back = parse_run_config_text(render_run_config(cfg));
    CHECK(back.seed == cfg.seed);
    CHECK(back.num_clients == cfg.num_clients);
    CHECK(back.budget == cfg.budget);
    CHECK(back.sgd.learning_rate == cfg.sgd.learning_rate);
    CHECK(back.malicious->fraction == cfg.malicious->fraction);
    CHECK(back.malicious->permutation_seed == cfg.malicious->permutation_seed);
}
