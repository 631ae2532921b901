// The full decentralized personalized FL loop: BGGC preprocessing, training
// rounds with local SGD and periodic GGC refresh, weighted aggregation, and
// the local-only / FedAvg / random-graph execution modes, with per-round
// communication accounting.
#pragma once

#include <limits>
#include <mutex>
#include <optional>
#include <vector>

#include "dpfl/data_gen.hpp"
#include "dpfl/graph.hpp"
#include "dpfl/metrics.hpp"

namespace dpfl {

enum class RunMode { dpfl, local_only, fedavg, random_graph };

struct MaliciousSpec {
    double fraction = 0.0;
    std::uint64_t permutation_seed = 0;
    bool runs_ggc = true;
};

struct RunConfig {
    int num_clients = 10;
    int budget = kUnbounded;
    int tau_init = 1;
    int tau_train = 1;
    int rounds = 10;         // T; for dpfl, preprocessing counts as 2 of these
    int refresh_period = 1;  // P
    RunMode mode = RunMode::dpfl;
    SgdConfig sgd;  // epochs field is ignored; tau_init / tau_train take its place
    DatasetSpec dataset;
    PartitionSpec partition;
    std::optional<MaliciousSpec> malicious;
    std::uint64_t seed = 0;
    int threads = 1;
    CoinMode coin_mode = CoinMode::lockstep;

    void validate() const;
};

struct ClientState {
    ClientShard shard;
    ModelParams params;
    ModelParams best_params;
    double best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<int> omega;
    std::vector<std::vector<int>> selected_history;
    bool malicious = false;
};

struct Cohort {
    std::vector<ClientState> clients;
    std::vector<double> weights;  // p_k, cached from the shards
    int num_features = 0;
    int num_classes = 0;

    int size() const { return static_cast<int>(clients.size()); }
    std::vector<int> benign_ids() const;
    std::vector<int> malicious_ids() const;
};

// One entry per ggc/bggc invocation; rewards are recomputed directly from
// the frozen round snapshot, independent of the greedy's cached values.
struct GreedyAuditEntry {
    int client = -1;
    int round = -1;
    int budget = kUnbounded;
    std::size_t num_candidates = 0;
    std::size_t num_selected = 0;
    long oracle_calls = 0;
    int peak_foreign_models = 0;
    double reward_self = 0.0;
    double reward_final = 0.0;
};

class GreedyAudit {
public:
    void record(const GreedyAuditEntry& entry);
    std::vector<GreedyAuditEntry> entries() const;
    std::size_t size() const;
    // min over entries of reward_final - reward_self.
    double worst_margin() const;

private:
    mutable std::mutex mu_;
    std::vector<GreedyAuditEntry> entries_;
};

// Dataset generation, partitioning, label flipping for malicious clients,
// and the shared model initialization. Dataset and partition seeds are
// derived from cfg.seed.
Cohort init_clients(const RunConfig& cfg);

// Alg. 1 preprocessing: tau_init local epochs from the shared init, BGGC
// over all other clients, then aggregation over omega.
CollabGraph preprocess(const RunConfig& cfg, Cohort& cohort, CommLedger& ledger,
                       GreedyAudit* audit = nullptr);

// One training round: tau_train local epochs, model exchange along omega,
// GGC refresh when round % refresh_period == 0, aggregation over the
// selection. Modes other than dpfl replace the selection rule.
RoundRecord training_round(int round, const RunConfig& cfg, Cohort& cohort, CollabGraph& graph,
                           GreedyAudit* audit = nullptr);

struct RunResult {
    Cohort cohort;
    std::vector<RoundRecord> records;
    std::vector<std::pair<int, CollabGraph>> snapshots;  // (round, graph)
    std::vector<double> final_test_accuracy;             // from best_params
    double final_mean_accuracy = 0.0;
    double final_accuracy_variance = 0.0;
};

RunResult run(const RunConfig& cfg, GreedyAudit* audit = nullptr);

// Three-client instance where the third collaborator unlocks the value of
// the second: both pairwise collaborations hurt client 0 while the triple
// helps. Reports accuracies of client 0's model under each grouping.
struct SynergyReport {
    double solo = 0.0;
    double pair_with_1 = 0.0;
    double pair_with_2 = 0.0;
    double triple = 0.0;
    bool pass = false;
};

SynergyReport synergy_scenario(std::uint64_t seed = 7);

}  // namespace dpfl
