#include "dpfl/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace dpfl {

namespace {

// Index-parallel loop; every iteration writes only to its own slot, so the
// result is independent of scheduling. The first exception wins.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int workers = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

std::vector<int> everyone_except(int n, int k) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n - 1));
    for (int j = 0; j < n; ++j)
        if (j != k) out.push_back(j);
    return out;
}

bool skips_graph_work(const RunConfig& cfg, const ClientState& st) {
    return st.malicious && cfg.malicious.has_value() && !cfg.malicious->runs_ggc;
}

void update_best(ClientState& st) {
    const double vl = loss(st.params, st.shard.val);
    if (vl < st.best_val_loss) {
        st.best_val_loss = vl;
        st.best_params = st.params;
    }
}

void audit_invocation(GreedyAudit* audit, int client, int round, const RunConfig& cfg,
                      const GreedyTrace& trace, std::size_t num_candidates, int peak_foreign,
                      const ModelAccess& access, const Cohort& cohort,
                      const LabeledBatch& validation) {
    if (audit == nullptr) return;
    RewardOracle oracle(client, access, cohort.weights, &validation);
    GreedyAuditEntry entry;
    entry.client = client;
    entry.round = round;
    entry.budget = cfg.budget;
    entry.num_candidates = num_candidates;
    entry.num_selected = trace.result.size();
    entry.oracle_calls = trace.oracle_calls;
    entry.peak_foreign_models = peak_foreign;
    entry.reward_self = oracle.reward_of_set({});
    entry.reward_final = oracle.reward_of_set(trace.result);
    audit->record(entry);
}

RoundRecord make_record(int round, const RunConfig& cfg, const Cohort& cohort,
                        const CollabGraph& graph, const CommLedger& ledger) {
    std::vector<double> accs(static_cast<std::size_t>(cohort.size()));
    for (int k = 0; k < cohort.size(); ++k) {
        const auto& st = cohort.clients[static_cast<std::size_t>(k)];
        accs[static_cast<std::size_t>(k)] = accuracy(st.params, st.shard.test);
    }
    auto [mean, var] = mean_and_variance(accs);
    RoundRecord rec;
    rec.round = round;
    rec.mean_test_accuracy = mean;
    rec.accuracy_variance = var;
    rec.graph_sparsity = sparsity(graph.selected, graph.n);
    rec.symmetry_pct = symmetry_pct(graph.selected, graph.n);
    if (cfg.malicious.has_value() && cfg.malicious->fraction > 0.0)
        rec.benign_to_malicious_frac =
            cross_group_fraction(graph.selected, cohort.benign_ids(), cohort.malicious_ids());
    rec.comm = ledger;
    return rec;
}

}  // namespace

void RunConfig::validate() const {
    if (num_clients <= 0) throw std::invalid_argument("num_clients must be positive");
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (refresh_period < 1) throw std::invalid_argument("refresh_period must be >= 1");
    if (tau_init < 0 || tau_train < 0) throw std::invalid_argument("tau values must be >= 0");
    if (budget < kUnbounded) throw std::invalid_argument("budget must be -1 (unbounded) or >= 0");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    SgdConfig probe = sgd;
    probe.epochs = 1;
    probe.validate();
    if (malicious.has_value()) {
        if (!(malicious->fraction >= 0.0 && malicious->fraction < 1.0))
            throw std::invalid_argument("malicious fraction must be in [0,1)");
    }
    PartitionSpec part = partition;
    part.num_clients = num_clients;
    part.validate();
    if (partition.scheme != PartitionScheme::natural_file) dataset.validate();
}

std::vector<int> Cohort::benign_ids() const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k)
        if (!clients[static_cast<std::size_t>(k)].malicious) out.push_back(k);
    return out;
}

std::vector<int> Cohort::malicious_ids() const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k)
        if (clients[static_cast<std::size_t>(k)].malicious) out.push_back(k);
    return out;
}

void GreedyAudit::record(const GreedyAuditEntry& entry) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_back(entry);
}

std::vector<GreedyAuditEntry> GreedyAudit::entries() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_;
}

std::size_t GreedyAudit::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

double GreedyAudit::worst_margin() const {
    std::lock_guard<std::mutex> lock(mu_);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& e : entries_) worst = std::min(worst, e.reward_final - e.reward_self);
    return worst;
}

Cohort init_clients(const RunConfig& cfg) {
    cfg.validate();

    PartitionSpec part = cfg.partition;
    part.num_clients = cfg.num_clients;
    part.seed = derive_seed(cfg.seed, "partition");

    Cohort cohort;
    std::vector<ClientShard> shards;
    if (part.scheme == PartitionScheme::natural_file) {
        shards = make_shards(LabeledBatch{}, 0, part);
        int max_label = 0;
        for (const auto& s : shards)
            for (const auto* b : {&s.train, &s.val, &s.test})
                for (int y : b->labels) max_label = std::max(max_label, y);
        cohort.num_classes = max_label + 1;
    } else {
        DatasetSpec ds = cfg.dataset;
        ds.seed = derive_seed(cfg.seed, "dataset");
        LabeledBatch data = generate_dataset(ds);
        shards = make_shards(data, ds.num_classes, part);
        cohort.num_classes = ds.num_classes;
    }
    cohort.num_features = shards.front().train.num_features;

    int num_malicious = 0;
    std::vector<int> permutation;
    if (cfg.malicious.has_value() && cfg.malicious->fraction > 0.0) {
        num_malicious = static_cast<int>(
            std::lround(cfg.malicious->fraction * static_cast<double>(cfg.num_clients)));
        num_malicious = std::min(num_malicious, cfg.num_clients - 1);
        const int C = cohort.num_classes;
        const int shift =
            1 + static_cast<int>(derive_seed(cfg.malicious->permutation_seed, "shift") %
                                 static_cast<std::uint64_t>(C - 1));
        permutation.resize(static_cast<std::size_t>(C));
        for (int c = 0; c < C; ++c) permutation[static_cast<std::size_t>(c)] = (c + shift) % C;
    }

    RngStream init_rng = RngStream::derived(cfg.seed, "init");
    ModelParams w0 = random_init(cohort.num_features, cohort.num_classes, 0.01, init_rng);

    cohort.clients.reserve(shards.size());
    cohort.weights.reserve(shards.size());
    for (int k = 0; k < cfg.num_clients; ++k) {
        ClientState st;
        st.malicious = k < num_malicious;
        st.shard = st.malicious ? flip_labels(shards[static_cast<std::size_t>(k)], permutation)
                                : std::move(shards[static_cast<std::size_t>(k)]);
        st.params = w0;
        st.best_params = w0;
        cohort.weights.push_back(st.shard.weight_p);
        cohort.clients.push_back(std::move(st));
    }
    return cohort;
}

CollabGraph preprocess(const RunConfig& cfg, Cohort& cohort, CommLedger& ledger,
                       GreedyAudit* audit) {
    const int n = cohort.size();
    SgdConfig sgd = cfg.sgd;
    sgd.epochs = cfg.tau_init;
    parallel_for(n, cfg.threads, [&](int k) {
        auto& st = cohort.clients[static_cast<std::size_t>(k)];
        RngStream rng = RngStream::derived(cfg.seed, "sgd", static_cast<std::uint64_t>(k), 0);
        st.params = local_opt(st.params, st.shard.train, sgd, rng);
    });

    // Frozen snapshot of the init models; all graph decisions and the
    // aggregation read from it.
    std::vector<ModelParams> snapshot;
    snapshot.reserve(static_cast<std::size_t>(n));
    for (const auto& st : cohort.clients) snapshot.push_back(st.params);
    ModelAccess access = access_from_vector(snapshot);

    CollabGraph graph;
    graph.n = n;
    graph.budget = cfg.budget;
    graph.omega.assign(static_cast<std::size_t>(n), {});
    graph.selected.assign(static_cast<std::size_t>(n), {});

    std::vector<long> calls(static_cast<std::size_t>(n), 0);
    std::vector<long> received(static_cast<std::size_t>(n), 0);
    std::vector<int> peaks(static_cast<std::size_t>(n), 0);
    parallel_for(n, cfg.threads, [&](int k) {
        auto& st = cohort.clients[static_cast<std::size_t>(k)];
        if (skips_graph_work(cfg, st)) {
            st.omega.clear();
            return;
        }
        const std::vector<int> others = everyone_except(n, k);
        BatchStats stats;
        GreedyTrace trace =
            bggc(k, others, cfg.budget, access, cohort.weights, st.shard.val,
                 derive_seed(cfg.seed, "graph", static_cast<std::uint64_t>(k), 0), cfg.coin_mode,
                 &stats);
        st.omega = trace.result;
        calls[static_cast<std::size_t>(k)] = trace.oracle_calls;
        received[static_cast<std::size_t>(k)] = stats.models_received;
        peaks[static_cast<std::size_t>(k)] = stats.peak_foreign_models;
        audit_invocation(audit, k, 0, cfg, trace, others.size(), stats.peak_foreign_models, access,
                         cohort, st.shard.val);
    });

    parallel_for(n, cfg.threads, [&](int k) {
        auto& st = cohort.clients[static_cast<std::size_t>(k)];
        if (!skips_graph_work(cfg, st)) {
            std::vector<int> members = st.omega;
            members.push_back(k);
            st.params = weighted_average(snapshot, cohort.weights, members);
        }
        graph.omega[static_cast<std::size_t>(k)] = st.omega;
        graph.selected[static_cast<std::size_t>(k)] = st.omega;
        st.selected_history.push_back(st.omega);
        update_best(st);
    });

    for (int k = 0; k < n; ++k) {
        ledger.oracle_calls += calls[static_cast<std::size_t>(k)];
        ledger.models_received += received[static_cast<std::size_t>(k)];
        ledger.models_sent += received[static_cast<std::size_t>(k)];
        ledger.peak_foreign_models =
            std::max(ledger.peak_foreign_models, peaks[static_cast<std::size_t>(k)]);
    }
    return graph;
}

RoundRecord training_round(int round, const RunConfig& cfg, Cohort& cohort, CollabGraph& graph,
                           GreedyAudit* audit) {
    const int n = cohort.size();
    SgdConfig sgd = cfg.sgd;
    sgd.epochs = cfg.tau_train;
    parallel_for(n, cfg.threads, [&](int k) {
        auto& st = cohort.clients[static_cast<std::size_t>(k)];
        RngStream rng = RngStream::derived(cfg.seed, "sgd", static_cast<std::uint64_t>(k),
                                           static_cast<std::uint64_t>(round));
        st.params = local_opt(st.params, st.shard.train, sgd, rng);
    });

    std::vector<ModelParams> snapshot;
    snapshot.reserve(static_cast<std::size_t>(n));
    for (const auto& st : cohort.clients) snapshot.push_back(st.params);
    ModelAccess access = access_from_vector(snapshot);

    std::vector<long> calls(static_cast<std::size_t>(n), 0);
    std::vector<long> received(static_cast<std::size_t>(n), 0);
    std::vector<int> peaks(static_cast<std::size_t>(n), 0);
    parallel_for(n, cfg.threads, [&](int k) {
        auto& st = cohort.clients[static_cast<std::size_t>(k)];
        bool aggregates = true;
        std::vector<int> selection;
        switch (cfg.mode) {
            case RunMode::local_only:
                aggregates = false;
                break;
            case RunMode::fedavg:
                selection = everyone_except(n, k);
                received[static_cast<std::size_t>(k)] = n - 1;
                peaks[static_cast<std::size_t>(k)] = n - 1;
                break;
            case RunMode::random_graph:
                selection = st.omega;
                received[static_cast<std::size_t>(k)] = static_cast<long>(st.omega.size());
                peaks[static_cast<std::size_t>(k)] = static_cast<int>(st.omega.size());
                break;
            case RunMode::dpfl: {
                if (skips_graph_work(cfg, st)) {
                    aggregates = false;
                    break;
                }
                received[static_cast<std::size_t>(k)] = static_cast<long>(st.omega.size());
                peaks[static_cast<std::size_t>(k)] = static_cast<int>(st.omega.size());
                if (st.omega.empty()) {
                    selection.clear();
                } else if (round % cfg.refresh_period == 0) {
                    GreedyTrace trace = ggc(
                        k, st.omega, cfg.budget, access, cohort.weights, st.shard.val,
                        derive_seed(cfg.seed, "graph", static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(round)),
                        cfg.coin_mode);
                    selection = trace.result;
                    calls[static_cast<std::size_t>(k)] = trace.oracle_calls;
                    audit_invocation(audit, k, round, cfg, trace, st.omega.size(),
                                     static_cast<int>(st.omega.size()), access, cohort,
                                     st.shard.val);
                } else {
                    selection = st.selected_history.back();
                }
                break;
            }
        }
        if (aggregates) {
            std::vector<int> members = selection;
            members.push_back(k);
            st.params = weighted_average(snapshot, cohort.weights, members);
        }
        st.selected_history.push_back(selection);
        graph.selected[static_cast<std::size_t>(k)] = std::move(selection);
        update_best(st);
    });

    CommLedger ledger;
    for (int k = 0; k < n; ++k) {
        ledger.oracle_calls += calls[static_cast<std::size_t>(k)];
        ledger.models_received += received[static_cast<std::size_t>(k)];
        ledger.models_sent += received[static_cast<std::size_t>(k)];
        ledger.peak_foreign_models =
            std::max(ledger.peak_foreign_models, peaks[static_cast<std::size_t>(k)]);
    }
    return make_record(round, cfg, cohort, graph, ledger);
}

RunResult run(const RunConfig& cfg, GreedyAudit* audit) {
    cfg.validate();
    RunResult result;
    result.cohort = init_clients(cfg);
    Cohort& cohort = result.cohort;
    const int n = cohort.size();

    CollabGraph graph;
    graph.n = n;
    graph.budget = cfg.budget;
    graph.omega.assign(static_cast<std::size_t>(n), {});
    graph.selected.assign(static_cast<std::size_t>(n), {});

    int last_round = cfg.rounds;
    switch (cfg.mode) {
        case RunMode::dpfl: {
            CommLedger ledger;
            graph = preprocess(cfg, cohort, ledger, audit);
            result.records.push_back(make_record(0, cfg, cohort, graph, ledger));
            result.snapshots.emplace_back(0, graph);
            // Preprocessing counts as two rounds of the budget.
            last_round = cfg.rounds - 2;
            break;
        }
        case RunMode::fedavg:
            for (int k = 0; k < n; ++k) graph.omega[static_cast<std::size_t>(k)] = everyone_except(n, k);
            graph.selected = graph.omega;
            break;
        case RunMode::random_graph: {
            graph = random_graph(n, cfg.budget, derive_seed(cfg.seed, "random_graph"));
            for (int k = 0; k < n; ++k)
                cohort.clients[static_cast<std::size_t>(k)].omega =
                    graph.omega[static_cast<std::size_t>(k)];
            break;
        }
        case RunMode::local_only:
            break;
    }

    for (int round = 1; round <= last_round; ++round) {
        result.records.push_back(training_round(round, cfg, cohort, graph, audit));
        if (cfg.mode != RunMode::local_only) result.snapshots.emplace_back(round, graph);
    }

    result.final_test_accuracy.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const auto& st = cohort.clients[static_cast<std::size_t>(k)];
        result.final_test_accuracy[static_cast<std::size_t>(k)] =
            accuracy(st.best_params, st.shard.test);
    }
    auto [mean, var] = mean_and_variance(result.final_test_accuracy);
    result.final_mean_accuracy = mean;
    result.final_accuracy_variance = var;
    return result;
}

namespace {

// The synergy instance uses twin-pair geometry: classes come in pairs that
// share a family center and differ only by a small offset, so the hard
// decision is the within-pair boundary. Families (0,6) and (4,8) belong to
// the small client; its two large partners each cover one of those pairs.
LabeledBatch synergy_pool(std::uint64_t seed, int num_features, int per_class,
                          double family_distance, double twin_gap, double noise_sigma) {
    const int C = 10;
    const int family_of[10] = {0, 2, 4, 2, 1, 3, 0, 3, 1, 4};
    const int twin_sign[10] = {+1, +1, +1, -1, +1, +1, -1, -1, -1, -1};

    RngStream geometry = RngStream::derived(seed, "synergy_geometry");
    std::vector<std::vector<double>> family_dir(5), twin_dir(5);
    for (int f = 0; f < 5; ++f) {
        for (auto* dir : {&family_dir[static_cast<std::size_t>(f)],
                          &twin_dir[static_cast<std::size_t>(f)]}) {
            dir->resize(static_cast<std::size_t>(num_features));
            double norm = 0.0;
            for (auto& v : *dir) {
                v = geometry.gaussian();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm == 0.0) norm = 1.0;
            for (auto& v : *dir) v /= norm;
        }
    }

    RngStream noise = RngStream::derived(seed, "synergy_samples");
    LabeledBatch pool;
    pool.num_features = num_features;
    std::vector<double> x(static_cast<std::size_t>(num_features));
    for (int c = 0; c < C; ++c) {
        const auto f = static_cast<std::size_t>(family_of[c]);
        for (int s = 0; s < per_class; ++s) {
            for (int j = 0; j < num_features; ++j)
                x[static_cast<std::size_t>(j)] =
                    family_distance * family_dir[f][static_cast<std::size_t>(j)] +
                    twin_sign[c] * 0.5 * twin_gap * twin_dir[f][static_cast<std::size_t>(j)] +
                    noise_sigma * noise.gaussian();
            pool.push_row(x.data(), c);
        }
    }
    return pool;
}

}  // namespace

SynergyReport synergy_scenario(std::uint64_t seed) {
    const int C = 10;
    const int F = 24;
    const int small_count = 50;
    const int big_count = 400;
    const int mid_count = 300;
    LabeledBatch pool = synergy_pool(seed, F, big_count + small_count + 50,
                                     /*family_distance=*/4.5, /*twin_gap=*/3.0,
                                     /*noise_sigma=*/1.7);

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(C));
    for (int i = 0; i < pool.size(); ++i)
        by_class[static_cast<std::size_t>(pool.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (int c = 0; c < C; ++c) {
        RngStream rng = RngStream::derived(seed, "synergy_shuffle", static_cast<std::uint64_t>(c));
        rng.shuffle(by_class[static_cast<std::size_t>(c)]);
    }

    struct Take {
        int cls;
        int count;
    };
    const std::vector<std::vector<Take>> allocation = {
        {{0, small_count}, {4, small_count}, {6, small_count}, {8, small_count}},
        {{0, big_count}, {6, big_count}, {1, mid_count}, {3, mid_count}},
        {{4, big_count}, {8, big_count}, {5, mid_count}, {7, mid_count}},
    };
    std::vector<std::size_t> cursor(static_cast<std::size_t>(C), 0);
    std::vector<ClientShard> shards;
    for (std::size_t k = 0; k < allocation.size(); ++k) {
        std::vector<int> indices;
        for (const auto& take : allocation[k]) {
            auto& src = by_class[static_cast<std::size_t>(take.cls)];
            auto& pos = cursor[static_cast<std::size_t>(take.cls)];
            for (int i = 0; i < take.count; ++i) indices.push_back(src[pos++]);
        }
        // Starved training split with a large test split so the comparison
        // is measured on enough samples.
        ClientShard shard = split_shard(indices, pool, C, 0.15, 0.55,
                                        derive_seed(seed, "synergy_split", k));
        shard.client_id = static_cast<int>(k);
        shards.push_back(std::move(shard));
    }
    assign_weights(shards);
    std::vector<double> weights;
    for (const auto& s : shards) weights.push_back(s.weight_p);

    SgdConfig sgd;
    sgd.learning_rate = 0.05;
    sgd.weight_decay = 1e-3;
    sgd.momentum = 0.9;
    sgd.batch_size = 16;
    sgd.epochs = 2;
    const int rounds = 20;

    RngStream init_rng = RngStream::derived(seed, "synergy_init");
    const ModelParams w0 = random_init(F, C, 0.01, init_rng);

    auto train_group = [&](const std::vector<int>& group) {
        std::vector<ModelParams> params(shards.size(), w0);
        for (int t = 1; t <= rounds; ++t) {
            for (int k : group) {
                RngStream rng = RngStream::derived(seed, "synergy_sgd", static_cast<std::uint64_t>(k),
                                                   static_cast<std::uint64_t>(t));
                params[static_cast<std::size_t>(k)] = local_opt(
                    params[static_cast<std::size_t>(k)], shards[static_cast<std::size_t>(k)].train,
                    sgd, rng);
            }
            if (group.size() > 1) {
                ModelParams avg = weighted_average(params, weights, group);
                for (int k : group) params[static_cast<std::size_t>(k)] = avg;
            }
        }
        return accuracy(params[static_cast<std::size_t>(group.front())], shards[0].test);
    };

    SynergyReport report;
    report.solo = train_group({0});
    report.pair_with_1 = train_group({0, 1});
    report.pair_with_2 = train_group({0, 2});
    report.triple = train_group({0, 1, 2});
    report.pass = report.triple > report.solo && report.pair_with_1 < report.solo &&
                  report.pair_with_2 < report.solo;
    return report;
}

}  // namespace dpfl
