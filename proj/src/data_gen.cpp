#include "dpfl/data_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dpfl {

void DatasetSpec::validate() const {
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (num_features <= 0) throw std::invalid_argument("num_features must be positive");
    if (samples_per_class <= 0) throw std::invalid_argument("samples_per_class must be positive");
    if (!(class_center_scale > 0.0)) throw std::invalid_argument("class_center_scale must be positive");
    if (!(noise_sigma > 0.0)) throw std::invalid_argument("noise_sigma must be positive");
}

void PartitionSpec::validate() const {
    if (num_clients <= 0) throw std::invalid_argument("num_clients must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw std::invalid_argument("val_fraction must be in (0,1)");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("test_fraction must be in (0,1)");
    if (!(val_fraction + test_fraction < 1.0))
        throw std::invalid_argument("val_fraction + test_fraction must be < 1");
    switch (scheme) {
        case PartitionScheme::dirichlet:
            if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
            break;
        case PartitionScheme::pathological:
            if (classes_per_client <= 0)
                throw std::invalid_argument("classes_per_client must be positive");
            break;
        case PartitionScheme::natural_file:
            if (natural_path.empty()) throw std::invalid_argument("natural_file requires a path");
            break;
    }
}

LabeledBatch generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    const int C = spec.num_classes;
    const int F = spec.num_features;

    RngStream center_rng = RngStream::derived(spec.seed, "centers");
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(C));
    for (auto& center : centers) {
        center.resize(static_cast<std::size_t>(F));
        double norm = 0.0;
        for (auto& v : center) {
            v = center_rng.gaussian();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) norm = 1.0;
        for (auto& v : center) v *= spec.class_center_scale / norm;
    }

    RngStream sample_rng = RngStream::derived(spec.seed, "samples");
    LabeledBatch data;
    data.num_features = F;
    data.features.reserve(static_cast<std::size_t>(C) * static_cast<std::size_t>(spec.samples_per_class) *
                          static_cast<std::size_t>(F));
    std::vector<double> x(static_cast<std::size_t>(F));
    for (int c = 0; c < C; ++c) {
        for (int s = 0; s < spec.samples_per_class; ++s) {
            for (int j = 0; j < F; ++j)
                x[static_cast<std::size_t>(j)] =
                    centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
                    spec.noise_sigma * sample_rng.gaussian();
            data.push_row(x.data(), c);
        }
    }
    return data;
}

namespace {

// Integer counts summing to total, proportional to share, by floor plus
// largest fractional remainder (ties to the lower index).
std::vector<int> largest_remainder(const std::vector<double>& share, int total) {
    const std::size_t n = share.size();
    std::vector<int> counts(n);
    std::vector<std::pair<double, std::size_t>> frac(n);
    int assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double target = share[i] * static_cast<double>(total);
        counts[i] = static_cast<int>(std::floor(target));
        frac[i] = {target - std::floor(target), i};
        assigned += counts[i];
    }
    int leftover = total - assigned;
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < leftover; ++r) counts[frac[static_cast<std::size_t>(r)].second] += 1;
    return counts;
}

std::vector<std::vector<int>> indices_by_class(const LabeledBatch& data, int num_classes) {
    data.validate(num_classes);
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (int i = 0; i < data.size(); ++i)
        by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])].push_back(i);
    return by_class;
}

void require_all_nonempty(const std::vector<std::vector<int>>& assignment) {
    for (const auto& idx : assignment)
        if (idx.empty())
            throw std::runtime_error("degenerate partition; re-seed or raise alpha");
}

}  // namespace

std::vector<std::vector<int>> partition_dirichlet(const LabeledBatch& data, int num_classes,
                                                  int num_clients, double alpha,
                                                  std::uint64_t seed) {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (num_clients <= 0) throw std::invalid_argument("num_clients must be positive");
    auto by_class = indices_by_class(data, num_classes);

    std::vector<std::vector<int>> assignment(static_cast<std::size_t>(num_clients));
    for (int c = 0; c < num_classes; ++c) {
        auto& pool = by_class[static_cast<std::size_t>(c)];
        RngStream shuffle_rng = RngStream::derived(seed, "dirichlet_shuffle", static_cast<std::uint64_t>(c));
        shuffle_rng.shuffle(pool);
        RngStream q_rng = RngStream::derived(seed, "dirichlet_q", static_cast<std::uint64_t>(c));
        std::vector<double> q = q_rng.dirichlet(alpha, static_cast<std::size_t>(num_clients));
        std::vector<int> counts = largest_remainder(q, static_cast<int>(pool.size()));
        std::size_t cursor = 0;
        for (int i = 0; i < num_clients; ++i) {
            auto& dst = assignment[static_cast<std::size_t>(i)];
            dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                       pool.begin() + static_cast<std::ptrdiff_t>(cursor + static_cast<std::size_t>(counts[static_cast<std::size_t>(i)])));
            cursor += static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
        }
    }
    require_all_nonempty(assignment);
    return assignment;
}

std::vector<std::vector<int>> partition_pathological(const LabeledBatch& data, int num_classes,
                                                     int num_clients, int classes_per_client,
                                                     std::uint64_t seed) {
    if (classes_per_client <= 0 || classes_per_client > num_classes)
        throw std::invalid_argument("classes_per_client must be in [1, num_classes]");
    if (num_clients <= 0) throw std::invalid_argument("num_clients must be positive");
    if (static_cast<long long>(num_clients) * classes_per_client < num_classes)
        throw std::invalid_argument(
            "pathological partition cannot cover every class; raise classes_per_client or num_clients");
    auto by_class = indices_by_class(data, num_classes);

    std::vector<int> class_order(static_cast<std::size_t>(num_classes));
    std::iota(class_order.begin(), class_order.end(), 0);
    RngStream order_rng = RngStream::derived(seed, "patho_order");
    order_rng.shuffle(class_order);

    // Deal classes from the shuffled list round-robin; classes_per_client
    // consecutive positions mod num_classes are always distinct.
    std::vector<std::vector<int>> holders(static_cast<std::size_t>(num_classes));
    std::size_t cursor = 0;
    for (int i = 0; i < num_clients; ++i) {
        for (int j = 0; j < classes_per_client; ++j) {
            int cls = class_order[cursor % static_cast<std::size_t>(num_classes)];
            holders[static_cast<std::size_t>(cls)].push_back(i);
            ++cursor;
        }
    }

    std::vector<std::vector<int>> assignment(static_cast<std::size_t>(num_clients));
    for (int c = 0; c < num_classes; ++c) {
        auto& pool = by_class[static_cast<std::size_t>(c)];
        auto& who = holders[static_cast<std::size_t>(c)];
        std::sort(who.begin(), who.end());
        if (pool.size() < who.size())
            throw std::runtime_error("degenerate partition; re-seed or raise alpha");
        RngStream shuffle_rng = RngStream::derived(seed, "patho_shuffle", static_cast<std::uint64_t>(c));
        shuffle_rng.shuffle(pool);
        RngStream q_rng = RngStream::derived(seed, "patho_q", static_cast<std::uint64_t>(c));
        std::vector<double> q = q_rng.dirichlet(0.5, who.size());
        // Every holder keeps at least one sample so its label support is
        // exactly classes_per_client; the rest follows the Dirichlet draw.
        std::vector<int> counts =
            largest_remainder(q, static_cast<int>(pool.size() - who.size()));
        for (auto& count : counts) count += 1;
        std::size_t pos = 0;
        for (std::size_t h = 0; h < who.size(); ++h) {
            auto& dst = assignment[static_cast<std::size_t>(who[h])];
            dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(pos),
                       pool.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(counts[h])));
            pos += static_cast<std::size_t>(counts[h]);
        }
    }
    require_all_nonempty(assignment);
    return assignment;
}

ClientShard split_shard(const std::vector<int>& indices, const LabeledBatch& data,
                        int num_classes, double val_fraction, double test_fraction,
                        std::uint64_t seed) {
    if (!(val_fraction > 0.0 && test_fraction > 0.0 && val_fraction + test_fraction < 1.0))
        throw std::invalid_argument("split fractions must be positive and sum below 1");
    if (indices.empty()) throw std::runtime_error("split on empty index set");

    std::vector<std::vector<int>> by_label(static_cast<std::size_t>(num_classes));
    for (int idx : indices)
        by_label[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(idx)])].push_back(idx);

    ClientShard shard;
    shard.train.num_features = data.num_features;
    shard.val.num_features = data.num_features;
    shard.test.num_features = data.num_features;

    const std::vector<double> fractions = {val_fraction, test_fraction,
                                           1.0 - val_fraction - test_fraction};
    for (int c = 0; c < num_classes; ++c) {
        auto& group = by_label[static_cast<std::size_t>(c)];
        if (group.empty()) continue;
        RngStream rng = RngStream::derived(seed, "split", static_cast<std::uint64_t>(c));
        rng.shuffle(group);
        std::vector<int> counts = largest_remainder(fractions, static_cast<int>(group.size()));
        std::size_t pos = 0;
        LabeledBatch* parts[3] = {&shard.val, &shard.test, &shard.train};
        for (int part = 0; part < 3; ++part) {
            for (int i = 0; i < counts[static_cast<std::size_t>(part)]; ++i, ++pos) {
                int idx = group[pos];
                parts[part]->push_row(data.row(idx), data.labels[static_cast<std::size_t>(idx)]);
            }
        }
    }
    if (shard.train.empty() || shard.val.empty() || shard.test.empty())
        throw std::runtime_error("split produced an empty train/val/test set");
    return shard;
}

void assign_weights(std::vector<ClientShard>& shards) {
    double total = 0.0;
    for (const auto& s : shards) total += static_cast<double>(s.train.size());
    if (total <= 0.0) throw std::runtime_error("cohort has no training data");
    for (auto& s : shards) s.weight_p = static_cast<double>(s.train.size()) / total;
}

namespace {

void check_permutation(const std::vector<int>& permutation) {
    const int C = static_cast<int>(permutation.size());
    std::vector<bool> seen(static_cast<std::size_t>(C), false);
    for (int v : permutation) {
        if (v < 0 || v >= C || seen[static_cast<std::size_t>(v)])
            throw std::invalid_argument("label permutation is not a bijection");
        seen[static_cast<std::size_t>(v)] = true;
    }
}

void apply_permutation(LabeledBatch& batch, const std::vector<int>& permutation) {
    for (auto& y : batch.labels) {
        if (y < 0 || y >= static_cast<int>(permutation.size()))
            throw std::invalid_argument("label outside permutation domain");
        y = permutation[static_cast<std::size_t>(y)];
    }
}

}  // namespace

ClientShard flip_labels(const ClientShard& shard, const std::vector<int>& permutation) {
    check_permutation(permutation);
    ClientShard flipped = shard;
    apply_permutation(flipped.train, permutation);
    apply_permutation(flipped.val, permutation);
    apply_permutation(flipped.test, permutation);
    return flipped;
}

LabeledBatch load_natural_csv(const std::string& path, int num_clients,
                              std::vector<std::vector<int>>& client_indices,
                              int& num_classes_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    LabeledBatch data;
    client_indices.assign(static_cast<std::size_t>(num_clients), {});
    std::string line;
    int line_no = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                fields.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": cannot parse '" + cell + "'");
            }
        }
        if (fields.size() < 3)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected at least 3 columns");
        const int d = static_cast<int>(fields.size()) - 2;
        if (data.num_features == 0) data.num_features = d;
        if (d != data.num_features)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": inconsistent column count");
        const int label = static_cast<int>(fields[static_cast<std::size_t>(d)]);
        const int client = static_cast<int>(fields[static_cast<std::size_t>(d) + 1]);
        if (label < 0)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": negative label");
        if (client < 0 || client >= num_clients)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": client_id " +
                                     std::to_string(client) + " outside [0, " +
                                     std::to_string(num_clients) + ")");
        max_label = std::max(max_label, label);
        client_indices[static_cast<std::size_t>(client)].push_back(data.size());
        data.push_row(fields.data(), label);
    }
    if (data.empty()) throw std::runtime_error(path + ": no data rows");
    for (int i = 0; i < num_clients; ++i)
        if (client_indices[static_cast<std::size_t>(i)].empty())
            throw std::runtime_error(path + ": client " + std::to_string(i) + " has no rows");
    num_classes_out = max_label + 1;
    return data;
}

std::vector<ClientShard> make_shards(const LabeledBatch& data, int num_classes,
                                     const PartitionSpec& spec) {
    spec.validate();
    std::vector<std::vector<int>> assignment;
    const LabeledBatch* source = &data;
    LabeledBatch natural;
    int classes = num_classes;
    switch (spec.scheme) {
        case PartitionScheme::dirichlet:
            assignment = partition_dirichlet(data, num_classes, spec.num_clients, spec.alpha, spec.seed);
            break;
        case PartitionScheme::pathological:
            assignment = partition_pathological(data, num_classes, spec.num_clients,
                                                spec.classes_per_client, spec.seed);
            break;
        case PartitionScheme::natural_file:
            natural = load_natural_csv(spec.natural_path, spec.num_clients, assignment, classes);
            source = &natural;
            break;
    }
    std::vector<ClientShard> shards;
    shards.reserve(static_cast<std::size_t>(spec.num_clients));
    for (int k = 0; k < spec.num_clients; ++k) {
        ClientShard shard = split_shard(assignment[static_cast<std::size_t>(k)], *source, classes,
                                        spec.val_fraction, spec.test_fraction,
                                        derive_seed(spec.seed, "client_split", static_cast<std::uint64_t>(k)));
        shard.client_id = k;
        shards.push_back(std::move(shard));
    }
    assign_weights(shards);
    return shards;
}

}  // namespace dpfl
