// Synthetic Gaussian-blob datasets and the heterogeneous partitioning
// schemes (Dirichlet, pathological, CSV-backed natural split), plus the
// label-flip transform used for the malicious-client scenarios.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpfl/model.hpp"

namespace dpfl {

struct DatasetSpec {
    int num_classes = 2;
    int num_features = 2;
    int samples_per_class = 100;
    double class_center_scale = 1.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class PartitionScheme { dirichlet, pathological, natural_file };

struct PartitionSpec {
    PartitionScheme scheme = PartitionScheme::dirichlet;
    double alpha = 0.5;           // dirichlet
    int classes_per_client = 3;   // pathological
    std::string natural_path;     // natural_file
    int num_clients = 10;
    double val_fraction = 0.2;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ClientShard {
    int client_id = -1;
    LabeledBatch train;
    LabeledBatch val;
    LabeledBatch test;
    double weight_p = 0.0;
};

// Gaussian blobs: class c is centered at a seeded random point of norm
// class_center_scale with isotropic noise_sigma noise. Samples are laid out
// class by class, samples_per_class each.
LabeledBatch generate_dataset(const DatasetSpec& spec);

// Per-class Dirichlet(alpha) allocation with largest-remainder rounding.
// Throws if any client ends up with zero samples.
std::vector<std::vector<int>> partition_dirichlet(const LabeledBatch& data, int num_classes,
                                                  int num_clients, double alpha,
                                                  std::uint64_t seed);

// Each client holds exactly classes_per_client classes (round-robin over a
// seeded shuffle of the class list); within a class, samples are split among
// its holders by Dirichlet(0.5) proportions.
std::vector<std::vector<int>> partition_pathological(const LabeledBatch& data, int num_classes,
                                                     int num_clients, int classes_per_client,
                                                     std::uint64_t seed);

// Stratified-by-label train/val/test split of one client's indices.
// weight_p is left at zero; it is assigned at the cohort level.
ClientShard split_shard(const std::vector<int>& indices, const LabeledBatch& data,
                        int num_classes, double val_fraction, double test_fraction,
                        std::uint64_t seed);

// Sets weight_p = |train_k| / sum_j |train_j| across the cohort.
void assign_weights(std::vector<ClientShard>& shards);

// Applies a class permutation to all labels of the shard. The permutation
// must be a bijection on [0, num_classes).
ClientShard flip_labels(const ClientShard& shard, const std::vector<int>& permutation);

// Header-less CSV rows: feature_0,...,feature_{d-1},label,client_id.
// Returns the pooled batch; client_indices[i] holds the row indices of
// client i. Client ids must cover 0..num_clients-1 exactly.
LabeledBatch load_natural_csv(const std::string& path, int num_clients,
                              std::vector<std::vector<int>>& client_indices,
                              int& num_classes_out);

// Full pipeline: partition `data` according to spec, split each client and
// assign cohort weights. For natural_file, `data` is ignored and the CSV is
// loaded instead.
std::vector<ClientShard> make_shards(const LabeledBatch& data, int num_classes,
                                     const PartitionSpec& spec);

}  // namespace dpfl
