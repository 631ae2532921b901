// Softmax-linear classifier on flat parameter vectors, plus the local SGD
// routine clients run between aggregation steps.
#pragma once

#include <cstdint>
#include <vector>

#include "dpfl/rng.hpp"

namespace dpfl {

// Labeled samples, features row-major (n x num_features).
struct LabeledBatch {
    int num_features = 0;
    std::vector<double> features;
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    bool empty() const { return labels.empty(); }
    const double* row(int i) const {
        return features.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(num_features);
    }
    void push_row(const double* x, int label);
    void validate(int num_classes) const;
};

// Flat parameter vector: C x F weights (class-major), then C biases.
struct ModelParams {
    std::vector<double> values;

    int dim() const { return static_cast<int>(values.size()); }
    const double* weight_row(int cls, int num_features) const {
        return values.data() + static_cast<std::size_t>(cls) * static_cast<std::size_t>(num_features);
    }
    double bias(int cls, int num_features, int num_classes) const {
        return values[static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(num_features) +
                      static_cast<std::size_t>(cls)];
    }
};

inline int model_dim(int num_features, int num_classes) {
    return num_features * num_classes + num_classes;
}

ModelParams zero_model(int num_features, int num_classes);
ModelParams random_init(int num_features, int num_classes, double scale, RngStream& rng);

// Number of classes implied by the parameter length and feature width;
// throws if the length does not factor.
int infer_num_classes(const ModelParams& params, int num_features);

struct SgdConfig {
    double learning_rate = 0.01;
    double weight_decay = 0.0;
    double momentum = 0.0;
    int batch_size = 16;
    int epochs = 1;

    void validate() const;
};

// Mean cross-entropy of the softmax classifier over the batch.
double loss(const ModelParams& params, const LabeledBatch& batch);

// Analytic gradient of the mean cross-entropy; weight_decay adds
// weight_decay * w to the weight coordinates (biases excluded).
std::vector<double> gradient(const ModelParams& params, const LabeledBatch& batch,
                             double weight_decay = 0.0);

// cfg.epochs passes of mini-batch momentum SGD with a per-epoch reshuffle
// drawn from rng. Momentum state starts at zero on every call.
ModelParams local_opt(const ModelParams& params, const LabeledBatch& train,
                      const SgdConfig& cfg, RngStream& rng);

// Argmax prediction for sample i; ties break toward the lowest class index.
int predict(const ModelParams& params, const LabeledBatch& batch, int i);

// Fraction of argmax-correct predictions.
double accuracy(const ModelParams& params, const LabeledBatch& batch);

}  // namespace dpfl
