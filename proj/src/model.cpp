#include "dpfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpfl {

void LabeledBatch::push_row(const double* x, int label) {
    features.insert(features.end(), x, x + num_features);
    labels.push_back(label);
}

void LabeledBatch::validate(int num_classes) const {
    if (num_features <= 0) throw std::invalid_argument("batch has no feature columns");
    if (labels.empty()) throw std::invalid_argument("batch is empty");
    if (features.size() != labels.size() * static_cast<std::size_t>(num_features))
        throw std::invalid_argument("feature matrix size does not match label count");
    for (double v : features)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                        std::to_string(num_classes) + ")");
}

ModelParams zero_model(int num_features, int num_classes) {
    ModelParams p;
    p.values.assign(static_cast<std::size_t>(model_dim(num_features, num_classes)), 0.0);
    return p;
}

ModelParams random_init(int num_features, int num_classes, double scale, RngStream& rng) {
    ModelParams p = zero_model(num_features, num_classes);
    for (auto& v : p.values) v = scale * rng.gaussian();
    return p;
}

int infer_num_classes(const ModelParams& params, int num_features) {
    if (num_features <= 0) throw std::invalid_argument("num_features must be positive");
    const int d = params.dim();
    if (d <= 0 || d % (num_features + 1) != 0)
        throw std::invalid_argument("parameter length " + std::to_string(d) +
                                    " does not fit feature width " + std::to_string(num_features));
    return d / (num_features + 1);
}

void SgdConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0,1)");
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
}

namespace {

// Softmax probabilities for one sample, written into prob (length C).
void softmax_row(const ModelParams& params, const double* x, int F, int C, double* prob) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < C; ++c) {
        const double* w = params.weight_row(c, F);
        double z = params.bias(c, F, C);
        for (int j = 0; j < F; ++j) z += w[j] * x[j];
        prob[c] = z;
        if (z > zmax) zmax = z;
    }
    double denom = 0.0;
    for (int c = 0; c < C; ++c) {
        prob[c] = std::exp(prob[c] - zmax);
        denom += prob[c];
    }
    for (int c = 0; c < C; ++c) prob[c] /= denom;
}

}  // namespace

double loss(const ModelParams& params, const LabeledBatch& batch) {
    const int F = batch.num_features;
    const int C = infer_num_classes(params, F);
    batch.validate(C);
    const int n = batch.size();
    std::vector<double> prob(static_cast<std::size_t>(C));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        softmax_row(params, batch.row(i), F, C, prob.data());
        double p = prob[static_cast<std::size_t>(batch.labels[static_cast<std::size_t>(i)])];
        total += -std::log(std::max(p, 1e-300));
    }
    return total / static_cast<double>(n);
}

std::vector<double> gradient(const ModelParams& params, const LabeledBatch& batch,
                             double weight_decay) {
    const int F = batch.num_features;
    const int C = infer_num_classes(params, F);
    batch.validate(C);
    const int n = batch.size();

    std::vector<double> g(params.values.size(), 0.0);
    std::vector<double> prob(static_cast<std::size_t>(C));
    const std::size_t bias_off = static_cast<std::size_t>(C) * static_cast<std::size_t>(F);
    for (int i = 0; i < n; ++i) {
        const double* x = batch.row(i);
        softmax_row(params, x, F, C, prob.data());
        const int y = batch.labels[static_cast<std::size_t>(i)];
        for (int c = 0; c < C; ++c) {
            const double delta = prob[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
            double* gw = g.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(F);
            for (int j = 0; j < F; ++j) gw[j] += delta * x[j];
            g[bias_off + static_cast<std::size_t>(c)] += delta;
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& v : g) v *= inv_n;
    if (weight_decay != 0.0) {
        for (std::size_t j = 0; j < bias_off; ++j) g[j] += weight_decay * params.values[j];
    }
    return g;
}

ModelParams local_opt(const ModelParams& params, const LabeledBatch& train,
                      const SgdConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (train.empty()) throw std::runtime_error("client has no training data");
    const int F = train.num_features;
    const int C = infer_num_classes(params, F);
    train.validate(C);

    ModelParams w = params;
    if (cfg.epochs == 0 || cfg.learning_rate == 0.0) return w;

    const int n = train.size();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> velocity(w.values.size(), 0.0);

    LabeledBatch mini;
    mini.num_features = F;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(start + cfg.batch_size, n);
            mini.features.clear();
            mini.labels.clear();
            for (int i = start; i < stop; ++i)
                mini.push_row(train.row(order[static_cast<std::size_t>(i)]),
                              train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
            std::vector<double> g = gradient(w, mini, cfg.weight_decay);
            for (std::size_t j = 0; j < w.values.size(); ++j) {
                velocity[j] = cfg.momentum * velocity[j] + g[j];
                w.values[j] -= cfg.learning_rate * velocity[j];
            }
        }
    }
    return w;
}

int predict(const ModelParams& params, const LabeledBatch& batch, int i) {
    const int F = batch.num_features;
    const int C = infer_num_classes(params, F);
    const double* x = batch.row(i);
    int best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < C; ++c) {
        const double* w = params.weight_row(c, F);
        double z = params.bias(c, F, C);
        for (int j = 0; j < F; ++j) z += w[j] * x[j];
        if (z > best_z) {
            best_z = z;
            best = c;
        }
    }
    return best;
}

double accuracy(const ModelParams& params, const LabeledBatch& batch) {
    const int C = infer_num_classes(params, batch.num_features);
    batch.validate(C);
    int correct = 0;
    for (int i = 0; i < batch.size(); ++i)
        if (predict(params, batch, i) == batch.labels[static_cast<std::size_t>(i)]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace dpfl
