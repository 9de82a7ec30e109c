#pragma once

#include "ucc/bags.hpp"
#include "ucc/kde.hpp"
#include "ucc/mlp.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ucc {

enum class Pooling : std::uint8_t { Kde = 0, Mean = 1 };

/// The full weakly supervised model: feature extractor (sigmoid head, J
/// outputs), pooling into per-feature histograms, distribution regression
/// (softmax over the ucc label range) and a decoder branch reconstructing
/// the instances from their features.
struct UccModel {
    MlpParams feature_net;
    MlpParams drn_net;
    MlpParams decoder_net;
    KdeConfig kde;
    double alpha = 0.5;
    int ucc_lo = 1;
    int ucc_hi = 4;
    Pooling pooling = Pooling::Kde;

    int num_labels() const { return ucc_hi - ucc_lo + 1; }
    std::size_t input_dim() const { return feature_net.in_dim(); }
    std::size_t feature_dim() const { return feature_net.out_dim(); }

    void validate() const;
};

struct ModelSpec {
    std::size_t input_dim = 8;
    std::size_t features = 8;  // J
    std::vector<std::size_t> feature_hidden = {32};
    std::vector<std::size_t> drn_hidden = {32};
    std::vector<std::size_t> decoder_hidden = {32};
    KdeConfig kde;
    double alpha = 0.5;
    int ucc_lo = 1;
    int ucc_hi = 4;
    Pooling pooling = Pooling::Kde;
};

UccModel make_ucc_model(const ModelSpec& spec, std::mt19937_64& rng);

/// Feature extraction only: rows are sigmoid outputs in [0,1]^J.
Matrix extract_features(const UccModel& model, const Matrix& instances);

/// feature_net -> pooling -> drn_net; returns the softmax over ucc labels.
std::vector<double> predict_ucc(const UccModel& model, const Matrix& instances);

int predict_ucc_label(const UccModel& model, const Matrix& instances);

/// decoder(feature(x)) for every instance row.
Matrix reconstruct(const UccModel& model, const Matrix& instances);

struct BagGrads {
    GradBundle feature;
    GradBundle drn;
    GradBundle decoder;
};

/// Composite loss for one bag:
///   alpha * cross-entropy(predict_ucc, onehot) + (1-alpha) * reconstruction MSE.
/// Feature-net gradients combine the ucc branch (through the pooling
/// backward) and the autoencoder branch with the same alpha weighting.
std::pair<double, BagGrads> bag_loss_and_grads(const UccModel& model, const Matrix& bag_instances,
                                               std::span<const double> ucc_onehot, double alpha);

std::vector<double> ucc_onehot(const UccModel& model, int label);

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 8;     // bags per SGD step
    std::size_t max_iters = 10000;
    std::size_t patience = 2000;    // iterations without validation improvement
    std::size_t val_period = 200;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainReport {
    struct Eval {
        std::size_t iter;
        double train_loss;
        double val_loss;
        double val_acc;
    };
    std::vector<Eval> history;
    std::size_t stopped_at = 0;
    std::size_t best_iter = 0;
    double best_val_loss = 0.0;
};

/// Mean composite loss and ucc argmax accuracy over a dataset.
std::pair<double, double> evaluate(const UccModel& model, const MilDataset& ds);

/// Plain SGD with a fixed learning rate; gradients averaged over the bags
/// in each batch. Returns the parameters from the evaluation with the
/// lowest validation loss; stops when patience is exhausted or max_iters
/// is reached. Throws TrainingDiverged on a non-finite loss.
std::pair<UccModel, TrainReport> train(const UccModel& model, const MilDataset& train_bags,
                                       const MilDataset& val_bags, const TrainConfig& cfg);

}  // namespace ucc
