#pragma once

#include "ucc/matrix.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ucc {

enum class Activation : std::uint8_t { Relu = 0, Sigmoid = 1, Linear = 2, Softmax = 3 };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// One fully connected layer: output = act(input * weight + bias).
/// weight is [in x out], bias has out entries.
struct MlpLayer {
    Matrix weight;
    std::vector<double> bias;
    Activation act = Activation::Linear;

    std::size_t in_dim() const { return weight.rows(); }
    std::size_t out_dim() const { return weight.cols(); }
};

/// Parameter container for a multilayer perceptron. Consecutive layer
/// dimensions chain; softmax is permitted only as the final activation.
struct MlpParams {
    std::vector<MlpLayer> layers;

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }
    std::size_t param_count() const;
    void validate() const;
};

/// Xavier-uniform weights (|w| <= sqrt(6/(fan_in+fan_out))), zero biases.
/// dims = {d_in, h1, ..., d_out}; acts has dims.size()-1 entries.
MlpParams make_mlp(const std::vector<std::size_t>& dims,
                   const std::vector<Activation>& acts, std::mt19937_64& rng);

/// Forward-pass byproducts needed to run mlp_backward without recomputation.
struct MlpCache {
    std::vector<Matrix> inputs;    // per layer: its input (batch x in)
    std::vector<Matrix> preacts;   // per layer: z = input*W + b
    std::vector<Matrix> outputs;   // per layer: act(z)
};

/// Weight/bias gradients mirroring an MlpParams shape, plus the gradient
/// with respect to the network input.
struct GradBundle {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    Matrix input_grad;

    GradBundle& scale(double s);
    GradBundle& add_scaled(const GradBundle& other, double s);
};

GradBundle zero_grads(const MlpParams& params, std::size_t batch);

Matrix mlp_forward(const MlpParams& params, const Matrix& input, MlpCache* cache = nullptr);

/// Exact reverse-mode gradients of sum(upstream . output) with respect to
/// all parameters and the input. cache must come from mlp_forward on the
/// same params and input.
GradBundle mlp_backward(const MlpParams& params, const MlpCache& cache, const Matrix& upstream);

/// In-place SGD step: params -= lr * grads.
void apply_gradients(MlpParams& params, const GradBundle& grads, double lr);

/// Flat views used by the gradient checker and the checkpoint writer.
std::vector<double> flatten_params(const MlpParams& params);
void assign_params(MlpParams& params, std::span<const double> flat);
std::vector<double> flatten_grads(const GradBundle& g);

}  // namespace ucc
