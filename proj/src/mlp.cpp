#include "ucc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ucc {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Linear: return "linear";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "linear") return Activation::Linear;
    if (name == "softmax") return Activation::Softmax;
    throw ContractError("unknown activation: " + name);
}

std::size_t MlpParams::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

void MlpParams::validate() const {
    if (layers.empty()) throw ContractError("mlp has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.bias.size() != l.out_dim())
            throw ShapeError("layer " + std::to_string(i) + " bias length mismatch");
        if (i + 1 < layers.size()) {
            if (l.out_dim() != layers[i + 1].in_dim())
                throw ShapeError("layer dims do not chain at layer " + std::to_string(i));
            if (l.act == Activation::Softmax)
                throw ContractError("softmax permitted only as final activation");
        }
    }
}

MlpParams make_mlp(const std::vector<std::size_t>& dims,
                   const std::vector<Activation>& acts, std::mt19937_64& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw ContractError("make_mlp: need dims {d_in,...,d_out} and one activation per layer");
    MlpParams params;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        MlpLayer layer;
        layer.weight = Matrix(dims[i], dims[i + 1]);
        const double bound = std::sqrt(6.0 / double(dims[i] + dims[i + 1]));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weight.data()) w = dist(rng);
        layer.bias.assign(dims[i + 1], 0.0);
        layer.act = acts[i];
        params.layers.push_back(std::move(layer));
    }
    params.validate();
    return params;
}

namespace {

void apply_activation(Activation act, const Matrix& z, Matrix& out) {
    out = z;
    switch (act) {
        case Activation::Relu:
            for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Sigmoid:
            for (double& v : out.data()) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::Linear:
            break;
        case Activation::Softmax:
            for (std::size_t r = 0; r < out.rows(); ++r) {
                auto row = out.row(r);
                double mx = row[0];
                for (double v : row) mx = std::max(mx, v);
                double sum = 0.0;
                for (double& v : row) {
                    v = std::exp(v - mx);
                    sum += v;
                }
                for (double& v : row) v /= sum;
            }
            break;
    }
}

}  // namespace

Matrix mlp_forward(const MlpParams& params, const Matrix& input, MlpCache* cache) {
    if (input.cols() != params.in_dim())
        throw ShapeError("mlp_forward: input cols " + std::to_string(input.cols()) +
                         " != first-layer input dim " + std::to_string(params.in_dim()));
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
        cache->outputs.clear();
    }
    Matrix cur = input;
    for (const auto& layer : params.layers) {
        Matrix z = matmul(cur, layer.weight);
        for (std::size_t r = 0; r < z.rows(); ++r) {
            auto row = z.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
        }
        Matrix out;
        apply_activation(layer.act, z, out);
        if (cache) {
            cache->inputs.push_back(std::move(cur));
            cache->preacts.push_back(std::move(z));
            cache->outputs.push_back(out);
        }
        cur = std::move(out);
    }
    return cur;
}

GradBundle zero_grads(const MlpParams& params, std::size_t batch) {
    GradBundle g;
    for (const auto& l : params.layers) {
        g.weight_grads.emplace_back(l.in_dim(), l.out_dim());
        g.bias_grads.emplace_back(l.out_dim(), 0.0);
    }
    g.input_grad = Matrix(batch, params.in_dim());
    return g;
}

GradBundle mlp_backward(const MlpParams& params, const MlpCache& cache, const Matrix& upstream) {
    const std::size_t L = params.layers.size();
    if (cache.inputs.size() != L || cache.preacts.size() != L || cache.outputs.size() != L)
        throw ShapeError("mlp_backward: cache does not match params");
    if (upstream.rows() != cache.outputs.back().rows() ||
        upstream.cols() != cache.outputs.back().cols())
        throw ShapeError("mlp_backward: upstream shape mismatch");

    GradBundle g;
    g.weight_grads.resize(L);
    g.bias_grads.resize(L);

    Matrix delta = upstream;  // dLoss / d output of current layer
    for (std::size_t li = L; li-- > 0;) {
        const auto& layer = params.layers[li];
        const Matrix& z = cache.preacts[li];
        const Matrix& y = cache.outputs[li];

        // dLoss / dz from dLoss / dy
        Matrix dz = delta;
        switch (layer.act) {
            case Activation::Relu:
                for (std::size_t i = 0; i < dz.size(); ++i)
                    if (z.data()[i] <= 0.0) dz.data()[i] = 0.0;
                break;
            case Activation::Sigmoid:
                for (std::size_t i = 0; i < dz.size(); ++i) {
                    const double s = y.data()[i];
                    dz.data()[i] *= s * (1.0 - s);
                }
                break;
            case Activation::Linear:
                break;
            case Activation::Softmax:
                for (std::size_t r = 0; r < dz.rows(); ++r) {
                    auto u = delta.row(r);
                    auto yr = y.row(r);
                    double dot = 0.0;
                    for (std::size_t c = 0; c < u.size(); ++c) dot += u[c] * yr[c];
                    auto d = dz.row(r);
                    for (std::size_t c = 0; c < u.size(); ++c) d[c] = yr[c] * (u[c] - dot);
                }
                break;
        }

        g.weight_grads[li] = matmul_tn(cache.inputs[li], dz);
        g.bias_grads[li].assign(layer.out_dim(), 0.0);
        for (std::size_t r = 0; r < dz.rows(); ++r) {
            auto row = dz.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) g.bias_grads[li][c] += row[c];
        }
        delta = matmul_nt(dz, layer.weight);
    }
    g.input_grad = std::move(delta);
    return g;
}

GradBundle& GradBundle::scale(double s) {
    for (auto& w : weight_grads)
        for (double& v : w.data()) v *= s;
    for (auto& b : bias_grads)
        for (double& v : b) v *= s;
    for (double& v : input_grad.data()) v *= s;
    return *this;
}

GradBundle& GradBundle::add_scaled(const GradBundle& other, double s) {
    for (std::size_t i = 0; i < weight_grads.size(); ++i) {
        for (std::size_t k = 0; k < weight_grads[i].size(); ++k)
            weight_grads[i].data()[k] += s * other.weight_grads[i].data()[k];
        for (std::size_t k = 0; k < bias_grads[i].size(); ++k)
            bias_grads[i][k] += s * other.bias_grads[i][k];
    }
    if (input_grad.same_shape(other.input_grad))
        for (std::size_t k = 0; k < input_grad.size(); ++k)
            input_grad.data()[k] += s * other.input_grad.data()[k];
    return *this;
}

void apply_gradients(MlpParams& params, const GradBundle& grads, double lr) {
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        auto& layer = params.layers[i];
        for (std::size_t k = 0; k < layer.weight.size(); ++k)
            layer.weight.data()[k] -= lr * grads.weight_grads[i].data()[k];
        for (std::size_t k = 0; k < layer.bias.size(); ++k)
            layer.bias[k] -= lr * grads.bias_grads[i][k];
    }
}

std::vector<double> flatten_params(const MlpParams& params) {
    std::vector<double> flat;
    flat.reserve(params.param_count());
    for (const auto& l : params.layers) {
        flat.insert(flat.end(), l.weight.data().begin(), l.weight.data().end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void assign_params(MlpParams& params, std::span<const double> flat) {
    if (flat.size() != params.param_count())
        throw ShapeError("assign_params: flat vector length mismatch");
    std::size_t pos = 0;
    for (auto& l : params.layers) {
        std::copy(flat.begin() + pos, flat.begin() + pos + l.weight.size(),
                  l.weight.data().begin());
        pos += l.weight.size();
        std::copy(flat.begin() + pos, flat.begin() + pos + l.bias.size(), l.bias.begin());
        pos += l.bias.size();
    }
}

std::vector<double> flatten_grads(const GradBundle& g) {
    std::vector<double> flat;
    for (std::size_t i = 0; i < g.weight_grads.size(); ++i) {
        flat.insert(flat.end(), g.weight_grads[i].data().begin(), g.weight_grads[i].data().end());
        flat.insert(flat.end(), g.bias_grads[i].begin(), g.bias_grads[i].end());
    }
    return flat;
}

}  // namespace ucc
