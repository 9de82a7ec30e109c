#include "ucc/kde.hpp"

#include <cmath>
#include <string>

namespace ucc {

void KdeConfig::validate() const {
    if (bins < 2) throw ContractError("kde: need at least 2 bins");
    if (!(bandwidth > 0.0)) throw ContractError("kde: bandwidth must be positive");
    if (!(range_lo < range_hi)) throw ContractError("kde: range_lo must be below range_hi");
}

namespace {

// Normalized kernel weights of one scalar feature over the sample grid:
// g_b = exp(-(v_b-f)^2/(2s^2)) / sum_b' exp(-(v_b'-f)^2/(2s^2)).
// The 1/sqrt(2 pi s^2) factor of the Gaussian cancels in the ratio; the
// largest exponent is subtracted so the weights stay finite for any f.
void kernel_weights(double f, const KdeConfig& cfg, std::span<double> out) {
    const double inv2s2 = 1.0 / (2.0 * cfg.bandwidth * cfg.bandwidth);
    double max_e = -1e300;
    for (std::size_t b = 0; b < cfg.bins; ++b) {
        const double d = cfg.sample_point(b) - f;
        out[b] = -d * d * inv2s2;
        if (out[b] > max_e) max_e = out[b];
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < cfg.bins; ++b) {
        out[b] = std::exp(out[b] - max_e);
        sum += out[b];
    }
    for (std::size_t b = 0; b < cfg.bins; ++b) out[b] /= sum;
}

}  // namespace

std::pair<FeatureDistribution, KdeCache> kde_forward(const Matrix& features,
                                                     const KdeConfig& cfg) {
    cfg.validate();
    const std::size_t n = features.rows();
    const std::size_t J = features.cols();
    if (n == 0) throw EmptyBagError("kde_forward: empty bag");
    if (!all_finite(features)) throw NumericError("kde_forward: non-finite feature values");

    FeatureDistribution dist(J, cfg.bins);
    std::vector<double> g(cfg.bins);
    for (std::size_t i = 0; i < n; ++i) {
        const auto frow = features.row(i);
        for (std::size_t j = 0; j < J; ++j) {
            kernel_weights(frow[j], cfg, g);
            auto drow = dist.row(j);
            for (std::size_t b = 0; b < cfg.bins; ++b) drow[b] += g[b];
        }
    }
    const double inv_n = 1.0 / double(n);
    for (double& v : dist.values) v *= inv_n;
    return {std::move(dist), KdeCache{features}};
}

Matrix kde_backward(const KdeCache& cache, const KdeConfig& cfg, const Matrix& upstream) {
    cfg.validate();
    const std::size_t n = cache.features.rows();
    const std::size_t J = cache.features.cols();
    if (upstream.rows() != J || upstream.cols() != cfg.bins)
        throw ShapeError("kde_backward: upstream must be [features x bins]");

    // dg_b/df = g_b * ((v_b-f)/s^2 - sum_b' g_b' (v_b'-f)/s^2): the kernel
    // derivative composed with the per-instance normalization Jacobian.
    const double inv_s2 = 1.0 / (cfg.bandwidth * cfg.bandwidth);
    const double inv_n = 1.0 / double(n);
    Matrix grads(n, J);
    std::vector<double> g(cfg.bins);
    for (std::size_t i = 0; i < n; ++i) {
        const auto frow = cache.features.row(i);
        for (std::size_t j = 0; j < J; ++j) {
            const double f = frow[j];
            kernel_weights(f, cfg, g);
            const auto u = upstream.row(j);
            double mean_dir = 0.0;   // sum_b g_b (v_b - f)/s^2
            double u_dot_g = 0.0;    // sum_b u_b g_b
            double u_dir = 0.0;      // sum_b u_b g_b (v_b - f)/s^2
            for (std::size_t b = 0; b < cfg.bins; ++b) {
                const double dir = (cfg.sample_point(b) - f) * inv_s2;
                mean_dir += g[b] * dir;
                u_dot_g += u[b] * g[b];
                u_dir += u[b] * g[b] * dir;
            }
            grads(i, j) = inv_n * (u_dir - u_dot_g * mean_dir);
        }
    }
    return grads;
}

std::vector<double> mean_pool(const Matrix& features) {
    const std::size_t n = features.rows();
    if (n == 0) throw EmptyBagError("mean_pool: empty bag");
    std::vector<double> out(features.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = features.row(i);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
    }
    for (double& v : out) v /= double(n);
    return out;
}

Matrix mean_pool_backward(std::span<const double> upstream, std::size_t n) {
    if (n == 0) throw EmptyBagError("mean_pool_backward: empty bag");
    Matrix grads(n, upstream.size());
    const double inv_n = 1.0 / double(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = grads.row(i);
        for (std::size_t j = 0; j < upstream.size(); ++j) row[j] = upstream[j] * inv_n;
    }
    return grads;
}

FeatureDistribution mix_distributions(
    const std::vector<std::pair<FeatureDistribution, double>>& parts) {
    if (parts.empty()) throw ContractError("mix_distributions: no parts");
    const std::size_t J = parts.front().first.features;
    const std::size_t B = parts.front().first.bins;
    double wsum = 0.0;
    for (const auto& [dist, w] : parts) {
        if (dist.features != J || dist.bins != B)
            throw ShapeError("mix_distributions: parts disagree on feature/bin counts");
        if (!(w > 0.0)) throw ContractError("mix_distributions: weights must be positive");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw ContractError("mix_distributions: weights sum to " + std::to_string(wsum));

    FeatureDistribution out(J, B);
    for (const auto& [dist, w] : parts)
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += w * dist.values[k];
    return out;
}

double l1_distance(const FeatureDistribution& a, const FeatureDistribution& b) {
    if (a.features != b.features || a.bins != b.bins)
        throw ShapeError("l1_distance: distributions disagree on shape");
    double d = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) d += std::abs(a.values[k] - b.values[k]);
    return d;
}

}  // namespace ucc
