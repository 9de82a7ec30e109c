#pragma once

#include "ucc/matrix.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace ucc {

/// Gaussian-kernel density estimation on a fixed grid of sample points
/// v_b = range_lo + b*(range_hi-range_lo)/(bins-1), b = 0..bins-1.
struct KdeConfig {
    std::size_t bins = 11;
    double bandwidth = 0.1;
    double range_lo = 0.0;
    double range_hi = 1.0;

    void validate() const;
    double sample_point(std::size_t b) const {
        return range_lo + double(b) * (range_hi - range_lo) / double(bins - 1);
    }
};

/// Per-feature probability histograms over the KDE sample grid.
/// values is row-major [features x bins]; every entry >= 0 and each feature
/// row sums to 1.
struct FeatureDistribution {
    std::size_t features = 0;
    std::size_t bins = 0;
    std::vector<double> values;

    FeatureDistribution() = default;
    FeatureDistribution(std::size_t j, std::size_t b)
        : features(j), bins(b), values(j * b, 0.0) {}

    double& at(std::size_t j, std::size_t b) { return values[j * bins + b]; }
    double at(std::size_t j, std::size_t b) const { return values[j * bins + b]; }
    std::span<double> row(std::size_t j) { return {values.data() + j * bins, bins}; }
    std::span<const double> row(std::size_t j) const { return {values.data() + j * bins, bins}; }
};

struct KdeCache {
    Matrix features;  // the n x J input, kept for the backward pass
};

/// Pool a bag's per-instance features [n x J] into J per-feature histograms.
///
/// Each instance contributes its Gaussian kernel sampled at the grid points
/// and normalized to unit mass over the grid before averaging. Normalizing
/// per instance rather than per accumulated row keeps the pooled histogram
/// an exact cardinality-weighted mixture under bag partitions, so
/// decomposability, duplication invariance and sum-to-1 all hold to float
/// precision.
std::pair<FeatureDistribution, KdeCache> kde_forward(const Matrix& features,
                                                     const KdeConfig& cfg);

/// Gradients of sum(upstream . dist) with respect to the n x J features
/// entering kde_forward. upstream is [J x bins].
Matrix kde_backward(const KdeCache& cache, const KdeConfig& cfg, const Matrix& upstream);

/// Appendix-style averaging pooling: column means of the feature matrix.
std::vector<double> mean_pool(const Matrix& features);

/// Backward of mean_pool: distributes upstream/n to each instance.
Matrix mean_pool_backward(std::span<const double> upstream, std::size_t n);

/// Entrywise weighted sum of distributions. Weights must be positive and
/// sum to 1 within 1e-9; all parts must share feature and bin counts.
FeatureDistribution mix_distributions(
    const std::vector<std::pair<FeatureDistribution, double>>& parts);

/// Sum over features and bins of |a - b|, the distance used by the
/// proposition checks.
double l1_distance(const FeatureDistribution& a, const FeatureDistribution& b);

}  // namespace ucc
