#pragma once

#include "ucc/matrix.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace ucc {

struct ClusterAssignment {
    std::vector<int> labels;    // one entry per input row
    std::size_t num_clusters = 0;
    double inertia = 0.0;       // sum of squared distances to assigned centers
};

/// Lloyd's algorithm with k-means++ seeding. Runs `restarts` independent
/// seedings and keeps the assignment with the lowest inertia. Empty
/// clusters are reseeded to the point farthest from its current center.
ClusterAssignment kmeans(const Matrix& points, std::size_t k, std::size_t restarts,
                         std::size_t max_iters, double tol, std::mt19937_64& rng);

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues ascending; columns of the second element are the
/// matching eigenvectors.
std::pair<std::vector<double>, Matrix> jacobi_eigh(const Matrix& sym, std::size_t max_sweeps = 64);

/// Normalized spectral clustering: Gaussian affinity with the given scale,
/// symmetric normalized Laplacian, bottom-k eigenvectors row-normalized and
/// fed to kmeans. Dense solver; rejects inputs above `max_points` rows.
ClusterAssignment spectral(const Matrix& points, std::size_t k, double scale,
                           std::mt19937_64& rng, std::size_t max_points = 4000);

/// Fraction of points whose predicted cluster maps onto their true label
/// under the best one-to-one cluster-to-label assignment.
double clustering_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted);

struct JsMatrix {
    Matrix values;              // K x K, symmetric, zero diagonal
    double min_off_diagonal = 0.0;
};

/// Pairwise Jensen-Shannon divergence between per-class feature
/// distributions, averaged over the feature axis. `dists` holds one
/// [J x B] distribution matrix per class; natural log, so each entry
/// is bounded by ln 2.
JsMatrix interclass_js(const std::vector<Matrix>& dists);

}  // namespace ucc
