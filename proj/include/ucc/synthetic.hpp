#pragma once

#include "ucc/bags.hpp"
#include "ucc/segmentation.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace ucc {

struct SyntheticSpec {
    int num_classes = 4;
    std::size_t dim = 8;
    std::size_t per_class = 500;
    double scale = 0.05;        // per-cluster Gaussian scale
    double separation = 4.0;    // min mean distance, in units of scale
    std::uint64_t seed = 1;

    void validate() const;
};

/// Gaussian blobs in [0,1]^d: means rejection-sampled to keep pairwise
/// distance above separation * scale, samples clipped to the unit box.
InstancePool gen_synthetic_pool(const SyntheticSpec& spec);

struct SegImageSpec {
    std::size_t count = 50;
    std::size_t height = 128;
    std::size_t width = 128;
    double noise = 0.06;            // texture noise std
    double negative_level = 0.35;   // mean intensity of the negative texture
    double positive_level = 0.65;
    double pure_negative_frac = 0.25;  // share of all-negative images
    double pure_positive_frac = 0.25;  // share of all-positive images
    std::uint64_t seed = 1;

    void validate() const;
};

/// Two-texture images with a smooth sinusoidal class boundary; the rest
/// of the set is split between pure-negative and pure-positive images.
std::vector<LabeledImage> gen_seg_images(const SegImageSpec& spec);

}  // namespace ucc
