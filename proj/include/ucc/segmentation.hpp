#pragma once

#include "ucc/bags.hpp"
#include "ucc/model.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace ucc {

struct LabeledImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> pixels;        // H*W*C, row-major, channel-last, [0,1]
    std::vector<std::uint8_t> mask;    // H*W, 1 = positive class

    void validate() const;
    double positive_fraction() const;
};

struct SegThresholds {
    double ucc1_low = 0.20;
    double ucc1_high = 0.80;
    double ucc2_low = 0.30;
    double ucc2_high = 0.70;

    void validate() const;
};

/// Weak bag label from mask statistics: ucc1 for nearly single-class
/// images, ucc2 for clearly mixed ones, nothing inside the gap bands.
std::optional<int> label_image(const LabeledImage& img, const SegThresholds& t);

/// Non-overlapping row-major tiling into flattened patches; dimensions
/// that do not divide evenly are reflection-padded first.
Matrix patchify(const LabeledImage& img, std::size_t patch_size);

/// Patch grid shape for an image under the same padding rule.
std::pair<std::size_t, std::size_t> patch_grid(const LabeledImage& img, std::size_t patch_size);

/// Per-patch positive fraction of the mask, same ordering as patchify.
std::vector<double> patch_positive_fractions(const LabeledImage& img, std::size_t patch_size);

/// Paints each patch's label over its pixels and crops any padding.
std::vector<std::uint8_t> assemble_patch_labels(const std::vector<std::uint8_t>& patch_labels,
                                                std::size_t height, std::size_t width,
                                                std::size_t patch_size);

struct PixelConfusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

struct PixelMetrics {
    PixelConfusion confusion;
    double tpr, fpr, tnr, fnr, pa;
};

PixelConfusion pixel_confusion(const std::vector<std::uint8_t>& pred,
                               const std::vector<std::uint8_t>& truth);

/// Rates from the confusion counts. Zero-denominator rates fall back to
/// the perfect value (1.0 for TPR/TNR, 0.0 for FPR/FNR); otherwise
/// FNR = 1 - TPR and FPR = 1 - TNR hold exactly.
PixelMetrics pixel_metrics(const std::vector<std::uint8_t>& pred,
                           const std::vector<std::uint8_t>& truth);

enum class ClusterMethod : std::uint8_t { Kmeans = 0, Spectral = 1 };

/// Pooled feature distribution of every patch of every image whose weak
/// label is ucc1 on the positive side (mask fraction above ucc1_high);
/// the anchor that maps cluster ids to classes.
Matrix positive_reference(const UccModel& model, const std::vector<LabeledImage>& train_images,
                          std::size_t patch_size, const SegThresholds& t);

/// Segment one image: cluster its patch features into two groups and call
/// the group whose pooled distribution sits closer (L1) to the reference
/// the positive class.
std::vector<std::uint8_t> segment(const UccModel& model, const LabeledImage& img,
                                  std::size_t patch_size, ClusterMethod method,
                                  const Matrix& positive_ref, std::mt19937_64& rng);

/// Segment a test set jointly: one clustering over the pooled patches of
/// all images, anchored once, then painted back per image.
std::vector<std::vector<std::uint8_t>> segment_pooled(const UccModel& model,
                                                      const std::vector<LabeledImage>& images,
                                                      std::size_t patch_size, ClusterMethod method,
                                                      const Matrix& positive_ref,
                                                      std::mt19937_64& rng);

struct SegDataset {
    InstancePool pool;              // all patches of the kept images
    std::vector<Bag> bags;          // one bag per kept image, weak ucc labels
    std::vector<std::size_t> kept;  // indices of images that got a label

    MilDataset dataset() const { return {&pool, bags}; }
};

/// Patches every image, drops the ones in the threshold gap bands and
/// forms one bag per surviving image. Pool labels mark each patch's
/// mask-majority class (1 negative, 2 positive) for diagnostics only.
SegDataset make_seg_dataset(const std::vector<LabeledImage>& images, std::size_t patch_size,
                            const SegThresholds& t);

}  // namespace ucc
